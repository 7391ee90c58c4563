#pragma once

#include <cstdint>
#include <vector>

#include "survband/features.hpp"
#include "survband/policies.hpp"
#include "survband/types.hpp"

namespace survband {

enum class DgpKind {
  CoxPH,            // Y = -log U / exp(x'b)
  DisturbedCox,     // Y = -log U / exp(x'b + e), e ~ N(0, disturb_sigma^2)
  AFT,              // Y = exp(x'b + e), e ~ N(0, aft_sigma^2)
  PiecewiseHazard,  // Y = -log U / (h0 exp(x'b)), h0 uniform over the levels
};

const char* to_string(DgpKind kind);

struct CovariateLaw {
  enum class Kind { Uniform, Normal };
  Kind kind = Kind::Normal;
  double a = 0.0;  // uniform: lower bound; normal: mean
  double b = 1.0;  // uniform: upper bound; normal: standard deviation

  static CovariateLaw uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static CovariateLaw normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }
};

struct DgpSpec {
  DgpKind kind = DgpKind::CoxPH;
  Vector true_beta;
  int arms = 2;
  double arrival_lambda = 1.0;
  double censor_scale = 5.0;  // mean of the exponential censoring time
  std::vector<CovariateLaw> covariates;
  double disturb_sigma = 5.0;
  double aft_sigma = 1.0;
  std::vector<double> piecewise_levels{0.5, 1.0, 2.0};
  std::uint64_t seed = 0;

  // S0 ~ U(1,4), S1 ~ N(3,1), S2 ~ N(2,1), two arms,
  // beta = (0.5, -0.3, -0.2, 0.2, 0.6, -0.1).
  static DgpSpec simulation_default();

  std::size_t covariate_dim() const noexcept { return covariates.size(); }
  FeatureMap feature_map() const { return {covariate_dim(), arms}; }

  // Throws ConfigError naming the offending field under `prefix`.
  void validate(const std::string& prefix = "dgp") const;
};

struct Outcome {
  double latent = 0.0;    // Y
  double censor = 0.0;    // C
  double observed = 0.0;  // R = min(Y, C)
  bool event = false;     // Y <= C
};

// prev + gap, gap ~ Poisson(arrival_lambda).
double next_arrival(double prev, const DgpSpec& spec, Rng& rng);

Vector draw_covariates(const DgpSpec& spec, Rng& rng);

// Inverse of the unit-baseline Cox survival: -log(u) / exp(eta).
double cox_inverse_transform(double u, double eta);

// `x` is the feature vector Phi(S, a). Every kind consumes the same number of
// engine calls for a given spec, so outcome streams stay aligned across
// policies.
Outcome draw_outcome(const Vector& x, const DgpSpec& spec, Rng& rng);
Outcome draw_outcome_from_score(double eta, const DgpSpec& spec, Rng& rng);

// Fraction censored among n subjects with uniformly random actions.
double empirical_censoring_rate(const DgpSpec& spec, std::size_t n, Rng& rng);

}  // namespace survband
