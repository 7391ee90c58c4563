#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "survband/coxph.hpp"
#include "survband/features.hpp"
#include "survband/types.hpp"

namespace survband {

using Rng = std::mt19937_64;

enum class PolicyKind { EpsilonGreedy, Ucb, Thompson };

const char* to_string(PolicyKind kind);

struct PolicySpec {
  PolicyKind kind = PolicyKind::EpsilonGreedy;
  double eg_c = 5.0;             // epsilon_t = min(1, c / t)
  double ucb_alpha = 1.0;        // fixed exploration weight
  bool ucb_theoretical = false;  // use the confidence-ellipsoid radius instead
  double ucb_delta = 0.05;
  std::optional<Vector> ts_prior_mean;  // default: zero
  std::optional<Matrix> ts_prior_cov;   // default: ts_prior_sd^2 * I
  double ts_prior_sd = 10.0;
  std::uint64_t rng_seed = 0;

  // Throws ConfigError naming the offending field.
  void validate(std::size_t dim) const;
  GaussianPrior ts_prior(std::size_t dim) const;
};

struct PolicyDecision {
  int action = 0;
  Vector scores;  // per arm; EG/TS/greedy: X(a)'beta (lower is better), UCB: index
  std::optional<Vector> sampled_beta;  // TS
  std::optional<bool> explored;        // EG
};

// Lowest index among equal optima.
int argmin_lowest(const Vector& v);
int argmax_lowest(const Vector& v);

Vector linear_scores(const Vector& s, const Vector& beta, const FeatureMap& fmap);

// argmin_a Phi(S, a)' beta.
PolicyDecision greedy_select(const Vector& s, const Vector& beta, const FeatureMap& fmap);

PolicyDecision round_robin_select(std::size_t counter, const FeatureMap& fmap);

double eg_epsilon(double c, std::size_t t);

PolicyDecision eg_select(const Vector& s, const Vector& beta, std::size_t t,
                         const PolicySpec& spec, const FeatureMap& fmap, Rng& rng);

// sqrt(max(0, d log(4 t L^2 / d) - 2 log delta)).
double ucb_theoretical_alpha(std::size_t dim, std::size_t t, double feature_bound,
                             double delta);

// argmax_a -Phi' beta + alpha_t ||Phi||_{I^-1}, with I the observed
// information stored in `state`. `feature_bound` (L) is used only by the
// theoretical schedule.
PolicyDecision ucb_select(const Vector& s, const CoxState& state, std::size_t t,
                          const PolicySpec& spec, const FeatureMap& fmap,
                          double feature_bound, double ridge = 1e-6);

// Gaussian approximation N(mode, precision^-1) to the posterior of beta.
class LaplacePosterior {
 public:
  LaplacePosterior(Vector mode, const Matrix& precision, double ridge = 1e-6);

  // MAP state from a prior-penalized fit.
  static LaplacePosterior from_state(const CoxState& state, double ridge = 1e-6);
  static LaplacePosterior from_prior(const GaussianPrior& prior, double ridge = 1e-6);

  const Vector& mode() const noexcept { return mode_; }
  Matrix covariance() const;

  // mode + sqrt(scale) * L^-T z, z ~ N(0, I), precision = L L'.
  Vector sample(Rng& rng, double covariance_scale = 1.0) const;

 private:
  Vector mode_;
  Matrix chol_lower_;
};

PolicyDecision ts_select(const Vector& s, const LaplacePosterior& posterior,
                         const FeatureMap& fmap, Rng& rng,
                         double covariance_scale = 1.0);

}  // namespace survband
