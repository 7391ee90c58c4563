#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "survband/coxph.hpp"
#include "survband/features.hpp"
#include "survband/timeline.hpp"

namespace survband {

struct RoundMetrics {
  std::size_t round = 0;
  double delta_regret = 0.0;
  double cum_regret = 0.0;
  double beta_mse = 0.0;
  double mean_surv_fitted = 0.0;
  double mean_surv_oracle = 0.0;
  std::size_t events = 0;
  double wall_ms = 0.0;
};

// Phi(S, a)' beta - min_b Phi(S, b)' beta.
double pseudo_regret_increment(const Vector& s, int chosen, const Vector& beta,
                               const FeatureMap& fmap);

// S0^exp(best score) - S0^exp(chosen score).
double survival_regret_increment(const Vector& s, int chosen, const Vector& beta,
                                 const FeatureMap& fmap, double baseline_survival);

// Sum of squared coordinate errors.
double beta_mse(const Vector& estimate, const Vector& truth);

// Mean of S0^exp(Phi(S_i, a_i)' beta) over the subjects' chosen arms.
double mean_survival_probability(std::span<const SubjectRecord> subjects,
                                 const FeatureMap& fmap, const Vector& beta,
                                 double baseline_survival);

// Cox fit whose risk sets drop pending subjects entirely.
CoxState naive_fit(const Timeline& tl, const FeatureMap& fmap, const Vector& warm_start,
                   const SolverConfig& cfg);

// Least-squares slope of log m_t on log t over the second half of the
// series (t is 1-based). Empty when fewer than 20 rounds have m_t >= 1.
std::optional<double> event_growth_exponent(std::span<const double> events_so_far);

}  // namespace survband
