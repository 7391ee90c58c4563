#pragma once

#include <cstddef>

#include "survband/incremental.hpp"
#include "survband/policies.hpp"

namespace survband {

// Online fitter plus exploration rule. Acts round-robin until a converged fit
// exists; afterwards the policy reads the last converged state.
class Agent {
 public:
  Agent(const PolicySpec& spec, const FeatureMap& fmap, const SolverConfig& cfg,
        FitStrategy strategy);

  const CoxState* refresh(const Timeline& tl) { return fitter_.refresh(tl); }

  // `t` is the 1-based round index; `allow_policy = false` forces round-robin.
  PolicyDecision decide(const Vector& s, std::size_t t, Rng& rng, bool allow_policy = true);

  // Beta the policy acts on: last converged fit, else zero.
  Vector current_beta() const;
  bool active() const noexcept { return fitter_.last_converged() != nullptr; }

  const OnlineCoxFitter& fitter() const noexcept { return fitter_; }
  const PolicySpec& spec() const noexcept { return spec_; }

 private:
  PolicySpec spec_;
  FeatureMap fmap_;
  OnlineCoxFitter fitter_;
  std::size_t round_robin_ = 0;
  double feature_bound_ = 0.0;
};

}  // namespace survband
