#pragma once

#include <optional>
#include <vector>

#include "survband/coxph.hpp"

namespace survband {

// Log partial likelihood at a frozen beta, carried from one calendar time to
// the next without re-forming risk sets:
//
//   l(tau', beta) = l(tau, beta) + P1 + P2
//
// P1 scores events revealed in (tau, tau'] against the risk sets at tau'.
// P2 adds log(D_old / D_new) for every earlier event whose denominator grew
// because an unrevealed subject's at-risk window extended over it.
class LoglikCache {
 public:
  struct CachedEvent {
    SubjectIndex subject;
    double time;
    double log_denominator;
  };

  struct Update {
    double p1 = 0.0;
    double p2 = 0.0;
    std::size_t new_events = 0;
    std::size_t touched = 0;  // (delta subject, event) pairs visited
  };

  // From-scratch cache at tl.now().
  LoglikCache(const Timeline& tl, const FeatureMap& fmap, Vector beta);

  // Moves the cache from tau() to tl.now(). Throws CoxError(CorruptCache)
  // if the cache does not describe `tl` at tau().
  Update advance(const Timeline& tl);

  double tau() const noexcept { return tau_; }
  double loglik() const noexcept { return loglik_; }
  const Vector& beta() const noexcept { return beta_; }
  const std::vector<CachedEvent>& events() const noexcept { return events_; }

 private:
  double linear_score(const SubjectRecord& rec) const;

  FeatureMap fmap_;
  Vector beta_;
  double tau_;
  double loglik_ = 0.0;
  std::vector<CachedEvent> events_;  // ascending time, ties in reveal order
  std::size_t reveals_seen_ = 0;
};

enum class FitStrategy {
  Incremental,   // tracked risk index, warm start from the last converged fit
  RefitScratch,  // rebuild everything each round, cold start
};

// Keeps a Cox fit current as a Timeline advances.
class OnlineCoxFitter {
 public:
  OnlineCoxFitter(const FeatureMap& fmap, SolverConfig cfg, FitStrategy strategy,
                  std::optional<GaussianPrior> prior = std::nullopt);

  // Refits at tl.now() if the events-per-variable gate is open. Returns the
  // latest state (nullptr before the gate opens). A non-converged fit is
  // returned as-is; the next incremental round warm-starts from the last
  // converged beta instead, retrying from the cold start if that stalls. Converged fits without enough curvature
  // (SolverConfig::min_curvature) are not adopted as converged.
  const CoxState* refresh(const Timeline& tl);

  const CoxState* state() const noexcept { return state_ ? &*state_ : nullptr; }
  const CoxState* last_converged() const noexcept {
    return converged_ ? &*converged_ : nullptr;
  }
  // Number of refreshes that ran Newton (the rest reused the prior state).
  std::size_t fits() const noexcept { return fits_; }
  FitStrategy strategy() const noexcept { return strategy_; }
  const SolverConfig& config() const noexcept { return cfg_; }

 private:
  Vector cold_start() const;
  bool adoptable(const CoxState& st) const;

  FeatureMap fmap_;
  SolverConfig cfg_;
  FitStrategy strategy_;
  std::optional<GaussianPrior> prior_;
  std::optional<RiskIndex> index_;
  std::optional<CoxState> state_;
  std::optional<CoxState> converged_;
  std::size_t fits_ = 0;
};

}  // namespace survband
