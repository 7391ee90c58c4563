#include "survband/agent.hpp"

#include <algorithm>

namespace survband {

namespace {

std::optional<GaussianPrior> prior_for(const PolicySpec& spec, const FeatureMap& fmap) {
  if (spec.kind != PolicyKind::Thompson) return std::nullopt;
  return spec.ts_prior(fmap.dim());
}

}  // namespace

Agent::Agent(const PolicySpec& spec, const FeatureMap& fmap, const SolverConfig& cfg,
             FitStrategy strategy)
    : spec_(spec), fmap_(fmap), fitter_(fmap, cfg, strategy, prior_for(spec, fmap)) {
  spec_.validate(fmap.dim());
}

Vector Agent::current_beta() const {
  if (const CoxState* st = fitter_.last_converged()) return st->beta;
  return Vector::Zero(static_cast<Eigen::Index>(fmap_.dim()));
}

PolicyDecision Agent::decide(const Vector& s, std::size_t t, Rng& rng, bool allow_policy) {
  // Phi(S, a) has the norm of S for every a.
  feature_bound_ = std::max(feature_bound_, s.norm());
  const CoxState* st = fitter_.last_converged();
  if (!allow_policy || st == nullptr) return round_robin_select(round_robin_++, fmap_);
  switch (spec_.kind) {
    case PolicyKind::EpsilonGreedy:
      return eg_select(s, st->beta, t, spec_, fmap_, rng);
    case PolicyKind::Ucb:
      return ucb_select(s, *st, t, spec_, fmap_, feature_bound_, fitter_.config().ridge);
    case PolicyKind::Thompson:
      return ts_select(s, LaplacePosterior::from_state(*st, fitter_.config().ridge), fmap_, rng);
  }
  return round_robin_select(round_robin_++, fmap_);
}

}  // namespace survband
