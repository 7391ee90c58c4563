#include "survband/incremental.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace survband {

namespace {

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

LoglikCache::LoglikCache(const Timeline& tl, const FeatureMap& fmap, Vector beta)
    : fmap_(fmap), beta_(std::move(beta)), tau_(tl.now()) {
  const RiskIndex index = RiskIndex::build(tl, fmap_);
  const CoxEvaluation ev = evaluate(index, beta_, Derivatives::None);
  loglik_ = ev.loglik;
  const auto subjects = index.event_subjects();
  const auto times = index.event_times();
  events_.reserve(subjects.size());
  for (std::size_t e = 0; e < subjects.size(); ++e) {
    events_.push_back({subjects[e], times[e], ev.log_denominators[e]});
  }
  reveals_seen_ = tl.reveal_log().size();
}

double LoglikCache::linear_score(const SubjectRecord& rec) const {
  return fmap_.linear_score(rec.covariates, rec.action, beta_);
}

LoglikCache::Update LoglikCache::advance(const Timeline& tl) {
  const double now = tl.now();
  if (now < tau_ || tl.events().size() < events_.size() ||
      tl.reveal_log().size() < reveals_seen_) {
    throw CoxError(CoxError::Kind::CorruptCache,
                   "LoglikCache: timeline is behind the cached state");
  }
  // Each event's own subject is in its risk set, so D_e >= exp(X_i' beta).
  for (const auto& ev : events_) {
    const double own = linear_score(tl.subject(ev.subject));
    if (ev.log_denominator < own - 1e-9 * std::max(1.0, std::abs(own))) {
      throw CoxError(CoxError::Kind::CorruptCache,
                     "LoglikCache: cached denominator below its own subject's weight");
    }
  }

  Update up;
  const auto by_time = [](double t, const CachedEvent& e) { return t < e.time; };

  // P2: unrevealed subjects extend their at-risk windows over earlier events.
  for (const auto& inc : tl.risk_set_delta(tau_, now)) {
    const double eta = linear_score(tl.subject(inc.subject));
    auto first = std::upper_bound(events_.begin(), events_.end(), inc.lo, by_time);
    const auto last = std::upper_bound(first, events_.end(), inc.hi, by_time);
    for (; first != last; ++first) {
      const double grown = log_add_exp(first->log_denominator, eta);
      if (grown < first->log_denominator) {
        throw CoxError(CoxError::Kind::CorruptCache, "LoglikCache: denominator shrank");
      }
      up.p2 += first->log_denominator - grown;
      first->log_denominator = grown;
      ++up.touched;
    }
  }

  // P1: newly revealed events against the risk sets at `now`.
  const auto log = tl.reveal_log();
  for (std::size_t k = reveals_seen_; k < log.size(); ++k) {
    const SubjectIndex i = log[k].first;
    const auto& rec = tl.subject(i);
    if (!rec.event) continue;
    const double s = rec.observed_time;
    double log_den = -std::numeric_limits<double>::infinity();
    for (const auto& other : tl.subjects()) {
      if (other.entry_time <= now && s <= Timeline::at_risk_until(other, now)) {
        log_den = log_add_exp(log_den, linear_score(other));
      }
    }
    up.p1 += linear_score(rec) - log_den;
    const auto pos = std::upper_bound(events_.begin(), events_.end(), s, by_time);
    events_.insert(pos, CachedEvent{i, s, log_den});
    ++up.new_events;
  }

  reveals_seen_ = log.size();
  loglik_ += up.p1 + up.p2;
  tau_ = now;
  return up;
}

OnlineCoxFitter::OnlineCoxFitter(const FeatureMap& fmap, SolverConfig cfg,
                                 FitStrategy strategy,
                                 std::optional<GaussianPrior> prior)
    : fmap_(fmap), cfg_(cfg), strategy_(strategy), prior_(std::move(prior)) {}

Vector OnlineCoxFitter::cold_start() const {
  if (prior_) return prior_->mean;
  return Vector::Zero(static_cast<Eigen::Index>(fmap_.dim()));
}

bool OnlineCoxFitter::adoptable(const CoxState& st) const {
  return st.converged && st.min_curvature >= cfg_.min_curvature;
}

const CoxState* OnlineCoxFitter::refresh(const Timeline& tl) {
  if (!epv_gate_open(tl, fmap_, cfg_)) return state();
  const GaussianPrior* prior = prior_ ? &*prior_ : nullptr;

  if (strategy_ == FitStrategy::Incremental) {
    bool changed = true;
    if (!index_) {
      index_ = RiskIndex::build(tl, fmap_);
    } else {
      changed = index_->refresh(tl);
    }
    if (!changed && state_) return state();
    state_ = fit(*index_, converged_ ? converged_->beta : cold_start(), cfg_, prior);
    // A stale warm start far out on a flat tail can stall Newton for good.
    if (converged_ && !adoptable(*state_)) state_ = fit(*index_, cold_start(), cfg_, prior);
  } else {
    const RiskIndex index = RiskIndex::build(tl, fmap_);
    state_ = fit(index, cold_start(), cfg_, prior);
  }
  ++fits_;
  if (adoptable(*state_)) converged_ = state_;
  return state();
}

}  // namespace survband
