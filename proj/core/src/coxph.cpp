#include "survband/coxph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace survband {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_finite(const Vector& beta, std::size_t dim) {
  if (static_cast<std::size_t>(beta.size()) != dim) {
    throw CoxError(CoxError::Kind::InvalidArgument,
                   "beta has length " + std::to_string(beta.size()) +
                       ", expected " + std::to_string(dim));
  }
  if (!beta.allFinite()) {
    throw CoxError(CoxError::Kind::InvalidArgument, "beta contains NaN or Inf");
  }
}

// Running sums over a growing risk set, scaled by exp(-shift) so that the
// largest weight seen so far is 1.
struct RiskAccumulator {
  explicit RiskAccumulator(Eigen::Index d, bool first, bool second)
      : s1(first ? Vector::Zero(d) : Vector()),
        s2(second ? Matrix::Zero(d, d) : Matrix()),
        want_s1(first),
        want_s2(second) {}

  template <typename Col>
  void add(double eta, const Col& x) {
    if (eta > shift) {
      const double scale = std::exp(shift - eta);  // 0 on the first add
      s0 *= scale;
      if (want_s1) s1 *= scale;
      if (want_s2) s2.triangularView<Eigen::Lower>() *= scale;
      shift = eta;
    }
    const double w = std::exp(eta - shift);
    s0 += w;
    if (want_s1) s1.noalias() += w * x;
    if (want_s2) s2.selfadjointView<Eigen::Lower>().rankUpdate(x, w);
  }

  double log_total() const { return shift + std::log(s0); }

  double shift = kNegInf;
  double s0 = 0.0;
  Vector s1;
  Matrix s2;
  bool want_s1;
  bool want_s2;
};

}  // namespace

GaussianPrior GaussianPrior::isotropic(std::size_t dim, double sd) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {Vector::Zero(d), Matrix::Identity(d, d) / (sd * sd)};
}

RiskIndex::RiskIndex(const FeatureMap& fmap, Mode mode) : fmap_(fmap), mode_(mode) {}

double RiskIndex::horizon_for(const SubjectRecord& rec, bool revealed,
                              double tau) const {
  if (mode_ == Mode::RevealedOnly) return revealed ? rec.observed_time : -1.0;
  return Timeline::at_risk_until(rec, tau);
}

std::size_t RiskIndex::count_events_upto(double t) const {
  return static_cast<std::size_t>(
      std::upper_bound(event_time_.begin(), event_time_.end(), t) -
      event_time_.begin());
}

void RiskIndex::append_subject(const SubjectRecord& rec, double tau) {
  const Vector x = fmap_(rec.covariates, rec.action);
  features_.insert(features_.end(), x.data(), x.data() + x.size());
  horizon_.push_back(horizon_for(rec, false, tau));
  bucket_.push_back(0);
  watch_.push_back(horizon_.size() - 1);
}

RiskIndex RiskIndex::build(const Timeline& tl, const FeatureMap& fmap, Mode mode) {
  RiskIndex index(fmap, mode);
  index.tau_ = tl.now();
  const std::size_t n = tl.size();
  index.features_.reserve(n * fmap.dim());
  index.horizon_.reserve(n);
  index.bucket_.reserve(n);
  for (const auto& ev : tl.events()) {
    index.event_subject_.push_back(ev.subject);
    index.event_time_.push_back(ev.time);
  }
  for (SubjectIndex i = 0; i < n; ++i) {
    const auto& rec = tl.subject(i);
    const Vector x = fmap(rec.covariates, rec.action);
    index.features_.insert(index.features_.end(), x.data(), x.data() + x.size());
    const bool revealed = tl.revealed(i);
    const double h = index.horizon_for(rec, revealed, tl.now());
    index.horizon_.push_back(h);
    index.bucket_.push_back(index.count_events_upto(h));
    if (!revealed) index.watch_.push_back(i);
  }
  index.reveals_seen_ = tl.reveal_log().size();
  return index;
}

bool RiskIndex::refresh(const Timeline& tl) {
  if (tl.now() < tau_ || tl.size() < horizon_.size()) {
    throw CoxError(CoxError::Kind::CorruptCache,
                   "RiskIndex::refresh: timeline moved backwards");
  }
  bool changed = false;
  tau_ = tl.now();

  for (SubjectIndex i = horizon_.size(); i < tl.size(); ++i) {
    append_subject(tl.subject(i), tau_);
  }

  // New events, in the timeline's order.
  const auto log = tl.reveal_log();
  std::vector<double> new_event_times;
  for (std::size_t k = reveals_seen_; k < log.size(); ++k) {
    const auto& rec = tl.subject(log[k].first);
    if (rec.event) new_event_times.push_back(rec.observed_time);
  }
  reveals_seen_ = log.size();
  if (!new_event_times.empty()) {
    changed = true;
    event_subject_.clear();
    event_time_.clear();
    for (const auto& ev : tl.events()) {
      event_subject_.push_back(ev.subject);
      event_time_.push_back(ev.time);
    }
    std::sort(new_event_times.begin(), new_event_times.end());
    // Settled subjects keep their horizon; only the count of events at or
    // below it can grow. Watched subjects are recomputed below.
    std::vector<char> watched(horizon_.size(), 0);
    for (SubjectIndex j : watch_) watched[j] = 1;
    for (SubjectIndex j = 0; j < horizon_.size(); ++j) {
      if (watched[j]) continue;
      const auto extra = std::upper_bound(new_event_times.begin(),
                                          new_event_times.end(), horizon_[j]) -
                         new_event_times.begin();
      bucket_[j] += static_cast<std::size_t>(extra);
    }
  }

  auto keep = watch_.begin();
  for (auto it = watch_.begin(); it != watch_.end(); ++it) {
    const SubjectIndex j = *it;
    const bool revealed = tl.revealed(j);
    const double h = horizon_for(tl.subject(j), revealed, tau_);
    const std::size_t b = count_events_upto(h);
    if (b != bucket_[j]) changed = true;
    horizon_[j] = h;
    bucket_[j] = b;
    if (!revealed) *keep++ = j;
  }
  watch_.erase(keep, watch_.end());

  if (changed) order_dirty_ = true;
  return changed;
}

void RiskIndex::rebuild_order() const {
  const std::size_t m = event_time_.size();
  // Counting sort on bucket, descending.
  std::vector<std::size_t> count(m + 1, 0);
  for (std::size_t b : bucket_) ++count[b];
  group_end_.assign(m, 0);
  std::size_t running = 0;
  for (std::size_t e = m; e-- > 0;) {
    running += count[e + 1];
    group_end_[e] = running;
  }
  std::vector<std::size_t> cursor(m + 1, 0);
  for (std::size_t b = m, pos = 0; b >= 1; --b) {
    cursor[b] = pos;
    pos += count[b];
  }
  order_.assign(running, 0);
  for (SubjectIndex j = 0; j < bucket_.size(); ++j) {
    const std::size_t b = bucket_[j];
    if (b > 0) order_[cursor[b]++] = j;
  }
  order_dirty_ = false;
}

std::span<const SubjectIndex> RiskIndex::order() const {
  if (order_dirty_) rebuild_order();
  return order_;
}

std::span<const std::size_t> RiskIndex::group_end() const {
  if (order_dirty_) rebuild_order();
  return group_end_;
}

CoxEvaluation evaluate(const RiskIndex& index, const Vector& beta, Derivatives want) {
  const auto d = static_cast<Eigen::Index>(index.dim());
  require_finite(beta, index.dim());
  const bool want_score = want != Derivatives::None;
  const bool want_info = want == Derivatives::ScoreAndInformation;

  CoxEvaluation out;
  out.score = Vector::Zero(d);
  out.information = Matrix::Zero(d, d);
  const std::size_t m = index.events();
  out.log_denominators.resize(m);
  if (m == 0) return out;

  const auto X = index.features();
  const Vector eta = X.transpose() * beta;
  const auto order = index.order();
  const auto group_end = index.group_end();
  const auto ev_subject = index.event_subjects();

  RiskAccumulator acc(d, want_score, want_info);
  std::size_t pos = 0;
  Vector xbar(d);
  for (std::size_t e = m; e-- > 0;) {
    for (; pos < group_end[e]; ++pos) {
      const SubjectIndex j = order[pos];
      acc.add(eta[static_cast<Eigen::Index>(j)], X.col(static_cast<Eigen::Index>(j)));
    }
    const auto i = static_cast<Eigen::Index>(ev_subject[e]);
    const double log_den = acc.log_total();
    out.log_denominators[e] = log_den;
    out.loglik += eta[i] - log_den;
    if (want_score) {
      xbar = acc.s1 / acc.s0;
      out.score += X.col(i) - xbar;
    }
    if (want_info) {
      out.information.triangularView<Eigen::Lower>() += acc.s2 / acc.s0;
      out.information.selfadjointView<Eigen::Lower>().rankUpdate(xbar, -1.0);
    }
  }
  if (want_info) {
    out.information.triangularView<Eigen::StrictlyUpper>() =
        out.information.transpose().triangularView<Eigen::StrictlyUpper>();
  }
  return out;
}

namespace {

struct Objective {
  CoxEvaluation eval;
  double value = 0.0;
  Vector gradient;
  Matrix hessian_neg;  // -Hessian of the objective
};

Objective assess(const RiskIndex& index, const Vector& beta,
                 const GaussianPrior* prior, bool with_hessian) {
  Objective o;
  o.eval = evaluate(index, beta,
                    with_hessian ? Derivatives::ScoreAndInformation : Derivatives::Score);
  o.value = o.eval.loglik;
  o.gradient = o.eval.score;
  if (with_hessian) o.hessian_neg = o.eval.information;
  if (prior != nullptr) {
    const Vector diff = beta - prior->mean;
    const Vector pd = prior->precision * diff;
    o.value -= 0.5 * diff.dot(pd);
    o.gradient -= pd;
    if (with_hessian) o.hessian_neg += prior->precision;
  }
  return o;
}

double min_eigenvalue(const Matrix& h) {
  if (h.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Vector newton_direction(const Matrix& h, const Vector& g, double ridge) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() == Eigen::Success) return llt.solve(g);
  const Matrix jittered = h + ridge * Matrix::Identity(h.rows(), h.cols());
  llt.compute(jittered);
  if (llt.info() != Eigen::Success) {
    throw CoxError(CoxError::Kind::Singular,
                   "information matrix not positive definite after ridge jitter");
  }
  return llt.solve(g);
}

}  // namespace

CoxState fit(const RiskIndex& index, const Vector& warm_start, const SolverConfig& cfg,
             const GaussianPrior* prior) {
  if (index.events() == 0 && prior == nullptr) {
    throw CoxError(CoxError::Kind::InsufficientData, "insufficient data: no events");
  }
  require_finite(warm_start, index.dim());

  Vector beta = warm_start;
  Objective cur = assess(index, beta, prior, true);
  int iters = 0;
  bool converged = false;
  while (true) {
    if (cur.gradient.norm() <= cfg.tol) {
      converged = true;
      break;
    }
    if (iters >= cfg.max_iter) break;
    const Vector step = newton_direction(cur.hessian_neg, cur.gradient, cfg.ridge);

    double t = 1.0;
    bool accepted = false;
    Objective cand;
    Vector trial;
    const double slack = 1e-12 * std::max(1.0, std::abs(cur.value));
    for (int h = 0; h <= cfg.max_halvings; ++h, t *= 0.5) {
      trial = beta + t * step;
      cand = assess(index, trial, prior, true);
      if (!std::isfinite(cand.value)) continue;
      if (cand.value > cur.value ||
          (cand.value >= cur.value - slack &&
           cand.gradient.norm() < cur.gradient.norm())) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    beta = std::move(trial);
    cur = std::move(cand);
    ++iters;
  }

  CoxState st;
  st.beta = std::move(beta);
  st.loglik = cur.eval.loglik;
  st.objective = cur.value;
  st.log_denominators = std::move(cur.eval.log_denominators);
  st.information = std::move(cur.eval.information);
  st.posterior_precision = std::move(cur.hessian_neg);
  st.score_norm = cur.gradient.norm();
  st.converged = converged;
  st.min_curvature = min_eigenvalue(st.posterior_precision);
  st.newton_iters = iters;
  st.events = index.events();
  st.tau = index.tau();
  return st;
}

double log_partial_likelihood(const Timeline& tl, const FeatureMap& fmap,
                              const Vector& beta) {
  return evaluate(RiskIndex::build(tl, fmap), beta, Derivatives::None).loglik;
}

Vector score(const Timeline& tl, const FeatureMap& fmap, const Vector& beta) {
  return evaluate(RiskIndex::build(tl, fmap), beta, Derivatives::Score).score;
}

Matrix information(const Timeline& tl, const FeatureMap& fmap, const Vector& beta) {
  return evaluate(RiskIndex::build(tl, fmap), beta).information;
}

CoxState fit(const Timeline& tl, const FeatureMap& fmap, const Vector& warm_start,
             const SolverConfig& cfg, const GaussianPrior* prior) {
  return fit(RiskIndex::build(tl, fmap), warm_start, cfg, prior);
}

std::vector<double> breslow_baseline(const RiskIndex& index, const Vector& beta,
                                     std::span<const double> times) {
  const auto ev = evaluate(index, beta, Derivatives::None);
  const auto event_times = index.event_times();
  std::vector<double> cumulative(event_times.size() + 1, 0.0);
  for (std::size_t e = 0; e < event_times.size(); ++e) {
    cumulative[e + 1] = cumulative[e] + std::exp(-ev.log_denominators[e]);
  }
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    const auto k = std::upper_bound(event_times.begin(), event_times.end(), t) -
                   event_times.begin();
    out.push_back(std::exp(-cumulative[static_cast<std::size_t>(k)]));
  }
  return out;
}

double breslow_baseline(const RiskIndex& index, const Vector& beta, double t) {
  return breslow_baseline(index, beta, std::span<const double>(&t, 1)).front();
}

double breslow_baseline(const Timeline& tl, const FeatureMap& fmap,
                        const Vector& beta, double t) {
  return breslow_baseline(RiskIndex::build(tl, fmap), beta, t);
}

double survival_prob_from_score(double baseline_survival, double linear_score) {
  if (baseline_survival >= 1.0) return 1.0;
  return std::exp(std::exp(linear_score) * std::log(baseline_survival));
}

double survival_prob(double baseline_survival, const Vector& x, const Vector& beta) {
  return survival_prob_from_score(baseline_survival, x.dot(beta));
}

bool epv_gate_open(const Timeline& tl, const FeatureMap& fmap, const SolverConfig& cfg) {
  const auto need = static_cast<std::size_t>(
      std::ceil(cfg.epv_gate * static_cast<double>(fmap.covariate_dim())));
  for (std::size_t c : tl.events_per_arm(fmap.arms())) {
    if (c < need) return false;
  }
  return true;
}

}  // namespace survband
