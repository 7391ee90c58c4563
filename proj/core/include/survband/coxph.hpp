#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "survband/features.hpp"
#include "survband/timeline.hpp"
#include "survband/types.hpp"

namespace survband {

struct SolverConfig {
  double tol = 1e-8;       // converged when ||U||_2 <= tol
  int max_iter = 50;
  double ridge = 1e-6;     // added to the Hessian only if Cholesky fails
  int max_halvings = 20;
  // Fitting is allowed once every arm has >= ceil(epv_gate * d0) events.
  double epv_gate = 1.0;
  // Online fitting only adopts a converged fit whose penalized information has
  // smallest eigenvalue >= this. Rejects the flat tails Newton reaches when the
  // maximum likelihood estimate does not exist (monotone likelihood).
  double min_curvature = 1e-6;
};

// N(mean, precision^-1) prior on beta; turns the fit into a MAP fit.
struct GaussianPrior {
  Vector mean;
  Matrix precision;

  static GaussianPrior isotropic(std::size_t dim, double sd);
};

// Beta-independent risk structure of a Timeline at one calendar time.
//
// Events are kept in ascending survival time. Subject j belongs to the risk
// set of event e iff e < bucket_[j], where bucket_[j] counts the events with
// time <= at_risk_until(j). Evaluating the likelihood at a new beta is then
// one pass over subjects grouped by bucket, with no pairwise scan.
class RiskIndex {
 public:
  enum class Mode {
    Full,          // staggered-entry risk sets (pending subjects contribute)
    RevealedOnly,  // pending subjects dropped entirely
  };

  RiskIndex(const FeatureMap& fmap, Mode mode = Mode::Full);

  // From-scratch construction at tl.now().
  static RiskIndex build(const Timeline& tl, const FeatureMap& fmap,
                         Mode mode = Mode::Full);

  // Brings the index up to tl.now(), touching only new subjects, pending
  // subjects and newly revealed events. `tl` must be the timeline this index
  // has been tracking. Returns false when no risk set or event changed.
  bool refresh(const Timeline& tl);

  const FeatureMap& feature_map() const noexcept { return fmap_; }
  double tau() const noexcept { return tau_; }
  std::size_t subjects() const noexcept { return horizon_.size(); }
  std::size_t events() const noexcept { return event_subject_.size(); }
  std::size_t dim() const noexcept { return fmap_.dim(); }

  Eigen::Map<const Matrix> features() const {
    return {features_.data(), static_cast<Eigen::Index>(dim()),
            static_cast<Eigen::Index>(horizon_.size())};
  }
  std::span<const SubjectIndex> event_subjects() const noexcept { return event_subject_; }
  std::span<const double> event_times() const noexcept { return event_time_; }
  std::span<const double> horizons() const noexcept { return horizon_; }
  std::span<const std::size_t> buckets() const noexcept { return bucket_; }

  // Subjects with a nonzero bucket, ordered by bucket descending.
  // group_end()[e] is one past the last position in order() whose bucket is
  // >= e + 1, i.e. the prefix of order() that forms event e's risk set.
  std::span<const SubjectIndex> order() const;
  std::span<const std::size_t> group_end() const;

 private:
  void append_subject(const SubjectRecord& rec, double tau);
  double horizon_for(const SubjectRecord& rec, bool revealed, double tau) const;
  std::size_t count_events_upto(double t) const;
  void rebuild_order() const;

  FeatureMap fmap_;
  Mode mode_;
  double tau_ = 0.0;
  std::vector<double> features_;  // column-major d x n
  std::vector<double> horizon_;
  std::vector<std::size_t> bucket_;
  std::vector<SubjectIndex> event_subject_;
  std::vector<double> event_time_;
  std::vector<SubjectIndex> watch_;   // subjects whose horizon can still grow
  std::size_t reveals_seen_ = 0;
  mutable bool order_dirty_ = true;
  mutable std::vector<SubjectIndex> order_;
  mutable std::vector<std::size_t> group_end_;
};

// Log partial likelihood, score and observed information at one beta.
// Breslow convention: tied events share one risk set.
struct CoxEvaluation {
  double loglik = 0.0;
  Vector score;
  Matrix information;
  // log sum_{j in R(tau, s_e)} exp(X_j' beta), aligned with the index's events.
  std::vector<double> log_denominators;
};

enum class Derivatives { None, Score, ScoreAndInformation };

CoxEvaluation evaluate(const RiskIndex& index, const Vector& beta,
                       Derivatives want = Derivatives::ScoreAndInformation);

struct CoxState {
  Vector beta;
  double loglik = 0.0;  // log partial likelihood (prior term excluded)
  double objective = 0.0;  // loglik + log prior, equal to loglik without a prior
  std::vector<double> log_denominators;
  Matrix information;   // observed information of the partial likelihood
  Matrix posterior_precision;  // information + prior precision
  double score_norm = 0.0;
  bool converged = false;
  double min_curvature = 0.0;  // smallest eigenvalue of posterior_precision
  int newton_iters = 0;
  std::size_t events = 0;
  double tau = 0.0;
};

// Newton-Raphson with step halving on the (penalized) log partial
// likelihood. Throws CoxError(InsufficientData) without events and a prior,
// and CoxError(Singular) if the Hessian stays indefinite after jitter.
CoxState fit(const RiskIndex& index, const Vector& warm_start,
             const SolverConfig& cfg, const GaussianPrior* prior = nullptr);

// Convenience wrappers evaluated at tl.now().
double log_partial_likelihood(const Timeline& tl, const FeatureMap& fmap,
                              const Vector& beta);
Vector score(const Timeline& tl, const FeatureMap& fmap, const Vector& beta);
Matrix information(const Timeline& tl, const FeatureMap& fmap, const Vector& beta);
CoxState fit(const Timeline& tl, const FeatureMap& fmap, const Vector& warm_start,
             const SolverConfig& cfg, const GaussianPrior* prior = nullptr);

// Breslow estimate S0(t) = exp(-sum_{s_e <= t} 1 / D_e(beta)).
double breslow_baseline(const RiskIndex& index, const Vector& beta, double t);
double breslow_baseline(const Timeline& tl, const FeatureMap& fmap,
                        const Vector& beta, double t);
// Same, at several times in one pass. `times` need not be sorted.
std::vector<double> breslow_baseline(const RiskIndex& index, const Vector& beta,
                                     std::span<const double> times);

// S(t | x) = S0(t)^exp(x' beta).
double survival_prob(double baseline_survival, const Vector& x, const Vector& beta);
double survival_prob_from_score(double baseline_survival, double linear_score);

// Whether every arm has enough revealed events to fit.
bool epv_gate_open(const Timeline& tl, const FeatureMap& fmap, const SolverConfig& cfg);

}  // namespace survband
