#include "survband/eval.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "survband/policies.hpp"

namespace survband {

double pseudo_regret_increment(const Vector& s, int chosen, const Vector& beta,
                               const FeatureMap& fmap) {
  const Vector scores = linear_scores(s, beta, fmap);
  if (chosen < 0 || chosen >= fmap.arms()) {
    throw std::out_of_range("pseudo_regret_increment: action out of range");
  }
  return scores[chosen] - scores.minCoeff();
}

double survival_regret_increment(const Vector& s, int chosen, const Vector& beta,
                                 const FeatureMap& fmap, double baseline_survival) {
  const Vector scores = linear_scores(s, beta, fmap);
  if (chosen < 0 || chosen >= fmap.arms()) {
    throw std::out_of_range("survival_regret_increment: action out of range");
  }
  return survival_prob_from_score(baseline_survival, scores.minCoeff()) -
         survival_prob_from_score(baseline_survival, scores[chosen]);
}

double beta_mse(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) {
    throw std::invalid_argument("beta_mse: length mismatch");
  }
  return (estimate - truth).squaredNorm();
}

double mean_survival_probability(std::span<const SubjectRecord> subjects,
                                 const FeatureMap& fmap, const Vector& beta,
                                 double baseline_survival) {
  if (subjects.empty()) return 0.0;
  double total = 0.0;
  for (const auto& rec : subjects) {
    total += survival_prob_from_score(baseline_survival,
                                      fmap.linear_score(rec.covariates, rec.action, beta));
  }
  return total / static_cast<double>(subjects.size());
}

CoxState naive_fit(const Timeline& tl, const FeatureMap& fmap, const Vector& warm_start,
                   const SolverConfig& cfg) {
  const RiskIndex index = RiskIndex::build(tl, fmap, RiskIndex::Mode::RevealedOnly);
  return fit(index, warm_start, cfg);
}

std::optional<double> event_growth_exponent(std::span<const double> events_so_far) {
  std::vector<double> xs;
  std::vector<double> ys;
  const std::size_t n = events_so_far.size();
  std::size_t usable = 0;
  for (double m : events_so_far) {
    if (m >= 1.0) ++usable;
  }
  if (usable < 20) return std::nullopt;
  for (std::size_t k = n / 2; k < n; ++k) {
    const double m = events_so_far[k];
    if (m < 1.0) continue;
    xs.push_back(std::log(static_cast<double>(k + 1)));
    ys.push_back(std::log(m));
  }
  if (xs.size() < 2) return std::nullopt;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  if (sxx <= 0.0) return std::nullopt;
  return sxy / sxx;
}

}  // namespace survband
