#include "survband/policies.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

namespace survband {

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::EpsilonGreedy: return "eg";
    case PolicyKind::Ucb: return "ucb";
    case PolicyKind::Thompson: return "ts";
  }
  return "?";
}

void PolicySpec::validate(std::size_t dim) const {
  if (!(eg_c >= 0.0)) throw ConfigError("policy.eg_c", "must be >= 0");
  if (!(ucb_alpha >= 0.0)) throw ConfigError("policy.ucb_alpha", "must be >= 0");
  if (!(ucb_delta > 0.0 && ucb_delta < 1.0)) {
    throw ConfigError("policy.ucb_delta", "must lie in (0, 1)");
  }
  if (!(ts_prior_sd > 0.0)) throw ConfigError("policy.ts_prior_sd", "must be > 0");
  const auto d = static_cast<Eigen::Index>(dim);
  if (ts_prior_mean && ts_prior_mean->size() != d) {
    throw ConfigError("policy.ts_prior_mean", "length must equal d = " + std::to_string(dim));
  }
  if (ts_prior_cov) {
    const Matrix& c = *ts_prior_cov;
    if (c.rows() != d || c.cols() != d) {
      throw ConfigError("policy.ts_prior_cov", "must be d x d");
    }
    if (!c.isApprox(c.transpose(), 1e-12)) {
      throw ConfigError("policy.ts_prior_cov", "must be symmetric");
    }
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() != Eigen::Success) {
      throw ConfigError("policy.ts_prior_cov", "must be positive definite");
    }
  }
}

GaussianPrior PolicySpec::ts_prior(std::size_t dim) const {
  const auto d = static_cast<Eigen::Index>(dim);
  GaussianPrior prior;
  prior.mean = ts_prior_mean ? *ts_prior_mean : Vector::Zero(d);
  if (ts_prior_cov) {
    prior.precision = ts_prior_cov->llt().solve(Matrix::Identity(d, d));
    prior.precision = 0.5 * (prior.precision + prior.precision.transpose()).eval();
  } else {
    prior.precision = Matrix::Identity(d, d) / (ts_prior_sd * ts_prior_sd);
  }
  return prior;
}

int argmin_lowest(const Vector& v) {
  int best = 0;
  for (Eigen::Index a = 1; a < v.size(); ++a) {
    if (v[a] < v[best]) best = static_cast<int>(a);
  }
  return best;
}

int argmax_lowest(const Vector& v) {
  int best = 0;
  for (Eigen::Index a = 1; a < v.size(); ++a) {
    if (v[a] > v[best]) best = static_cast<int>(a);
  }
  return best;
}

Vector linear_scores(const Vector& s, const Vector& beta, const FeatureMap& fmap) {
  Vector out(fmap.arms());
  for (int a = 0; a < fmap.arms(); ++a) out[a] = fmap.linear_score(s, a, beta);
  return out;
}

PolicyDecision greedy_select(const Vector& s, const Vector& beta, const FeatureMap& fmap) {
  PolicyDecision d;
  d.scores = linear_scores(s, beta, fmap);
  d.action = argmin_lowest(d.scores);
  return d;
}

PolicyDecision round_robin_select(std::size_t counter, const FeatureMap& fmap) {
  PolicyDecision d;
  d.scores = Vector::Zero(fmap.arms());
  d.action = static_cast<int>(counter % static_cast<std::size_t>(fmap.arms()));
  return d;
}

double eg_epsilon(double c, std::size_t t) {
  if (t == 0) return 1.0;
  return std::min(1.0, c / static_cast<double>(t));
}

PolicyDecision eg_select(const Vector& s, const Vector& beta, std::size_t t,
                         const PolicySpec& spec, const FeatureMap& fmap, Rng& rng) {
  PolicyDecision d = greedy_select(s, beta, fmap);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool explore = unif(rng) < eg_epsilon(spec.eg_c, t);
  if (explore) {
    std::uniform_int_distribution<int> arm(0, fmap.arms() - 1);
    d.action = arm(rng);
  }
  d.explored = explore;
  return d;
}

double ucb_theoretical_alpha(std::size_t dim, std::size_t t, double feature_bound,
                             double delta) {
  const double d = static_cast<double>(dim);
  const double inner =
      d * std::log(4.0 * static_cast<double>(t) * feature_bound * feature_bound / d) -
      2.0 * std::log(delta);
  return std::sqrt(std::max(inner, 0.0));
}

PolicyDecision ucb_select(const Vector& s, const CoxState& state, std::size_t t,
                          const PolicySpec& spec, const FeatureMap& fmap,
                          double feature_bound, double ridge) {
  const Matrix& info = state.information;
  Eigen::LLT<Matrix> llt(info);
  if (llt.info() != Eigen::Success) {
    llt.compute(info + ridge * Matrix::Identity(info.rows(), info.cols()));
    if (llt.info() != Eigen::Success) {
      throw CoxError(CoxError::Kind::Singular, "UCB: information matrix is singular");
    }
  }
  const double alpha =
      spec.ucb_theoretical
          ? ucb_theoretical_alpha(fmap.dim(), std::max<std::size_t>(t, 1), feature_bound,
                                  spec.ucb_delta)
          : spec.ucb_alpha;

  PolicyDecision d;
  d.scores.resize(fmap.arms());
  for (int a = 0; a < fmap.arms(); ++a) {
    const Vector x = fmap(s, a);
    const double quad = x.dot(llt.solve(x));
    d.scores[a] = -x.dot(state.beta) + alpha * std::sqrt(std::max(quad, 0.0));
  }
  d.action = argmax_lowest(d.scores);
  return d;
}

LaplacePosterior::LaplacePosterior(Vector mode, const Matrix& precision, double ridge)
    : mode_(std::move(mode)) {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    llt.compute(precision + ridge * Matrix::Identity(precision.rows(), precision.cols()));
    if (llt.info() != Eigen::Success) {
      throw CoxError(CoxError::Kind::Singular,
                     "Laplace posterior precision is not positive definite");
    }
  }
  chol_lower_ = llt.matrixL();
}

LaplacePosterior LaplacePosterior::from_state(const CoxState& state, double ridge) {
  return LaplacePosterior(state.beta, state.posterior_precision, ridge);
}

LaplacePosterior LaplacePosterior::from_prior(const GaussianPrior& prior, double ridge) {
  return LaplacePosterior(prior.mean, prior.precision, ridge);
}

Matrix LaplacePosterior::covariance() const {
  const auto d = chol_lower_.rows();
  const Matrix linv = chol_lower_.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  return linv.transpose() * linv;
}

Vector LaplacePosterior::sample(Rng& rng, double covariance_scale) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(mode_.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
  const Vector offset = chol_lower_.transpose().triangularView<Eigen::Upper>().solve(z);
  return mode_ + std::sqrt(covariance_scale) * offset;
}

PolicyDecision ts_select(const Vector& s, const LaplacePosterior& posterior,
                         const FeatureMap& fmap, Rng& rng, double covariance_scale) {
  Vector draw = posterior.sample(rng, covariance_scale);
  PolicyDecision d = greedy_select(s, draw, fmap);
  d.sampled_beta = std::move(draw);
  return d;
}

}  // namespace survband
