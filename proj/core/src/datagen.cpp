#include "survband/datagen.hpp"

#include <cmath>
#include <limits>

namespace survband {

namespace {

// U in (0, 1]; log(U) stays finite.
double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return 1.0 - unif(rng);
}

}  // namespace

const char* to_string(DgpKind kind) {
  switch (kind) {
    case DgpKind::CoxPH: return "cox";
    case DgpKind::DisturbedCox: return "disturbed_cox";
    case DgpKind::AFT: return "aft";
    case DgpKind::PiecewiseHazard: return "piecewise";
  }
  return "?";
}

DgpSpec DgpSpec::simulation_default() {
  DgpSpec spec;
  spec.true_beta.resize(6);
  spec.true_beta << 0.5, -0.3, -0.2, 0.2, 0.6, -0.1;
  spec.covariates = {CovariateLaw::uniform(1.0, 4.0), CovariateLaw::normal(3.0, 1.0),
                     CovariateLaw::normal(2.0, 1.0)};
  return spec;
}

void DgpSpec::validate(const std::string& prefix) const {
  const auto field = [&](const char* name) { return prefix + "." + name; };
  if (arms < 1) throw ConfigError(field("arms"), "must be >= 1");
  if (covariates.empty()) throw ConfigError(field("covariates"), "must not be empty");
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    const auto& law = covariates[j];
    const std::string path = field("covariates") + "[" + std::to_string(j) + "]";
    if (!std::isfinite(law.a) || !std::isfinite(law.b)) {
      throw ConfigError(path, "parameters must be finite");
    }
    if (law.kind == CovariateLaw::Kind::Uniform && !(law.a < law.b)) {
      throw ConfigError(path, "uniform bounds need lo < hi");
    }
    if (law.kind == CovariateLaw::Kind::Normal && !(law.b > 0.0)) {
      throw ConfigError(path, "normal sd must be > 0");
    }
  }
  const auto d = covariates.size() * static_cast<std::size_t>(arms);
  if (static_cast<std::size_t>(true_beta.size()) != d) {
    throw ConfigError(field("true_beta"), "length must equal d0 * arms = " + std::to_string(d));
  }
  if (!true_beta.allFinite()) throw ConfigError(field("true_beta"), "must be finite");
  if (!(arrival_lambda > 0.0)) throw ConfigError(field("arrival_lambda"), "must be > 0");
  if (!(censor_scale > 0.0)) throw ConfigError(field("censor_scale"), "must be > 0");
  if (!(disturb_sigma >= 0.0)) throw ConfigError(field("disturb_sigma"), "must be >= 0");
  if (!(aft_sigma > 0.0)) throw ConfigError(field("aft_sigma"), "must be > 0");
  if (piecewise_levels.empty()) {
    throw ConfigError(field("piecewise_levels"), "must not be empty");
  }
  for (double h : piecewise_levels) {
    if (!(h > 0.0)) throw ConfigError(field("piecewise_levels"), "levels must be > 0");
  }
}

double next_arrival(double prev, const DgpSpec& spec, Rng& rng) {
  std::poisson_distribution<int> gap(spec.arrival_lambda);
  return prev + static_cast<double>(gap(rng));
}

Vector draw_covariates(const DgpSpec& spec, Rng& rng) {
  Vector s(static_cast<Eigen::Index>(spec.covariates.size()));
  for (std::size_t j = 0; j < spec.covariates.size(); ++j) {
    const auto& law = spec.covariates[j];
    if (law.kind == CovariateLaw::Kind::Uniform) {
      s[static_cast<Eigen::Index>(j)] = std::uniform_real_distribution<double>(law.a, law.b)(rng);
    } else {
      s[static_cast<Eigen::Index>(j)] = std::normal_distribution<double>(law.a, law.b)(rng);
    }
  }
  return s;
}

double cox_inverse_transform(double u, double eta) { return -std::log(u) / std::exp(eta); }

Outcome draw_outcome_from_score(double eta, const DgpSpec& spec, Rng& rng) {
  Outcome out;
  switch (spec.kind) {
    case DgpKind::CoxPH:
      out.latent = cox_inverse_transform(open_uniform(rng), eta);
      break;
    case DgpKind::DisturbedCox: {
      const double u = open_uniform(rng);
      const double e = std::normal_distribution<double>(0.0, 1.0)(rng) * spec.disturb_sigma;
      out.latent = cox_inverse_transform(u, eta + e);
      break;
    }
    case DgpKind::AFT: {
      const double e = std::normal_distribution<double>(0.0, 1.0)(rng) * spec.aft_sigma;
      out.latent = std::exp(eta + e);
      break;
    }
    case DgpKind::PiecewiseHazard: {
      const double u = open_uniform(rng);
      std::uniform_int_distribution<std::size_t> pick(0, spec.piecewise_levels.size() - 1);
      const double h0 = spec.piecewise_levels[pick(rng)];
      out.latent = cox_inverse_transform(u, eta) / h0;
      break;
    }
  }
  // Guard against underflow to zero: survival times must be positive.
  if (!(out.latent > 0.0)) out.latent = std::numeric_limits<double>::min();
  out.censor = spec.censor_scale * -std::log(open_uniform(rng));
  if (!(out.censor > 0.0)) out.censor = std::numeric_limits<double>::min();
  out.event = out.latent <= out.censor;
  out.observed = out.event ? out.latent : out.censor;
  return out;
}

Outcome draw_outcome(const Vector& x, const DgpSpec& spec, Rng& rng) {
  if (x.size() != spec.true_beta.size()) {
    throw std::invalid_argument("draw_outcome: feature length does not match true_beta");
  }
  return draw_outcome_from_score(x.dot(spec.true_beta), spec, rng);
}

double empirical_censoring_rate(const DgpSpec& spec, std::size_t n, Rng& rng) {
  if (n == 0) return 0.0;
  const FeatureMap fmap = spec.feature_map();
  std::uniform_int_distribution<int> arm(0, spec.arms - 1);
  std::size_t censored = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector s = draw_covariates(spec, rng);
    const int a = arm(rng);
    const Outcome o = draw_outcome_from_score(fmap.linear_score(s, a, spec.true_beta), spec, rng);
    if (!o.event) ++censored;
  }
  return static_cast<double>(censored) / static_cast<double>(n);
}

}  // namespace survband
