#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "survband/datagen.hpp"
#include "survband/timeline.hpp"

namespace testing_support {

using namespace survband;

struct TraceOptions {
  std::size_t subjects = 50;
  double censor_scale = 5.0;
  // > 0 rounds survival and censoring times up to this grid, forcing ties.
  double grid = 0.0;
};

// Subjects of a simulation-DGP trace under uniformly random actions, in
// arrival order.
inline std::vector<SubjectRecord> random_trace(std::uint64_t seed, const TraceOptions& opt = {}) {
  DgpSpec spec = DgpSpec::simulation_default();
  spec.censor_scale = opt.censor_scale;
  const FeatureMap fmap = spec.feature_map();
  Rng rng(seed);
  std::uniform_int_distribution<int> arm(0, spec.arms - 1);
  std::vector<SubjectRecord> out;
  double tau = 0.0;
  for (std::size_t i = 0; i < opt.subjects; ++i) {
    if (i > 0) tau = next_arrival(tau, spec, rng);
    const Vector s = draw_covariates(spec, rng);
    const int a = arm(rng);
    Outcome o = draw_outcome(fmap(s, a), spec, rng);
    if (opt.grid > 0.0) {
      o.latent = std::ceil(o.latent / opt.grid) * opt.grid;
      o.censor = std::ceil(o.censor / opt.grid) * opt.grid;
    }
    out.push_back(SubjectRecord::simulated(static_cast<std::int64_t>(i), tau, s, a, o.latent,
                                           o.censor));
  }
  return out;
}

inline Vector random_beta(Rng& rng, Eigen::Index d, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  Vector b(d);
  for (Eigen::Index k = 0; k < d; ++k) b[k] = n(rng);
  return b;
}

}  // namespace testing_support
