#include <benchmark/benchmark.h>

#include "survband/datagen.hpp"
#include "survband/incremental.hpp"

namespace {

using namespace survband;

// A simulated trace of n arrivals under random actions.
Timeline make_trace(std::size_t n, std::uint64_t seed) {
  const DgpSpec spec = DgpSpec::simulation_default();
  const FeatureMap fmap = spec.feature_map();
  Rng rng(seed);
  std::uniform_int_distribution<int> arm(0, spec.arms - 1);
  Timeline tl(spec.covariate_dim());
  double tau = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) tau = next_arrival(tau, spec, rng);
    const Vector s = draw_covariates(spec, rng);
    const int a = arm(rng);
    const Outcome o = draw_outcome(fmap(s, a), spec, rng);
    tl.enroll(SubjectRecord::simulated(static_cast<std::int64_t>(i), tau, s, a, o.latent,
                                       o.censor));
  }
  tl.advance_to(tau + 1.0);
  return tl;
}

void BM_Evaluate(benchmark::State& state) {
  const DgpSpec spec = DgpSpec::simulation_default();
  const Timeline tl = make_trace(static_cast<std::size_t>(state.range(0)), 1);
  const RiskIndex index = RiskIndex::build(tl, spec.feature_map());
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(index, spec.true_beta));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Evaluate)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_BuildIndex(benchmark::State& state) {
  const DgpSpec spec = DgpSpec::simulation_default();
  const Timeline tl = make_trace(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(RiskIndex::build(tl, spec.feature_map()));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildIndex)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

// Whole online run of n rounds: refresh the fit after every arrival.
void run_online(benchmark::State& state, FitStrategy strategy) {
  const DgpSpec spec = DgpSpec::simulation_default();
  const FeatureMap fmap = spec.feature_map();
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    state.PauseTiming();
    Rng rng(3);
    std::uniform_int_distribution<int> arm(0, spec.arms - 1);
    Timeline tl(spec.covariate_dim());
    OnlineCoxFitter fitter(fmap, SolverConfig{}, strategy);
    double tau = 0.0;
    state.ResumeTiming();
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) tau = next_arrival(tau, spec, rng);
      tl.advance_to(tau);
      benchmark::DoNotOptimize(fitter.refresh(tl));
      const Vector s = draw_covariates(spec, rng);
      const int a = arm(rng);
      const Outcome o = draw_outcome(fmap(s, a), spec, rng);
      tl.enroll(SubjectRecord::simulated(static_cast<std::int64_t>(i), tau, s, a, o.latent,
                                         o.censor));
    }
  }
}

void BM_OnlineIncremental(benchmark::State& state) { run_online(state, FitStrategy::Incremental); }
void BM_OnlineRefit(benchmark::State& state) { run_online(state, FitStrategy::RefitScratch); }
BENCHMARK(BM_OnlineIncremental)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OnlineRefit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_LoglikAdvance(benchmark::State& state) {
  const DgpSpec spec = DgpSpec::simulation_default();
  const FeatureMap fmap = spec.feature_map();
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    state.PauseTiming();
    Rng rng(4);
    std::uniform_int_distribution<int> arm(0, spec.arms - 1);
    Timeline tl(spec.covariate_dim());
    LoglikCache cache(tl, fmap, spec.true_beta);
    double tau = 0.0;
    state.ResumeTiming();
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) tau = next_arrival(tau, spec, rng);
      tl.advance_to(tau);
      benchmark::DoNotOptimize(cache.advance(tl));
      const Vector s = draw_covariates(spec, rng);
      const int a = arm(rng);
      const Outcome o = draw_outcome(fmap(s, a), spec, rng);
      tl.enroll(SubjectRecord::simulated(static_cast<std::int64_t>(i), tau, s, a, o.latent,
                                         o.censor));
    }
  }
}
BENCHMARK(BM_LoglikAdvance)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
