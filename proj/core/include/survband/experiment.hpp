#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "survband/config.hpp"
#include "survband/eval.hpp"
#include "survband/replay.hpp"

namespace survband {

// Independent engine for (seed, rep, stream); stable across worker counts.
Rng derive_rng(std::uint64_t seed, std::uint64_t rep, std::uint32_t stream);

struct ReplicationResult {
  std::size_t rep = 0;
  bool failed = false;
  std::size_t failed_round = 0;
  std::string error;
  std::vector<RoundMetrics> rows;
  std::vector<int> actions;
  std::vector<Vector> betas;  // beta the policy acted on after each round's refresh
  double fit_ms = 0.0;        // total time spent in fitter refreshes
};

// One simulated replication. Fit failures are caught and reported in the
// result rather than thrown.
ReplicationResult simulate_replication(const ExperimentConfig& cfg, std::size_t rep);

// Runs `count` jobs on up to `workers` threads; job(i) must be independent.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& job);

std::vector<ReplicationResult> simulate(const ExperimentConfig& cfg);

struct ReplayReplication {
  std::size_t rep = 0;
  bool failed = false;
  std::string error;
  std::vector<ReplayRoundMetrics> rows;
};

struct RuntimeRow {
  std::size_t round = 0;
  double incremental_ms = 0.0;
  double refit_ms = 0.0;
};

struct RuntimeComparison {
  std::vector<RuntimeRow> rows;
  double max_beta_diff = 0.0;
  std::size_t action_mismatches = 0;
  double total_incremental_ms = 0.0;
  double total_refit_ms = 0.0;
};

// Replication 0 under both fit strategies in lockstep, timing only the fit.
// Throws std::runtime_error if the beta trajectories differ by more than
// `tolerance` or the action sequences differ.
RuntimeComparison runtime_comparison(const ExperimentConfig& cfg, double tolerance = 1e-6);

struct RunReport {
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::vector<std::string> files;
};

// Writes metrics.csv, summary.csv and failures.csv (simulate) or
// replay_metrics.csv, reference.txt and failures.csv (replay) under
// cfg.output_dir, plus runtime.csv when cfg.runtime_comparison is set.
RunReport run_experiment(const ExperimentConfig& cfg);

// Percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double p);

}  // namespace survband
