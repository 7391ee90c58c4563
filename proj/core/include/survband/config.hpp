#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "survband/coxph.hpp"
#include "survband/datagen.hpp"
#include "survband/incremental.hpp"
#include "survband/policies.hpp"

namespace survband {

enum class RunMode { Simulate, Replay };

struct ReplaySettings {
  std::string data_path;
  std::string reference_path;  // empty: fit the reference on the data
  int arms = 2;
  double burn_in_events = 500.0;
  std::int64_t skip_months = 3;
};

struct ExperimentConfig {
  RunMode mode = RunMode::Simulate;
  DgpSpec dgp = DgpSpec::simulation_default();
  ReplaySettings replay;
  PolicySpec policy;
  std::size_t rounds = 500;        // simulate: T; replay: cap on rounds
  std::size_t replications = 1;
  std::vector<double> horizons{1.0};  // the first one feeds the metrics CSV
  SolverConfig solver;
  std::string output_dir = "results";
  std::uint64_t seed = 0;
  FitStrategy fit_strategy = FitStrategy::Incremental;
  unsigned workers = 1;
  bool record_wall_time = false;
  bool runtime_comparison = false;

  // Throws ConfigError with the offending field path. Relative paths in the
  // document are resolved against `base_dir`.
  static ExperimentConfig parse(const std::string& json_text, const std::string& base_dir = "");
  static ExperimentConfig load(const std::string& path);

  void validate() const;
};

}  // namespace survband
