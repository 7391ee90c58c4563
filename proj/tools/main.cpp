// survband command-line driver.
//
//   survband run --config <path> [--out <dir>] [--workers N] [--seed S]
//   survband gen-replay --out <csv> [--config <path>] [--months M] [--per-month R] [--seed S]
//   survband fit-reference --data <csv> --out <path> [--arms K] [--horizons t,...]
//
// Success prints one JSON status line on stdout. Failure prints one JSON
// error line on stderr and exits nonzero:
//   2 usage or configuration, 3 malformed input data, 4 numerical failure,
//   5 I/O or other runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "survband/config.hpp"
#include "survband/experiment.hpp"
#include "survband/replay.hpp"

namespace {

using nlohmann::json;
using namespace survband;

int fail(int code, const std::string& kind, const std::string& message,
         const std::string& path = "") {
  json line{{"status", "error"}, {"kind", kind}, {"message", message}};
  if (!path.empty()) line["path"] = path;
  std::cerr << line.dump() << '\n';
  return code;
}

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void ok(json line) {
  line["status"] = "ok";
  std::cout << line.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online survival bandits: simulation and replay runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned workers = 0;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  auto* out_opt = run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  auto* workers_opt =
      run->add_option("--workers", workers, "Parallel replications")->check(CLI::Range(1u, 4096u));
  auto* seed_opt = run->add_option("--seed", seed, "Master seed (overrides seed)");

  std::string gen_out;
  std::string gen_config;
  SyntheticReplaySpec gen;
  std::uint64_t gen_seed = 0;
  auto* gen_cmd = app.add_subcommand("gen-replay", "Write synthetic registry-shaped replay CSV");
  gen_cmd->add_option("--out", gen_out, "CSV path")->required();
  gen_cmd->add_option("--config", gen_config, "Take the dgp section from this config");
  gen_cmd->add_option("--months", gen.months, "Number of monthly rounds")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--per-month", gen.patients_per_month, "Mean arrivals per month")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--months-per-unit", gen.months_per_unit, "Months per DGP time unit")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed, "Seed");

  std::string ref_data;
  std::string ref_out;
  int ref_arms = 2;
  std::vector<double> ref_horizons{6, 12, 24};
  auto* ref_cmd = app.add_subcommand("fit-reference", "Fit the offline reference Cox model");
  ref_cmd->add_option("--data", ref_data, "Replay CSV")->required();
  ref_cmd->add_option("--out", ref_out, "Reference model path")->required();
  ref_cmd->add_option("--arms", ref_arms, "Number of actions")->check(CLI::PositiveNumber);
  ref_cmd->add_option("--horizons", ref_horizons, "Tabulated horizons (months)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }

  try {
    if (*run) {
      ExperimentConfig cfg = ExperimentConfig::load(config_path);
      if (*out_opt) cfg.output_dir = out_dir;
      if (*workers_opt) cfg.workers = workers;
      if (*seed_opt) cfg.seed = seed;
      cfg.validate();
      const RunReport report = run_experiment(cfg);
      ok({{"replications", report.replications},
          {"failures", report.failures},
          {"files", report.files}});
    } else if (*gen_cmd) {
      if (!gen_config.empty()) {
        const ExperimentConfig cfg = ExperimentConfig::load(gen_config);
        gen.dgp = cfg.dgp;
      }
      Rng rng(gen_seed);
      const auto records = synthesize_replay(gen, rng);
      ensure_parent(gen_out);
      std::ofstream out(gen_out, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + gen_out);
      write_replay_csv(out, records);
      ok({{"records", records.size()}, {"files", {gen_out}}});
    } else if (*ref_cmd) {
      const auto records = read_replay_csv(ref_data);
      const auto model = ReferenceModel::fit(records, ref_arms, ref_horizons);
      ensure_parent(ref_out);
      std::ofstream out(ref_out, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + ref_out);
      model.write(out);
      ok({{"records", records.size()}, {"files", {ref_out}}});
    }
  } catch (const ConfigError& e) {
    return fail(2, "config", e.what(), e.path());
  } catch (const ParseError& e) {
    return fail(3, "input", e.what());
  } catch (const CoxError& e) {
    return fail(4, "numerical", e.what());
  } catch (const std::exception& e) {
    return fail(5, "runtime", e.what());
  }
  return 0;
}
