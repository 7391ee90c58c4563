#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "survband/agent.hpp"
#include "survband/datagen.hpp"

namespace survband {

// One row of the logged data. Times are whole months.
struct ReplayRecord {
  std::int64_t entry_month = 0;
  Vector covariates;
  int action = 0;
  std::int64_t followup_months = 0;  // C
  std::int64_t survival_months = 0;  // R <= C
  bool event = false;                // R == C when false
};

struct ReplayRound {
  std::int64_t month = 0;
  std::vector<ReplayRecord> records;
};

// CSV with header
//   entry_month,cov_1,...,cov_d0,action,followup_months,survival_months,event
// Throws ParseError with the 1-based line number.
std::vector<ReplayRecord> read_replay_csv(std::istream& in);
std::vector<ReplayRecord> read_replay_csv(const std::string& path);
void write_replay_csv(std::ostream& out, std::span<const ReplayRecord> records);

// Groups by entry month ascending; months without records produce no round.
std::vector<ReplayRound> group_rounds(std::vector<ReplayRecord> records);
std::vector<ReplayRound> ingest(const std::string& path);

// Offline Cox fit on the full logged data. Scores decisions via S0(t)^exp(x'b)
// and supplies counterfactual outcomes by inverting the Breslow cumulative
// hazard.
class ReferenceModel {
 public:
  ReferenceModel() = default;
  ReferenceModel(std::size_t covariate_dim, int arms, Vector beta,
                 std::vector<double> step_times, std::vector<double> step_cumhaz,
                 std::vector<double> horizons);

  // Throws CoxError if the fit does not converge.
  static ReferenceModel fit(std::span<const ReplayRecord> records, int arms,
                            std::vector<double> horizons, const SolverConfig& cfg = {});

  // Flat text record:
  //   d0 <n>  arms <K>  beta <d values>  horizons <n> (t S0)...  steps <m> (t H)...
  void write(std::ostream& out) const;
  static ReferenceModel read(std::istream& in);

  FeatureMap feature_map() const { return {covariate_dim_, arms_}; }
  const Vector& beta() const noexcept { return beta_; }
  std::span<const double> horizons() const noexcept { return horizons_; }

  // Tabulated S0 at a requested horizon; throws std::out_of_range otherwise.
  double baseline_at(double horizon) const;
  // Breslow S0(t) at any t >= 0.
  double baseline_survival(double t) const;

  double survival(const Vector& s, int action, double horizon) const;
  int optimal_action(const Vector& s) const;

  // Smallest step time whose cumulative hazard reaches -log(u) / exp(x'b);
  // +inf if the table never gets there.
  double draw_time(const Vector& s, int action, double u) const;

 private:
  std::size_t covariate_dim_ = 0;
  int arms_ = 1;
  Vector beta_;
  std::vector<double> step_times_;
  std::vector<double> step_cumhaz_;
  std::vector<double> horizons_;
  std::vector<double> horizon_baseline_;
};

struct ReplayBatchTrace {
  std::size_t round = 0;
  bool policy_active = false;
  Vector beta;  // the fit every decision in the batch saw
  std::vector<int> actions;
};

struct ReplayOptions {
  PolicySpec policy;
  double burn_in_events = 500.0;  // infinity keeps round-robin forever
  std::vector<double> horizons;
  SolverConfig solver;
  FitStrategy strategy = FitStrategy::Incremental;
  std::uint64_t seed = 0;
  std::int64_t skip_months = 3;
  std::function<void(const ReplayBatchTrace&)> on_batch;
};

struct ReplayRoundMetrics {
  std::size_t round = 0;  // 1-based
  std::int64_t month = 0;
  std::size_t subjects = 0;
  bool policy_active = false;
  std::size_t deaths_observed = 0;
  std::size_t counterfactual = 0;  // subjects whose outcome came from the reference
  // Per horizon: this batch, then all scored subjects so far.
  std::vector<double> batch_chosen;
  std::vector<double> batch_optimal;
  std::vector<double> cum_chosen;
  std::vector<double> cum_optimal;
};

std::vector<ReplayRoundMetrics> replay_run(std::span<const ReplayRound> rounds,
                                           const ReferenceModel& ref,
                                           const ReplayOptions& opts);

// registry-shaped monthly data from a simulation DGP: Poisson(patients_per_month)
// arrivals per month, uniformly random logged actions, survival times scaled
// by months_per_unit and rounded up, follow-up capped by the study end.
struct SyntheticReplaySpec {
  DgpSpec dgp = DgpSpec::simulation_default();
  int months = 150;
  double patients_per_month = 20.0;
  double months_per_unit = 12.0;
};

std::vector<ReplayRecord> synthesize_replay(const SyntheticReplaySpec& spec, Rng& rng);

}  // namespace survband
