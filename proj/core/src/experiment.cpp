#include "survband/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "survband/csv.hpp"

namespace survband {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// One simulated replication, advanced a round at a time.
class SimulationRun {
 public:
  SimulationRun(const ExperimentConfig& cfg, std::size_t rep, FitStrategy strategy)
      : cfg_(cfg),
        fmap_(cfg.dgp.feature_map()),
        dgp_rng_(derive_rng(cfg.seed, rep, 1)),
        policy_rng_(derive_rng(cfg.seed, rep, 2)),
        tl_(cfg.dgp.covariate_dim()),
        agent_(cfg.policy, fmap_, cfg.solver, strategy),
        baseline_(std::exp(-cfg.horizons.front())) {
    chosen_.reserve(cfg.rounds);
  }

  RoundMetrics step() {
    ++t_;
    if (t_ > 1) tau_ = next_arrival(tau_, cfg_.dgp, dgp_rng_);
    tl_.advance_to(tau_);

    const auto start = Clock::now();
    agent_.refresh(tl_);
    last_fit_ms_ = elapsed_ms(start);

    const Vector s = draw_covariates(cfg_.dgp, dgp_rng_);
    const int a = agent_.decide(s, t_, policy_rng_).action;
    const Vector x = fmap_(s, a);
    const Outcome o = draw_outcome(x, cfg_.dgp, dgp_rng_);
    tl_.enroll(SubjectRecord::simulated(static_cast<std::int64_t>(t_ - 1), tau_, s, a,
                                        o.latent, o.censor));
    last_action_ = a;
    chosen_.push_back(x);

    const Vector beta = agent_.current_beta();
    RoundMetrics m;
    m.round = t_;
    m.delta_regret = pseudo_regret_increment(s, a, cfg_.dgp.true_beta, fmap_);
    cum_regret_ += m.delta_regret;
    m.cum_regret = cum_regret_;
    m.beta_mse = beta_mse(beta, cfg_.dgp.true_beta);
    double fitted = 0.0;
    for (const auto& xi : chosen_) fitted += survival_prob_from_score(baseline_, xi.dot(beta));
    oracle_sum_ += survival_prob_from_score(baseline_, x.dot(cfg_.dgp.true_beta));
    m.mean_surv_fitted = fitted / static_cast<double>(t_);
    m.mean_surv_oracle = oracle_sum_ / static_cast<double>(t_);
    m.events = tl_.events().size();
    m.wall_ms = cfg_.record_wall_time ? last_fit_ms_ : 0.0;
    return m;
  }

  std::size_t round() const noexcept { return t_; }
  int last_action() const noexcept { return last_action_; }
  double last_fit_ms() const noexcept { return last_fit_ms_; }
  Vector beta() const { return agent_.current_beta(); }

 private:
  const ExperimentConfig& cfg_;
  FeatureMap fmap_;
  Rng dgp_rng_;
  Rng policy_rng_;
  Timeline tl_;
  Agent agent_;
  double baseline_;
  std::size_t t_ = 0;
  double tau_ = 0.0;
  double cum_regret_ = 0.0;
  double oracle_sum_ = 0.0;
  double last_fit_ms_ = 0.0;
  int last_action_ = 0;
  std::vector<Vector> chosen_;
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::string join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_metrics(const std::string& path, const std::vector<ReplicationResult>& results) {
  auto out = open_out(path);
  out << "round,rep,delta_regret,cum_regret,beta_mse,mean_surv_fitted,mean_surv_oracle,events,"
         "wall_ms\n";
  for (const auto& r : results) {
    if (r.failed) continue;
    for (const auto& m : r.rows) {
      out << m.round << ',' << r.rep << ',' << format_double(m.delta_regret) << ','
          << format_double(m.cum_regret) << ',' << format_double(m.beta_mse) << ','
          << format_double(m.mean_surv_fitted) << ',' << format_double(m.mean_surv_oracle)
          << ',' << m.events << ',' << format_double(m.wall_ms) << '\n';
    }
  }
}

void write_summary(const std::string& path, const std::vector<ReplicationResult>& results,
                   std::size_t rounds) {
  using Getter = double (*)(const RoundMetrics&);
  const std::pair<const char*, Getter> columns[] = {
      {"delta_regret", [](const RoundMetrics& m) { return m.delta_regret; }},
      {"cum_regret", [](const RoundMetrics& m) { return m.cum_regret; }},
      {"beta_mse", [](const RoundMetrics& m) { return m.beta_mse; }},
      {"mean_surv_fitted", [](const RoundMetrics& m) { return m.mean_surv_fitted; }},
      {"mean_surv_oracle", [](const RoundMetrics& m) { return m.mean_surv_oracle; }},
      {"events", [](const RoundMetrics& m) { return static_cast<double>(m.events); }},
  };
  auto out = open_out(path);
  out << "round,reps";
  for (const auto& [name, get] : columns) {
    out << ',' << name << "_mean," << name << "_p5," << name << "_p95";
  }
  out << '\n';
  for (std::size_t t = 0; t < rounds; ++t) {
    std::size_t reps = 0;
    for (const auto& r : results) {
      if (!r.failed && t < r.rows.size()) ++reps;
    }
    if (reps == 0) continue;
    out << t + 1 << ',' << reps;
    for (const auto& [name, get] : columns) {
      std::vector<double> v;
      v.reserve(reps);
      for (const auto& r : results) {
        if (!r.failed && t < r.rows.size()) v.push_back(get(r.rows[t]));
      }
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      out << ',' << format_double(mean) << ',' << format_double(percentile(v, 5.0)) << ','
          << format_double(percentile(v, 95.0));
    }
    out << '\n';
  }
}

RunReport run_simulation(const ExperimentConfig& cfg) {
  RunReport report;
  const auto results = simulate(cfg);
  report.replications = results.size();
  write_metrics(join(cfg.output_dir, "metrics.csv"), results);
  write_summary(join(cfg.output_dir, "summary.csv"), results, cfg.rounds);
  auto failures = open_out(join(cfg.output_dir, "failures.csv"));
  failures << "rep,round,error\n";
  for (const auto& r : results) {
    if (!r.failed) continue;
    ++report.failures;
    std::string msg = r.error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    failures << r.rep << ',' << r.failed_round << ',' << msg << '\n';
  }
  report.files = {join(cfg.output_dir, "metrics.csv"), join(cfg.output_dir, "summary.csv"),
                  join(cfg.output_dir, "failures.csv")};
  return report;
}

RunReport run_replay(const ExperimentConfig& cfg) {
  RunReport report;
  auto records = read_replay_csv(cfg.replay.data_path);
  ReferenceModel ref;
  if (!cfg.replay.reference_path.empty()) {
    std::ifstream in(cfg.replay.reference_path);
    if (!in) throw std::runtime_error("cannot open " + cfg.replay.reference_path);
    ref = ReferenceModel::read(in);
  } else {
    ref = ReferenceModel::fit(records, cfg.replay.arms, cfg.horizons, cfg.solver);
  }
  cfg.policy.validate(ref.feature_map().dim());
  auto rounds = group_rounds(std::move(records));
  if (rounds.size() > cfg.rounds) rounds.resize(cfg.rounds);

  std::vector<ReplayReplication> results(cfg.replications);
  parallel_for(cfg.replications, cfg.workers, [&](std::size_t rep) {
    ReplayReplication& res = results[rep];
    res.rep = rep;
    ReplayOptions opts;
    opts.policy = cfg.policy;
    opts.burn_in_events = cfg.replay.burn_in_events;
    opts.horizons = cfg.horizons;
    opts.solver = cfg.solver;
    opts.strategy = cfg.fit_strategy;
    opts.seed = derive_rng(cfg.seed, rep, 3)();
    opts.skip_months = cfg.replay.skip_months;
    try {
      res.rows = replay_run(rounds, ref, opts);
    } catch (const std::exception& e) {
      res.failed = true;
      res.error = e.what();
      res.rows.clear();
    }
  });

  report.replications = results.size();
  const auto metrics_path = join(cfg.output_dir, "replay_metrics.csv");
  auto out = open_out(metrics_path);
  out << "round,rep,month,subjects,policy_active,deaths,counterfactual,horizon,batch_chosen,"
         "batch_optimal,cum_chosen,cum_optimal\n";
  for (const auto& r : results) {
    for (const auto& m : r.rows) {
      for (std::size_t k = 0; k < cfg.horizons.size(); ++k) {
        out << m.round << ',' << r.rep << ',' << m.month << ',' << m.subjects << ','
            << (m.policy_active ? 1 : 0) << ',' << m.deaths_observed << ','
            << m.counterfactual << ',' << format_double(cfg.horizons[k]) << ','
            << format_double(m.batch_chosen[k]) << ',' << format_double(m.batch_optimal[k])
            << ',' << format_double(m.cum_chosen[k]) << ',' << format_double(m.cum_optimal[k])
            << '\n';
      }
    }
  }
  const auto ref_path = join(cfg.output_dir, "reference.txt");
  auto ref_out = open_out(ref_path);
  ref.write(ref_out);
  const auto fail_path = join(cfg.output_dir, "failures.csv");
  auto failures = open_out(fail_path);
  failures << "rep,round,error\n";
  for (const auto& r : results) {
    if (!r.failed) continue;
    ++report.failures;
    std::string msg = r.error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    failures << r.rep << ",," << msg << '\n';
  }
  report.files = {metrics_path, ref_path, fail_path};
  return report;
}

}  // namespace

Rng derive_rng(std::uint64_t seed, std::uint64_t rep, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32),
                    stream};
  return Rng(seq);
}

ReplicationResult simulate_replication(const ExperimentConfig& cfg, std::size_t rep) {
  ReplicationResult res;
  res.rep = rep;
  res.rows.reserve(cfg.rounds);
  SimulationRun run(cfg, rep, cfg.fit_strategy);
  try {
    for (std::size_t t = 0; t < cfg.rounds; ++t) {
      res.rows.push_back(run.step());
      res.actions.push_back(run.last_action());
      res.betas.push_back(run.beta());
      res.fit_ms += run.last_fit_ms();
    }
  } catch (const std::exception& e) {
    res.failed = true;
    res.failed_round = run.round();
    res.error = e.what();
  }
  return res;
}

void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& job) {
  const auto n = static_cast<unsigned>(std::min<std::size_t>(std::max(workers, 1u), count));
  if (n <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(n);
  for (unsigned w = 0; w < n; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<ReplicationResult> simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ReplicationResult> results(cfg.replications);
  parallel_for(cfg.replications, cfg.workers,
               [&](std::size_t rep) { results[rep] = simulate_replication(cfg, rep); });
  return results;
}

RuntimeComparison runtime_comparison(const ExperimentConfig& cfg, double tolerance) {
  cfg.validate();
  if (cfg.mode != RunMode::Simulate) {
    throw std::invalid_argument("runtime comparison needs simulate mode");
  }
  RuntimeComparison out;
  SimulationRun inc(cfg, 0, FitStrategy::Incremental);
  SimulationRun ref(cfg, 0, FitStrategy::RefitScratch);
  out.rows.reserve(cfg.rounds);
  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    inc.step();
    ref.step();
    RuntimeRow row;
    row.round = t;
    row.incremental_ms = inc.last_fit_ms();
    row.refit_ms = ref.last_fit_ms();
    out.total_incremental_ms += row.incremental_ms;
    out.total_refit_ms += row.refit_ms;
    out.rows.push_back(row);
    const double diff = (inc.beta() - ref.beta()).cwiseAbs().maxCoeff();
    out.max_beta_diff = std::max(out.max_beta_diff, diff);
    if (inc.last_action() != ref.last_action()) ++out.action_mismatches;
    if (diff > tolerance) {
      throw std::runtime_error("fit strategies diverged at round " + std::to_string(t) +
                               ": max |beta_inc - beta_refit| = " + format_double(diff));
    }
    if (out.action_mismatches > 0) {
      throw std::runtime_error("fit strategies chose different actions at round " +
                               std::to_string(t));
    }
  }
  return out;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.output_dir);
  RunReport report = cfg.mode == RunMode::Simulate ? run_simulation(cfg) : run_replay(cfg);
  if (cfg.runtime_comparison) {
    if (cfg.mode != RunMode::Simulate) {
      throw ConfigError("runtime_comparison", "only available in simulate mode");
    }
    const RuntimeComparison rc = runtime_comparison(cfg);
    const auto path = join(cfg.output_dir, "runtime.csv");
    auto out = open_out(path);
    out << "round,incremental_ms,refit_ms,cum_incremental_ms,cum_refit_ms\n";
    double ci = 0.0;
    double cr = 0.0;
    for (const auto& r : rc.rows) {
      ci += r.incremental_ms;
      cr += r.refit_ms;
      out << r.round << ',' << format_double(r.incremental_ms) << ','
          << format_double(r.refit_ms) << ',' << format_double(ci) << ',' << format_double(cr)
          << '\n';
    }
    report.files.push_back(path);
  }
  return report;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace survband
