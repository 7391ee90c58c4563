#include "survband/replay.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "survband/csv.hpp"

namespace survband {

namespace {

std::int64_t parse_field_int(std::string_view text, std::size_t line, const char* name) {
  try {
    return parse_int(trim(text));
  } catch (const std::invalid_argument&) {
    throw ParseError(line, std::string("bad integer in column ") + name + ": '" +
                               std::string(text) + "'");
  }
}

double parse_field_double(std::string_view text, std::size_t line, const std::string& name) {
  try {
    return parse_double(trim(text));
  } catch (const std::invalid_argument&) {
    throw ParseError(line, "bad number in column " + name + ": '" + std::string(text) + "'");
  }
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

Rng stream(std::uint64_t seed, std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    id};
  return Rng(seq);
}

double open_uniform(Rng& rng) {
  return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

std::vector<ReplayRecord> read_replay_csv(std::istream& in) {
  std::vector<ReplayRecord> out;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) return out;
  ++lineno;
  const auto header = split(strip_cr(line), ',');
  if (header.size() < 5) throw ParseError(lineno, "header has too few columns");
  const std::size_t d0 = header.size() - 5;
  std::vector<std::string> expected{"entry_month"};
  for (std::size_t j = 1; j <= d0; ++j) expected.push_back("cov_" + std::to_string(j));
  for (const char* name : {"action", "followup_months", "survival_months", "event"}) {
    expected.emplace_back(name);
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (trim(header[c]) != expected[c]) {
      throw ParseError(lineno, "expected header column '" + expected[c] + "', got '" +
                                   std::string(trim(header[c])) + "'");
    }
  }

  while (std::getline(in, line)) {
    ++lineno;
    const auto body = strip_cr(line);
    if (trim(body).empty()) continue;
    const auto f = split(body, ',');
    if (f.size() != header.size()) {
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(f.size()));
    }
    ReplayRecord r;
    r.entry_month = parse_field_int(f[0], lineno, "entry_month");
    r.covariates.resize(static_cast<Eigen::Index>(d0));
    for (std::size_t j = 0; j < d0; ++j) {
      const double v = parse_field_double(f[1 + j], lineno, expected[1 + j]);
      if (!std::isfinite(v)) throw ParseError(lineno, expected[1 + j] + " is not finite");
      r.covariates[static_cast<Eigen::Index>(j)] = v;
    }
    const auto action = parse_field_int(f[d0 + 1], lineno, "action");
    r.followup_months = parse_field_int(f[d0 + 2], lineno, "followup_months");
    r.survival_months = parse_field_int(f[d0 + 3], lineno, "survival_months");
    const auto event = parse_field_int(f[d0 + 4], lineno, "event");

    if (r.entry_month < 0) throw ParseError(lineno, "entry_month must be >= 0");
    if (action < 0 || action > std::numeric_limits<int>::max()) {
      throw ParseError(lineno, "action must be a nonnegative integer");
    }
    r.action = static_cast<int>(action);
    if (event != 0 && event != 1) throw ParseError(lineno, "event must be 0 or 1");
    r.event = event == 1;
    if (r.followup_months < 1) throw ParseError(lineno, "followup_months must be >= 1");
    if (r.survival_months < 1) throw ParseError(lineno, "survival_months must be >= 1");
    if (r.survival_months > r.followup_months) {
      throw ParseError(lineno, "survival_months exceeds followup_months");
    }
    if (!r.event && r.survival_months != r.followup_months) {
      throw ParseError(lineno, "censored row must have survival_months == followup_months");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ReplayRecord> read_replay_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_replay_csv(in);
}

void write_replay_csv(std::ostream& out, std::span<const ReplayRecord> records) {
  const Eigen::Index d0 = records.empty() ? 0 : records.front().covariates.size();
  out << "entry_month";
  for (Eigen::Index j = 1; j <= d0; ++j) out << ",cov_" << j;
  out << ",action,followup_months,survival_months,event\n";
  for (const auto& r : records) {
    if (r.covariates.size() != d0) {
      throw std::invalid_argument("write_replay_csv: ragged covariates");
    }
    out << r.entry_month;
    for (Eigen::Index j = 0; j < d0; ++j) out << ',' << format_double(r.covariates[j]);
    out << ',' << r.action << ',' << r.followup_months << ',' << r.survival_months << ','
        << (r.event ? 1 : 0) << '\n';
  }
}

std::vector<ReplayRound> group_rounds(std::vector<ReplayRecord> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const ReplayRecord& a, const ReplayRecord& b) {
                     return a.entry_month < b.entry_month;
                   });
  std::vector<ReplayRound> rounds;
  for (auto& r : records) {
    if (rounds.empty() || rounds.back().month != r.entry_month) {
      rounds.push_back({r.entry_month, {}});
    }
    rounds.back().records.push_back(std::move(r));
  }
  return rounds;
}

std::vector<ReplayRound> ingest(const std::string& path) {
  return group_rounds(read_replay_csv(path));
}

ReferenceModel::ReferenceModel(std::size_t covariate_dim, int arms, Vector beta,
                               std::vector<double> step_times,
                               std::vector<double> step_cumhaz, std::vector<double> horizons)
    : covariate_dim_(covariate_dim),
      arms_(arms),
      beta_(std::move(beta)),
      step_times_(std::move(step_times)),
      step_cumhaz_(std::move(step_cumhaz)),
      horizons_(std::move(horizons)) {
  if (arms_ < 1 || static_cast<std::size_t>(beta_.size()) != covariate_dim_ * arms_) {
    throw std::invalid_argument("ReferenceModel: beta length must equal d0 * arms");
  }
  if (step_times_.size() != step_cumhaz_.size()) {
    throw std::invalid_argument("ReferenceModel: step table columns differ in length");
  }
  for (std::size_t k = 1; k < step_times_.size(); ++k) {
    if (!(step_times_[k] > step_times_[k - 1]) || step_cumhaz_[k] < step_cumhaz_[k - 1]) {
      throw std::invalid_argument("ReferenceModel: step table must be increasing");
    }
  }
  horizon_baseline_.reserve(horizons_.size());
  for (double h : horizons_) horizon_baseline_.push_back(baseline_survival(h));
}

ReferenceModel ReferenceModel::fit(std::span<const ReplayRecord> records, int arms,
                                   std::vector<double> horizons, const SolverConfig& cfg) {
  if (records.empty()) {
    throw CoxError(CoxError::Kind::InsufficientData, "reference fit: no records");
  }
  const auto d0 = static_cast<std::size_t>(records.front().covariates.size());
  const FeatureMap fmap(d0, arms);
  std::vector<const ReplayRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->entry_month < b->entry_month;
  });

  Timeline tl(d0);
  double end = 0.0;
  std::int64_t id = 0;
  for (const auto* r : sorted) {
    if (r->action < 0 || r->action >= arms) {
      throw std::out_of_range("reference fit: action " + std::to_string(r->action) +
                              " outside [0, " + std::to_string(arms) + ")");
    }
    const auto entry = static_cast<double>(r->entry_month);
    tl.enroll(SubjectRecord::logged(id++, entry, r->covariates, r->action,
                                    static_cast<double>(r->followup_months),
                                    static_cast<double>(r->survival_months), r->event));
    end = std::max(end, entry + static_cast<double>(r->followup_months));
  }
  tl.advance_to(end);

  const RiskIndex index = RiskIndex::build(tl, fmap);
  const CoxState st = survband::fit(index, Vector::Zero(static_cast<Eigen::Index>(fmap.dim())), cfg);
  if (!st.converged) {
    throw CoxError(CoxError::Kind::Singular, "reference fit did not converge");
  }
  const auto times = index.event_times();
  std::vector<double> step_times;
  std::vector<double> step_cumhaz;
  double cum = 0.0;
  for (std::size_t e = 0; e < times.size(); ++e) {
    cum += std::exp(-st.log_denominators[e]);
    if (!step_times.empty() && step_times.back() == times[e]) {
      step_cumhaz.back() = cum;
    } else {
      step_times.push_back(times[e]);
      step_cumhaz.push_back(cum);
    }
  }
  return ReferenceModel(d0, arms, st.beta, std::move(step_times), std::move(step_cumhaz),
                        std::move(horizons));
}

void ReferenceModel::write(std::ostream& out) const {
  out << "d0 " << covariate_dim_ << "\narms " << arms_ << "\nbeta";
  for (Eigen::Index k = 0; k < beta_.size(); ++k) out << ' ' << format_double(beta_[k]);
  out << "\nhorizons " << horizons_.size() << '\n';
  for (std::size_t k = 0; k < horizons_.size(); ++k) {
    out << format_double(horizons_[k]) << ' ' << format_double(horizon_baseline_[k]) << '\n';
  }
  out << "steps " << step_times_.size() << '\n';
  for (std::size_t k = 0; k < step_times_.size(); ++k) {
    out << format_double(step_times_[k]) << ' ' << format_double(step_cumhaz_[k]) << '\n';
  }
}

ReferenceModel ReferenceModel::read(std::istream& in) {
  std::string word;
  const auto expect = [&](const char* key) {
    if (!(in >> word) || word != key) {
      throw ParseError(0, std::string("reference model: expected '") + key + "'");
    }
  };
  const auto number = [&]() {
    if (!(in >> word)) throw ParseError(0, "reference model: truncated");
    try {
      return parse_double(word);
    } catch (const std::invalid_argument&) {
      throw ParseError(0, "reference model: bad number '" + word + "'");
    }
  };
  const auto count = [&]() {
    const double v = number();
    if (v < 0 || v != std::floor(v)) throw ParseError(0, "reference model: bad count");
    return static_cast<std::size_t>(v);
  };
  expect("d0");
  const std::size_t d0 = count();
  expect("arms");
  const auto arms = static_cast<int>(count());
  expect("beta");
  Vector beta(static_cast<Eigen::Index>(d0 * static_cast<std::size_t>(arms)));
  for (Eigen::Index k = 0; k < beta.size(); ++k) beta[k] = number();
  expect("horizons");
  std::vector<double> horizons(count());
  for (auto& h : horizons) {
    h = number();
    number();  // tabulated S0, recomputed from the step table
  }
  expect("steps");
  const std::size_t m = count();
  std::vector<double> times(m);
  std::vector<double> cumhaz(m);
  for (std::size_t k = 0; k < m; ++k) {
    times[k] = number();
    cumhaz[k] = number();
  }
  try {
    return ReferenceModel(d0, arms, std::move(beta), std::move(times), std::move(cumhaz),
                          std::move(horizons));
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }
}

double ReferenceModel::baseline_survival(double t) const {
  const auto k = std::upper_bound(step_times_.begin(), step_times_.end(), t) -
                 step_times_.begin();
  return k == 0 ? 1.0 : std::exp(-step_cumhaz_[static_cast<std::size_t>(k - 1)]);
}

double ReferenceModel::baseline_at(double horizon) const {
  for (std::size_t k = 0; k < horizons_.size(); ++k) {
    if (horizons_[k] == horizon) return horizon_baseline_[k];
  }
  throw std::out_of_range("horizon " + format_double(horizon) +
                          " is not in the reference baseline table");
}

double ReferenceModel::survival(const Vector& s, int action, double horizon) const {
  return survival_prob_from_score(baseline_at(horizon),
                                  feature_map().linear_score(s, action, beta_));
}

int ReferenceModel::optimal_action(const Vector& s) const {
  return argmin_lowest(linear_scores(s, beta_, feature_map()));
}

double ReferenceModel::draw_time(const Vector& s, int action, double u) const {
  const double target = -std::log(u) / std::exp(feature_map().linear_score(s, action, beta_));
  const auto it = std::lower_bound(step_cumhaz_.begin(), step_cumhaz_.end(), target);
  if (it == step_cumhaz_.end()) return std::numeric_limits<double>::infinity();
  return step_times_[static_cast<std::size_t>(it - step_cumhaz_.begin())];
}

std::vector<ReplayRoundMetrics> replay_run(std::span<const ReplayRound> rounds,
                                           const ReferenceModel& ref,
                                           const ReplayOptions& opts) {
  for (double h : opts.horizons) ref.baseline_at(h);
  const FeatureMap fmap = ref.feature_map();
  const std::size_t nh = opts.horizons.size();

  Timeline tl(fmap.covariate_dim());
  Agent agent(opts.policy, fmap, opts.solver, opts.strategy);
  Rng policy_rng = stream(opts.seed, 1);
  Rng outcome_rng = stream(opts.seed, 2);

  std::vector<ReplayRoundMetrics> out;
  out.reserve(rounds.size());
  std::vector<double> cum_chosen(nh, 0.0);
  std::vector<double> cum_optimal(nh, 0.0);
  std::size_t scored = 0;
  std::int64_t next_id = 0;
  const std::int64_t first_month = rounds.empty() ? 0 : rounds.front().month;

  for (std::size_t r = 0; r < rounds.size(); ++r) {
    const ReplayRound& round = rounds[r];
    if (r > 0 && round.month <= rounds[r - 1].month) {
      throw std::invalid_argument("replay_run: rounds must have increasing months");
    }
    const auto month = static_cast<double>(round.month);
    tl.advance_to(month);
    agent.refresh(tl);
    const std::size_t deaths = tl.events().size();
    const bool policy_active =
        static_cast<double>(deaths) >= opts.burn_in_events && agent.active();

    ReplayRoundMetrics m;
    m.round = r + 1;
    m.month = round.month;
    m.subjects = round.records.size();
    m.policy_active = policy_active;
    m.deaths_observed = deaths;
    m.batch_chosen.assign(nh, 0.0);
    m.batch_optimal.assign(nh, 0.0);

    ReplayBatchTrace trace;
    trace.round = r + 1;
    trace.policy_active = policy_active;
    trace.beta = agent.current_beta();

    const bool scoring = round.month >= first_month + opts.skip_months;
    for (const auto& rec : round.records) {
      if (rec.covariates.size() != static_cast<Eigen::Index>(fmap.covariate_dim())) {
        throw std::invalid_argument("replay_run: covariate length mismatch");
      }
      const int a = agent.decide(rec.covariates, r + 1, policy_rng, policy_active).action;
      trace.actions.push_back(a);
      const double u = open_uniform(outcome_rng);
      auto C = static_cast<double>(rec.followup_months);
      double R = static_cast<double>(rec.survival_months);
      bool event = rec.event;
      if (a != rec.action) {
        ++m.counterfactual;
        const double y = std::max(ref.draw_time(rec.covariates, a, u), 1.0);
        event = y <= C;
        R = event ? y : C;
      }
      tl.enroll(SubjectRecord::logged(next_id++, month, rec.covariates, a, C, R, event));

      const int best = ref.optimal_action(rec.covariates);
      for (std::size_t k = 0; k < nh; ++k) {
        const double chosen = ref.survival(rec.covariates, a, opts.horizons[k]);
        const double optimal = ref.survival(rec.covariates, best, opts.horizons[k]);
        m.batch_chosen[k] += chosen;
        m.batch_optimal[k] += optimal;
        if (scoring) {
          cum_chosen[k] += chosen;
          cum_optimal[k] += optimal;
        }
      }
      if (scoring) ++scored;
    }
    if (m.subjects > 0) {
      for (std::size_t k = 0; k < nh; ++k) {
        m.batch_chosen[k] /= static_cast<double>(m.subjects);
        m.batch_optimal[k] /= static_cast<double>(m.subjects);
      }
    }
    m.cum_chosen.assign(nh, 0.0);
    m.cum_optimal.assign(nh, 0.0);
    if (scored > 0) {
      for (std::size_t k = 0; k < nh; ++k) {
        m.cum_chosen[k] = cum_chosen[k] / static_cast<double>(scored);
        m.cum_optimal[k] = cum_optimal[k] / static_cast<double>(scored);
      }
    }
    if (opts.on_batch) opts.on_batch(trace);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<ReplayRecord> synthesize_replay(const SyntheticReplaySpec& spec, Rng& rng) {
  spec.dgp.validate();
  if (spec.months < 1) throw std::invalid_argument("synthesize_replay: months must be >= 1");
  if (!(spec.patients_per_month > 0.0) || !(spec.months_per_unit > 0.0)) {
    throw std::invalid_argument("synthesize_replay: rates must be positive");
  }
  const FeatureMap fmap = spec.dgp.feature_map();
  std::poisson_distribution<int> arrivals(spec.patients_per_month);
  std::uniform_int_distribution<int> arm(0, spec.dgp.arms - 1);
  const auto to_months = [&](double t) {
    const double m = std::ceil(t * spec.months_per_unit);
    return static_cast<std::int64_t>(std::clamp(m, 1.0, 1e12));
  };

  std::vector<ReplayRecord> out;
  for (int month = 0; month < spec.months; ++month) {
    const int n = arrivals(rng);
    for (int k = 0; k < n; ++k) {
      ReplayRecord r;
      r.entry_month = month;
      r.covariates = draw_covariates(spec.dgp, rng);
      r.action = arm(rng);
      const Outcome o = draw_outcome_from_score(
          fmap.linear_score(r.covariates, r.action, spec.dgp.true_beta), spec.dgp, rng);
      const std::int64_t y = to_months(o.latent);
      r.followup_months = std::min<std::int64_t>(spec.months - month, to_months(o.censor));
      r.event = y <= r.followup_months;
      r.survival_months = r.event ? y : r.followup_months;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace survband
