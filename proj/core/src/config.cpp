#include "survband/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace survband {

namespace {

using nlohmann::json;

// Walks one JSON object, rejecting unknown keys and wrong types.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (v->is_string() && v->get<std::string>() == "inf") {
      return std::numeric_limits<double>::infinity();
    }
    if (!v->is_number()) throw ConfigError(field(key), "must be a number");
    return v->get<double>();
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) throw ConfigError(field(key), "must be an integer");
    return v->get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                    v->get<std::int64_t>() < 0)) {
      throw ConfigError(field(key), "must be a nonnegative integer");
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) throw ConfigError(field(key), "must be true or false");
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) throw ConfigError(field(key), "must be a string");
    return v->get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_array()) throw ConfigError(field(key), "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v->size(); ++k) {
      if (!(*v)[k].is_number()) {
        throw ConfigError(field(key) + "[" + std::to_string(k) + "]", "must be a number");
      }
      out.push_back((*v)[k].get<double>());
    }
    return out;
  }

  std::optional<Vector> vector(const std::string& key) {
    auto v = numbers(key);
    if (!v) return std::nullopt;
    return Eigen::Map<const Vector>(v->data(), static_cast<Eigen::Index>(v->size()));
  }

  std::optional<Matrix> matrix(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_array()) throw ConfigError(field(key), "must be an array of rows");
    const auto n = static_cast<Eigen::Index>(v->size());
    Matrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const json& row = (*v)[static_cast<std::size_t>(r)];
      const std::string rpath = field(key) + "[" + std::to_string(r) + "]";
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
        throw ConfigError(rpath, "must be an array of " + std::to_string(n) + " numbers");
      }
      for (Eigen::Index c = 0; c < n; ++c) {
        const json& x = row[static_cast<std::size_t>(c)];
        if (!x.is_number()) throw ConfigError(rpath, "must hold numbers");
        m(r, c) = x.get<double>();
      }
    }
    return m;
  }

  std::optional<Node> child(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    return Node(*v, field(key));
  }

  const json& raw() const { return j_; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E choose(const std::string& path, const std::string& value,
         std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(path, "unknown value '" + value + "' (expected one of " + names + ")");
}

std::size_t to_size(const std::string& path, std::int64_t v) {
  if (v < 0) throw ConfigError(path, "must be >= 0");
  return static_cast<std::size_t>(v);
}

void parse_solver(Node n, SolverConfig& s) {
  s.tol = n.number("tol", s.tol);
  s.max_iter = static_cast<int>(n.integer("max_iter", s.max_iter));
  s.ridge = n.number("ridge", s.ridge);
  s.max_halvings = static_cast<int>(n.integer("max_halvings", s.max_halvings));
  s.epv_gate = n.number("epv_gate", s.epv_gate);
  s.min_curvature = n.number("min_curvature", s.min_curvature);
  n.finish();
}

void parse_policy(Node n, PolicySpec& p) {
  if (auto kind = n.string("kind")) {
    p.kind = choose<PolicyKind>(n.field("kind"), *kind,
                                {{"eg", PolicyKind::EpsilonGreedy},
                                 {"ucb", PolicyKind::Ucb},
                                 {"ts", PolicyKind::Thompson}});
  }
  p.eg_c = n.number("eg_c", p.eg_c);
  p.ucb_alpha = n.number("ucb_alpha", p.ucb_alpha);
  p.ucb_theoretical = n.boolean("ucb_theoretical", p.ucb_theoretical);
  p.ucb_delta = n.number("ucb_delta", p.ucb_delta);
  p.ts_prior_sd = n.number("ts_prior_sd", p.ts_prior_sd);
  if (auto m = n.vector("ts_prior_mean")) p.ts_prior_mean = std::move(*m);
  if (auto c = n.matrix("ts_prior_cov")) p.ts_prior_cov = std::move(*c);
  n.finish();
}

void parse_dgp(Node n, DgpSpec& d) {
  if (auto kind = n.string("kind")) {
    d.kind = choose<DgpKind>(n.field("kind"), *kind,
                             {{"cox", DgpKind::CoxPH},
                              {"disturbed_cox", DgpKind::DisturbedCox},
                              {"aft", DgpKind::AFT},
                              {"piecewise", DgpKind::PiecewiseHazard}});
  }
  if (auto b = n.vector("true_beta")) d.true_beta = std::move(*b);
  d.arms = static_cast<int>(n.integer("arms", d.arms));
  d.arrival_lambda = n.number("arrival_lambda", d.arrival_lambda);
  d.censor_scale = n.number("censor_scale", d.censor_scale);
  d.disturb_sigma = n.number("disturb_sigma", d.disturb_sigma);
  d.aft_sigma = n.number("aft_sigma", d.aft_sigma);
  if (auto levels = n.numbers("piecewise_levels")) d.piecewise_levels = std::move(*levels);
  d.seed = n.unsigned_integer("seed", d.seed);
  if (const json* covs = n.find("covariates")) {
    const std::string path = n.field("covariates");
    if (!covs->is_array()) throw ConfigError(path, "must be an array");
    d.covariates.clear();
    for (std::size_t k = 0; k < covs->size(); ++k) {
      Node c((*covs)[k], path + "[" + std::to_string(k) + "]");
      const auto law = c.string("law");
      if (!law) throw ConfigError(c.field("law"), "is required");
      if (*law == "uniform") {
        d.covariates.push_back(
            CovariateLaw::uniform(c.number("lo", 0.0), c.number("hi", 1.0)));
      } else if (*law == "normal") {
        d.covariates.push_back(
            CovariateLaw::normal(c.number("mean", 0.0), c.number("sd", 1.0)));
      } else {
        throw ConfigError(c.field("law"), "unknown value '" + *law +
                                              "' (expected one of uniform, normal)");
      }
      c.finish();
    }
  }
  n.finish();
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty()) return p;
  const std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

void parse_replay(Node n, ReplaySettings& r, const std::string& base) {
  if (auto p = n.string("data_path")) r.data_path = resolve(base, *p);
  if (auto p = n.string("reference_path")) r.reference_path = resolve(base, *p);
  r.arms = static_cast<int>(n.integer("arms", r.arms));
  r.burn_in_events = n.number("burn_in_events", r.burn_in_events);
  r.skip_months = n.integer("skip_months", r.skip_months);
  n.finish();
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& json_text,
                                         const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Node root(doc, "");
  bool has_replay = false;
  if (auto mode = root.string("mode")) {
    cfg.mode = choose<RunMode>("mode", *mode,
                               {{"simulate", RunMode::Simulate}, {"replay", RunMode::Replay}});
  }
  cfg.rounds = to_size("rounds", root.integer("rounds", static_cast<std::int64_t>(cfg.rounds)));
  cfg.replications = to_size(
      "replications", root.integer("replications", static_cast<std::int64_t>(cfg.replications)));
  if (auto h = root.numbers("horizons")) cfg.horizons = std::move(*h);
  if (auto out = root.string("output_dir")) cfg.output_dir = resolve(base_dir, *out);
  cfg.seed = root.unsigned_integer("seed", cfg.seed);
  if (auto s = root.string("fit_strategy")) {
    cfg.fit_strategy = choose<FitStrategy>("fit_strategy", *s,
                                           {{"incremental", FitStrategy::Incremental},
                                            {"refit_scratch", FitStrategy::RefitScratch}});
  }
  const auto workers = root.integer("workers", cfg.workers);
  if (workers < 1 || workers > 4096) throw ConfigError("workers", "must be in [1, 4096]");
  cfg.workers = static_cast<unsigned>(workers);
  cfg.record_wall_time = root.boolean("record_wall_time", cfg.record_wall_time);
  cfg.runtime_comparison = root.boolean("runtime_comparison", cfg.runtime_comparison);
  if (auto n = root.child("solver")) parse_solver(std::move(*n), cfg.solver);
  if (auto n = root.child("policy")) parse_policy(std::move(*n), cfg.policy);
  bool has_dgp = false;
  if (auto n = root.child("dgp")) {
    has_dgp = true;
    parse_dgp(std::move(*n), cfg.dgp);
  }
  if (auto n = root.child("replay")) {
    has_replay = true;
    parse_replay(std::move(*n), cfg.replay, base_dir);
  }
  root.finish();

  if (cfg.mode == RunMode::Simulate && has_replay) {
    throw ConfigError("replay", "not allowed in simulate mode");
  }
  if (cfg.mode == RunMode::Replay && has_dgp) {
    throw ConfigError("dgp", "not allowed in replay mode");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse(text.str(), base.empty() ? "." : base);
}

void ExperimentConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds", "must be >= 1");
  if (replications < 1) throw ConfigError("replications", "must be >= 1");
  if (horizons.empty()) throw ConfigError("horizons", "must not be empty");
  for (double h : horizons) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("horizons", "must be positive");
  }
  if (workers < 1) throw ConfigError("workers", "must be >= 1");
  if (!(solver.tol > 0.0)) throw ConfigError("solver.tol", "must be > 0");
  if (solver.max_iter < 1) throw ConfigError("solver.max_iter", "must be >= 1");
  if (!(solver.ridge >= 0.0)) throw ConfigError("solver.ridge", "must be >= 0");
  if (solver.max_halvings < 0) throw ConfigError("solver.max_halvings", "must be >= 0");
  if (!(solver.epv_gate >= 0.0)) throw ConfigError("solver.epv_gate", "must be >= 0");
  if (!(solver.min_curvature >= 0.0)) {
    throw ConfigError("solver.min_curvature", "must be >= 0");
  }
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  if (mode == RunMode::Simulate) {
    dgp.validate("dgp");
    policy.validate(dgp.covariate_dim() * static_cast<std::size_t>(dgp.arms));
  } else {
    if (replay.data_path.empty()) throw ConfigError("replay.data_path", "is required");
    if (replay.arms < 1) throw ConfigError("replay.arms", "must be >= 1");
    if (!(replay.burn_in_events >= 0.0)) {
      throw ConfigError("replay.burn_in_events", "must be >= 0");
    }
    if (replay.skip_months < 0) throw ConfigError("replay.skip_months", "must be >= 0");
  }
}

}  // namespace survband
