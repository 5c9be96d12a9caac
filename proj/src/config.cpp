#include "wbis/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "wbis/error.hpp"

namespace wbis {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(std::string("bad value for '") + key + "': " + e.what());
  }
}

const json& require_key(const json& j, const char* key) {
  if (!j.contains(key)) fail(std::string("missing key '") + key + "'");
  return j.at(key);
}

PerturbationLaw parse_q_law(const json& j) {
  if (j.is_number()) return qlaw::Constant{j.get<double>()};
  const auto type = get_or<std::string>(j, "type", "constant");
  if (type == "constant") return qlaw::Constant{get_or(j, "q", 1.0)};
  if (type == "log_exponential") return qlaw::LogExponential{get_or(j, "rate", 1.0)};
  if (type == "gamma") return qlaw::Gamma{get_or(j, "shape", 1.0), get_or(j, "rate", 1.0)};
  fail("unknown q_law type '" + type + "'");
}

OffspringLaw parse_n_law(const json& j) {
  if (j.is_number_integer()) return nlaw::Constant{j.get<int>()};
  const auto type = get_or<std::string>(j, "type", "constant");
  if (type == "constant") return nlaw::Constant{get_or(j, "n", 1)};
  if (type == "uniform") return nlaw::Uniform{get_or(j, "lo", 1), get_or(j, "hi", 1)};
  if (type == "truncated_poisson") return nlaw::TruncatedPoisson{get_or(j, "lambda", 1.0)};
  if (type == "shifted_poisson") return nlaw::ShiftedPoisson{get_or(j, "lambda", 1.0)};
  if (type == "geometric") return nlaw::Geometric{get_or(j, "p", 0.5)};
  if (type == "table") return nlaw::Table{get_or<std::vector<double>>(j, "probs", {})};
  fail("unknown n_law type '" + type + "'");
}

ModelSpec parse_model(const json& j) {
  const auto type = get_or<std::string>(j, "type", "");
  const auto q_law = j.contains("q_law") ? parse_q_law(j.at("q_law")) : PerturbationLaw{};
  if (type == "non_branching_exp") {
    return model::NonBranchingExp{get_or(j, "theta", 2.0), get_or(j, "lambda", 1.0), q_law};
  }
  if (type == "branching_mm1") {
    return model::BranchingMM1{get_or(j, "theta", 5.0), get_or(j, "lambda", 0.25), get_or(j, "poisson_param", 2.0),
                               get_or(j, "y_rate", 9.0)};
  }
  if (type == "identical_pareto") {
    model::IdenticalPareto m;
    m.a = get_or(j, "a", m.a);
    m.b = get_or(j, "b", m.b);
    if (j.contains("n_law")) m.n_law = parse_n_law(j.at("n_law"));
    m.q_law = q_law;
    if (j.contains("upper")) m.upper = j.at("upper").get<double>();
    return m;
  }
  if (type == "exp_poisson") return model::ExpPoisson{get_or(j, "lambda", 3.0), q_law};
  if (type == "gamma_geometric") return model::GammaGeometric{get_or(j, "beta", 0.1)};
  if (type == "simplex_gamma") {
    model::SimplexGamma m;
    m.a = get_or(j, "a", m.a);
    m.b = get_or(j, "b", m.b);
    if (j.contains("n_law")) m.n_law = parse_n_law(j.at("n_law"));
    const auto mode = get_or<std::string>(j, "q_mode", "two_times_B");
    if (mode == "two_times_B") {
      m.q_mode = model::SimplexQMode::TwoTimesB;
    } else if (mode == "independent") {
      m.q_mode = model::SimplexQMode::Independent;
    } else {
      fail("unknown q_mode '" + mode + "'");
    }
    m.q_law = q_law;
    return m;
  }
  if (type == "discrete_table") {
    model::DiscreteTable m;
    for (const auto& o : require_key(j, "outcomes")) {
      m.outcomes.push_back({get_or<std::vector<double>>(o, "weights", {}), get_or(o, "q", 1.0)});
    }
    m.probs = require_key(j, "probs").get<std::vector<double>>();
    return m;
  }
  fail("unknown model type '" + type + "'");
}

EstimatorVariant parse_variant(const std::string& s) {
  if (s == "general") return EstimatorVariant::General;
  if (s == "independent_q") return EstimatorVariant::IndependentQ;
  fail("unknown estimator variant '" + s + "'");
}

}  // namespace

std::string to_string(EstimatorVariant v) {
  return v == EstimatorVariant::General ? "general" : "independent_q";
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.estimator.t_grid.empty()) fail("estimator.t_grid must not be empty");
  for (std::size_t i = 1; i < cfg.estimator.t_grid.size(); ++i) {
    if (!(cfg.estimator.t_grid[i] > cfg.estimator.t_grid[i - 1])) fail("estimator.t_grid must be strictly increasing");
  }
  if (cfg.estimator.n == 0) fail("estimator.n must be >= 1");
  if (cfg.estimator.node_budget == 0) fail("estimator.node_budget must be >= 1");
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("config must be a JSON object");

  ExperimentConfig cfg;
  if (doc.contains("preset")) cfg = preset(doc.at("preset").get<std::string>());
  try {
    if (doc.contains("model")) {
      cfg.model = parse_model(doc.at("model"));
      cfg.name = get_or<std::string>(doc.at("model"), "type", cfg.name);
    }
  } catch (const json::exception& e) {
    fail(std::string("bad model block: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(std::string("bad model block: ") + e.what());
  }
  cfg.name = get_or(doc, "name", cfg.name);
  if (doc.contains("estimator")) {
    const auto& e = doc.at("estimator");
    if (e.contains("variant")) cfg.estimator.variant = parse_variant(e.at("variant").get<std::string>());
    cfg.estimator.n = get_or(e, "n", cfg.estimator.n);
    cfg.estimator.node_budget = get_or(e, "node_budget", cfg.estimator.node_budget);
    cfg.estimator.t_grid = get_or(e, "t_grid", cfg.estimator.t_grid);
  }
  if (doc.contains("seeds")) cfg.master_seed = get_or(doc.at("seeds"), "master_seed", cfg.master_seed);
  if (doc.contains("output")) {
    cfg.output.csv = get_or(doc.at("output"), "csv", cfg.output.csv);
    cfg.output.report = get_or(doc.at("output"), "report", cfg.output.report);
  }
  if (doc.contains("oracle")) {
    const auto& o = doc.at("oracle");
    cfg.oracle.naive_depth = get_or(o, "naive_depth", cfg.oracle.naive_depth);
    cfg.oracle.naive_n = get_or(o, "naive_n", cfg.oracle.naive_n);
    cfg.oracle.pool_size = get_or(o, "pool_size", cfg.oracle.pool_size);
    cfg.oracle.pool_iterations = get_or(o, "pool_iterations", cfg.oracle.pool_iterations);
    cfg.oracle.h_samples = get_or(o, "h_samples", cfg.oracle.h_samples);
    cfg.oracle.h_spine_m = get_or(o, "h_spine_m", cfg.oracle.h_spine_m);
    cfg.oracle.h_spine_n = get_or(o, "h_spine_n", cfg.oracle.h_spine_n);
    cfg.oracle.pool_in = get_or(o, "pool_in", cfg.oracle.pool_in);
    cfg.oracle.pool_out = get_or(o, "pool_out", cfg.oracle.pool_out);
  }
  if (doc.contains("alpha_override")) cfg.alpha_override = doc.at("alpha_override").get<double>();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ModelSpec discrete_pair_model() {
  model::DiscreteTable m;
  m.outcomes = {{{2.0 / 3.0, 0.0}, 1.0}, {{1.0, 1.0}, 1.0}};
  m.probs = {0.75, 0.25};
  return m;
}

ModelSpec constant_pair_model() {
  model::DiscreteTable m;
  m.outcomes = {{{0.5, 0.5}, 0.5}};
  m.probs = {1.0};
  return m;
}

std::vector<std::string> preset_names() { return {"mm1", "simplex", "nb_exp", "discrete_pair", "constant_pair"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  if (name == "mm1") {
    cfg.model = ModelSpec(model::BranchingMM1{5.0, 0.25, 2.0, 9.0});
    cfg.estimator.variant = EstimatorVariant::IndependentQ;
    cfg.estimator.t_grid = {0.5, 1.0, 1.5, 2.0, 2.5};
    cfg.oracle.h_spine_m = {1, 2, 4, 6};
  } else if (name == "simplex") {
    model::SimplexGamma m;
    m.a = 0.25;
    m.b = 1.0;
    m.n_law = nlaw::Uniform{1, 3};
    m.q_mode = model::SimplexQMode::TwoTimesB;
    cfg.model = ModelSpec(m);
    cfg.estimator.variant = EstimatorVariant::General;
    cfg.estimator.t_grid = {1.5, 2.0, 2.5, 3.0, 3.5};
    cfg.oracle.h_spine_m = {1, 2, 4, 8};
  } else if (name == "nb_exp") {
    cfg.model = ModelSpec(model::NonBranchingExp{2.0, 1.0, qlaw::Constant{1.0}});
    cfg.estimator.variant = EstimatorVariant::IndependentQ;
    cfg.estimator.t_grid = {1.0, 3.0, 5.0, 8.0};
    cfg.oracle.naive_depth = 60;
    cfg.oracle.h_spine_m = {1, 5, 10, 20};
  } else if (name == "discrete_pair") {
    cfg.model = discrete_pair_model();
    cfg.estimator.t_grid = {0.5, 1.0};
  } else if (name == "constant_pair") {
    cfg.model = constant_pair_model();
    cfg.estimator.t_grid = {-1.0, 0.0};
  } else {
    fail("unknown preset '" + name + "'");
  }
  return cfg;
}

}  // namespace wbis
