#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wbis/model.hpp"
#include "wbis/spine_sampler.hpp"

namespace wbis {

struct EstimatorConfig {
  EstimatorVariant variant = EstimatorVariant::General;
  std::uint64_t n = 10000;
  std::uint64_t node_budget = kDefaultNodeBudget;
  std::vector<double> t_grid;
};

struct OutputConfig {
  std::string csv;
  std::string report;
};

struct OracleConfig {
  unsigned naive_depth = 8;
  std::uint64_t naive_n = 100000;
  std::size_t pool_size = 100000;
  unsigned pool_iterations = 60;
  std::uint64_t h_samples = 1000000;
  std::vector<unsigned> h_spine_m{1, 2, 4};
  std::uint64_t h_spine_n = 100000;
  std::string pool_in;
  std::string pool_out;
};

struct ExperimentConfig {
  std::string name = "custom";
  ModelSpec model{model::NonBranchingExp{}};
  EstimatorConfig estimator;
  std::uint64_t master_seed = 20240601;
  OutputConfig output;
  OracleConfig oracle;
  std::optional<double> alpha_override;
};

/// Throws ConfigError when t_grid is empty or not strictly increasing or n == 0.
void validate(const ExperimentConfig& cfg);

/// Parses a JSON document; missing blocks keep their defaults. Throws
/// ConfigError on malformed input.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// mm1, simplex, nb_exp, discrete_pair, constant_pair. Throws ConfigError for other names.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Two-outcome discrete table: (2/3, 0) w.p. 3/4, (1, 1) w.p. 1/4, Q = 1.
ModelSpec discrete_pair_model();
/// N = 2, C = 1/2, Q = 1/2 deterministically.
ModelSpec constant_pair_model();

std::string to_string(EstimatorVariant v);

}  // namespace wbis
