#pragma once

#include <cstdint>
#include <vector>

#include "wbis/model.hpp"
#include "wbis/replication.hpp"
#include "wbis/tree.hpp"

namespace wbis {

enum class EstimatorVariant {
  /// Z = 1(hit on spine) e^(-alpha V_tau) / D_(J_tau)
  General,
  /// Z = 1(hit on spine) e^(-alpha V_tau); needs Q independent of (N, C).
  IndependentQ,
};

struct ISRun {
  double z_value = 0.0;
  std::uint64_t tau = 0;  // deepest spine generation reached
  NodeIndex terminal_index;
  bool hit_on_spine = false;
  double v_tau = 0.0;
  std::uint64_t nodes_expanded = 0;
  bool budget_exceeded = false;
  double elapsed_s = 0.0;
};

inline constexpr std::uint64_t kDefaultNodeBudget = 1000000;

/// Throws InvalidArgument when IndependentQ is requested for a model whose Q
/// depends on the weights.
void check_variant(const ModelSpec& model, EstimatorVariant variant);

/// One replication of the spine importance-sampling estimator of P(W > t).
/// Nodes are visited in length-lexicographic order; the spine node of each
/// generation draws its vector from the tilted law, every other node from P.
/// Stops at the first node with S_i + Y_i > t. When node_budget nodes were
/// expanded without a crossing the run is flagged budget_exceeded.
ISRun run_single(const ModelSpec& model, const TiltContext& ctx, double t, EstimatorVariant variant,
                 std::uint64_t node_budget, Rng& rng);

struct ISOptions {
  EstimatorVariant variant = EstimatorVariant::General;
  std::uint64_t n = 10000;
  std::uint64_t master_seed = 1;
  unsigned parallelism = 0;
  std::uint64_t node_budget = kDefaultNodeBudget;
};

/// Replications of run_single at level t; run i uses stream (master_seed, i).
ReplicationResult is_replications(const ModelSpec& model, const TiltContext& ctx, double t, const ISOptions& opts);
EstimateSummary is_estimate(const ModelSpec& model, const TiltContext& ctx, double t, const ISOptions& opts);

struct GenerationProfileRow {
  double t = 0.0;
  double mean_tau = 0.0;
  double mean_terminal_generation = 0.0;
  double t_over_mu = 0.0;
};

std::vector<GenerationProfileRow> terminal_generation_profile(const ModelSpec& model, const TiltContext& ctx,
                                                              const std::vector<double>& t_grid,
                                                              const ISOptions& opts);

}  // namespace wbis
