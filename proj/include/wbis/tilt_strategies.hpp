#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "wbis/model.hpp"

namespace wbis {

/// Pieces of the mixture form of the spine law: draw the tilted N, pick a
/// coordinate with probability E[C_i^alpha | N] / E[D | N], draw that
/// coordinate from its tilted marginal and complete the rest conditionally.
struct MixtureIngredients {
  std::function<int(Rng&)> sample_tilted_n;
  std::function<std::vector<double>(int n)> component_weights;
  std::function<double(std::size_t i, int n, Rng&)> sample_tilted_marginal;
  std::function<BranchingVector(std::size_t i, int n, double c_i, Rng&)> complete;
};

/// Available for the models whose weights are i.i.d. or identical given N.
std::optional<MixtureIngredients> mixture_ingredients(const ModelSpec& model, const TiltContext& ctx);

/// Throws MissingIngredients when the model has no mixture form.
BranchingVector tilt_mixture_sample(const ModelSpec& model, const TiltContext& ctx, Rng& rng);
BranchingVector tilt_mixture_sample(const MixtureIngredients& ingredients, Rng& rng);

/// Tilted law of N together with the conditional law of the vector given N
/// under P. Both acceptance-rejection schemes build on these.
struct ConditionalIngredients {
  std::function<int(Rng&)> sample_tilted_n;
  std::function<BranchingVector(int n, Rng&)> sample_given_n;
};

std::optional<ConditionalIngredients> conditional_ingredients(const ModelSpec& model, const TiltContext& ctx);

struct TiltDraw {
  BranchingVector vector;
  std::uint64_t attempts = 0;
};

/// Per-coordinate almost-sure bounds b_1..b_n on C_i given N = n.
using CoordinateBounds = std::function<std::vector<double>(int n)>;

/// Proposal from P(. | N = n), accepted with probability D / sum_i b_i^alpha.
/// Throws NonBoundedModel if a proposal has C_i > b_i.
TiltDraw tilt_ar_bounded_sample(const ConditionalIngredients& ingredients, double alpha,
                                const CoordinateBounds& bounds, Rng& rng,
                                std::uint64_t max_attempts = 100000000);

/// Proposal from P(. | N = n) together with Z ~ Pareto(pareto_shape, 1); accept
/// when Z > (bound(n) / D)^(1 / pareto_shape), which happens with probability
/// D / bound(n). Throws SumBoundViolated if D > bound(n).
TiltDraw tilt_ar_sumbound_sample(const ConditionalIngredients& ingredients, double alpha,
                                 const std::function<double(int)>& bound, double pareto_shape, Rng& rng,
                                 std::uint64_t max_attempts = 100000000);

/// Coordinate bounds for bounded built-in models (discrete tables,
/// truncated Pareto); nullopt otherwise.
std::optional<CoordinateBounds> coordinate_bounds(const ModelSpec& model);

}  // namespace wbis
