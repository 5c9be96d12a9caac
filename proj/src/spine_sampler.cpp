#include "wbis/spine_sampler.hpp"

#include <chrono>
#include <cmath>

#include "wbis/error.hpp"

namespace wbis {

namespace {

double log_or_neg_inf(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

}  // namespace

void check_variant(const ModelSpec& model, EstimatorVariant variant) {
  if (variant == EstimatorVariant::IndependentQ && !model.q_independent()) {
    throw Error(ErrorCode::InvalidArgument,
                "the IndependentQ estimator needs Q independent of (N, C); model " + model.name() + " is not");
  }
}

ISRun run_single(const ModelSpec& model, const TiltContext& ctx, double t, EstimatorVariant variant,
                 std::uint64_t node_budget, Rng& rng) {
  if (node_budget == 0) throw Error(ErrorCode::InvalidArgument, "node_budget must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  ISRun run;

  Frontier frontier;
  frontier.push(NodeState{NodeIndex::root(), 0.0, kNegInf, true});
  std::uint64_t spine_depth = 0;

  while (!frontier.empty()) {
    if (run.nodes_expanded >= node_budget) {
      run.budget_exceeded = true;
      run.tau = spine_depth;
      break;
    }
    NodeState node = frontier.advance();
    ++run.nodes_expanded;

    const BranchingVector v = node.on_spine ? sample_tilted(model, ctx, rng) : sample_p(model, rng);
    node.perturbation = log_or_neg_inf(v.q);
    std::uint32_t spine_child = 0;
    if (node.on_spine) {
      spine_depth = node.index.generation();
      spine_child = choose_spine_child(v, ctx.alpha, rng);
    }

    if (node.log_weight + node.perturbation > t) {
      run.terminal_index = node.index;
      run.tau = spine_depth;
      run.hit_on_spine = node.on_spine;
      if (node.on_spine) {
        run.v_tau = node.log_weight;
        run.z_value = std::exp(-ctx.alpha * node.log_weight);
        if (variant == EstimatorVariant::General) run.z_value /= v.spine_weight_sum(ctx.alpha);
      }
      break;
    }

    for (std::size_t j = 0; j < v.weights.size(); ++j) {
      const auto label = static_cast<std::uint32_t>(j + 1);
      const bool on_spine = label == spine_child;
      // A zero weight kills the whole subtree (S = -inf), so it is never queued.
      if (v.weights[j] <= 0.0) continue;
      frontier.push(NodeState{child(node.index, label), node.log_weight + std::log(v.weights[j]), kNegInf, on_spine});
    }
  }
  run.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

ReplicationResult is_replications(const ModelSpec& model, const TiltContext& ctx, double t, const ISOptions& opts) {
  check_variant(model, opts.variant);
  if (opts.n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  return replicate(opts.n, opts.master_seed, opts.parallelism, [&](std::uint64_t, Rng& rng) {
    const ISRun run = run_single(model, ctx, t, opts.variant, opts.node_budget, rng);
    RunRecord r;
    r.value = run.z_value;
    r.discarded = run.budget_exceeded;
    r.terminal_generation = static_cast<double>(run.terminal_index.generation());
    r.tau = static_cast<double>(run.tau);
    r.elapsed_s = run.elapsed_s;
    return r;
  });
}

EstimateSummary is_estimate(const ModelSpec& model, const TiltContext& ctx, double t, const ISOptions& opts) {
  return aggregate(is_replications(model, ctx, t, opts));
}

std::vector<GenerationProfileRow> terminal_generation_profile(const ModelSpec& model, const TiltContext& ctx,
                                                              const std::vector<double>& t_grid,
                                                              const ISOptions& opts) {
  std::vector<GenerationProfileRow> rows;
  for (double t : t_grid) {
    const auto s = is_estimate(model, ctx, t, opts);
    rows.push_back({t, s.mean_tau, s.mean_terminal_gen, t / ctx.mu});
  }
  return rows;
}

}  // namespace wbis
