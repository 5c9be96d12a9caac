#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wbis/model.hpp"
#include "wbis/replication.hpp"
#include "wbis/spine_sampler.hpp"

namespace wbis {

inline constexpr double kDefaultRecursionCap = 1e7;

/// max(Y, max_i(X_i + W_i)) evaluated on the tree truncated at `depth`
/// generations (W = -inf below). Throws RecursionBudget when E[N]^depth
/// exceeds node_cap.
double naive_w_sample(const ModelSpec& model, unsigned depth, Rng& rng, double node_cap = kDefaultRecursionCap);

/// n truncated-tree samples of W, sample i from stream (master_seed, i).
std::vector<double> naive_w_samples(const ModelSpec& model, unsigned depth, std::uint64_t n,
                                    std::uint64_t master_seed, unsigned parallelism = 0,
                                    double node_cap = kDefaultRecursionCap);

/// Fraction of samples above t with binomial standard error.
EstimateSummary tail_fraction(const std::vector<double>& samples, double t);

/// Naive estimator 1(W > t). Biased low at finite depth.
EstimateSummary naive_tail(const ModelSpec& model, double t, std::uint64_t n, unsigned depth,
                           std::uint64_t master_seed, unsigned parallelism = 0,
                           double node_cap = kDefaultRecursionCap);

struct WPool {
  std::vector<double> samples;
  unsigned iterations = 0;
};

inline constexpr std::size_t kDefaultPoolSize = 100000;
inline constexpr unsigned kDefaultPoolIterations = 60;

/// Population dynamics: starting from `initial` (all -inf when empty),
/// iteration k replaces the pool by max(Y, max_i(X_i + W_pi(i))) with fresh
/// (N, Q, C) and uniform pool indices pi(i), using stream (master_seed, k).
WPool popdyn_pool(const ModelSpec& model, std::size_t pool_size, unsigned iterations, std::uint64_t master_seed,
                  const WPool& initial = {});

/// Tail fraction of the pool with a batch-means standard error (20 batches).
EstimateSummary pool_tail(const WPool& pool, double t);

struct HEstimate {
  double value = 0.0;
  double std_err = 0.0;
  std::uint64_t n = 0;
};

/// E[e^(alpha Y) v max_i e^(alpha(X_i + W_i)) - sum_i e^(alpha(X_i + W_i))] / (alpha mu)
/// with W_i resampled from the pool; SE by batch means over 20 batches.
HEstimate estimate_H_equiv(const ModelSpec& model, const TiltContext& ctx, const WPool& pool, std::uint64_t n,
                           std::uint64_t master_seed);

/// Spine form of H at generation m:
/// E~[(e^(alpha xi_m) - e^(alpha(max_{i < J_m}(S_i + Y_i) - V_m)))^+ / D_(J_m)] / (alpha mu).
/// The 1 / D factor integrates out when Q is independent of the weights and
/// is then dropped. Throws BudgetExceeded when the expected tree size up to
/// generation m exceeds node_budget.
HEstimate estimate_H_spine(const ModelSpec& model, const TiltContext& ctx, unsigned m, std::uint64_t n,
                           std::uint64_t node_budget, std::uint64_t master_seed, unsigned parallelism = 0);

struct ClBoundRow {
  double t = 0.0;
  double estimate = 0.0;
  double std_err = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Checks estimate <= q^alpha e^(-alpha t) + 4 SE on each grid point for Q = q
/// models. Throws NotDegenerateQ otherwise.
std::vector<ClBoundRow> cl_bound_check(const ModelSpec& model, const TiltContext& ctx,
                                       const std::vector<double>& t_grid, const ISOptions& opts);

/// One sample per line, "-inf" for minus infinity.
void write_pool(const std::string& path, const WPool& pool);
WPool read_pool(const std::string& path);

}  // namespace wbis
