#include "wbis/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wbis/error.hpp"

namespace wbis {

namespace {

constexpr int kBatches = 20;

double log_or_neg_inf(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

double naive_recurse(const ModelSpec& model, unsigned depth, Rng& rng) {
  const BranchingVector v = sample_p(model, rng);
  double w = log_or_neg_inf(v.q);
  if (depth == 0) return w;
  for (double c : v.weights) {
    if (c <= 0.0) continue;
    w = std::max(w, std::log(c) + naive_recurse(model, depth - 1, rng));
  }
  return w;
}

void check_recursion_budget(const ModelSpec& model, unsigned depth, double node_cap) {
  const double expected = std::pow(std::max(1.0, model.mean_offspring()), static_cast<double>(depth));
  if (expected > node_cap) {
    std::ostringstream os;
    os << "expected truncated tree size E[N]^depth = " << expected << " exceeds the cap " << node_cap;
    throw Error(ErrorCode::RecursionBudget, os.str());
  }
}

/// Mean with a standard error from non-overlapping batch means.
HEstimate batch_means(const std::vector<double>& values) {
  HEstimate h;
  h.n = values.size();
  if (values.empty()) return h;
  RunningMoments all;
  for (double x : values) all.add(x);
  h.value = all.mean();
  const std::size_t per = values.size() / kBatches;
  if (per == 0) {
    h.std_err = all.std_err();
    return h;
  }
  RunningMoments batches;
  for (int b = 0; b < kBatches; ++b) {
    double sum = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) sum += values[i];
    batches.add(sum / static_cast<double>(per));
  }
  h.std_err = batches.std_err();
  return h;
}

}  // namespace

double naive_w_sample(const ModelSpec& model, unsigned depth, Rng& rng, double node_cap) {
  check_recursion_budget(model, depth, node_cap);
  return naive_recurse(model, depth, rng);
}

std::vector<double> naive_w_samples(const ModelSpec& model, unsigned depth, std::uint64_t n,
                                    std::uint64_t master_seed, unsigned parallelism, double node_cap) {
  check_recursion_budget(model, depth, node_cap);
  const auto result = replicate(n, master_seed, parallelism, [&](std::uint64_t, Rng& rng) {
    RunRecord r;
    r.value = naive_recurse(model, depth, rng);
    return r;
  });
  if (!result.failures.empty()) throw Error(ErrorCode::InvalidArgument, result.failures.front().message);
  std::vector<double> out;
  out.reserve(result.runs.size());
  for (const auto& r : result.runs) out.push_back(r.value);
  return out;
}

EstimateSummary tail_fraction(const std::vector<double>& samples, double t) {
  if (samples.empty()) throw Error(ErrorCode::EmptySample, "no samples");
  std::uint64_t hits = 0;
  for (double w : samples) hits += w > t ? 1 : 0;
  EstimateSummary s;
  s.n = samples.size();
  s.mean = static_cast<double>(hits) / static_cast<double>(s.n);
  s.std_err = std::sqrt(s.mean * (1.0 - s.mean) / static_cast<double>(s.n));
  s.rel_err_defined = s.mean > 0.0;
  s.rel_err = s.rel_err_defined ? s.std_err / s.mean : 0.0;
  s.prop_nonzero = s.mean;
  return s;
}

EstimateSummary naive_tail(const ModelSpec& model, double t, std::uint64_t n, unsigned depth,
                           std::uint64_t master_seed, unsigned parallelism, double node_cap) {
  return tail_fraction(naive_w_samples(model, depth, n, master_seed, parallelism, node_cap), t);
}

WPool popdyn_pool(const ModelSpec& model, std::size_t pool_size, unsigned iterations, std::uint64_t master_seed,
                  const WPool& initial) {
  if (pool_size == 0) throw Error(ErrorCode::InvalidArgument, "pool size must be >= 1");
  if (iterations == 0) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  WPool pool;
  pool.samples = initial.samples.empty() ? std::vector<double>(pool_size, kNegInf) : initial.samples;
  pool.iterations = initial.iterations;
  std::vector<double> next(pool.samples.size());
  for (unsigned k = 0; k < iterations; ++k) {
    Rng rng(master_seed, k);
    for (auto& entry : next) {
      const BranchingVector v = sample_p(model, rng);
      double w = log_or_neg_inf(v.q);
      for (double c : v.weights) {
        const double wi = pool.samples[rng.below(pool.samples.size())];
        if (c > 0.0) w = std::max(w, std::log(c) + wi);
      }
      entry = w;
    }
    pool.samples.swap(next);
    ++pool.iterations;
  }
  return pool;
}

EstimateSummary pool_tail(const WPool& pool, double t) {
  std::vector<double> indicators;
  indicators.reserve(pool.samples.size());
  for (double w : pool.samples) indicators.push_back(w > t ? 1.0 : 0.0);
  const HEstimate h = batch_means(indicators);
  EstimateSummary s = tail_fraction(pool.samples, t);
  s.std_err = std::max(s.std_err, h.std_err);
  s.rel_err = s.rel_err_defined ? s.std_err / s.mean : 0.0;
  return s;
}

HEstimate estimate_H_equiv(const ModelSpec& model, const TiltContext& ctx, const WPool& pool, std::uint64_t n,
                           std::uint64_t master_seed) {
  if (pool.samples.empty()) throw Error(ErrorCode::EmptySample, "empty pool");
  const double alpha = ctx.alpha;
  std::vector<double> values;
  values.reserve(n);
  Rng rng(master_seed, 0);
  std::vector<double> terms;
  for (std::uint64_t k = 0; k < n; ++k) {
    const BranchingVector v = sample_p(model, rng);
    terms.clear();
    for (double c : v.weights) {
      const double wi = pool.samples[rng.below(pool.samples.size())];
      terms.push_back(c > 0.0 ? std::exp(alpha * (std::log(c) + wi)) : 0.0);
    }
    const double q_term = v.q > 0.0 ? std::pow(v.q, alpha) : 0.0;
    const auto top = std::max_element(terms.begin(), terms.end());
    const double largest = top == terms.end() ? 0.0 : *top;
    double rest = 0.0;
    for (auto it = terms.begin(); it != terms.end(); ++it) {
      if (it != top) rest += *it;
    }
    values.push_back(std::max(q_term - largest, 0.0) - rest);
  }
  HEstimate h = batch_means(values);
  h.value /= alpha * ctx.mu;
  h.std_err /= alpha * ctx.mu;
  return h;
}

HEstimate estimate_H_spine(const ModelSpec& model, const TiltContext& ctx, unsigned m, std::uint64_t n,
                           std::uint64_t node_budget, std::uint64_t master_seed, unsigned parallelism) {
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
  const double mean_n = std::max(1.0, model.mean_offspring());
  double expected = 0.0;
  for (unsigned k = 0; k <= m; ++k) expected += std::pow(mean_n, static_cast<double>(k));
  if (expected > static_cast<double>(node_budget)) {
    std::ostringstream os;
    os << "expected tree size " << expected << " up to generation " << m << " exceeds node budget " << node_budget;
    throw Error(ErrorCode::BudgetExceeded, os.str());
  }
  const bool divide_by_d = !model.q_independent();
  const double alpha = ctx.alpha;

  const auto result = replicate(n, master_seed, parallelism, [&](std::uint64_t, Rng& rng) {
    RunRecord r;
    Frontier frontier;
    frontier.push(NodeState{NodeIndex::root(), 0.0, kNegInf, true});
    double best_before = kNegInf;
    std::uint64_t expanded = 0;
    while (!frontier.empty()) {
      NodeState node = frontier.advance();
      if (++expanded > node_budget) {
        r.discarded = true;
        return r;
      }
      const BranchingVector v = node.on_spine ? sample_tilted(model, ctx, rng) : sample_p(model, rng);
      node.perturbation = log_or_neg_inf(v.q);
      if (node.on_spine && node.index.generation() == m) {
        const double xi = node.perturbation;
        const double v_m = node.log_weight;
        double value = std::exp(alpha * xi) - std::exp(alpha * (best_before - v_m));
        value = std::max(value, 0.0);
        if (divide_by_d) value /= v.spine_weight_sum(alpha);
        r.value = value;
        r.tau = static_cast<double>(m);
        return r;
      }
      best_before = std::max(best_before, node.log_weight + node.perturbation);
      if (node.index.generation() == m) continue;
      const std::uint32_t spine_child = node.on_spine ? choose_spine_child(v, alpha, rng) : 0;
      for (std::size_t j = 0; j < v.weights.size(); ++j) {
        const auto label = static_cast<std::uint32_t>(j + 1);
        if (v.weights[j] <= 0.0) continue;
        frontier.push(
            NodeState{child(node.index, label), node.log_weight + std::log(v.weights[j]), kNegInf, label == spine_child});
      }
    }
    throw Error(ErrorCode::InvalidArgument, "spine vanished before generation m");
  });
  if (!result.failures.empty()) throw Error(ErrorCode::InvalidArgument, result.failures.front().message);

  std::vector<double> values;
  values.reserve(result.runs.size());
  for (const auto& r : result.runs) {
    if (!r.discarded) values.push_back(r.value);
  }
  if (values.empty()) throw Error(ErrorCode::EmptySample, "every spine replication exceeded the node budget");
  RunningMoments mom;
  for (double x : values) mom.add(x);
  HEstimate h;
  h.n = values.size();
  h.value = mom.mean() / (alpha * ctx.mu);
  h.std_err = mom.std_err() / (alpha * ctx.mu);
  return h;
}

std::vector<ClBoundRow> cl_bound_check(const ModelSpec& model, const TiltContext& ctx,
                                       const std::vector<double>& t_grid, const ISOptions& opts) {
  const auto q = model.degenerate_q();
  if (!q) throw Error(ErrorCode::NotDegenerateQ, "model " + model.name() + " does not have a constant Q");
  std::vector<ClBoundRow> rows;
  for (double t : t_grid) {
    const auto s = is_estimate(model, ctx, t, opts);
    ClBoundRow row;
    row.t = t;
    row.estimate = s.mean;
    row.std_err = s.std_err;
    row.bound = std::pow(*q, ctx.alpha) * std::exp(-ctx.alpha * t);
    row.pass = s.mean <= row.bound + 4.0 * s.std_err;
    rows.push_back(row);
  }
  return rows;
}

void write_pool(const std::string& path, const WPool& pool) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write pool file " + path);
  char buf[64];
  for (double w : pool.samples) {
    if (std::isinf(w) && w < 0.0) {
      out << "-inf\n";
      continue;
    }
    const auto res = std::to_chars(buf, buf + sizeof buf, w);
    out.write(buf, res.ptr - buf);
    out << '\n';
  }
}

WPool read_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read pool file " + path);
  WPool pool;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line == "-inf") {
      pool.samples.push_back(kNegInf);
      continue;
    }
    double w = 0.0;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), w);
    if (res.ec != std::errc() || res.ptr != line.data() + line.size()) {
      throw Error(ErrorCode::ConfigError, path + ":" + std::to_string(line_no) + ": not a number");
    }
    pool.samples.push_back(w);
  }
  if (pool.samples.empty()) throw Error(ErrorCode::ConfigError, "pool file " + path + " is empty");
  return pool;
}

}  // namespace wbis
