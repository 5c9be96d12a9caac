#include "wbis/experiment.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <random>

#include "wbis/tree.hpp"

namespace wbis {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
      return kExitUsage;
    case ErrorCode::EmptySample:
    case ErrorCode::BudgetExceeded:
      return kExitStatistical;
    default:
      return kExitModelMath;
  }
}

TiltContext context_for(const ExperimentConfig& cfg) {
  if (cfg.alpha_override) return make_context(cfg.model, *cfg.alpha_override);
  return solve_alpha(cfg.model);
}

std::vector<GridRow> run_is_grid(const ExperimentConfig& cfg, const TiltContext& ctx, unsigned parallelism) {
  validate(cfg);
  ISOptions opts;
  opts.variant = cfg.estimator.variant;
  opts.n = cfg.estimator.n;
  opts.node_budget = cfg.estimator.node_budget;
  opts.master_seed = cfg.master_seed;
  opts.parallelism = parallelism;
  std::vector<GridRow> rows;
  for (double t : cfg.estimator.t_grid) rows.push_back({t, is_estimate(cfg.model, ctx, t, opts), t / ctx.mu});
  return rows;
}

bool discard_threshold_exceeded(const std::vector<GridRow>& rows) {
  for (const auto& r : rows) {
    const double total = static_cast<double>(r.summary.n + r.summary.discarded);
    if (total > 0 && static_cast<double>(r.summary.discarded) > 1e-3 * total) return true;
  }
  return false;
}

void write_is_csv(std::ostream& out, const std::vector<GridRow>& rows) {
  out << kIsCsvHeader << '\n';
  for (const auto& r : rows) {
    out << format_number(r.t) << ',' << format_number(r.summary.mean) << ',' << format_number(r.summary.std_err)
        << ',' << format_number(r.t_over_mu) << ',' << format_number(r.summary.mean_terminal_gen) << ','
        << format_number(r.summary.mean_time_s) << ',' << format_number(r.summary.prop_nonzero) << '\n';
  }
}

const ReferenceTable& reference_table(const std::string& name) {
  // Reference values for the branching M/M/1 queue and the simplex model,
  // sample size 10,000 per row. Columns: t, estimate, SE, t/mu, terminal
  // generation, seconds per replication, proportion nonzero.
  static const std::map<std::string, ReferenceTable> tables = {
      {"mm1",
       {4.374,
        1.383,
        0.2390,
        {{0.5, 0.037774, 0.001241, 0.36, 1.39, 0.002610, 0.967},
         {1.0, 0.003025, 0.000123, 0.72, 1.78, 0.007702, 0.980},
         {1.5, 0.000354, 1.07147e-05, 1.08, 2.16, 0.017536, 0.983},
         {2.0, 3.90110e-05, 1.43477e-06, 1.45, 2.52, 0.029310, 0.983},
         {2.5, 4.11873e-06, 1.16323e-07, 1.81, 2.90, 0.065747, 0.985}}}},
      {"simplex",
       {3.328,
        0.995,
        2.5180,
        {{1.5, 0.015785, 0.000166, 1.51, 0.33, 0.000235, 0.998},
         {2.0, 0.003611, 3.51666e-05, 2.01, 0.78, 0.000311, 0.994},
         {2.5, 0.000613, 6.60663e-06, 2.51, 1.33, 0.000439, 0.994},
         {3.0, 0.000116, 1.21042e-06, 3.01, 1.84, 0.000671, 0.994},
         {3.5, 2.29240e-05, 2.35959e-07, 3.52, 2.33, 0.001058, 0.992}}}},
  };
  const auto it = tables.find(name);
  if (it == tables.end()) throw Error(ErrorCode::ConfigError, "no reference table named '" + name + "'");
  return it->second;
}

bool ReproduceResult::all_pass() const {
  for (const auto& r : rows) {
    if (!r.pass()) return false;
  }
  return !rows.empty();
}

ReproduceResult reproduce_table(const std::string& name, std::uint64_t master_seed, unsigned parallelism,
                                std::uint64_t n) {
  const ReferenceTable& ref = reference_table(name);
  ExperimentConfig cfg = preset(name);
  cfg.estimator.n = n;
  cfg.master_seed = master_seed;
  ReproduceResult result;
  result.ctx = solve_alpha(cfg.model);
  const auto grid = run_is_grid(cfg, result.ctx, parallelism);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ReproduceRow row;
    row.ours = grid[i];
    row.reference = ref.rows[i];
    const double se = row.ours.summary.std_err + row.reference.std_err;
    row.z_score = std::abs(row.ours.summary.mean - row.reference.estimate) / se;
    row.pass_estimate = row.z_score <= 4.0;
    row.pass_prop_nonzero = row.ours.summary.prop_nonzero >= 0.95;
    row.pass_generation = std::abs(row.ours.summary.mean_terminal_gen - row.reference.terminal_generation) <= 0.3;
    result.rows.push_back(row);
  }
  return result;
}

void write_reproduce_csv(std::ostream& out, const ReproduceResult& result) {
  out << "t,estimate,std_err,ref_estimate,ref_std_err,z_score,t_over_mu,mean_terminal_generation,"
         "ref_terminal_generation,prop_nonzero,ref_prop_nonzero,time_per_replication_s,pass\n";
  for (const auto& r : result.rows) {
    const auto& s = r.ours.summary;
    out << format_number(r.ours.t) << ',' << format_number(s.mean) << ',' << format_number(s.std_err) << ','
        << format_number(r.reference.estimate) << ',' << format_number(r.reference.std_err) << ','
        << format_number(r.z_score) << ',' << format_number(r.ours.t_over_mu) << ','
        << format_number(s.mean_terminal_gen) << ',' << format_number(r.reference.terminal_generation) << ','
        << format_number(s.prop_nonzero) << ',' << format_number(r.reference.prop_nonzero) << ','
        << format_number(s.mean_time_s) << ',' << (r.pass() ? "pass" : "fail") << '\n';
  }
}

SlopeFit fit_log_slope(const std::vector<double>& t, const std::vector<double>& y) {
  SlopeFit fit;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size() && i < y.size(); ++i) {
    if (!(y[i] > 0.0)) continue;
    const double ly = std::log(y[i]);
    st += t[i];
    sy += ly;
    stt += t[i] * t[i];
    sty += t[i] * ly;
    ++fit.points;
  }
  if (fit.points < 2) throw Error(ErrorCode::EmptySample, "need two positive estimates for a slope");
  const double k = static_cast<double>(fit.points);
  fit.slope = (k * sty - st * sy) / (k * stt - st * st);
  fit.intercept = (sy - fit.slope * st) / k;
  return fit;
}

HReport estimate_h_report(const ExperimentConfig& cfg, unsigned parallelism) {
  HReport report;
  report.ctx = context_for(cfg);
  const WPool pool = cfg.oracle.pool_in.empty()
                         ? popdyn_pool(cfg.model, cfg.oracle.pool_size, cfg.oracle.pool_iterations, cfg.master_seed)
                         : read_pool(cfg.oracle.pool_in);
  if (!cfg.oracle.pool_out.empty()) write_pool(cfg.oracle.pool_out, pool);
  report.h_equiv = estimate_H_equiv(cfg.model, report.ctx, pool, cfg.oracle.h_samples, cfg.master_seed + 1);
  for (unsigned m : cfg.oracle.h_spine_m) {
    report.h_spine.emplace_back(m, estimate_H_spine(cfg.model, report.ctx, m, cfg.oracle.h_spine_n,
                                                    cfg.estimator.node_budget, cfg.master_seed + 2, parallelism));
  }
  report.grid = run_is_grid(cfg, report.ctx, parallelism);
  std::vector<double> ts, ys;
  for (const auto& r : report.grid) {
    ts.push_back(r.t);
    ys.push_back(r.summary.mean);
  }
  report.slope = fit_log_slope(ts, ys);
  return report;
}

void write_h_report(std::ostream& out, const HReport& r) {
  out << "alpha=" << format_number(r.ctx.alpha) << " mu=" << format_number(r.ctx.mu) << '\n';
  out << "H_equiv=" << format_number(r.h_equiv.value) << " se=" << format_number(r.h_equiv.std_err) << '\n';
  for (const auto& [m, h] : r.h_spine) {
    out << "H_spine m=" << m << " value=" << format_number(h.value) << " se=" << format_number(h.std_err) << '\n';
  }
  out << "log_slope=" << format_number(r.slope.slope) << " (-alpha=" << format_number(-r.ctx.alpha) << ")\n";
  out << "\n# t,log_estimate\n";
  for (const auto& g : r.grid) out << format_number(g.t) << ',' << format_number(std::log(g.summary.mean)) << '\n';
  out << "\n# t,log_H_exp_minus_alpha_t\n";
  for (const auto& g : r.grid) {
    out << format_number(g.t) << ',' << format_number(std::log(r.h_equiv.value) - r.ctx.alpha * g.t) << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

Check check_discrete_pair_tilt() {
  const ModelSpec m = discrete_pair_model();
  const TiltContext ctx = make_context(m, 1.0);
  const auto& p = ctx.tilted_table.probs();
  const double total = p[0] + p[1];
  const bool ok = std::abs(p[0] / total - 0.5) <= 1e-15 && std::abs(p[1] / total - 0.5) <= 1e-15;
  return {"discrete_pair tilted pmf = (1/2, 1/2)", ok,
          "(" + format_number(p[0] / total) + ", " + format_number(p[1] / total) + ")"};
}

Check check_size_biased_poisson() {
  const OffspringLaw law(nlaw::TruncatedPoisson{2.0});
  double worst = 0.0;
  double expected = std::exp(-2.0);
  for (int n = 1; n <= 30; ++n) {
    if (n > 1) expected *= 2.0 / (n - 1);
    worst = std::max(worst, std::abs(law.size_biased_pmf(n) - expected) / expected);
  }
  return {"size-biased truncated Poisson(2) = Poisson(2) + 1", worst <= 1e-14,
          "max relative deviation " + format_number(worst)};
}

Check check_inverse_d(const std::string& label, const ModelSpec& m, const TiltContext& ctx, std::uint64_t seed) {
  Rng rng(seed, 0);
  RunningMoments mom;
  for (int i = 0; i < 100000; ++i) mom.add(1.0 / sample_tilted(m, ctx, rng).spine_weight_sum(ctx.alpha));
  const bool ok = std::abs(mom.mean() - 1.0) <= 4.0 * mom.std_err();
  return {"E~[1/D] = 1 (" + label + ")", ok, format_number(mom.mean()) + " +- " + format_number(mom.std_err())};
}

Check check_negative_t(std::uint64_t seed, unsigned parallelism) {
  const ModelSpec m(model::BranchingMM1{});
  const TiltContext ctx = solve_alpha(m);
  ISOptions opts;
  opts.variant = EstimatorVariant::IndependentQ;
  opts.n = 2000;
  opts.master_seed = seed;
  opts.parallelism = parallelism;
  const auto res = is_replications(m, ctx, -0.5, opts);
  bool ok = res.failures.empty();
  for (const auto& r : res.runs) ok = ok && r.value == 1.0;
  return {"t < 0 gives Z = 1 (IndependentQ, Q >= 1)", ok, std::to_string(res.runs.size()) + " runs"};
}

Check check_lenlex(std::uint64_t seed) {
  Rng rng(seed, 1);
  std::vector<NodeIndex> all;
  Frontier frontier;
  frontier.push(NodeState{NodeIndex::root()});
  std::vector<NodeIndex> popped;
  while (!frontier.empty() && popped.size() < 2000) {
    const NodeState s = frontier.advance();
    popped.push_back(s.index);
    if (s.index.generation() >= 6) continue;
    const auto kids = s.index.generation() < 3 ? 1 + rng.below(3) : rng.below(4);
    for (std::uint32_t j = 1; j <= kids; ++j) frontier.push(NodeState{child(s.index, j)});
  }
  auto sorted = popped;
  std::shuffle(sorted.begin(), sorted.end(), rng);
  std::sort(sorted.begin(), sorted.end(), LenLexLess{});
  return {"frontier order = length-lexicographic order", sorted == popped,
          std::to_string(popped.size()) + " nodes"};
}

}  // namespace

std::vector<Check> run_validation(std::optional<double> alpha_override, std::uint64_t seed, unsigned parallelism) {
  std::vector<Check> checks;
  checks.push_back(check_discrete_pair_tilt());
  checks.push_back(check_size_biased_poisson());
  {
    const ModelSpec m = discrete_pair_model();
    checks.push_back(check_inverse_d("discrete_pair", m, make_context(m, 1.0), seed));
  }
  checks.push_back(check_negative_t(seed, parallelism));
  checks.push_back(check_lenlex(seed));

  ExperimentConfig nb = preset("nb_exp");
  nb.alpha_override = alpha_override;
  const TiltContext ctx = context_for(nb);
  {
    ISOptions opts;
    opts.variant = EstimatorVariant::IndependentQ;
    opts.n = 100000;
    opts.master_seed = seed;
    opts.parallelism = parallelism;
    const auto s = is_estimate(nb.model, ctx, 1.0, opts);
    const double exact = 0.5 * std::exp(-1.0);
    checks.push_back({"unbiased on N = 1 model at t = 1", std::abs(s.mean - exact) <= 4.0 * s.std_err,
                      format_number(s.mean) + " +- " + format_number(s.std_err) + " vs " + format_number(exact)});
    opts.n = 20000;
    bool ok = true;
    std::string detail;
    for (const auto& row : cl_bound_check(nb.model, ctx, {1.0, 3.0, 5.0}, opts)) {
      ok = ok && row.pass;
      detail += "t=" + format_number(row.t) + ":" + format_number(row.estimate) + "<=" + format_number(row.bound) + " ";
    }
    checks.push_back({"Cramer-Lundberg bound on N = 1 model", ok, detail});
  }
  return checks;
}

}  // namespace wbis
