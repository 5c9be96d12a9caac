#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "wbis/experiment.hpp"

using namespace wbis;

namespace {

struct GlobalOptions {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  unsigned parallelism = 0;
  std::string out;
};

ExperimentConfig resolve_config(const GlobalOptions& g) {
  ExperimentConfig cfg;
  if (!g.config.empty()) {
    cfg = load_config(g.config);
  } else if (!g.preset.empty()) {
    cfg = preset(g.preset);
  } else {
    throw Error(ErrorCode::ConfigError, "give --config PATH or --preset NAME");
  }
  if (g.seed) cfg.master_seed = *g.seed;
  validate(cfg);
  return cfg;
}

/// Writes to --out when given, else stdout.
template <class F>
void emit(const GlobalOptions& g, F&& write) {
  if (g.out.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream file(g.out);
  if (!file) throw Error(ErrorCode::ConfigError, "cannot write " + g.out);
  write(file);
}

// Truncated, not rounded, to three decimals.
std::string fixed3(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << std::trunc(x * 1000.0) / 1000.0;
  return os.str();
}

int cmd_solve_alpha(const GlobalOptions& g) {
  const ExperimentConfig cfg = resolve_config(g);
  const TiltContext ctx = context_for(cfg);
  const QEfficiencyReport q = q_efficiency_check(cfg.model, ctx);
  std::cout << "alpha=" << fixed3(ctx.alpha) << ", mu=" << fixed3(ctx.mu) << '\n';
  std::cout << "alpha_full=" << format_number(ctx.alpha) << " mu_full=" << format_number(ctx.mu) << '\n';
  std::cout << "E[Q^alpha]=" << format_number(q.e_q_alpha) << '\n';
  std::cout << "E[Q^2alpha]=" << format_number(q.e_q_2alpha) << '\n';
  std::cout << "E[Q^2alpha/D]=" << format_number(q.e_q_2alpha_over_d) << '\n';
  std::cout << "efficiency_condition=" << (q.finite ? "finite" : "infinite")
            << (q.analytic ? " (analytic)" : " (Monte Carlo)") << '\n';
  for (const auto& w : q.warnings) std::cout << "warning: " << w << '\n';
  return kExitOk;
}

int cmd_run_is(const GlobalOptions& g) {
  const ExperimentConfig cfg = resolve_config(g);
  const TiltContext ctx = context_for(cfg);
  const auto rows = run_is_grid(cfg, ctx, g.parallelism);
  emit(g, [&](std::ostream& os) { write_is_csv(os, rows); });
  if (discard_threshold_exceeded(rows)) {
    std::cerr << "more than 0.1% of replications exceeded the node budget\n";
    return kExitStatistical;
  }
  return kExitOk;
}

int cmd_run_naive(const GlobalOptions& g) {
  const ExperimentConfig cfg = resolve_config(g);
  const auto samples = naive_w_samples(cfg.model, cfg.oracle.naive_depth, cfg.oracle.naive_n, cfg.master_seed,
                                       g.parallelism);
  emit(g, [&](std::ostream& os) {
    os << "t,estimate,std_err\n";
    for (double t : cfg.estimator.t_grid) {
      const auto s = tail_fraction(samples, t);
      os << format_number(t) << ',' << format_number(s.mean) << ',' << format_number(s.std_err) << '\n';
    }
  });
  return kExitOk;
}

int cmd_run_popdyn(const GlobalOptions& g) {
  const ExperimentConfig cfg = resolve_config(g);
  const WPool pool = popdyn_pool(cfg.model, cfg.oracle.pool_size, cfg.oracle.pool_iterations, cfg.master_seed);
  if (!cfg.oracle.pool_out.empty()) write_pool(cfg.oracle.pool_out, pool);
  emit(g, [&](std::ostream& os) {
    os << "t,estimate,std_err\n";
    for (double t : cfg.estimator.t_grid) {
      const auto s = pool_tail(pool, t);
      os << format_number(t) << ',' << format_number(s.mean) << ',' << format_number(s.std_err) << '\n';
    }
  });
  return kExitOk;
}

int cmd_estimate_h(const GlobalOptions& g) {
  const ExperimentConfig cfg = resolve_config(g);
  const HReport report = estimate_h_report(cfg, g.parallelism);
  emit(g, [&](std::ostream& os) { write_h_report(os, report); });
  return kExitOk;
}

int cmd_reproduce(const GlobalOptions& g, const std::string& name) {
  const std::uint64_t seed = g.seed.value_or(preset(name).master_seed);
  const ReproduceResult result = reproduce_table(name, seed, g.parallelism);
  emit(g, [&](std::ostream& os) { write_reproduce_csv(os, result); });
  std::size_t passed = 0;
  for (const auto& r : result.rows) passed += r.pass() ? 1 : 0;
  std::cerr << name << ": alpha=" << fixed3(result.ctx.alpha) << " mu=" << fixed3(result.ctx.mu) << ", " << passed
            << "/" << result.rows.size() << " rows pass\n";
  return result.all_pass() ? kExitOk : kExitStatistical;
}

int cmd_validate(const GlobalOptions& g, std::optional<double> alpha_override) {
  const auto checks = run_validation(alpha_override, g.seed.value_or(20240601), g.parallelism);
  bool ok = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    ok = ok && c.pass;
  }
  return ok ? kExitOk : kExitStatistical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spine importance sampling for tails of the high-order Lindley equation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "JSON experiment config");
  app.add_option("--preset", g.preset, "mm1 | simplex | nb_exp | discrete_pair | constant_pair");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--parallelism", g.parallelism, "worker threads (0 = all cores)");
  app.add_option("--out", g.out, "output file (default stdout)");

  auto* solve = app.add_subcommand("solve-alpha", "root alpha, drift mu and the moment check");
  auto* run_is = app.add_subcommand("run-is", "importance-sampling estimates over the t grid (CSV)");
  auto* run_naive = app.add_subcommand("run-naive", "truncated-tree Monte Carlo over the t grid (CSV)");
  auto* run_popdyn = app.add_subcommand("run-popdyn", "population-dynamics pool tail over the t grid (CSV)");
  auto* est_h = app.add_subcommand("estimate-h", "constant H by both routes plus the log-slope fit");
  auto* reproduce = app.add_subcommand("reproduce-table", "rerun a reference table and compare row by row");
  std::string table_name;
  reproduce->add_option("name", table_name, "mm1 | simplex")->required();
  auto* validate_cmd = app.add_subcommand("validate", "fast invariant suite");
  std::optional<double> alpha_override;
  validate_cmd->add_option("--override-alpha", alpha_override, "use this alpha for the N = 1 model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve) return cmd_solve_alpha(g);
    if (*run_is) return cmd_run_is(g);
    if (*run_naive) return cmd_run_naive(g);
    if (*run_popdyn) return cmd_run_popdyn(g);
    if (*est_h) return cmd_estimate_h(g);
    if (*reproduce) {
      if (table_name != "mm1" && table_name != "simplex") {
        std::cerr << "unknown table '" << table_name << "' (expected mm1 or simplex)\n";
        return kExitUsage;
      }
      return cmd_reproduce(g, table_name);
    }
    if (*validate_cmd) return cmd_validate(g, alpha_override);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
