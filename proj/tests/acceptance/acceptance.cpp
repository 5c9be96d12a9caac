#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stats_support.hpp"
#include "wbis/config.hpp"
#include "wbis/experiment.hpp"
#include "wbis/oracle.hpp"
#include "wbis/spine_sampler.hpp"

using namespace wbis;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

struct Named {
  std::string name;
  ModelSpec model;
  TiltContext ctx;
};

std::vector<Named> builtins() {
  std::vector<Named> out;
  const auto add = [&](const std::string& name, const ModelSpec& m) { out.push_back({name, m, solve_alpha(m)}); };
  add("nb_exp", ModelSpec(model::NonBranchingExp{}));
  add("mm1", ModelSpec(model::BranchingMM1{}));
  add("pareto", ModelSpec(model::IdenticalPareto{}));
  add("exp_poisson", ModelSpec(model::ExpPoisson{}));
  add("gamma_geometric", ModelSpec(model::GammaGeometric{}));
  add("simplex", ModelSpec(model::SimplexGamma{}));
  out.push_back({"discrete_pair", discrete_pair_model(), make_context(discrete_pair_model(), 1.0)});
  return out;
}

Outcome roots() {
  Outcome o;
  for (const auto& [name, a, m] : {std::tuple{"mm1", 4.374, 1.383}, std::tuple{"simplex", 3.328, 0.995}}) {
    const auto cfg = preset(name);
    const auto start = Clock::now();
    const TiltContext c = solve_alpha(cfg.model);
    const double secs = seconds_since(start);
    o.require(std::abs(c.alpha - a) <= 1e-3 && std::abs(c.mu - m) <= 5e-3 && secs < 1.0,
              std::string(name) + " alpha=" + fmt("%.6f", c.alpha) + " mu=" + fmt("%.6f", c.mu) + " in " +
                  fmt("%.3fs", secs));
  }
  return o;
}

Outcome closed_form() {
  Outcome o;
  const auto start = Clock::now();
  const ModelSpec m(model::NonBranchingExp{2.0, 1.0, qlaw::Constant{1.0}});
  const TiltContext c = solve_alpha(m);
  ISOptions opts;
  opts.variant = EstimatorVariant::IndependentQ;
  opts.n = 100000;
  opts.master_seed = 20240601;
  std::vector<double> ts{1, 3, 5, 8}, ys;
  for (double t : ts) {
    const auto s = is_estimate(m, c, t, opts);
    const double exact = 0.5 * std::exp(-t);
    ys.push_back(s.mean);
    o.require(std::abs(s.mean - exact) <= 4 * s.std_err,
              "t=" + fmt("%g", t) + " z=" + fmt("%.2f", (s.mean - exact) / s.std_err));
  }
  const auto fit = fit_log_slope(ts, ys);
  o.require(std::abs(fit.slope + 1.0) <= 0.03, "slope=" + fmt("%.4f", fit.slope));
  const double secs = seconds_since(start);
  o.require(secs < 120, fmt("%.1fs", secs));
  return o;
}

Outcome table(const std::string& name) {
  Outcome o;
  const auto start = Clock::now();
  const auto r = reproduce_table(name, preset(name).master_seed, 0);
  for (const auto& row : r.rows) {
    o.require(row.pass(), "t=" + fmt("%g", row.ours.t) + " z=" + fmt("%.2f", row.z_score) +
                              " prop=" + fmt("%.3f", row.ours.summary.prop_nonzero) +
                              " gen=" + fmt("%.2f", row.ours.summary.mean_terminal_gen) + "/" +
                              fmt("%.2f", row.reference.terminal_generation));
  }
  const double secs = seconds_since(start);
  o.require(secs < 300, fmt("%.1fs", secs));
  return o;
}

Outcome h_constants() {
  Outcome o;
  for (const auto& [name, target] : {std::pair{"mm1", 0.2390}, std::pair{"simplex", 2.5180}}) {
    const auto rep = estimate_h_report(preset(name), 0);
    const auto& eq = rep.h_equiv;
    const auto& [m, sp] = rep.h_spine.back();
    o.require(std::abs(eq.value - target) <= 0.1 * target,
              std::string(name) + " H_equiv=" + fmt("%.4f", eq.value) + "+-" + fmt("%.4f", eq.std_err));
    const double se = std::hypot(eq.std_err, sp.std_err);
    o.require(std::abs(eq.value - sp.value) <= 4 * se,
              std::string(name) + " H_spine(m=" + std::to_string(m) + ")=" + fmt("%.4f", sp.value) + "+-" +
                  fmt("%.4f", sp.std_err));
  }
  const auto rep = estimate_h_report(preset("nb_exp"), 0);
  const auto& [m, sp] = rep.h_spine.back();
  o.require(std::abs(sp.value - 0.5) <= 0.025,
            "nb_exp H_spine(m=" + std::to_string(m) + ")=" + fmt("%.4f", sp.value));
  return o;
}

Outcome exact_tilts() {
  Outcome o;
  const TiltContext c = make_context(discrete_pair_model(), 1.0);
  o.require(c.tilted_probs.size() == 2 && c.tilted_probs[0] == 0.5 && c.tilted_probs[1] == 0.5 &&
                c.tilted_table.pmf(0) == 0.5 && c.tilted_table.pmf(1) == 0.5,
            "discrete_pair tilted pmf (" + fmt("%.17g", c.tilted_probs.at(0)) + ", " + fmt("%.17g", c.tilted_probs.at(1)) +
                ")");
  const OffspringLaw n(nlaw::TruncatedPoisson{2.0});
  double worst = 0.0, p = std::exp(-2.0);
  for (int k = 1; k <= 30; ++k) {
    if (k > 1) p *= 2.0 / (k - 1);
    worst = std::max(worst, std::abs(n.size_biased_pmf(k) - p));
  }
  o.require(worst <= 4 * std::numeric_limits<double>::epsilon(), "size-biased Poisson max diff " + fmt("%.2e", worst));
  return o;
}

Outcome change_of_measure() {
  Outcome o;
  const auto start = Clock::now();
  const int draws = 100000;
  const std::vector<double> d_edges{0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
  const std::vector<double> logc_edges{-4.0, -1.5, -0.75, -0.25, 0.25, 1.5};
  for (const auto& [name, m, c] : builtins()) {
    const auto features = [&](const BranchingVector& v) {
      const double d = v.spine_weight_sum(c.alpha);
      std::vector<double> h;
      for (std::size_t k = 0; k + 1 < d_edges.size(); ++k) h.push_back(d >= d_edges[k] && d < d_edges[k + 1]);
      const bool bounded = d < 4.0;
      for (int k = 1; k <= 3; ++k) h.push_back(bounded && v.n == k);
      const double lc = v.weights[0] > 0 ? std::log(v.weights[0]) : -1e300;
      for (std::size_t k = 0; k + 1 < logc_edges.size(); ++k) {
        h.push_back(bounded && lc >= logc_edges[k] && lc < logc_edges[k + 1]);
      }
      return std::make_pair(h, d);
    };
    Rng rt(20240601, 0), rp(20240601, 1);
    std::vector<double> inv_d;
    std::vector<std::vector<double>> tilted, weighted;
    for (int i = 0; i < draws; ++i) {
      const auto [ht, dt] = features(sample_tilted(m, c, rt));
      const auto [hp, dp] = features(sample_p(m, rp));
      inv_d.push_back(1.0 / dt);
      tilted.resize(ht.size());
      weighted.resize(hp.size());
      for (std::size_t k = 0; k < ht.size(); ++k) {
        tilted[k].push_back(ht[k]);
        weighted[k].push_back(hp[k] * dp);
      }
    }
    const auto s = stats::mean_se(inv_d);
    o.require(std::abs(s.mean - 1.0) <= 4 * s.se,
              name + " E~[1/D]=" + fmt("%.4f", s.mean) + "+-" + fmt("%.4f", s.se));
    double worst = 0.0;
    for (std::size_t k = 0; k < tilted.size(); ++k) {
      const auto a = stats::mean_se(tilted[k]);
      const auto b = stats::mean_se(weighted[k]);
      const double se = std::hypot(a.se, b.se);
      if (se > 0) worst = std::max(worst, std::abs(a.mean - b.mean) / se);
      else if (a.mean != b.mean) worst = INFINITY;
    }
    o.require(worst <= 4, name + " reweighting max z=" + fmt("%.2f", worst));
  }
  const double secs = seconds_since(start);
  o.require(secs < 60, fmt("%.1fs", secs));
  return o;
}

Outcome trivial_identity() {
  Outcome o;
  for (const auto& [name, m, c] : builtins()) {
    if (m.q_lower_bound() < 1.0) continue;
    ISOptions opts;
    opts.n = 100000;
    opts.master_seed = 20240601;
    opts.variant = EstimatorVariant::IndependentQ;
    const auto runs = is_replications(m, c, -0.5, opts);
    bool exact = runs.failures.empty();
    for (const auto& r : runs.runs) exact = exact && r.value == 1.0 && !r.discarded;
    o.require(exact, name + " independent_q exact");
    opts.variant = EstimatorVariant::General;
    const auto s = is_estimate(m, c, -0.5, opts);
    o.require(std::abs(s.mean - 1.0) <= 3 * s.std_err,
              name + " general=" + fmt("%.4f", s.mean) + "+-" + fmt("%.4f", s.std_err));
  }
  return o;
}

Outcome relative_error() {
  Outcome o;
  const auto cfg = preset("mm1");
  const auto rows = run_is_grid(cfg, context_for(cfg), 0);
  double lo = INFINITY, hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.summary.rel_err);
    hi = std::max(hi, r.summary.rel_err);
  }
  o.require(hi / lo <= 2.0, "max/min=" + fmt("%.4f", hi) + "/" + fmt("%.4f", lo) + "=" + fmt("%.3f", hi / lo));
  return o;
}

Outcome cl_inequality() {
  Outcome o;
  for (const auto& name : preset_names()) {
    const auto cfg = preset(name);
    const auto q = cfg.model.degenerate_q();
    if (!q || *q != 1.0) continue;
    TiltContext c;
    try {
      c = context_for(cfg);
    } catch (const Error&) {
      continue;
    }
    ISOptions opts;
    opts.variant = cfg.estimator.variant;
    opts.n = cfg.estimator.n;
    opts.master_seed = cfg.master_seed;
    for (const auto& r : cl_bound_check(cfg.model, c, cfg.estimator.t_grid, opts)) {
      o.require(r.pass, name + " t=" + fmt("%g", r.t) + " " + fmt("%.3e", r.estimate) + "<=" + fmt("%.3e", r.bound));
    }
  }
  return o;
}

Outcome oracle_triangle() {
  Outcome o;
  for (const auto& [name, t] : {std::pair{"mm1", 0.5}, std::pair{"nb_exp", 1.0}}) {
    const auto cfg = preset(name);
    const TiltContext c = context_for(cfg);
    ISOptions opts;
    opts.variant = cfg.estimator.variant;
    opts.n = cfg.estimator.n;
    opts.master_seed = cfg.master_seed;
    const auto is = is_estimate(cfg.model, c, t, opts);
    const auto naive = naive_tail(cfg.model, t, cfg.oracle.naive_n, cfg.oracle.naive_depth, cfg.master_seed + 1);
    const auto pool = pool_tail(
        popdyn_pool(cfg.model, cfg.oracle.pool_size, cfg.oracle.pool_iterations, cfg.master_seed + 2), t);
    const std::vector<std::pair<std::string, EstimateSummary>> est{{"is", is}, {"naive", naive}, {"popdyn", pool}};
    for (std::size_t i = 0; i < est.size(); ++i) {
      for (std::size_t j = i + 1; j < est.size(); ++j) {
        const auto& a = est[i].second;
        const auto& b = est[j].second;
        o.require(std::abs(a.mean - b.mean) <= 4 * std::hypot(a.std_err, b.std_err),
                  std::string(name) + " " + est[i].first + "=" + fmt("%.5f", a.mean) + " vs " + est[j].first + "=" +
                      fmt("%.5f", b.mean));
      }
    }
  }
  return o;
}

std::string csv_without_timing(const ExperimentConfig& cfg, unsigned parallelism) {
  std::ostringstream raw;
  write_is_csv(raw, run_is_grid(cfg, context_for(cfg), parallelism));
  std::istringstream in(raw.str());
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    cols.erase(cols.begin() + 5);
    for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k];
    out += "\n";
  }
  return out;
}

Outcome determinism() {
  Outcome o;
  for (const auto* name : {"mm1", "simplex"}) {
    const auto cfg = preset(name);
    const auto a = csv_without_timing(cfg, 1);
    const auto b = csv_without_timing(cfg, 1);
    const auto c = csv_without_timing(cfg, 8);
    const auto d = csv_without_timing(cfg, 8);
    o.require(a == b && b == c && c == d, std::string(name) + " " + std::to_string(a.size()) + " bytes");
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"root and drift", roots},
      {"closed-form N=1 model", closed_form},
      {"mm1 table", [] { return table("mm1"); }},
      {"simplex table", [] { return table("simplex"); }},
      {"H constants", h_constants},
      {"exact tilts", exact_tilts},
      {"change of measure identities", change_of_measure},
      {"trivial estimator identity", trivial_identity},
      {"bounded relative error", relative_error},
      {"Cramer-Lundberg inequality", cl_inequality},
      {"oracle triangle", oracle_triangle},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " ("
              << fmt("%.1fs", seconds_since(start)) << "): " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
