#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wbis/config.hpp"
#include "wbis/error.hpp"
#include "wbis/oracle.hpp"

namespace wbis {

/// Shortest decimal that round-trips to the same double; "inf", "-inf", "nan".
std::string format_number(double x);

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitModelMath = 2, kExitStatistical = 3 };
int exit_code_for(const Error& e);

/// solve_alpha, or make_context at cfg.alpha_override.
TiltContext context_for(const ExperimentConfig& cfg);

struct GridRow {
  double t = 0.0;
  EstimateSummary summary;
  double t_over_mu = 0.0;
};

std::vector<GridRow> run_is_grid(const ExperimentConfig& cfg, const TiltContext& ctx, unsigned parallelism);

/// More than 0.1% of the replications at some t hit the node budget.
bool discard_threshold_exceeded(const std::vector<GridRow>& rows);

inline constexpr const char* kIsCsvHeader =
    "t,estimate,std_err,t_over_mu,mean_terminal_generation,time_per_replication_s,prop_nonzero";

void write_is_csv(std::ostream& out, const std::vector<GridRow>& rows);

struct ReferenceRow {
  double t;
  double estimate;
  double std_err;
  double t_over_mu;
  double terminal_generation;
  double time_s;
  double prop_nonzero;
};

struct ReferenceTable {
  double alpha;
  double mu;
  double h;
  std::vector<ReferenceRow> rows;
};

/// Reference values, for comparison only. Names: mm1, simplex.
const ReferenceTable& reference_table(const std::string& name);

struct ReproduceRow {
  GridRow ours;
  ReferenceRow reference;
  double z_score = 0.0;  // |ours - ref| / (SE_ours + SE_ref)
  bool pass_estimate = false;
  bool pass_prop_nonzero = false;
  bool pass_generation = false;
  bool pass() const { return pass_estimate && pass_prop_nonzero && pass_generation; }
};

struct ReproduceResult {
  TiltContext ctx;
  std::vector<ReproduceRow> rows;
  bool all_pass() const;
};

/// Runs the named preset at n = 10000 and gates every row: estimate within
/// 4 (SE_ours + SE_ref), prop_nonzero >= 0.95, mean terminal generation
/// within 0.3 of the reference column. Throws ConfigError for other names.
ReproduceResult reproduce_table(const std::string& name, std::uint64_t master_seed, unsigned parallelism,
                                std::uint64_t n = 10000);

void write_reproduce_csv(std::ostream& out, const ReproduceResult& result);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Least squares of log(y) on t over the points with y > 0.
SlopeFit fit_log_slope(const std::vector<double>& t, const std::vector<double>& y);

struct HReport {
  TiltContext ctx;
  HEstimate h_equiv;
  std::vector<std::pair<unsigned, HEstimate>> h_spine;
  std::vector<GridRow> grid;
  SlopeFit slope;
};

HReport estimate_h_report(const ExperimentConfig& cfg, unsigned parallelism);
void write_h_report(std::ostream& out, const HReport& report);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Fast invariant suite. alpha_override replaces the root of the N = 1 model
/// used by the unbiasedness and bound checks.
std::vector<Check> run_validation(std::optional<double> alpha_override, std::uint64_t master_seed,
                                  unsigned parallelism);

}  // namespace wbis
