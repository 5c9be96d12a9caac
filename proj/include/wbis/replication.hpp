#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wbis/rng.hpp"

namespace wbis {

/// Result of one independent replication.
struct RunRecord {
  double value = 0.0;
  bool discarded = false;  // budget exhausted; excluded from the estimate
  double terminal_generation = 0.0;
  double tau = 0.0;
  double elapsed_s = 0.0;
};

struct RunFailure {
  std::uint64_t index = 0;
  std::string message;
};

struct ReplicationResult {
  std::vector<RunRecord> runs;  // in replication order
  std::vector<RunFailure> failures;
};

/// Runs fn(i, rng_i) for i = 0 .. n-1 where rng_i is the Philox stream
/// (master_seed, i). Results are merged by index, so the output does not
/// depend on parallelism. Exceptions are recorded per index.
ReplicationResult replicate(std::uint64_t n, std::uint64_t master_seed, unsigned parallelism,
                            const std::function<RunRecord(std::uint64_t, Rng&)>& fn);

struct EstimateSummary {
  std::uint64_t n = 0;  // runs entering the estimate
  double mean = 0.0;
  double std_err = 0.0;
  double rel_err = 0.0;
  bool rel_err_defined = false;
  double prop_nonzero = 0.0;
  double mean_terminal_gen = 0.0;
  double mean_tau = 0.0;
  double mean_time_s = 0.0;
  std::uint64_t discarded = 0;
  std::uint64_t failed = 0;
};

/// Welford aggregation of the non-discarded runs. Throws EmptySample when
/// nothing is left.
EstimateSummary aggregate(const ReplicationResult& result);

/// Welford accumulator.
class RunningMoments {
 public:
  void add(double x);
  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two points.
  double variance() const;
  double std_err() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Worker count to use for a requested parallelism (0 = hardware).
unsigned resolve_parallelism(unsigned requested);

}  // namespace wbis
