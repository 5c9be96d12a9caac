#include "wbis/replication.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "wbis/error.hpp"

namespace wbis {

void RunningMoments::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningMoments::variance() const { return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1); }

double RunningMoments::std_err() const {
  return n_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

unsigned resolve_parallelism(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

ReplicationResult replicate(std::uint64_t n, std::uint64_t master_seed, unsigned parallelism,
                            const std::function<RunRecord(std::uint64_t, Rng&)>& fn) {
  ReplicationResult result;
  result.runs.resize(n);
  std::vector<std::optional<std::string>> errors(n);
  std::atomic<std::uint64_t> next{0};

  const auto worker = [&] {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      Rng rng(master_seed, i);
      try {
        result.runs[i] = fn(i, rng);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  const unsigned workers = static_cast<unsigned>(
      std::min<std::uint64_t>(resolve_parallelism(parallelism), std::max<std::uint64_t>(n, 1)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<RunRecord> kept;
  kept.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (errors[i]) {
      result.failures.push_back({i, *errors[i]});
    } else {
      kept.push_back(result.runs[i]);
    }
  }
  result.runs = std::move(kept);
  return result;
}

EstimateSummary aggregate(const ReplicationResult& result) {
  EstimateSummary s;
  s.failed = result.failures.size();
  RunningMoments value, gen, tau, time;
  std::uint64_t nonzero = 0;
  for (const auto& r : result.runs) {
    if (r.discarded) {
      ++s.discarded;
      continue;
    }
    value.add(r.value);
    gen.add(r.terminal_generation);
    tau.add(r.tau);
    time.add(r.elapsed_s);
    if (r.value != 0.0) ++nonzero;
  }
  if (value.count() == 0) throw Error(ErrorCode::EmptySample, "no replications left to aggregate");
  s.n = value.count();
  s.mean = value.mean();
  s.std_err = value.std_err();
  s.rel_err_defined = s.mean != 0.0;
  s.rel_err = s.rel_err_defined ? s.std_err / std::abs(s.mean) : 0.0;
  s.prop_nonzero = static_cast<double>(nonzero) / static_cast<double>(s.n);
  s.mean_terminal_gen = gen.mean();
  s.mean_tau = tau.mean();
  s.mean_time_s = time.mean();
  return s;
}

}  // namespace wbis
