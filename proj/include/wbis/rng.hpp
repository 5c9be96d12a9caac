#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace wbis {

/// Identifies one reproducible random stream: replication i of an experiment
/// seeded with master_seed uses SeedSpec{master_seed, i}.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  SeedSpec with_stream(std::uint64_t id) const { return {master_seed, id}; }
};

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based generator. The key is the master seed; the upper 64 bits of
/// the counter hold the stream id and the lower 64 bits a block index, so
/// streams never overlap and any stream can be constructed directly without
/// touching the others.
///
/// Satisfies UniformRandomBitGenerator, so std:: distributions accept it.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(SeedSpec seed) : seed_(seed) {}
  Rng(std::uint64_t master_seed, std::uint64_t stream_id) : Rng(SeedSpec{master_seed, stream_id}) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Exponential with the given rate (> 0).
  double exponential(double rate);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  const SeedSpec& seed() const { return seed_; }

 private:
  void refill();

  SeedSpec seed_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int available_ = 0;
};

}  // namespace wbis
