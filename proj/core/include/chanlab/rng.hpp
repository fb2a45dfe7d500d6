#pragma once

#include <cstdint>

namespace chanlab {

/// Counter-based pseudo-random source (Philox4x32-10).
///
/// A generator is identified by a 64-bit seed (the cipher key) and a 64-bit
/// stream id (the high counter words). Distinct (seed, stream) pairs produce
/// statistically independent sequences, so parallel jobs can draw from
/// disjoint streams of one master seed without coordination, and a sequence
/// is fully reproducible from its (seed, stream) pair.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in (0, 1].
  double uniform();

  /// Uniform double in (-1, 1].
  double uniform_signed();

  /// Standard normal deviate via the Marsaglia polar transform.
  double gaussian();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint32_t key_[2];
  std::uint32_t ctr_[2];  // 64-bit block counter, little end first
  std::uint32_t buf_[4];
  int pos_;
  double gauss_cache_;
  bool has_gauss_cache_;
};

/// Deterministic seed mixer (splitmix64 finalizer) for deriving
/// sub-seeds such as hash(master_seed, job_index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace chanlab
