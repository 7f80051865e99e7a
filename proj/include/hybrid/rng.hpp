#pragma once

#include <cstdint>
#include <initializer_list>

#include <Eigen/Core>

namespace hybrid {

/// Counter-based SplitMix64 stream.
///
/// A stream is fully determined by its seed and the number of draws taken so
/// far, so identical seeds and call sequences give bit-identical results on
/// every platform. Independent substreams are derived by hashing the parent
/// seed with integer keys (step index, stage, cell index), which
/// keeps per-cell work independent of scheduling order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed), counter_(0) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  /// Raw 64-bit draw.
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform in (0, 1].
  double uniform_open_left() { return 1.0 - uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via Box-Muller (second variate is cached).
  double normal();

  /// Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector();

  /// Child stream keyed by `key`; does not advance this stream.
  RngStream substream(std::uint64_t key) const;
  RngStream substream(std::initializer_list<std::uint64_t> keys) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace hybrid
