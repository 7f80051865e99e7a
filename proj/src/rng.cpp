#include "hybrid/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hybrid {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * kGolden);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  // Lemire's multiply-shift; the bias for n << 2^64 is negligible.
  const unsigned __int128 product =
      static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
  return static_cast<std::uint64_t>(product >> 64);
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform_open_left()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  cached_normal_ = r * std::sin(angle);
  has_cached_normal_ = true;
  return r * std::cos(angle);
}

Eigen::Vector3d RngStream::unit_vector() {
  const double cos_t = 2.0 * uniform() - 1.0;
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  const double phi = 2.0 * std::numbers::pi * uniform();
  return {sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t};
}

RngStream RngStream::substream(std::uint64_t key) const {
  return RngStream(mix64(seed_ ^ mix64(key + kGolden)));
}

RngStream RngStream::substream(std::initializer_list<std::uint64_t> keys) const {
  std::uint64_t s = seed_;
  for (auto k : keys) s = mix64(s ^ mix64(k + kGolden));
  return RngStream(s);
}

}  // namespace hybrid
