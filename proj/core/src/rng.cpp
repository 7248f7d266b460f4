#include "neurodiff/rng.hpp"

#include <cmath>
#include <numbers>

namespace neurodiff {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) noexcept : key_(mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

Rng Rng::from_state(std::uint64_t key, std::uint64_t counter) noexcept {
  Rng r;
  r.key_ = key;
  r.counter_ = counter;
  return r;
}

std::uint64_t Rng::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() noexcept {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::split(std::uint64_t stream_id) const noexcept {
  return from_state(mix64(key_ ^ mix64(stream_id + kGamma)), 0);
}

}  // namespace neurodiff
