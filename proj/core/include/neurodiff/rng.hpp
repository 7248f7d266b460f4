#pragma once

#include <cstdint>
#include <limits>

namespace neurodiff {

// Counter-based SplitMix64 stream. The i-th output of a stream with key k is
// mix64(k + i * 0x9E3779B97F4A7C15), mix64 being the SplitMix64 finalizer, so a
// stream is fully described by (key, counter) and can be split into
// independent children by re-keying. Streams are reproducible per seed; no
// std:: distribution is used so results do not depend on the standard library.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;
  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller; consumes two outputs per call.
  double normal() noexcept;

  // Child stream that does not overlap this one; does not advance this stream.
  Rng split(std::uint64_t stream_id) const noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }
  static Rng from_state(std::uint64_t key, std::uint64_t counter) noexcept;

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace neurodiff
