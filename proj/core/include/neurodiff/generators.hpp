#pragma once

// Collocation-point samplers. A Generator is an immutable value describing how
// to draw an N x D batch of coordinates; the caller owns the Rng. Generators
// compose: product (*) pairs two batches row by row, mesh (^) takes the full
// cross product and concat (+) stacks them.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "neurodiff/rng.hpp"
#include "neurodiff/tensor.hpp"

namespace neurodiff {

enum class Spacing { equally_spaced, equally_spaced_noisy, uniform_random };

class Generator {
 public:
  using Predicate = std::function<bool(std::span<const double>)>;
  // Writes the mapped point (out_dim values) into the output span.
  using Map = std::function<void(std::span<const double>, std::span<double>)>;

  // Rounds of resampling a filter performs before giving up.
  static constexpr int kMaxFilterRounds = 100;

  // Empty generator: size and dim 0, sampling throws.
  Generator() = default;

  static Generator uniform1d(double lo, double hi, std::size_t n, Spacing spacing = Spacing::uniform_random);
  static Generator cube(std::vector<double> lows, std::vector<double> highs, std::size_t n);
  static Generator fixed(Tensor points);
  static Generator product(Generator a, Generator b);
  static Generator mesh(Generator a, Generator b);
  static Generator concat(Generator a, Generator b);
  // Keeps points satisfying `predicate`, resampling until `inner.size()`
  // points are collected. After kMaxFilterRounds it returns what it has, or
  // throws if nothing was accepted.
  static Generator filter(Generator inner, Predicate predicate);
  static Generator transform(Generator inner, Map map, std::size_t out_dim);

  Tensor sample(Rng& rng) const;

  std::size_t size() const;
  std::size_t dim() const;

  // Same generator with batch size n. Supported for uniform1d, cube, product
  // (both sides), filter and transform; fixed, mesh and concat throw.
  Generator resized(std::size_t n) const;

  struct Impl;

 private:
  explicit Generator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

inline Generator operator*(Generator a, Generator b) { return Generator::product(std::move(a), std::move(b)); }
inline Generator operator^(Generator a, Generator b) { return Generator::mesh(std::move(a), std::move(b)); }
inline Generator operator+(Generator a, Generator b) { return Generator::concat(std::move(a), std::move(b)); }

// Evenly spaced values lo..hi inclusive (lo alone when n == 1).
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace neurodiff
