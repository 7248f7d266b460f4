#include "neurodiff/generators.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "neurodiff/error.hpp"

namespace neurodiff {

namespace {

struct Uniform1D {
  double lo, hi;
  std::size_t n;
  Spacing spacing;
};
struct Cube {
  std::vector<double> lows, highs;
  std::size_t n;
};
struct Fixed {
  Tensor points;
};
struct Product {
  Generator a, b;
};
struct Mesh {
  Generator a, b;
};
struct Concat {
  Generator a, b;
};
struct Filter {
  Generator inner;
  Generator::Predicate predicate;
};
struct Transform {
  Generator inner;
  Generator::Map map;
  std::size_t out_dim;
};

}  // namespace

struct Generator::Impl {
  std::variant<Uniform1D, Cube, Fixed, Product, Mesh, Concat, Filter, Transform> kind;
  std::size_t size = 0;
  std::size_t dim = 0;
};

namespace {

Tensor hstack(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), a.cols() + b.cols()});
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
    for (std::size_t c = 0; c < b.cols(); ++c) out(r, a.cols() + c) = b(r, c);
  }
  return out;
}

}  // namespace

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out[n - 1] = hi;
  return out;
}

Generator Generator::uniform1d(double lo, double hi, std::size_t n, Spacing spacing) {
  if (!(lo < hi)) throw Error("uniform1d: require lo < hi, got [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  if (n < 1) throw Error("uniform1d: n must be >= 1");
  return Generator(std::make_shared<const Impl>(Impl{Uniform1D{lo, hi, n, spacing}, n, 1}));
}

Generator Generator::cube(std::vector<double> lows, std::vector<double> highs, std::size_t n) {
  if (lows.size() != highs.size() || lows.empty()) throw Error("cube: lows and highs must have the same nonzero length");
  for (std::size_t d = 0; d < lows.size(); ++d) {
    if (!(lows[d] < highs[d])) throw Error("cube: require lows < highs in dimension " + std::to_string(d));
  }
  if (n < 1) throw Error("cube: n must be >= 1");
  const std::size_t dim = lows.size();
  return Generator(std::make_shared<const Impl>(Impl{Cube{std::move(lows), std::move(highs), n}, n, dim}));
}

Generator Generator::fixed(Tensor points) {
  if (points.rows() < 1 || points.cols() < 1) throw Error("fixed: need at least one point");
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  return Generator(std::make_shared<const Impl>(Impl{Fixed{std::move(points)}, n, dim}));
}

Generator Generator::product(Generator a, Generator b) {
  if (a.size() != b.size())
    throw Error("product: sizes differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  const std::size_t n = a.size();
  const std::size_t dim = a.dim() + b.dim();
  return Generator(std::make_shared<const Impl>(Impl{Product{std::move(a), std::move(b)}, n, dim}));
}

Generator Generator::mesh(Generator a, Generator b) {
  const std::size_t n = a.size() * b.size();
  const std::size_t dim = a.dim() + b.dim();
  return Generator(std::make_shared<const Impl>(Impl{Mesh{std::move(a), std::move(b)}, n, dim}));
}

Generator Generator::concat(Generator a, Generator b) {
  if (a.dim() != b.dim()) throw Error("concat: dimensions differ");
  const std::size_t n = a.size() + b.size();
  const std::size_t dim = a.dim();
  return Generator(std::make_shared<const Impl>(Impl{Concat{std::move(a), std::move(b)}, n, dim}));
}

Generator Generator::filter(Generator inner, Predicate predicate) {
  const std::size_t n = inner.size();
  const std::size_t dim = inner.dim();
  return Generator(std::make_shared<const Impl>(Impl{Filter{std::move(inner), std::move(predicate)}, n, dim}));
}

Generator Generator::transform(Generator inner, Map map, std::size_t out_dim) {
  if (out_dim < 1) throw Error("transform: out_dim must be >= 1");
  const std::size_t n = inner.size();
  return Generator(std::make_shared<const Impl>(Impl{Transform{std::move(inner), std::move(map), out_dim}, n, out_dim}));
}

std::size_t Generator::size() const { return impl_ ? impl_->size : 0; }
std::size_t Generator::dim() const { return impl_ ? impl_->dim : 0; }

Tensor Generator::sample(Rng& rng) const {
  if (!impl_) throw Error("empty generator");
  const Impl& impl = *impl_;
  if (const auto* g = std::get_if<Uniform1D>(&impl.kind)) {
    Tensor out({g->n, 1});
    if (g->spacing == Spacing::uniform_random) {
      for (std::size_t i = 0; i < g->n; ++i) out[i] = rng.uniform(g->lo, g->hi);
      return out;
    }
    const std::vector<double> grid = linspace(g->lo, g->hi, g->n);
    const double half = g->n > 1 ? 0.5 * (g->hi - g->lo) / static_cast<double>(g->n - 1) : 0.5 * (g->hi - g->lo);
    for (std::size_t i = 0; i < g->n; ++i) {
      double v = grid[i];
      if (g->spacing == Spacing::equally_spaced_noisy) v = std::clamp(v + rng.uniform(-half, half), g->lo, g->hi);
      out[i] = v;
    }
    return out;
  }
  if (const auto* g = std::get_if<Cube>(&impl.kind)) {
    const std::size_t dim = g->lows.size();
    Tensor out({g->n, dim});
    for (std::size_t i = 0; i < g->n; ++i)
      for (std::size_t d = 0; d < dim; ++d) out(i, d) = rng.uniform(g->lows[d], g->highs[d]);
    return out;
  }
  if (const auto* g = std::get_if<Fixed>(&impl.kind)) return g->points;
  if (const auto* g = std::get_if<Product>(&impl.kind)) {
    const Tensor a = g->a.sample(rng);
    const Tensor b = g->b.sample(rng);
    return hstack(a, b);
  }
  if (const auto* g = std::get_if<Mesh>(&impl.kind)) {
    const Tensor a = g->a.sample(rng);
    const Tensor b = g->b.sample(rng);
    Tensor out({a.rows() * b.rows(), a.cols() + b.cols()});
    std::size_t row = 0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < b.rows(); ++j, ++row) {
        for (std::size_t c = 0; c < a.cols(); ++c) out(row, c) = a(i, c);
        for (std::size_t c = 0; c < b.cols(); ++c) out(row, a.cols() + c) = b(j, c);
      }
    }
    return out;
  }
  if (const auto* g = std::get_if<Concat>(&impl.kind)) {
    const Tensor a = g->a.sample(rng);
    const Tensor b = g->b.sample(rng);
    std::vector<double> data(a.data().begin(), a.data().end());
    data.insert(data.end(), b.data().begin(), b.data().end());
    return Tensor({a.rows() + b.rows(), a.cols()}, std::move(data));
  }
  if (const auto* g = std::get_if<Filter>(&impl.kind)) {
    const std::size_t want = impl.size;
    const std::size_t dim = impl.dim;
    std::vector<double> kept;
    kept.reserve(want * dim);
    std::size_t count = 0;
    for (int round = 0; round < kMaxFilterRounds && count < want; ++round) {
      const Tensor candidates = g->inner.sample(rng);
      for (std::size_t r = 0; r < candidates.rows() && count < want; ++r) {
        const std::span<const double> point = candidates.data().subspan(r * dim, dim);
        if (g->predicate(point)) {
          kept.insert(kept.end(), point.begin(), point.end());
          ++count;
        }
      }
    }
    if (count == 0)
      throw Error("filter: predicate rejected every point in " + std::to_string(kMaxFilterRounds) + " rounds");
    return Tensor({count, dim}, std::move(kept));
  }
  const auto& g = std::get<Transform>(impl.kind);
  const Tensor in = g.inner.sample(rng);
  Tensor out({in.rows(), g.out_dim});
  for (std::size_t r = 0; r < in.rows(); ++r) {
    g.map(in.data().subspan(r * in.cols(), in.cols()), out.data().subspan(r * g.out_dim, g.out_dim));
  }
  return out;
}

Generator Generator::resized(std::size_t n) const {
  if (!impl_) throw Error("empty generator");
  const Impl& impl = *impl_;
  if (const auto* g = std::get_if<Uniform1D>(&impl.kind)) return uniform1d(g->lo, g->hi, n, g->spacing);
  if (const auto* g = std::get_if<Cube>(&impl.kind)) return cube(g->lows, g->highs, n);
  if (const auto* g = std::get_if<Product>(&impl.kind)) return product(g->a.resized(n), g->b.resized(n));
  if (const auto* g = std::get_if<Filter>(&impl.kind)) return filter(g->inner.resized(n), g->predicate);
  if (const auto* g = std::get_if<Transform>(&impl.kind)) return transform(g->inner.resized(n), g->map, g->out_dim);
  throw Error("resized: fixed, mesh and concat generators have no adjustable size");
}

}  // namespace neurodiff
