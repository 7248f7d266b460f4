#pragma once

// Independent reference computations for tests: finite differences, Gauss-
// Legendre quadrature and a radial ODE integrator.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "neurodiff/rng.hpp"
#include "neurodiff/tensor.hpp"

namespace oracle {

inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double second_diff(const std::function<double(double)>& f, double x, double h = 1e-4) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// Gradient of a scalar function of a tensor by central differences.
inline neurodiff::Tensor fd_gradient(const std::function<double(const neurodiff::Tensor&)>& f,
                                     const neurodiff::Tensor& x, double h = 1e-5) {
  neurodiff::Tensor g(x.shape());
  neurodiff::Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// |a - b| <= rel * max(|a|, |b|) + abs_floor
inline bool close(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

inline neurodiff::Tensor random_tensor(neurodiff::Rng& rng, neurodiff::Shape s, double lo = -2.0, double hi = 2.0) {
  neurodiff::Tensor t(s);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline Quadrature gauss_legendre(std::size_t n) {
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.nodes[i] = x;
    q.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

// Solves (1/r^2)(r^2 u')' = rho(r) on [r0, r1] with u(r0) = u0, u(r1) = u1 by
// quadrature: r^2 u'(r) = C + Q(r), Q(r) = int_{r0}^r s^2 rho(s) ds, and u is
// the integral of (C + Q)/r^2 with C fixed by the right boundary. Returns u on
// `n` + 1 equally spaced radii.
struct RadialProfile {
  std::vector<double> r;
  std::vector<double> u;
  double at(double x) const {
    const double h = r[1] - r[0];
    std::size_t i = static_cast<std::size_t>((x - r.front()) / h);
    if (i >= r.size() - 1) i = r.size() - 2;
    const double t = (x - r[i]) / h;
    return (1.0 - t) * u[i] + t * u[i + 1];
  }
};

inline RadialProfile radial_poisson(const std::function<double(double)>& rho, double r0, double r1, double u0,
                                    double u1, std::size_t n = 200000) {
  const double h = (r1 - r0) / static_cast<double>(n);
  std::vector<double> r(n + 1), q(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) r[i] = r0 + h * static_cast<double>(i);
  auto g = [&](double s) { return s * s * rho(s); };
  for (std::size_t i = 1; i <= n; ++i) {
    const double a = r[i - 1], b = r[i];
    q[i] = q[i - 1] + (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
  }
  // u(r) = u0 + C * I1(r) + I2(r), I1 = int 1/s^2, I2 = int Q/s^2 (trapezoid on
  // the fine grid; Q is smooth).
  std::vector<double> i1(n + 1, 0.0), i2(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    i1[i] = 1.0 / r0 - 1.0 / r[i];
    i2[i] = i2[i - 1] + 0.5 * h * (q[i - 1] / (r[i - 1] * r[i - 1]) + q[i] / (r[i] * r[i]));
  }
  const double c = (u1 - u0 - i2[n]) / i1[n];
  RadialProfile out;
  out.r = r;
  out.u.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out.u[i] = u0 + c * i1[i] + i2[i];
  return out;
}

}  // namespace oracle
