#include "neurodiff/bases.hpp"

#include <cmath>
#include <numbers>

#include "neurodiff/error.hpp"

namespace neurodiff {

namespace {

void check_degree(int degree, int cap) {
  if (degree < 0) throw Error("basis degree must be >= 0");
  if (cap > 0 && degree > cap) throw Error("harmonic degree capped at " + std::to_string(cap));
}

template <class T>
T scaled(const T& x, double c) {
  return x * c;
}

// Normalized associated Legendre values Pbar_l^m(cos theta) for 0 <= m <= l <=
// L (m <= 0 only when zonal) by upward recurrence in l, then the real
// harmonics. T is double or Var.
template <class T>
std::vector<T> harmonics(int L, bool zonal, const T& theta, const T& phi) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T x = cos(theta);
  const T s = sin(theta);
  const int m_max = zonal ? 0 : L;
  const double inv_sqrt_4pi = 1.0 / std::sqrt(4.0 * std::numbers::pi);

  // p[m][l - m]
  std::vector<std::vector<T>> p(m_max + 1);
  std::vector<T> diag;
  for (int m = 0; m <= m_max; ++m) {
    T pmm = m == 0 ? T(x * 0.0 + inv_sqrt_4pi)
                   : scaled(diag.back() * s, std::sqrt((2.0 * m + 1.0) / (2.0 * m)));
    diag.push_back(pmm);
    p[m].push_back(pmm);
    if (m + 1 <= L) p[m].push_back(scaled(x * pmm, std::sqrt(2.0 * m + 3.0)));
    for (int l = m + 2; l <= L; ++l) {
      const double ll = l, mm = m;
      const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
      const double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) / (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
      const T& p1 = p[m][l - 1 - m];
      const T& p2 = p[m][l - 2 - m];
      p[m].push_back(scaled(x * p1 - scaled(p2, b), a));
    }
  }

  std::vector<T> out;
  if (zonal) {
    for (int l = 0; l <= L; ++l) out.push_back(p[0][l]);
    return out;
  }
  out.reserve(static_cast<std::size_t>((L + 1) * (L + 1)));
  for (int l = 0; l <= L; ++l) {
    for (int m = -l; m <= l; ++m) {
      const int am = m < 0 ? -m : m;
      const T& leg = p[am][l - am];
      if (m == 0) {
        out.push_back(leg);
      } else if (m > 0) {
        out.push_back(scaled(leg * cos(phi * static_cast<double>(am)), std::numbers::sqrt2));
      } else {
        out.push_back(scaled(leg * sin(phi * static_cast<double>(am)), std::numbers::sqrt2));
      }
    }
  }
  return out;
}

template <class T>
std::vector<T> fourier(int K, const T& phi) {
  using std::cos;
  using std::sin;
  std::vector<T> out;
  out.push_back(phi * 0.0 + 1.0);
  for (int k = 1; k <= K; ++k) {
    out.push_back(cos(phi * static_cast<double>(k)));
    out.push_back(sin(phi * static_cast<double>(k)));
  }
  return out;
}

template <class T>
std::vector<T> evaluate(const Basis& basis, const T& theta, const T& phi) {
  switch (basis.kind) {
    case BasisKind::fourier: return fourier(basis.max_degree, phi);
    case BasisKind::spherical_harmonics: return harmonics(basis.max_degree, false, theta, phi);
    case BasisKind::zonal_harmonics: return harmonics(basis.max_degree, true, theta, phi);
  }
  throw Error("unknown basis kind");
}

}  // namespace

Basis Basis::fourier(int max_degree) {
  check_degree(max_degree, 0);
  return {BasisKind::fourier, max_degree};
}

Basis Basis::spherical_harmonics(int max_degree) {
  check_degree(max_degree, kMaxHarmonicDegree);
  return {BasisKind::spherical_harmonics, max_degree};
}

Basis Basis::zonal_harmonics(int max_degree) {
  check_degree(max_degree, kMaxHarmonicDegree);
  return {BasisKind::zonal_harmonics, max_degree};
}

std::size_t Basis::size() const noexcept {
  const auto d = static_cast<std::size_t>(max_degree);
  switch (kind) {
    case BasisKind::fourier: return 2 * d + 1;
    case BasisKind::spherical_harmonics: return (d + 1) * (d + 1);
    case BasisKind::zonal_harmonics: return d + 1;
  }
  return 0;
}

std::vector<double> evaluate_basis(const Basis& basis, double theta, double phi) {
  return evaluate<double>(basis, theta, phi);
}

std::vector<Var> evaluate_basis(const Basis& basis, Var theta, Var phi) { return evaluate<Var>(basis, theta, phi); }

Var basis_solution(const Basis& basis, Var coefficients, Var theta, Var phi) {
  if (coefficients.shape().cols != basis.size()) {
    throw ShapeError("basis_solution: network has " + std::to_string(coefficients.shape().cols) +
                     " outputs, basis has " + std::to_string(basis.size()) + " members");
  }
  const std::vector<Var> members = evaluate_basis(basis, theta, phi);
  const Var table = concat_cols(members);
  return sum(coefficients * table, Axis::cols);
}

}  // namespace neurodiff
