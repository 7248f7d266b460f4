#pragma once

// Function bases whose members are 2*pi-periodic in the azimuth by
// construction: real Fourier series, real spherical harmonics and zonal
// harmonics.
//
// Spherical harmonics are real, orthonormal on the unit sphere, without the
// Condon-Shortley phase:
//   Y_l0      = Pbar_l^0(cos theta)
//   Y_lm, m>0 = sqrt(2) Pbar_l^m(cos theta) cos(m phi)
//   Y_lm, m<0 = sqrt(2) Pbar_l^|m|(cos theta) sin(|m| phi)
// where Pbar_l^m = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m. Members are ordered
// by index l*l + l + m.

#include <cstddef>
#include <vector>

#include "neurodiff/autodiff.hpp"

namespace neurodiff {

enum class BasisKind { fourier, spherical_harmonics, zonal_harmonics };

struct Basis {
  BasisKind kind = BasisKind::fourier;
  int max_degree = 0;

  static constexpr int kMaxHarmonicDegree = 16;

  // 1, cos(k phi), sin(k phi) for k = 1..K.
  static Basis fourier(int max_degree);
  static Basis spherical_harmonics(int max_degree);
  static Basis zonal_harmonics(int max_degree);

  std::size_t size() const noexcept;
};

// Fourier members ignore theta.
std::vector<double> evaluate_basis(const Basis& basis, double theta, double phi);
// Per-sample columns, differentiable with respect to theta and phi.
std::vector<Var> evaluate_basis(const Basis& basis, Var theta, Var phi);

// sum_j coefficients[:, j] * basis_j(theta, phi). `coefficients` is N x size,
// typically a radial network evaluated at r.
Var basis_solution(const Basis& basis, Var coefficients, Var theta, Var phi);

}  // namespace neurodiff
