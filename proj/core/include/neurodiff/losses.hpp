#pragma once

// Residual loss functionals. For a residual batch R (N x m, one column per
// equation) with ||.|| the Euclidean norm over equations:
//   mse     = mean_i ||R_i||^2
//   l2      = sqrt(mse)                       (Monte-Carlo L2 norm, volume factor dropped)
//   l1      = mean_i sum_j |R_ij|
//   linf    = max_ij |R_ij|
//   semi_h1 = sqrt(mean_i sum_d ||dR_i/dx_d||^2)
//   h1      = sqrt(mse + semi_h1^2)
// The H1 variants differentiate the residual with respect to the coordinates
// listed in LossSpec::domain_dims.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neurodiff/autodiff.hpp"

namespace neurodiff {

enum class LossKind { l2, mse, l1, linf, h1, semi_h1 };

std::string_view to_string(LossKind kind) noexcept;
LossKind parse_loss_kind(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::mse;
  // Indices into the coordinate list passed to loss().
  std::vector<std::size_t> domain_dims;

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

Var loss(const LossSpec& spec, Var residuals, std::span<const Var> coords = {});

}  // namespace neurodiff
