#include "neurodiff/losses.hpp"

#include "neurodiff/error.hpp"

namespace neurodiff {

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::l2: return "l2";
    case LossKind::mse: return "mse";
    case LossKind::l1: return "l1";
    case LossKind::linf: return "linf";
    case LossKind::h1: return "h1";
    case LossKind::semi_h1: return "semi-h1";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "l2") return LossKind::l2;
  if (name == "mse") return LossKind::mse;
  if (name == "l1") return LossKind::l1;
  if (name == "linf") return LossKind::linf;
  if (name == "h1") return LossKind::h1;
  if (name == "semi-h1" || name == "semi_h1") return LossKind::semi_h1;
  throw Error("unknown loss '" + std::string(name) + "' (expected l2, mse, l1, linf, h1 or semi-h1)");
}

namespace {

// sum_d sum_j (dR_j/dx_d)^2 summed over the batch, as a 1x1 node.
Var gradient_energy(const LossSpec& spec, Var residuals, std::span<const Var> coords) {
  if (spec.domain_dims.empty()) throw Error(std::string(to_string(spec.kind)) + " loss needs at least one domain dimension");
  std::vector<Var> wrt;
  for (std::size_t d : spec.domain_dims) {
    if (d >= coords.size())
      throw Error("loss domain dimension " + std::to_string(d) + " out of range for " + std::to_string(coords.size()) +
                  " coordinates");
    wrt.push_back(coords[d]);
  }
  Graph& g = residuals.graph();
  Var total;
  for (std::size_t j = 0; j < residuals.shape().cols; ++j) {
    const std::vector<Var> grads = g.backward(sum(column(residuals, j)), wrt);
    for (const Var& gd : grads) {
      const Var term = sum(square(gd));
      total = total.valid() ? total + term : term;
    }
  }
  return total;
}

}  // namespace

Var loss(const LossSpec& spec, Var residuals, std::span<const Var> coords) {
  const std::size_t n = residuals.shape().rows;
  if (n == 0 || residuals.shape().cols == 0) throw Error("loss of an empty residual batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  switch (spec.kind) {
    case LossKind::mse: return sum(square(residuals)) * inv_n;
    case LossKind::l2: return sqrt(sum(square(residuals)) * inv_n);
    case LossKind::l1: return sum(abs(residuals)) * inv_n;
    case LossKind::linf: return max(abs(residuals));
    case LossKind::semi_h1: return sqrt(gradient_energy(spec, residuals, coords) * inv_n);
    case LossKind::h1: {
      const Var energy = gradient_energy(spec, residuals, coords);
      return sqrt((sum(square(residuals)) + energy) * inv_n);
    }
  }
  throw Error("unknown loss kind");
}

}  // namespace neurodiff
