#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "neurodiff/tensor.hpp"

namespace neurodiff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct SgdConfig {
  double lr = 1e-3;
  double momentum = 0.0;
};

using OptimizerConfig = std::variant<AdamConfig, SgdConfig>;

class Optimizer {
 public:
  virtual ~Optimizer() = default;

  // params and grads are index-aligned.
  virtual void step(std::span<Tensor* const> params, std::span<const Tensor> grads) = 0;
  virtual double learning_rate() const noexcept = 0;
  virtual void set_learning_rate(double lr) = 0;
  virtual std::string_view name() const noexcept = 0;
  virtual std::unique_ptr<Optimizer> clone() const = 0;

  // Moments and counters, for checkpoints.
  virtual void write(std::ostream& out) const = 0;
  virtual void read(std::istream& in) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config);

}  // namespace neurodiff
