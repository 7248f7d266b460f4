#include "neurodiff/optim.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "neurodiff/error.hpp"
#include "neurodiff/network.hpp"

namespace neurodiff {

namespace {

void check_aligned(std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) throw Error("optimizer: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!(params[i]->shape() == grads[i].shape()))
      throw ShapeError("optimizer: gradient " + std::to_string(i) + " has shape " + to_string(grads[i].shape()) +
                       ", parameter has " + to_string(params[i]->shape()));
  }
}

void write_tensors(std::ostream& out, const std::vector<Tensor>& ts) {
  binary_io::write_u64(out, ts.size());
  for (const Tensor& t : ts) {
    binary_io::write_u64(out, t.rows());
    binary_io::write_u64(out, t.cols());
    for (double v : t.data()) binary_io::write_f64(out, v);
  }
}

std::vector<Tensor> read_tensors(std::istream& in, std::string_view field) {
  const std::uint64_t n = binary_io::read_u64(in, field);
  if (n > (1u << 20)) throw FormatError("checkpoint field '" + std::string(field) + "' count out of range");
  std::vector<Tensor> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t r = binary_io::read_u64(in, field);
    const std::uint64_t c = binary_io::read_u64(in, field);
    if (r > (1u << 24) || c > (1u << 24)) throw FormatError("checkpoint field '" + std::string(field) + "' shape out of range");
    Tensor t({r, c});
    for (double& v : t.data()) v = binary_io::read_f64(in, field);
    out.push_back(std::move(t));
  }
  return out;
}

class Adam final : public Optimizer {
 public:
  explicit Adam(AdamConfig c) : config_(c) {}

  void step(std::span<Tensor* const> params, std::span<const Tensor> grads) override {
    check_aligned(params, grads);
    if (m_.empty()) {
      for (const Tensor& g : grads) {
        m_.emplace_back(g.shape());
        v_.emplace_back(g.shape());
      }
    }
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->data();
      const auto g = grads[i].data();
      auto m = m_[i].data();
      auto v = v_[i].data();
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = b1 * m[k] + (1.0 - b1) * g[k];
        v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
        const double mhat = m[k] / c1;
        const double vhat = v[k] / c2;
        p[k] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
    }
  }

  double learning_rate() const noexcept override { return config_.lr; }
  void set_learning_rate(double lr) override {
    if (!(lr > 0.0)) throw Error("learning rate must be positive");
    config_.lr = lr;
  }
  std::string_view name() const noexcept override { return "adam"; }
  std::unique_ptr<Optimizer> clone() const override { return std::make_unique<Adam>(*this); }

  void write(std::ostream& out) const override {
    binary_io::write_u64(out, t_);
    binary_io::write_f64(out, config_.lr);
    write_tensors(out, m_);
    write_tensors(out, v_);
  }

  void read(std::istream& in) override {
    t_ = binary_io::read_u64(in, "adam.step");
    config_.lr = binary_io::read_f64(in, "adam.lr");
    m_ = read_tensors(in, "adam.m");
    v_ = read_tensors(in, "adam.v");
  }

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(SgdConfig c) : config_(c) {}

  void step(std::span<Tensor* const> params, std::span<const Tensor> grads) override {
    check_aligned(params, grads);
    if (velocity_.empty()) {
      for (const Tensor& g : grads) velocity_.emplace_back(g.shape());
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->data();
      const auto g = grads[i].data();
      auto vel = velocity_[i].data();
      for (std::size_t k = 0; k < p.size(); ++k) {
        vel[k] = config_.momentum * vel[k] + g[k];
        p[k] -= config_.lr * vel[k];
      }
    }
  }

  double learning_rate() const noexcept override { return config_.lr; }
  void set_learning_rate(double lr) override {
    if (!(lr > 0.0)) throw Error("learning rate must be positive");
    config_.lr = lr;
  }
  std::string_view name() const noexcept override { return "sgd"; }
  std::unique_ptr<Optimizer> clone() const override { return std::make_unique<Sgd>(*this); }

  void write(std::ostream& out) const override {
    binary_io::write_f64(out, config_.lr);
    write_tensors(out, velocity_);
  }
  void read(std::istream& in) override {
    config_.lr = binary_io::read_f64(in, "sgd.lr");
    velocity_ = read_tensors(in, "sgd.velocity");
  }

 private:
  SgdConfig config_;
  std::vector<Tensor> velocity_;
};

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config) {
  if (const auto* a = std::get_if<AdamConfig>(&config)) {
    if (!(a->lr > 0.0)) throw Error("adam: learning rate must be positive");
    return std::make_unique<Adam>(*a);
  }
  const auto& s = std::get<SgdConfig>(config);
  if (!(s.lr > 0.0)) throw Error("sgd: learning rate must be positive");
  return std::make_unique<Sgd>(s);
}

}  // namespace neurodiff
