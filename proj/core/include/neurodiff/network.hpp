#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "neurodiff/autodiff.hpp"
#include "neurodiff/tensor.hpp"

namespace neurodiff {

enum class Activation : std::uint8_t { tanh = 0, sin = 1, softplus = 2 };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

struct MLPSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims{32, 32};
  std::size_t output_dim = 1;
  Activation activation = Activation::tanh;
  std::uint64_t seed = 0;

  // input_dim, hidden_dims..., output_dim
  std::vector<std::size_t> layer_dims() const;
  void validate() const;

  friend bool operator==(const MLPSpec&, const MLPSpec&) = default;
};

class MLP;

// An MLP whose parameters have been placed on a graph.
struct BoundMLP {
  const MLP* mlp = nullptr;
  // weight0, bias0, weight1, bias1, ...
  std::vector<Var> parameters;

  // batch: N x input_dim  ->  N x output_dim
  Var operator()(Var batch) const;
};

class MLP {
 public:
  // Xavier-uniform weights drawn from Rng(spec.seed); zero biases.
  static MLP init(const MLPSpec& spec);

  const MLPSpec& spec() const noexcept { return spec_; }
  std::size_t num_layers() const noexcept { return weights_.size(); }

  // Layer k weight is (dims[k+1] x dims[k]); bias is (1 x dims[k+1]).
  const Tensor& weight(std::size_t layer) const { return weights_.at(layer); }
  const Tensor& bias(std::size_t layer) const { return biases_.at(layer); }
  Tensor& weight(std::size_t layer) { return weights_.at(layer); }
  Tensor& bias(std::size_t layer) { return biases_.at(layer); }

  std::size_t parameter_count() const noexcept;
  // Parameter tensors in binding order: weight0, bias0, weight1, ...
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);

  BoundMLP bind(Graph& graph, bool requires_grad = true) const;

  // Numeric forward pass without gradient tracking.
  Tensor evaluate(const Tensor& batch) const;

  void save(const std::filesystem::path& path) const;
  static MLP load(const std::filesystem::path& path);
  void write(std::ostream& out) const;
  static MLP read(std::istream& in);

  friend bool operator==(const MLP&, const MLP&) = default;

 private:
  MLPSpec spec_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

Var activate(Activation activation, Var x);

// Little-endian helpers shared by the checkpoint formats.
namespace binary_io {
void write_u8(std::ostream& out, std::uint8_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
std::uint8_t read_u8(std::istream& in, std::string_view field);
std::uint32_t read_u32(std::istream& in, std::string_view field);
std::uint64_t read_u64(std::istream& in, std::string_view field);
double read_f64(std::istream& in, std::string_view field);
}  // namespace binary_io

}  // namespace neurodiff
