#include "neurodiff/network.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "neurodiff/error.hpp"
#include "neurodiff/rng.hpp"

namespace neurodiff {

namespace {

constexpr std::array<char, 8> kMagic = {'N', 'D', 'I', 'F', 'F', 'M', 'L', 'P'};
constexpr std::uint8_t kVersion = 1;
// Guards against absurd allocations when reading a corrupt header.
constexpr std::uint32_t kMaxLayerWidth = 1u << 20;
constexpr std::uint32_t kMaxHiddenLayers = 1024;

}  // namespace

namespace binary_io {

void write_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b, 8);
}

void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

namespace {
void read_bytes(std::istream& in, unsigned char* dst, std::size_t n, std::string_view field) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError("checkpoint truncated while reading field '" + std::string(field) + "'");
  }
}
}  // namespace

std::uint8_t read_u8(std::istream& in, std::string_view field) {
  unsigned char b = 0;
  read_bytes(in, &b, 1, field);
  return b;
}

std::uint32_t read_u32(std::istream& in, std::string_view field) {
  unsigned char b[4];
  read_bytes(in, b, 4, field);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in, std::string_view field) {
  unsigned char b[8];
  read_bytes(in, b, 8, field);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in, std::string_view field) { return std::bit_cast<double>(read_u64(in, field)); }

}  // namespace binary_io

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::sin: return "sin";
    case Activation::softplus: return "softplus";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "sin") return Activation::sin;
  if (name == "softplus") return Activation::softplus;
  throw Error("unknown activation '" + std::string(name) + "' (expected tanh, sin or softplus)");
}

std::vector<std::size_t> MLPSpec::layer_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(hidden_dims.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(output_dim);
  return dims;
}

void MLPSpec::validate() const {
  for (std::size_t d : layer_dims()) {
    if (d < 1) throw Error("MLPSpec: every layer dimension must be >= 1");
  }
}

Var activate(Activation activation, Var x) {
  switch (activation) {
    case Activation::tanh: return tanh(x);
    case Activation::sin: return sin(x);
    case Activation::softplus: return ln(1.0 + exp(x));
  }
  return x;
}

MLP MLP::init(const MLPSpec& spec) {
  spec.validate();
  MLP mlp;
  mlp.spec_ = spec;
  Rng rng(spec.seed);
  const auto dims = spec.layer_dims();
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const std::size_t fan_in = dims[k];
    const std::size_t fan_out = dims[k + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_out, fan_in});
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    mlp.weights_.push_back(std::move(w));
    mlp.biases_.emplace_back(Shape{1, fan_out});
  }
  return mlp;
}

std::size_t MLP::parameter_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t k = 0; k < weights_.size(); ++k) n += weights_[k].size() + biases_[k].size();
  return n;
}

std::vector<Tensor*> MLP::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    out.push_back(&weights_[k]);
    out.push_back(&biases_[k]);
  }
  return out;
}

std::vector<const Tensor*> MLP::parameters() const {
  std::vector<const Tensor*> out;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    out.push_back(&weights_[k]);
    out.push_back(&biases_[k]);
  }
  return out;
}

std::vector<double> MLP::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const Tensor* t : parameters()) out.insert(out.end(), t->data().begin(), t->data().end());
  return out;
}

void MLP::set_flat_parameters(std::span<const double> values) {
  if (values.size() != parameter_count())
    throw Error("set_flat_parameters: expected " + std::to_string(parameter_count()) + " values, got " +
                std::to_string(values.size()));
  std::size_t offset = 0;
  for (Tensor* t : parameters()) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), t->size(), t->data().begin());
    offset += t->size();
  }
}

BoundMLP MLP::bind(Graph& graph, bool requires_grad) const {
  BoundMLP bound;
  bound.mlp = this;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    bound.parameters.push_back(graph.variable(weights_[k], requires_grad));
    bound.parameters.push_back(graph.variable(biases_[k], requires_grad));
  }
  return bound;
}

Var BoundMLP::operator()(Var batch) const {
  const MLPSpec& spec = mlp->spec();
  if (batch.shape().cols != spec.input_dim) {
    throw ShapeError("MLP forward: batch has " + std::to_string(batch.shape().cols) + " columns, network expects " +
                     std::to_string(spec.input_dim));
  }
  const std::size_t layers = parameters.size() / 2;
  const std::size_t n = batch.shape().rows;
  Var h = batch;
  for (std::size_t k = 0; k < layers; ++k) {
    const Var& w = parameters[2 * k];
    const Var& b = parameters[2 * k + 1];
    h = matmul(h, w, false, true) + broadcast(b, {n, b.shape().cols});
    if (k + 1 < layers) h = activate(spec.activation, h);
  }
  return h;
}

Tensor MLP::evaluate(const Tensor& batch) const {
  Graph graph;
  const BoundMLP bound = bind(graph, false);
  return bound(graph.constant(batch)).value();
}

void MLP::write(std::ostream& out) const {
  using namespace binary_io;
  out.write(kMagic.data(), kMagic.size());
  write_u8(out, kVersion);
  write_u8(out, static_cast<std::uint8_t>(spec_.activation));
  write_u32(out, static_cast<std::uint32_t>(spec_.input_dim));
  write_u32(out, static_cast<std::uint32_t>(spec_.hidden_dims.size()));
  for (std::size_t h : spec_.hidden_dims) write_u32(out, static_cast<std::uint32_t>(h));
  write_u32(out, static_cast<std::uint32_t>(spec_.output_dim));
  write_u64(out, spec_.seed);
  write_u64(out, parameter_count());
  for (const Tensor* t : parameters())
    for (double v : t->data()) write_f64(out, v);
}

MLP MLP::read(std::istream& in) {
  using namespace binary_io;
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != static_cast<std::streamsize>(magic.size())) throw FormatError("checkpoint truncated while reading field 'magic'");
  if (magic != kMagic) throw FormatError("checkpoint field 'magic' does not identify a network file");
  const std::uint8_t version = read_u8(in, "version");
  if (version != kVersion) throw FormatError("checkpoint field 'version' is " + std::to_string(version) + ", expected 1");
  const std::uint8_t act = read_u8(in, "activation");
  if (act > 2) throw FormatError("checkpoint field 'activation' has unknown tag " + std::to_string(act));

  MLPSpec spec;
  spec.activation = static_cast<Activation>(act);
  spec.input_dim = read_u32(in, "input_dim");
  if (spec.input_dim < 1 || spec.input_dim > kMaxLayerWidth) throw FormatError("checkpoint field 'input_dim' out of range");
  const std::uint32_t hidden = read_u32(in, "hidden_count");
  if (hidden > kMaxHiddenLayers) throw FormatError("checkpoint field 'hidden_count' out of range");
  spec.hidden_dims.clear();
  for (std::uint32_t i = 0; i < hidden; ++i) {
    const std::string field = "hidden_dims[" + std::to_string(i) + "]";
    const std::uint32_t h = read_u32(in, field);
    if (h < 1 || h > kMaxLayerWidth) throw FormatError("checkpoint field '" + field + "' out of range");
    spec.hidden_dims.push_back(h);
  }
  spec.output_dim = read_u32(in, "output_dim");
  if (spec.output_dim < 1 || spec.output_dim > kMaxLayerWidth) throw FormatError("checkpoint field 'output_dim' out of range");
  spec.seed = read_u64(in, "seed");

  MLP mlp = init(spec);
  const std::uint64_t count = read_u64(in, "parameter_count");
  if (count != mlp.parameter_count()) {
    throw FormatError("checkpoint field 'parameter_count' is " + std::to_string(count) + ", architecture implies " +
                      std::to_string(mlp.parameter_count()));
  }
  std::vector<double> values(count);
  for (std::uint64_t i = 0; i < count; ++i) values[i] = read_f64(in, "parameters");
  mlp.set_flat_parameters(values);
  return mlp;
}

void MLP::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write(out);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

MLP MLP::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return read(in);
}

}  // namespace neurodiff
