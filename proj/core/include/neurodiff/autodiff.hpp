#pragma once

// Define-by-run reverse-mode differentiation over rank-2 tensors.
//
// A Graph is an append-only arena of nodes. Every operation evaluates eagerly
// when it is created, and Graph::backward emits the requested partials as new
// nodes of the same graph, so a gradient can itself be differentiated
// (reverse-over-reverse). This is what lets a residual containing du/dx be
// differentiated again with respect to network parameters.
//
// Broadcasting is never implicit except between a 1x1 scalar and a tensor.
// Row/column expansion goes through broadcast().

#include <cstdint>
#include <functional>
#include <span>
#include <deque>
#include <vector>

#include "neurodiff/tensor.hpp"

namespace neurodiff {

enum class Precision : std::uint8_t { f64, f32 };

// Process-wide storage precision. In f32 mode every computed value is rounded
// to the nearest binary32 after each operation; arithmetic still runs in double.
void set_precision(Precision precision) noexcept;
Precision precision() noexcept;

enum class Op : std::uint8_t {
  constant,
  variable,
  add,
  sub,
  mul,
  div,
  pow,
  neg,
  exp,
  ln,
  sin,
  cos,
  tanh,
  abs,
  sum,
  mean,
  matmul,
  broadcast,
  max,
  slice_cols,
  pad_cols,
  concat_cols,
  // Piecewise-constant helpers; their derivative is zero everywhere.
  sign,
  max_mask,
};

const char* op_name(Op op) noexcept;

// Reduction axis for sum/mean. `rows` collapses the row dimension (NxC -> 1xC).
enum class Axis : std::uint8_t { all, rows, cols };

class Graph;

// Lightweight handle to a node. Valid as long as its Graph is alive.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const;
  double item() const { return value().item(); }

 private:
  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

struct Node {
  Op op = Op::constant;
  bool requires_grad = false;
  Axis axis = Axis::all;
  bool trans_a = false;
  bool trans_b = false;
  double exponent = 0.0;
  std::size_t begin = 0;
  Shape target;
  std::vector<std::uint32_t> inputs;
  Tensor value;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  // Vars hold a pointer to their graph, so a graph never moves.
  Graph(Graph&&) = delete;
  Graph& operator=(Graph&&) = delete;

  Var constant(Tensor value);
  Var constant(double value) { return constant(Tensor::scalar(value)); }
  Var variable(Tensor value, bool requires_grad = true);

  // Replaces the value of a variable node. Dependent nodes keep their stale
  // values until forward() is called.
  void set_value(Var variable, Tensor value);

  // Re-evaluates every ancestor of `node` in creation order and returns its value.
  const Tensor& forward(Var node);

  // One reverse traversal computing d(output)/d(wrt[i]) for every i. The
  // result nodes live in this graph and are differentiable. A wrt node that
  // the output does not depend on yields a constant zero node.
  std::vector<Var> backward(Var output, std::span<const Var> wrt);
  Var backward(Var output, Var wrt);

  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Used by the free-function op builders below.
  Var emit(Node node);

 private:
  // A deque so references returned by Var::value() survive later ops.
  std::deque<Node> nodes_;
};

// ---- op builders ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var pow(Var a, double exponent);
Var neg(Var a);
Var exp(Var a);
Var ln(Var a);
Var sin(Var a);
Var cos(Var a);
Var tanh(Var a);
Var abs(Var a);
Var sqrt(Var a);
Var square(Var a);
Var sum(Var a, Axis axis = Axis::all);
Var mean(Var a, Axis axis = Axis::all);
Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
Var broadcast(Var a, Shape target);
// Reduces a tensor to its largest element (1x1).
Var max(Var a);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var column(Var a, std::size_t index);
Var pad_cols(Var a, std::size_t begin, std::size_t total_cols);
Var concat_cols(std::span<const Var> parts);
Var sign(Var a);
Var max_mask(Var a);

// Sums `a` down to `target`, the adjoint of broadcast().
Var sum_to(Var a, Shape target);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

// d^order u / dx^order for a per-sample column u; samples are treated as
// independent so the sum over the batch is differentiated each round.
Var nth_derivative(Var u, Var x, int order);

// Per-sample derivative of u with respect to each x in one traversal.
std::vector<Var> partials(Var u, std::span<const Var> xs);

struct PassResult {
  Var loss;
  std::vector<Var> parameters;
};

// Builds the loss of one batch on a fresh graph and returns it with the
// parameter variables whose gradients are wanted.
using PassFn = std::function<PassResult(Graph&, const Tensor& batch)>;

struct AccumulatedGradients {
  std::vector<Tensor> gradients;
  // Batch-size weighted mean of the per-pass losses.
  double loss = 0.0;
};

// Runs one forward/backward pass per batch and sums the parameter gradients
// weighted by rows(batch)/total_rows, which equals the gradient of a
// mean-type loss over the concatenated batch. Each pass uses its own graph.
AccumulatedGradients accumulate_gradients(const PassFn& pass, std::span<const Tensor> batches);

}  // namespace neurodiff
