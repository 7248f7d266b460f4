#include "neurodiff/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "neurodiff/error.hpp"

namespace neurodiff {
namespace {

std::atomic<Precision> g_precision{Precision::f64};

void round_to_precision(Tensor& t) {
  if (g_precision.load(std::memory_order_relaxed) != Precision::f32) return;
  for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

std::string mismatch(Op op, const Shape& a, const Shape& b) {
  return std::string(op_name(op)) + ": shape mismatch " + to_string(a) + " vs " + to_string(b);
}

Shape broadcast_shape(Op op, const Shape& a, const Shape& b) {
  if (a == b) return a;
  if (a.is_scalar()) return b;
  if (b.is_scalar()) return a;
  throw ShapeError(mismatch(op, a, b));
}

template <typename F>
Tensor binary(const Tensor& a, const Tensor& b, const Shape& out_shape, F f) {
  Tensor out(out_shape);
  auto o = out.data();
  const auto x = a.data();
  const auto y = b.data();
  if (x.size() == y.size()) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(x[i], y[i]);
  } else if (x.size() == 1) {
    const double s = x[0];
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(s, y[i]);
  } else {
    const double s = y[0];
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(x[i], s);
  }
  return out;
}

template <typename F>
Tensor unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  auto o = out.data();
  const auto x = a.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(x[i]);
  return out;
}

Shape matmul_shape(const Shape& a, const Shape& b, bool ta, bool tb) {
  const std::size_t m = ta ? a.cols : a.rows;
  const std::size_t ka = ta ? a.rows : a.cols;
  const std::size_t kb = tb ? b.cols : b.rows;
  const std::size_t n = tb ? b.rows : b.cols;
  if (ka != kb) throw ShapeError(mismatch(Op::matmul, a, b) + (ta ? " (a transposed)" : "") + (tb ? " (b transposed)" : ""));
  return {m, n};
}

Tensor matmul_value(const Tensor& a, const Tensor& b, bool ta, bool tb) {
  const Shape s = matmul_shape(a.shape(), b.shape(), ta, tb);
  const std::size_t m = s.rows;
  const std::size_t n = s.cols;
  const std::size_t k = ta ? a.rows() : a.cols();
  Tensor out(s);
  double* c = out.data().data();
  const double* x = a.data().data();
  const double* y = b.data().data();
  const std::size_t lda = a.cols();
  const std::size_t ldb = b.cols();
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = x[i * lda + p];
        const double* bp = y + p * ldb;
        for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
      }
    }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = x + i * lda;
      for (std::size_t j = 0; j < n; ++j) {
        const double* bj = y + j * ldb;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
        c[i * n + j] = acc;
      }
    }
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* ap = x + p * lda;
      const double* bp = y + p * ldb;
      for (std::size_t i = 0; i < m; ++i) {
        const double api = ap[i];
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += x[p * lda + i] * y[j * ldb + p];
        c[i * n + j] = acc;
      }
    }
  }
  return out;
}

Shape reduced_shape(const Shape& s, Axis axis) {
  switch (axis) {
    case Axis::all: return {1, 1};
    case Axis::rows: return {1, s.cols};
    case Axis::cols: return {s.rows, 1};
  }
  return {1, 1};
}

Tensor reduce_sum(const Tensor& a, Axis axis) {
  Tensor out(reduced_shape(a.shape(), axis));
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  switch (axis) {
    case Axis::all: {
      double acc = 0.0;
      for (double v : a.data()) acc += v;
      out[0] = acc;
      break;
    }
    case Axis::rows:
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c] += a(r, c);
      break;
    case Axis::cols:
      for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += a(r, c);
        out[r] = acc;
      }
      break;
  }
  return out;
}

std::size_t reduced_count(const Shape& s, Axis axis) {
  switch (axis) {
    case Axis::all: return s.size();
    case Axis::rows: return s.rows;
    case Axis::cols: return s.cols;
  }
  return 1;
}

void check_broadcastable(const Shape& from, const Shape& to) {
  const bool ok = from == to || from.is_scalar() || (from.rows == 1 && from.cols == to.cols) ||
                  (from.cols == 1 && from.rows == to.rows);
  if (!ok) throw ShapeError("broadcast: cannot expand " + to_string(from) + " to " + to_string(to));
}

Tensor broadcast_value(const Tensor& a, const Shape& to) {
  check_broadcastable(a.shape(), to);
  Tensor out(to);
  const bool row_vec = a.rows() == 1;
  const bool col_vec = a.cols() == 1;
  for (std::size_t r = 0; r < to.rows; ++r)
    for (std::size_t c = 0; c < to.cols; ++c) out(r, c) = a(row_vec ? 0 : r, col_vec ? 0 : c);
  return out;
}

// Index of the unique largest element, or npos when the maximum is attained
// more than once (the subgradient is then taken as zero).
std::size_t unique_argmax(const Tensor& a) {
  const auto d = a.data();
  std::size_t best = 0;
  bool tied = false;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] > d[best]) {
      best = i;
      tied = false;
    } else if (d[i] == d[best]) {
      tied = true;
    }
  }
  return tied ? static_cast<std::size_t>(-1) : best;
}

Tensor compute(const Node& n, const std::deque<Node>& nodes) {
  auto in = [&](std::size_t i) -> const Tensor& { return nodes[n.inputs[i]].value; };
  switch (n.op) {
    case Op::constant:
    case Op::variable: return n.value;
    case Op::add: {
      const Shape s = broadcast_shape(n.op, in(0).shape(), in(1).shape());
      return binary(in(0), in(1), s, [](double x, double y) { return x + y; });
    }
    case Op::sub: {
      const Shape s = broadcast_shape(n.op, in(0).shape(), in(1).shape());
      return binary(in(0), in(1), s, [](double x, double y) { return x - y; });
    }
    case Op::mul: {
      const Shape s = broadcast_shape(n.op, in(0).shape(), in(1).shape());
      return binary(in(0), in(1), s, [](double x, double y) { return x * y; });
    }
    case Op::div: {
      const Shape s = broadcast_shape(n.op, in(0).shape(), in(1).shape());
      return binary(in(0), in(1), s, [](double x, double y) { return x / y; });
    }
    case Op::pow: {
      const double p = n.exponent;
      if (p == 2.0) return unary(in(0), [](double x) { return x * x; });
      return unary(in(0), [p](double x) { return std::pow(x, p); });
    }
    case Op::neg: return unary(in(0), [](double x) { return -x; });
    case Op::exp: return unary(in(0), [](double x) { return std::exp(x); });
    case Op::ln: return unary(in(0), [](double x) { return std::log(x); });
    case Op::sin: return unary(in(0), [](double x) { return std::sin(x); });
    case Op::cos: return unary(in(0), [](double x) { return std::cos(x); });
    case Op::tanh: return unary(in(0), [](double x) { return std::tanh(x); });
    case Op::abs: return unary(in(0), [](double x) { return std::abs(x); });
    case Op::sign: return unary(in(0), [](double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); });
    case Op::sum: return reduce_sum(in(0), n.axis);
    case Op::mean: {
      Tensor out = reduce_sum(in(0), n.axis);
      const double count = static_cast<double>(reduced_count(in(0).shape(), n.axis));
      for (double& v : out.data()) v /= count;
      return out;
    }
    case Op::matmul: return matmul_value(in(0), in(1), n.trans_a, n.trans_b);
    case Op::broadcast: return broadcast_value(in(0), n.target);
    case Op::max: {
      const auto d = in(0).data();
      if (d.empty()) throw ShapeError("max of empty tensor");
      return Tensor::scalar(*std::max_element(d.begin(), d.end()));
    }
    case Op::max_mask: {
      Tensor out(in(0).shape());
      const std::size_t idx = unique_argmax(in(0));
      if (idx != static_cast<std::size_t>(-1)) out[idx] = 1.0;
      return out;
    }
    case Op::slice_cols: {
      const Tensor& a = in(0);
      const std::size_t count = n.target.cols;
      if (n.begin + count > a.cols())
        throw ShapeError("slice_cols: columns [" + std::to_string(n.begin) + ", " + std::to_string(n.begin + count) +
                         ") out of range for " + to_string(a.shape()));
      Tensor out({a.rows(), count});
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < count; ++c) out(r, c) = a(r, n.begin + c);
      return out;
    }
    case Op::pad_cols: {
      const Tensor& a = in(0);
      if (n.begin + a.cols() > n.target.cols)
        throw ShapeError("pad_cols: " + to_string(a.shape()) + " at column " + std::to_string(n.begin) +
                         " does not fit in " + std::to_string(n.target.cols) + " columns");
      Tensor out({a.rows(), n.target.cols});
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(r, n.begin + c) = a(r, c);
      return out;
    }
    case Op::concat_cols: {
      const std::size_t rows = in(0).rows();
      std::size_t cols = 0;
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        if (in(i).rows() != rows) throw ShapeError(mismatch(n.op, in(0).shape(), in(i).shape()));
        cols += in(i).cols();
      }
      Tensor out({rows, cols});
      std::size_t offset = 0;
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        const Tensor& part = in(i);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < part.cols(); ++c) out(r, offset + c) = part(r, c);
        offset += part.cols();
      }
      return out;
    }
  }
  throw Error("unknown op");
}

bool is_leaf(Op op) { return op == Op::constant || op == Op::variable; }

bool has_zero_derivative(Op op) { return op == Op::sign || op == Op::max_mask; }

Graph& common_graph(Var a, Var b) {
  if (!a.valid() || !b.valid()) throw Error("operation on an empty Var");
  if (&a.graph() != &b.graph()) throw Error("operands belong to different graphs");
  return a.graph();
}

Var make_unary(Op op, Var a) {
  Node n;
  n.op = op;
  n.inputs = {a.id()};
  return a.graph().emit(std::move(n));
}

Var make_binary(Op op, Var a, Var b) {
  Graph& g = common_graph(a, b);
  Node n;
  n.op = op;
  n.inputs = {a.id(), b.id()};
  return g.emit(std::move(n));
}

}  // namespace

void set_precision(Precision p) noexcept { g_precision.store(p, std::memory_order_relaxed); }
Precision precision() noexcept { return g_precision.load(std::memory_order_relaxed); }

const char* op_name(Op op) noexcept {
  switch (op) {
    case Op::constant: return "constant";
    case Op::variable: return "variable";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::pow: return "pow";
    case Op::neg: return "neg";
    case Op::exp: return "exp";
    case Op::ln: return "ln";
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::tanh: return "tanh";
    case Op::abs: return "abs";
    case Op::sum: return "sum";
    case Op::mean: return "mean";
    case Op::matmul: return "matmul";
    case Op::broadcast: return "broadcast";
    case Op::max: return "max";
    case Op::slice_cols: return "slice_cols";
    case Op::pad_cols: return "pad_cols";
    case Op::concat_cols: return "concat_cols";
    case Op::sign: return "sign";
    case Op::max_mask: return "max_mask";
  }
  return "?";
}

const Tensor& Var::value() const { return graph_->node(id_).value; }
const Shape& Var::shape() const { return graph_->node(id_).value.shape(); }

Var Graph::emit(Node node) {
  bool requires_grad = false;
  for (auto id : node.inputs) {
    if (id >= nodes_.size()) throw Error("input node does not belong to this graph");
    requires_grad = requires_grad || nodes_[id].requires_grad;
  }
  if (!is_leaf(node.op)) {
    node.value = compute(node, nodes_);
    node.requires_grad = requires_grad && !has_zero_derivative(node.op);
  }
  round_to_precision(node.value);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::constant(Tensor value) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(value);
  return emit(std::move(n));
}

Var Graph::variable(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::variable;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return emit(std::move(n));
}

void Graph::set_value(Var variable, Tensor value) {
  Node& n = nodes_.at(variable.id());
  if (n.op != Op::variable) throw Error("set_value on a non-variable node");
  if (!(n.value.shape() == value.shape()))
    throw ShapeError("set_value: shape mismatch " + to_string(n.value.shape()) + " vs " + to_string(value.shape()));
  n.value = std::move(value);
  round_to_precision(n.value);
}

const Tensor& Graph::forward(Var node) {
  const std::uint32_t target = node.id();
  std::vector<char> needed(target + 1, 0);
  needed[target] = 1;
  for (std::uint32_t i = target + 1; i-- > 0;) {
    if (!needed[i]) continue;
    for (auto in : nodes_[i].inputs) needed[in] = 1;
  }
  for (std::uint32_t i = 0; i <= target; ++i) {
    if (!needed[i] || is_leaf(nodes_[i].op)) continue;
    Tensor v = compute(nodes_[i], nodes_);
    round_to_precision(v);
    nodes_[i].value = std::move(v);
  }
  return nodes_[target].value;
}

Var Graph::backward(Var output, Var wrt) {
  const Var list[] = {wrt};
  return backward(output, list).front();
}

std::vector<Var> Graph::backward(Var output, std::span<const Var> wrt) {
  if (&output.graph() != this) throw Error("backward: output belongs to another graph");
  if (!output.shape().is_scalar())
    throw ShapeError("backward: output must be 1x1, got " + to_string(output.shape()) + "; reduce with sum() first");
  const std::uint32_t out_id = output.id();

  std::vector<char> reach(out_id + 1, 0);
  for (const Var& w : wrt) {
    if (&w.graph() != this) throw Error("backward: wrt node belongs to another graph");
    if (!nodes_[w.id()].requires_grad) throw Error("backward: wrt node does not require grad");
    if (w.id() <= out_id) reach[w.id()] = 1;
  }
  for (std::uint32_t i = 0; i <= out_id; ++i) {
    if (reach[i] || !nodes_[i].requires_grad) continue;
    for (auto in : nodes_[i].inputs) {
      if (reach[in]) {
        reach[i] = 1;
        break;
      }
    }
  }

  constexpr std::int64_t none = -1;
  std::vector<std::int64_t> adjoint(out_id + 1, none);
  if (reach[out_id]) adjoint[out_id] = constant(1.0).id();

  auto accumulate = [&](std::uint32_t target, Var contribution) {
    if (!(contribution.shape() == nodes_[target].value.shape()))
      contribution = sum_to(contribution, nodes_[target].value.shape());
    if (adjoint[target] == none) {
      adjoint[target] = contribution.id();
    } else {
      adjoint[target] = add(Var(this, static_cast<std::uint32_t>(adjoint[target])), contribution).id();
    }
  };

  for (std::uint32_t i = out_id + 1; i-- > 0;) {
    if (adjoint[i] == none || !reach[i]) continue;
    const Op op = nodes_[i].op;
    if (is_leaf(op) || has_zero_derivative(op)) continue;
    const std::vector<std::uint32_t> inputs = nodes_[i].inputs;
    const Axis axis = nodes_[i].axis;
    const bool ta = nodes_[i].trans_a;
    const bool tb = nodes_[i].trans_b;
    const double p = nodes_[i].exponent;
    const std::size_t begin = nodes_[i].begin;
    const Var g(this, static_cast<std::uint32_t>(adjoint[i]));
    const Var self(this, i);
    auto input = [&](std::size_t k) { return Var(this, inputs[k]); };
    auto wants = [&](std::size_t k) { return reach[inputs[k]] != 0; };

    switch (op) {
      case Op::add:
        if (wants(0)) accumulate(inputs[0], g);
        if (wants(1)) accumulate(inputs[1], g);
        break;
      case Op::sub:
        if (wants(0)) accumulate(inputs[0], g);
        if (wants(1)) accumulate(inputs[1], neg(g));
        break;
      case Op::mul:
        if (wants(0)) accumulate(inputs[0], mul(g, input(1)));
        if (wants(1)) accumulate(inputs[1], mul(g, input(0)));
        break;
      case Op::div:
        if (wants(0)) accumulate(inputs[0], div(g, input(1)));
        if (wants(1)) accumulate(inputs[1], neg(div(mul(g, self), input(1))));
        break;
      case Op::pow:
        accumulate(inputs[0], mul(g, mul(constant(p), pow(input(0), p - 1.0))));
        break;
      case Op::neg: accumulate(inputs[0], neg(g)); break;
      case Op::exp: accumulate(inputs[0], mul(g, self)); break;
      case Op::ln: accumulate(inputs[0], div(g, input(0))); break;
      case Op::sin: accumulate(inputs[0], mul(g, cos(input(0)))); break;
      case Op::cos: accumulate(inputs[0], neg(mul(g, sin(input(0))))); break;
      case Op::tanh: accumulate(inputs[0], mul(g, sub(constant(1.0), square(self)))); break;
      case Op::abs: accumulate(inputs[0], mul(g, sign(input(0)))); break;
      case Op::sum: accumulate(inputs[0], broadcast(g, nodes_[inputs[0]].value.shape())); break;
      case Op::mean: {
        const Shape s = nodes_[inputs[0]].value.shape();
        const double count = static_cast<double>(reduced_count(s, axis));
        accumulate(inputs[0], div(broadcast(g, s), constant(count)));
        break;
      }
      case Op::matmul: {
        const Var a = input(0);
        const Var b = input(1);
        if (wants(0)) {
          Var ga;
          if (!ta && !tb) ga = matmul(g, b, false, true);
          else if (!ta && tb) ga = matmul(g, b, false, false);
          else if (ta && !tb) ga = matmul(b, g, false, true);
          else ga = matmul(b, g, true, true);
          accumulate(inputs[0], ga);
        }
        if (wants(1)) {
          Var gb;
          if (!ta && !tb) gb = matmul(a, g, true, false);
          else if (!ta && tb) gb = matmul(g, a, true, false);
          else if (ta && !tb) gb = matmul(a, g, false, false);
          else gb = matmul(g, a, true, true);
          accumulate(inputs[1], gb);
        }
        break;
      }
      case Op::broadcast: accumulate(inputs[0], sum_to(g, nodes_[inputs[0]].value.shape())); break;
      case Op::max: {
        const Shape s = nodes_[inputs[0]].value.shape();
        accumulate(inputs[0], mul(broadcast(g, s), max_mask(input(0))));
        break;
      }
      case Op::slice_cols:
        accumulate(inputs[0], pad_cols(g, begin, nodes_[inputs[0]].value.cols()));
        break;
      case Op::pad_cols:
        accumulate(inputs[0], slice_cols(g, begin, nodes_[inputs[0]].value.cols()));
        break;
      case Op::concat_cols: {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
          const std::size_t width = nodes_[inputs[k]].value.cols();
          if (wants(k)) accumulate(inputs[k], slice_cols(g, offset, width));
          offset += width;
        }
        break;
      }
      default: break;
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.id() <= out_id && adjoint[w.id()] != none) {
      result.emplace_back(this, static_cast<std::uint32_t>(adjoint[w.id()]));
    } else {
      result.push_back(constant(Tensor(nodes_[w.id()].value.shape())));
    }
  }
  return result;
}

Var add(Var a, Var b) { return make_binary(Op::add, a, b); }
Var sub(Var a, Var b) { return make_binary(Op::sub, a, b); }
Var mul(Var a, Var b) { return make_binary(Op::mul, a, b); }
Var div(Var a, Var b) { return make_binary(Op::div, a, b); }

Var pow(Var a, double exponent) {
  if (exponent == 0.0) return a.graph().constant(Tensor(a.shape(), 1.0));
  if (exponent == 1.0) return a;
  Node n;
  n.op = Op::pow;
  n.exponent = exponent;
  n.inputs = {a.id()};
  return a.graph().emit(std::move(n));
}

Var neg(Var a) { return make_unary(Op::neg, a); }
Var exp(Var a) { return make_unary(Op::exp, a); }
Var ln(Var a) { return make_unary(Op::ln, a); }
Var sin(Var a) { return make_unary(Op::sin, a); }
Var cos(Var a) { return make_unary(Op::cos, a); }
Var tanh(Var a) { return make_unary(Op::tanh, a); }
Var abs(Var a) { return make_unary(Op::abs, a); }
Var sign(Var a) { return make_unary(Op::sign, a); }
Var max_mask(Var a) { return make_unary(Op::max_mask, a); }
Var max(Var a) { return make_unary(Op::max, a); }
Var sqrt(Var a) { return pow(a, 0.5); }
Var square(Var a) { return pow(a, 2.0); }

Var sum(Var a, Axis axis) {
  Node n;
  n.op = Op::sum;
  n.axis = axis;
  n.inputs = {a.id()};
  return a.graph().emit(std::move(n));
}

Var mean(Var a, Axis axis) {
  Node n;
  n.op = Op::mean;
  n.axis = axis;
  n.inputs = {a.id()};
  return a.graph().emit(std::move(n));
}

Var matmul(Var a, Var b, bool trans_a, bool trans_b) {
  Graph& g = common_graph(a, b);
  Node n;
  n.op = Op::matmul;
  n.trans_a = trans_a;
  n.trans_b = trans_b;
  n.inputs = {a.id(), b.id()};
  return g.emit(std::move(n));
}

Var broadcast(Var a, Shape target) {
  if (a.shape() == target) return a;
  Node n;
  n.op = Op::broadcast;
  n.target = target;
  n.inputs = {a.id()};
  return a.graph().emit(std::move(n));
}

Var sum_to(Var a, Shape target) {
  const Shape s = a.shape();
  if (s == target) return a;
  if (target.is_scalar()) return sum(a, Axis::all);
  if (target.rows == 1 && target.cols == s.cols) return sum(a, Axis::rows);
  if (target.cols == 1 && target.rows == s.rows) return sum(a, Axis::cols);
  throw ShapeError("sum_to: cannot reduce " + to_string(s) + " to " + to_string(target));
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  if (begin == 0 && count == a.shape().cols) return a;
  Node n;
  n.op = Op::slice_cols;
  n.begin = begin;
  n.target = {a.shape().rows, count};
  n.inputs = {a.id()};
  return a.graph().emit(std::move(n));
}

Var column(Var a, std::size_t index) { return slice_cols(a, index, 1); }

Var pad_cols(Var a, std::size_t begin, std::size_t total_cols) {
  if (begin == 0 && total_cols == a.shape().cols) return a;
  Node n;
  n.op = Op::pad_cols;
  n.begin = begin;
  n.target = {a.shape().rows, total_cols};
  n.inputs = {a.id()};
  return a.graph().emit(std::move(n));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of zero tensors");
  if (parts.size() == 1) return parts.front();
  Node n;
  n.op = Op::concat_cols;
  for (const Var& p : parts) {
    common_graph(parts.front(), p);
    n.inputs.push_back(p.id());
  }
  return parts.front().graph().emit(std::move(n));
}

Var operator+(Var a, Var b) { return add(a, b); }
Var operator-(Var a, Var b) { return sub(a, b); }
Var operator*(Var a, Var b) { return mul(a, b); }
Var operator/(Var a, Var b) { return div(a, b); }
Var operator-(Var a) { return neg(a); }
Var operator+(Var a, double b) { return add(a, a.graph().constant(b)); }
Var operator+(double a, Var b) { return add(b.graph().constant(a), b); }
Var operator-(Var a, double b) { return sub(a, a.graph().constant(b)); }
Var operator-(double a, Var b) { return sub(b.graph().constant(a), b); }
Var operator*(Var a, double b) { return mul(a, a.graph().constant(b)); }
Var operator*(double a, Var b) { return mul(b.graph().constant(a), b); }
Var operator/(Var a, double b) { return div(a, a.graph().constant(b)); }
Var operator/(double a, Var b) { return div(b.graph().constant(a), b); }

Var nth_derivative(Var u, Var x, int order) {
  if (order < 1) throw Error("nth_derivative: order must be >= 1, got " + std::to_string(order));
  Var d = u;
  for (int k = 0; k < order; ++k) d = u.graph().backward(sum(d), x);
  return d;
}

std::vector<Var> partials(Var u, std::span<const Var> xs) { return u.graph().backward(sum(u), xs); }

AccumulatedGradients accumulate_gradients(const PassFn& pass, std::span<const Tensor> batches) {
  if (batches.empty()) throw Error("accumulate_gradients: no batches");
  std::size_t total = 0;
  for (const Tensor& b : batches) total += b.rows();
  if (total == 0) throw Error("accumulate_gradients: batches contain no rows");

  AccumulatedGradients out;
  for (const Tensor& batch : batches) {
    if (batch.rows() == 0) continue;
    Graph graph;
    PassResult r = pass(graph, batch);
    const double weight = static_cast<double>(batch.rows()) / static_cast<double>(total);
    const std::vector<Var> grads = graph.backward(r.loss, r.parameters);
    if (out.gradients.empty()) {
      for (const Var& g : grads) out.gradients.emplace_back(g.shape());
    }
    if (out.gradients.size() != grads.size()) throw Error("accumulate_gradients: passes disagree on parameter count");
    for (std::size_t i = 0; i < grads.size(); ++i) {
      auto dst = out.gradients[i].data();
      const auto src = grads[i].value().data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += weight * src[k];
    }
    out.loss += weight * r.loss.item();
  }
  return out;
}

}  // namespace neurodiff
