#include "neurodiff/operators.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "neurodiff/error.hpp"
#include "neurodiff/network.hpp"
#include "neurodiff/rng.hpp"

namespace neurodiff {

std::string_view to_string(CoordSystem system) noexcept {
  switch (system) {
    case CoordSystem::cartesian: return "cartesian";
    case CoordSystem::cylindrical: return "cylindrical";
    case CoordSystem::spherical: return "spherical";
  }
  return "?";
}

CoordSystem parse_coord_system(std::string_view name) {
  if (name == "cartesian") return CoordSystem::cartesian;
  if (name == "cylindrical") return CoordSystem::cylindrical;
  if (name == "spherical") return CoordSystem::spherical;
  throw Error("unknown coordinate system '" + std::string(name) + "'");
}

std::string_view to_string(OperatorKind op) noexcept {
  switch (op) {
    case OperatorKind::grad: return "grad";
    case OperatorKind::div: return "divergence";
    case OperatorKind::laplace: return "laplace";
    case OperatorKind::vector_laplace: return "vector_laplace";
    case OperatorKind::curl: return "curl";
  }
  return "?";
}

namespace ops {

namespace {

// Hands out partial derivatives of per-sample fields. Naive mode runs one
// reverse pass per request; fused mode runs one pass per field for all three
// coordinates and caches the result.
class Partials {
 public:
  Partials(const Coords& q, Mode mode) : q_(q), mode_(mode) {}

  Var operator()(Var f, int i) {
    if (mode_ == Mode::naive) return f.graph().backward(sum(f), q_[i]);
    auto it = cache_.find(f.id());
    if (it == cache_.end()) {
      const std::vector<Var> g = f.graph().backward(sum(f), q_);
      it = cache_.emplace(f.id(), std::array<Var, 3>{g[0], g[1], g[2]}).first;
    }
    return it->second[i];
  }

  // Second derivative along one coordinate. In fused mode the first-order
  // node comes from the shared gradient subgraph.
  Var second(Var f, int i) {
    const Var first = (*this)(f, i);
    return f.graph().backward(sum(first), q_[i]);
  }

 private:
  const Coords& q_;
  Mode mode_;
  std::unordered_map<std::uint32_t, std::array<Var, 3>> cache_;
};

VectorField grad_impl(Var f, const Coords& q, CoordSystem system, Partials& d) {
  switch (system) {
    case CoordSystem::cartesian: return {d(f, 0), d(f, 1), d(f, 2)};
    case CoordSystem::cylindrical: return {d(f, 0), d(f, 1) / q[0], d(f, 2)};
    case CoordSystem::spherical: {
      const Var& r = q[0];
      return {d(f, 0), d(f, 1) / r, d(f, 2) / (r * sin(q[1]))};
    }
  }
  throw Error("bad coordinate system");
}

Var div_impl(const VectorField& F, const Coords& q, CoordSystem system, Partials& d) {
  switch (system) {
    case CoordSystem::cartesian: return d(F[0], 0) + d(F[1], 1) + d(F[2], 2);
    case CoordSystem::cylindrical: {
      const Var& rho = q[0];
      return d(F[0], 0) + F[0] / rho + d(F[1], 1) / rho + d(F[2], 2);
    }
    case CoordSystem::spherical: {
      const Var& r = q[0];
      const Var s = sin(q[1]);
      const Var cot = cos(q[1]) / s;
      return d(F[0], 0) + 2.0 * F[0] / r + d(F[1], 1) / r + cot * F[1] / r + d(F[2], 2) / (r * s);
    }
  }
  throw Error("bad coordinate system");
}

VectorField curl_impl(const VectorField& F, const Coords& q, CoordSystem system, Partials& d) {
  switch (system) {
    case CoordSystem::cartesian:
      return {d(F[2], 1) - d(F[1], 2), d(F[0], 2) - d(F[2], 0), d(F[1], 0) - d(F[0], 1)};
    case CoordSystem::cylindrical: {
      const Var& rho = q[0];
      return {d(F[2], 1) / rho - d(F[1], 2), d(F[0], 2) - d(F[2], 0), d(F[1], 0) + F[1] / rho - d(F[0], 1) / rho};
    }
    case CoordSystem::spherical: {
      const Var& r = q[0];
      const Var s = sin(q[1]);
      const Var cot = cos(q[1]) / s;
      const Var rs = r * s;
      return {d(F[2], 1) / r + cot * F[2] / r - d(F[1], 2) / rs, d(F[0], 2) / rs - d(F[2], 0) - F[2] / r,
              d(F[1], 0) + F[1] / r - d(F[0], 1) / r};
    }
  }
  throw Error("bad coordinate system");
}

Var laplacian_impl(Var f, const Coords& q, CoordSystem system, Partials& d) {
  switch (system) {
    case CoordSystem::cartesian: return d.second(f, 0) + d.second(f, 1) + d.second(f, 2);
    case CoordSystem::cylindrical: {
      const Var& rho = q[0];
      return d.second(f, 0) + d(f, 0) / rho + d.second(f, 1) / square(rho) + d.second(f, 2);
    }
    case CoordSystem::spherical: {
      const Var& r = q[0];
      const Var s = sin(q[1]);
      const Var cot = cos(q[1]) / s;
      const Var r2 = square(r);
      return d.second(f, 0) + 2.0 * d(f, 0) / r + d.second(f, 1) / r2 + cot * d(f, 1) / r2 +
             d.second(f, 2) / (r2 * square(s));
    }
  }
  throw Error("bad coordinate system");
}

}  // namespace

void check_coordinates(const Coords& q, CoordSystem system) {
  constexpr double eps = 1e-12;
  if (system == CoordSystem::cartesian) return;
  for (double v : q[0].value().data()) {
    if (std::abs(v) < eps) {
      throw Error(std::string(to_string(system)) + " operator evaluated at coordinate singularity (" +
                  (system == CoordSystem::cylindrical ? "rho" : "r") + " = 0)");
    }
  }
  if (system == CoordSystem::spherical) {
    for (double theta : q[1].value().data()) {
      if (std::abs(std::sin(theta)) < eps) throw Error("spherical operator evaluated at coordinate singularity (sin(theta) = 0)");
    }
  }
}

VectorField grad(Var f, const Coords& q, CoordSystem system, Mode mode) {
  check_coordinates(q, system);
  Partials d(q, mode);
  return grad_impl(f, q, system, d);
}

Var div(const VectorField& F, const Coords& q, CoordSystem system, Mode mode) {
  check_coordinates(q, system);
  Partials d(q, mode);
  return div_impl(F, q, system, d);
}

VectorField curl(const VectorField& F, const Coords& q, CoordSystem system, Mode mode) {
  check_coordinates(q, system);
  Partials d(q, mode);
  return curl_impl(F, q, system, d);
}

Var laplacian(Var f, const Coords& q, CoordSystem system, Mode mode) {
  check_coordinates(q, system);
  Partials d(q, mode);
  return laplacian_impl(f, q, system, d);
}

VectorField vector_laplacian(const VectorField& F, const Coords& q, CoordSystem system, Mode mode) {
  check_coordinates(q, system);
  // grad(div F) - curl(curl F). In fused mode one Partials instance shares the
  // Jacobian of F between the divergence and the inner curl.
  Partials d(q, mode);
  const Var divergence = div_impl(F, q, system, d);
  const VectorField gd = grad_impl(divergence, q, system, d);
  const VectorField c = curl_impl(F, q, system, d);
  const VectorField cc = curl_impl(c, q, system, d);
  return {gd[0] - cc[0], gd[1] - cc[1], gd[2] - cc[2]};
}

}  // namespace ops

namespace {

struct Sampled {
  Tensor q0, q1, q2;
};

Sampled sample_coordinates(CoordSystem system, std::size_t n, Rng& rng) {
  Sampled s{Tensor({n, 1}), Tensor({n, 1}), Tensor({n, 1})};
  constexpr double pi = std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    switch (system) {
      case CoordSystem::cartesian:
        s.q0[i] = rng.uniform(-1.0, 1.0);
        s.q1[i] = rng.uniform(-1.0, 1.0);
        s.q2[i] = rng.uniform(-1.0, 1.0);
        break;
      case CoordSystem::cylindrical:
        s.q0[i] = rng.uniform(0.5, 2.0);
        s.q1[i] = rng.uniform(0.0, 2.0 * pi);
        s.q2[i] = rng.uniform(-1.0, 1.0);
        break;
      case CoordSystem::spherical:
        s.q0[i] = rng.uniform(0.5, 2.0);
        s.q1[i] = rng.uniform(0.3, pi - 0.3);
        s.q2[i] = rng.uniform(0.0, 2.0 * pi);
        break;
    }
  }
  return s;
}

struct Timed {
  double ms;
  std::vector<Tensor> outputs;
};

Timed run_operator(OperatorKind op, CoordSystem system, Mode mode, const Sampled& pts, const MLP& scalar_net,
                   const MLP& vector_net) {
  using clock = std::chrono::steady_clock;
  Graph g;
  const Coords q{g.variable(pts.q0), g.variable(pts.q1), g.variable(pts.q2)};
  const Var input = concat_cols(q);
  const bool vector_input = op == OperatorKind::div || op == OperatorKind::curl || op == OperatorKind::vector_laplace;
  Var f;
  VectorField F;
  if (vector_input) {
    const Var out = vector_net.bind(g, false)(input);
    F = {column(out, 0), column(out, 1), column(out, 2)};
  } else {
    f = scalar_net.bind(g, false)(input);
  }

  Timed result;
  const auto start = clock::now();
  std::vector<Var> outs;
  switch (op) {
    case OperatorKind::grad: {
      const auto v = ops::grad(f, q, system, mode);
      outs.assign(v.begin(), v.end());
      break;
    }
    case OperatorKind::div: outs.push_back(ops::div(F, q, system, mode)); break;
    case OperatorKind::laplace: outs.push_back(ops::laplacian(f, q, system, mode)); break;
    case OperatorKind::vector_laplace: {
      const auto v = ops::vector_laplacian(F, q, system, mode);
      outs.assign(v.begin(), v.end());
      break;
    }
    case OperatorKind::curl: {
      const auto v = ops::curl(F, q, system, mode);
      outs.assign(v.begin(), v.end());
      break;
    }
  }
  const auto stop = clock::now();
  result.ms = std::chrono::duration<double, std::milli>(stop - start).count();
  for (const Var& v : outs) result.outputs.push_back(v.value());
  return result;
}

void mean_std(const std::vector<double>& xs, double& mean, double& stddev) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  stddev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

}  // namespace

std::vector<BenchRow> bench_operators(const BenchOptions& options) {
  if (options.repeats < 1) throw Error("bench_operators: repeats must be >= 1");
  for (std::size_t n : options.sizes) {
    if (n < 1) throw Error("bench_operators: batch sizes must be >= 1");
  }
  MLPSpec scalar_spec{3, options.hidden, 1, Activation::tanh, options.seed};
  MLPSpec vector_spec{3, options.hidden, 3, Activation::tanh, options.seed + 1};
  const MLP scalar_net = MLP::init(scalar_spec);
  const MLP vector_net = MLP::init(vector_spec);

  constexpr CoordSystem systems[] = {CoordSystem::cylindrical, CoordSystem::spherical, CoordSystem::cartesian};
  constexpr OperatorKind kinds[] = {OperatorKind::grad, OperatorKind::div, OperatorKind::laplace,
                                    OperatorKind::vector_laplace, OperatorKind::curl};
  Rng rng(options.seed);
  std::vector<BenchRow> rows;
  for (std::size_t n : options.sizes) {
    for (CoordSystem system : systems) {
      for (OperatorKind op : kinds) {
        std::vector<double> naive_ms, fused_ms;
        double max_diff = 0.0;
        for (int rep = 0; rep < options.repeats; ++rep) {
          const Sampled pts = sample_coordinates(system, n, rng);
          // Alternate which mode runs first so cache warmth does not favour one.
          Timed naive, fused;
          if (rep % 2 == 0) {
            naive = run_operator(op, system, Mode::naive, pts, scalar_net, vector_net);
            fused = run_operator(op, system, Mode::fused, pts, scalar_net, vector_net);
          } else {
            fused = run_operator(op, system, Mode::fused, pts, scalar_net, vector_net);
            naive = run_operator(op, system, Mode::naive, pts, scalar_net, vector_net);
          }
          naive_ms.push_back(naive.ms);
          fused_ms.push_back(fused.ms);
          for (std::size_t k = 0; k < naive.outputs.size(); ++k) {
            const auto a = naive.outputs[k].data();
            const auto b = fused.outputs[k].data();
            for (std::size_t i = 0; i < a.size(); ++i) max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
          }
        }
        BenchRow row{system, op, n, 0, 0, 0, 0, 0, max_diff};
        mean_std(naive_ms, row.naive_ms_mean, row.naive_ms_std);
        mean_std(fused_ms, row.fused_ms_mean, row.fused_ms_std);
        row.speedup = row.naive_ms_mean / row.fused_ms_mean;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "system,operator,naive_ms_mean,naive_ms_std,fused_ms_mean,fused_ms_std,speedup,batch,check\n";
  auto old = out.precision(6);
  for (const BenchRow& r : rows) {
    out << to_string(r.system) << ',' << to_string(r.op) << ',' << r.naive_ms_mean << ',' << r.naive_ms_std << ','
        << r.fused_ms_mean << ',' << r.fused_ms_std << ',' << r.speedup << ',' << r.batch << ','
        << (r.max_abs_diff <= kFusedNaiveTolerance ? "ok" : "mismatch") << '\n';
  }
  out.precision(old);
}

}  // namespace neurodiff
