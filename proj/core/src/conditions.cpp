#include "neurodiff/conditions.hpp"

#include <cmath>
#include <vector>

#include "neurodiff/error.hpp"

namespace neurodiff {

namespace {

using namespace conditions;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_interval(const char* name, double x0, double x1) {
  if (!std::isfinite(x0) || !std::isfinite(x1)) throw Error(std::string(name) + ": interval ends must be finite");
  if (!(x0 < x1)) throw Error(std::string(name) + ": require x0 < x1");
}

// Network value and first derivative at a fixed position, one per sample so
// bundle inputs line up with the sample rows.
struct PointEval {
  Var value;
  Var slope;
};

PointEval eval_at(Graph& g, std::size_t rows, double position, const NetFn& net, bool need_slope) {
  const Var at = g.variable(Tensor({rows, 1}, position));
  const Var args[] = {at};
  const Var v = net(args);
  PointEval out{v, Var()};
  if (need_slope) out.slope = g.backward(sum(v), at);
  return out;
}

Var net1(const NetFn& net, Var x) {
  const Var args[] = {x};
  return net(args);
}

}  // namespace

Var resolve(const Value& value, Graph& graph, const ParamBindings& params) {
  if (const double* c = std::get_if<double>(&value)) return graph.constant(*c);
  const auto& name = std::get<ParamRef>(value).name;
  const auto it = params.find(name);
  if (it == params.end()) throw Error("condition refers to unknown parameter '" + name + "'");
  return it->second;
}

const char* condition_name(const Condition& condition) noexcept {
  return std::visit(overloaded{
                        [](const NoCondition&) { return "no_condition"; },
                        [](const IVP1&) { return "ivp1"; },
                        [](const IVP2&) { return "ivp2"; },
                        [](const DirichletBVP1D&) { return "dirichlet_bvp_1d"; },
                        [](const DirichletNeumann&) { return "dirichlet_neumann"; },
                        [](const NeumannDirichlet&) { return "neumann_dirichlet"; },
                        [](const NeumannNeumann&) { return "neumann_neumann"; },
                        [](const InfinityBVP&) { return "infinity_bvp"; },
                        [](const BoxIC&) { return "box_ic"; },
                        [](const Custom&) { return "custom"; },
                    },
                    condition);
}

std::size_t condition_arity(const Condition& condition) {
  return std::visit(overloaded{
                        [](const NoCondition&) -> std::size_t { return 0; },
                        [](const InfinityBVP& c) -> std::size_t { return c.u0_angular || c.u_inf_angular ? 3 : 1; },
                        [](const BoxIC& c) -> std::size_t { return c.dim + 1; },
                        [](const Custom& c) -> std::size_t { return c.arity; },
                        [](const auto&) -> std::size_t { return 1; },
                    },
                    condition);
}

void validate(const Condition& condition) {
  std::visit(overloaded{
                 [](const NoCondition&) {},
                 [](const IVP1& c) {
                   if (!std::isfinite(c.t0)) throw Error("ivp1: t0 must be finite");
                 },
                 [](const IVP2& c) {
                   if (!std::isfinite(c.t0)) throw Error("ivp2: t0 must be finite");
                 },
                 [](const DirichletBVP1D& c) { require_interval("dirichlet_bvp_1d", c.x0, c.x1); },
                 [](const DirichletNeumann& c) { require_interval("dirichlet_neumann", c.x0, c.x1); },
                 [](const NeumannDirichlet& c) { require_interval("neumann_dirichlet", c.x0, c.x1); },
                 [](const NeumannNeumann& c) { require_interval("neumann_neumann", c.x0, c.x1); },
                 [](const InfinityBVP& c) {
                   if (!std::isfinite(c.r0)) throw Error("infinity_bvp: r0 must be finite");
                   if (!(c.scale > 0.0) || !std::isfinite(c.scale)) throw Error("infinity_bvp: scale must be positive");
                   if (static_cast<bool>(c.u0_angular) != static_cast<bool>(c.u_inf_angular))
                     throw Error("infinity_bvp: set both angular profiles or neither");
                 },
                 [](const BoxIC& c) {
                   if (c.dim < 1) throw Error("box_ic: dim must be >= 1");
                   if (!c.initial_profile) throw Error("box_ic: missing initial profile");
                 },
                 [](const Custom& c) {
                   if (!c.build) throw Error("custom condition: missing build function");
                 },
             },
             condition);
}

Var reparameterize(const Condition& condition, std::span<const Var> coords, const NetFn& net,
                   const ParamBindings& params) {
  validate(condition);
  const std::size_t arity = condition_arity(condition);
  if (arity != 0 && coords.size() != arity) {
    throw Error(std::string(condition_name(condition)) + ": expected " + std::to_string(arity) +
                " coordinate column(s), got " + std::to_string(coords.size()));
  }
  if (coords.empty()) throw Error(std::string(condition_name(condition)) + ": no coordinates");
  Graph& g = coords.front().graph();
  const std::size_t rows = coords.front().shape().rows;
  auto val = [&](const Value& v) { return resolve(v, g, params); };

  return std::visit(
      overloaded{
          [&](const NoCondition&) { return net(coords); },
          [&](const IVP1& c) {
            const Var tau = coords[0] - c.t0;
            return val(c.u0) + (1.0 - exp(-tau)) * net1(net, coords[0]);
          },
          [&](const IVP2& c) {
            const Var tau = coords[0] - c.t0;
            const Var damp = 1.0 - exp(-tau);
            return val(c.u0) + val(c.du0) * tau + square(damp) * net1(net, coords[0]);
          },
          [&](const DirichletBVP1D& c) {
            const Var xt = (coords[0] - c.x0) / (c.x1 - c.x0);
            const Var one_minus = 1.0 - xt;
            return one_minus * val(c.u0) + xt * val(c.u1) + xt * one_minus * net1(net, coords[0]);
          },
          [&](const DirichletNeumann& c) {
            const double len = c.x1 - c.x0;
            const Var tau = coords[0] - c.x0;
            const PointEval end = eval_at(g, rows, c.x1, net, true);
            const Var free = net1(net, coords[0]) - end.value - len * end.slope;
            return val(c.u0) + val(c.du1) * tau + tau * free;
          },
          [&](const NeumannDirichlet& c) {
            const double len = c.x1 - c.x0;
            const Var from_end = coords[0] - c.x1;
            const PointEval start = eval_at(g, rows, c.x0, net, true);
            const Var free = net1(net, coords[0]) - start.value + len * start.slope;
            return val(c.u1) + val(c.du0) * from_end + from_end * free;
          },
          [&](const NeumannNeumann& c) {
            const double len = c.x1 - c.x0;
            const Var tau = coords[0] - c.x0;
            const Var quad = square(tau) / (2.0 * len);
            const PointEval start = eval_at(g, rows, c.x0, net, true);
            const PointEval end = eval_at(g, rows, c.x1, net, true);
            const Var du0 = val(c.du0);
            return du0 * tau + (val(c.du1) - du0) * quad + net1(net, coords[0]) - tau * start.slope -
                   quad * (end.slope - start.slope);
          },
          [&](const InfinityBVP& c) {
            const Var s = (coords[0] - c.r0) / c.scale;
            const Var t = tanh(s);
            const Var e = exp(-s);
            Var u0;
            Var u_inf;
            if (c.u0_angular) {
              u0 = c.u0_angular(coords[1], coords[2]);
              u_inf = c.u_inf_angular(coords[1], coords[2]);
            } else {
              u0 = val(c.u0);
              u_inf = val(c.u_inf);
            }
            const Var n = c.u0_angular ? net(coords) : net1(net, coords[0]);
            return t * u_inf + e * u0 + t * e * n;
          },
          [&](const BoxIC& c) {
            const std::span<const Var> space = coords.subspan(1);
            Var bubble = coords[1] * (1.0 - coords[1]);
            for (std::size_t d = 1; d < c.dim; ++d) bubble = bubble * (space[d] * (1.0 - space[d]));
            return c.initial_profile(space) + (1.0 - exp(-coords[0])) * bubble * net(coords);
          },
          [&](const Custom& c) { return c.build(coords, net, params); },
      },
      condition);
}

}  // namespace neurodiff
