#pragma once

// Trial-solution constructions that satisfy initial/boundary conditions
// identically. Each variant maps the raw network N to a trial solution u whose
// constrained values and derivatives hold for every parameter setting.
//
// Condition constants are `Value`s: a number, or the name of a bundle
// parameter that is supplied per sample as an Nx1 column at build time.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>

#include "neurodiff/autodiff.hpp"

namespace neurodiff {

struct ParamRef {
  std::string name;
};

using Value = std::variant<double, ParamRef>;

// Bundle parameter name -> Nx1 column on the current graph.
using ParamBindings = std::map<std::string, Var>;

// The raw network applied to coordinate columns (each Nx1), returning Nxk.
using NetFn = std::function<Var(std::span<const Var>)>;

namespace conditions {

struct NoCondition {};

// u(t0) = u0
struct IVP1 {
  double t0 = 0.0;
  Value u0 = 0.0;
};

// u(t0) = u0, u'(t0) = du0
struct IVP2 {
  double t0 = 0.0;
  Value u0 = 0.0;
  Value du0 = 0.0;
};

// u(x0) = u0, u(x1) = u1
struct DirichletBVP1D {
  double x0 = 0.0;
  Value u0 = 0.0;
  double x1 = 1.0;
  Value u1 = 0.0;
};

// u(x0) = u0, u'(x1) = du1
struct DirichletNeumann {
  double x0 = 0.0;
  Value u0 = 0.0;
  double x1 = 1.0;
  Value du1 = 0.0;
};

// u'(x0) = du0, u(x1) = u1
struct NeumannDirichlet {
  double x0 = 0.0;
  Value du0 = 0.0;
  double x1 = 1.0;
  Value u1 = 0.0;
};

// u'(x0) = du0, u'(x1) = du1. The additive constant of the solution is left
// to the raw network value.
struct NeumannNeumann {
  double x0 = 0.0;
  Value du0 = 0.0;
  double x1 = 1.0;
  Value du1 = 0.0;
};

// u(r0) = u0 and u -> u_inf as r -> infinity:
//   u = tanh(s) u_inf + exp(-s) u0 + tanh(s) exp(-s) N(r),  s = (r - r0) / scale
// scale = 1 is the plain construction. When both angular profiles are set the
// condition takes spherical coordinates (r, theta, phi) and u0, u_inf become
// functions of (theta, phi); the network then sees all three coordinates.
struct InfinityBVP {
  double r0 = 0.0;
  Value u0 = 0.0;
  Value u_inf = 0.0;
  double scale = 1.0;
  std::function<Var(Var theta, Var phi)> u0_angular;
  std::function<Var(Var theta, Var phi)> u_inf_angular;
};

// Coordinates (t, x_1..x_D) on [0, inf) x [0,1]^D with u(0, x) = f(x) and
// u = 0 on the cube faces; f must vanish on the faces:
//   u = f(x) + (1 - exp(-t)) prod_d x_d (1 - x_d) N(t, x)
struct BoxIC {
  std::size_t dim = 1;
  std::function<Var(std::span<const Var>)> initial_profile;
};

// User-supplied reparameterization.
struct Custom {
  std::size_t arity = 1;
  std::function<Var(std::span<const Var> coords, const NetFn& net, const ParamBindings& params)> build;
};

}  // namespace conditions

using Condition = std::variant<conditions::NoCondition, conditions::IVP1, conditions::IVP2, conditions::DirichletBVP1D,
                               conditions::DirichletNeumann, conditions::NeumannDirichlet, conditions::NeumannNeumann,
                               conditions::InfinityBVP, conditions::BoxIC, conditions::Custom>;

const char* condition_name(const Condition& condition) noexcept;

// Number of coordinate columns the condition consumes; 0 means "any".
std::size_t condition_arity(const Condition& condition);

// Throws when interval variants have x0 >= x1 or positions are not finite.
void validate(const Condition& condition);

// Builds the trial solution on the coordinates' graph. Throws on arity
// mismatch or when a ParamRef names a parameter missing from `params`.
Var reparameterize(const Condition& condition, std::span<const Var> coords, const NetFn& net,
                   const ParamBindings& params = {});

// Resolves a condition constant to a node: a 1x1 constant or a bound column.
Var resolve(const Value& value, Graph& graph, const ParamBindings& params);

}  // namespace neurodiff
