#include "neurodiff/presets.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "neurodiff/bases.hpp"
#include "neurodiff/error.hpp"
#include "neurodiff/operators.hpp"

namespace neurodiff {

namespace {

constexpr double kPi = std::numbers::pi;

// Radial domain of poisson-gaussian and the polar band kept away from the poles.
constexpr double kPoissonR0 = 0.1;
constexpr double kPoissonR1 = 5.0;
constexpr double kPoissonThetaMargin = 0.1;
constexpr int kPoissonDegree = 2;

// Length scale of the infinity reparameterization for gravity.
constexpr double kGravityScale = 5.0;

MLPSpec net_spec(std::size_t inputs, std::size_t outputs, const PresetOptions& o, std::uint64_t seed,
                 std::size_t index) {
  MLPSpec spec;
  spec.input_dim = inputs;
  spec.output_dim = outputs;
  spec.hidden_dims = o.hidden.value_or(std::vector<std::size_t>{32, 32});
  spec.activation = o.activation.value_or(Activation::tanh);
  spec.seed = mix64(seed + 0x5EEDu + index);
  return spec;
}

constexpr double kDecayFractions[] = {0.5, 0.75, 0.9};
constexpr double kDecayFactors[] = {0.3, 0.1, 0.03};

void finish_config(Preset& p, const PresetOptions& o, std::size_t default_epochs, double default_lr,
                   std::size_t default_batches = 1) {
  const std::uint64_t seed = o.seed.value_or(0);
  const double lr = o.lr.value_or(default_lr);
  p.config.seed = seed;
  p.config.epochs = o.epochs.value_or(default_epochs);
  p.config.batches_per_epoch = o.batches_per_epoch.value_or(default_batches);
  if (p.config.batches_per_epoch < 1) throw Error(p.name + ": batches per epoch must be >= 1");
  p.config.optimizer = AdamConfig{lr};
  p.config.loss.kind = o.loss.value_or(LossKind::mse);
  if (!o.constant_lr) p.callbacks = step_decay(lr, p.config.epochs, kDecayFractions, kDecayFactors);
}

std::vector<std::size_t> all_dims(std::size_t n) {
  std::vector<std::size_t> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = i;
  return d;
}

Tensor rows_of(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Tensor t({rows.size(), cols});
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) t(r, c) = rows[r][c];
  return t;
}

Var d_dt(Var u, Var t) { return u.graph().backward(sum(u), t); }

Preset decay(const PresetOptions& o) {
  Preset p;
  p.name = "decay";
  p.batch_size = o.batch_size.value_or(512);
  p.problem.residual = [](const ResidualContext& c) { return std::vector<Var>{d_dt(c.u[0], c.coords[0]) + c.u[0]}; };
  p.problem.coord_names = {"t"};
  p.problem.train = Generator::uniform1d(0.0, 2.0, p.batch_size, Spacing::equally_spaced_noisy);
  p.problem.valid = Generator::uniform1d(0.0, 2.0, p.batch_size, Spacing::equally_spaced);
  finish_config(p, o, 3000, 1e-3, 4);
  p.config.networks = {net_spec(1, 1, o, p.config.seed, 0)};
  p.config.conditions = {conditions::IVP1{0.0, 1.0}};
  p.input_names = {"t"};
  p.reference = [](std::span<const double> x) { return std::exp(-x[0]); };
  std::vector<std::vector<double>> rows;
  for (double t : linspace(0.0, 2.0, 100)) rows.push_back({t});
  p.grid = rows_of(rows);
  return p;
}

Preset sho(const PresetOptions& o) {
  Preset p;
  p.name = "sho";
  p.batch_size = o.batch_size.value_or(512);
  p.problem.residual = [](const ResidualContext& c) {
    return std::vector<Var>{nth_derivative(c.u[0], c.coords[0], 2) + c.u[0]};
  };
  p.problem.coord_names = {"t"};
  p.problem.train = Generator::uniform1d(0.0, 2.0 * kPi, p.batch_size, Spacing::equally_spaced_noisy);
  p.problem.valid = Generator::uniform1d(0.0, 2.0 * kPi, p.batch_size, Spacing::equally_spaced);
  finish_config(p, o, 5000, 1e-3, 4);
  p.config.networks = {net_spec(1, 1, o, p.config.seed, 0)};
  p.config.conditions = {conditions::IVP2{0.0, 0.0, 1.0}};
  p.input_names = {"t"};
  p.reference = [](std::span<const double> x) { return std::sin(x[0]); };
  std::vector<std::vector<double>> rows;
  for (double t : linspace(0.0, 2.0 * kPi, 100)) rows.push_back({t});
  p.grid = rows_of(rows);
  return p;
}

Preset heat(const PresetOptions& o) {
  const std::size_t D = o.dim;
  if (D < 1) throw Error("heat: --dim must be >= 1");
  if (D > kHeatMaxDim) throw Error("heat: --dim is capped at " + std::to_string(kHeatMaxDim));
  if (D > kHeatMaxDesktopDim && !o.allow_large)
    throw Error("heat: --dim above " + std::to_string(kHeatMaxDesktopDim) + " requires --allow-large");
  Preset p;
  p.name = "heat";
  p.batch_size = o.batch_size.value_or(512);
  p.problem.residual = [D](const ResidualContext& c) {
    const Var u = c.u[0];
    const std::vector<Var> first = partials(u, c.coords);
    Var lap = c.graph.backward(sum(first[1]), c.coords[1]);
    for (std::size_t d = 2; d <= D; ++d) lap = lap + c.graph.backward(sum(first[d]), c.coords[d]);
    return std::vector<Var>{first[0] - 0.01 * lap};
  };
  p.problem.coord_names = {"t"};
  const char* axes[] = {"x", "y", "z"};
  for (std::size_t d = 0; d < D; ++d)
    p.problem.coord_names.push_back(D <= 3 ? axes[d] : "x" + std::to_string(d + 1));
  const std::vector<double> lo(D + 1, 0.0), hi(D + 1, 1.0);
  p.problem.train = Generator::cube(lo, hi, p.batch_size);
  p.problem.valid = Generator::cube(lo, hi, p.batch_size);
  finish_config(p, o, 3000, 1e-3);
  p.config.networks = {net_spec(D + 1, 1, o, p.config.seed, 0)};
  conditions::BoxIC ic;
  ic.dim = D;
  ic.initial_profile = [](std::span<const Var> x) {
    Var f = sin(kPi * x[0]);
    for (std::size_t d = 1; d < x.size(); ++d) f = f * sin(kPi * x[d]);
    return f;
  };
  p.config.conditions = {ic};
  p.input_names = p.problem.coord_names;
  p.reference = [D](std::span<const double> x) {
    double u = std::exp(-static_cast<double>(D) * kPi * kPi * x[0] / 100.0);
    for (std::size_t d = 1; d <= D; ++d) u *= std::sin(kPi * x[d]);
    return u;
  };
  // (x, y) plane at z = 0.5 for t in {0, 0.5, 1}; lower dimensions drop axes.
  std::vector<std::vector<double>> rows;
  const auto ticks = linspace(0.0, 1.0, 21);
  for (double t : {0.0, 0.5, 1.0}) {
    if (D == 1) {
      for (double x : ticks) rows.push_back({t, x});
      continue;
    }
    for (double y : ticks)
      for (double x : ticks) {
        std::vector<double> r{t, x, y};
        for (std::size_t d = 2; d < D; ++d) r.push_back(0.5);
        rows.push_back(r);
      }
  }
  p.grid = rows_of(rows);
  return p;
}

Preset gravity(const PresetOptions& o) {
  Preset p;
  p.name = "gravity";
  p.batch_size = o.batch_size.value_or(512);
  p.problem.residual = [](const ResidualContext& c) {
    const Var r = c.coords[0];
    return std::vector<Var>{d_dt(c.u[0], r) - 1.0 / square(r)};
  };
  p.problem.coord_names = {"r"};
  p.problem.train = Generator::uniform1d(1.0, 10.0, p.batch_size, Spacing::equally_spaced_noisy);
  p.problem.valid = Generator::uniform1d(1.0, 10.0, p.batch_size, Spacing::equally_spaced);
  finish_config(p, o, 2000, 1e-3);
  p.config.networks = {net_spec(1, 1, o, p.config.seed, 0)};
  conditions::InfinityBVP bc;
  bc.r0 = 1.0;
  bc.u0 = -1.0;
  bc.u_inf = 0.0;
  bc.scale = kGravityScale;
  p.config.conditions = {bc};
  p.input_names = {"r"};
  p.reference = [](std::span<const double> x) { return -1.0 / x[0]; };
  std::vector<std::vector<double>> rows;
  for (double r : linspace(1.0, 10.0, 100)) rows.push_back({r});
  p.grid = rows_of(rows);
  return p;
}

Preset poisson_gaussian(const PresetOptions& o) {
  Preset p;
  p.name = "poisson-gaussian";
  p.batch_size = o.batch_size.value_or(512);
  p.problem.residual = [](const ResidualContext& c) {
    const Coords q{c.coords[0], c.coords[1], c.coords[2]};
    const Var lap = ops::laplacian(c.u[0], q, CoordSystem::spherical, Mode::fused);
    const Var rho = std::pow(2.0 * kPi, -1.5) * exp(-0.5 * square(q[0]));
    return std::vector<Var>{lap - rho};
  };
  p.problem.coord_names = {"r", "theta", "phi"};
  const std::vector<double> lo{kPoissonR0, kPoissonThetaMargin, 0.0};
  const std::vector<double> hi{kPoissonR1, kPi - kPoissonThetaMargin, 2.0 * kPi};
  p.problem.train = Generator::cube(lo, hi, p.batch_size);
  p.problem.valid = Generator::cube(lo, hi, p.batch_size);
  finish_config(p, o, 1500, 1e-3);

  const Basis basis = Basis::spherical_harmonics(kPoissonDegree);
  const std::size_t m = basis.size();
  p.config.networks = {net_spec(1, m, o, p.config.seed, 0)};
  // Radial coefficients c_j(r) of the harmonics with Dirichlet ends: c_0
  // carries the boundary potential, the others vanish at both radii.
  conditions::Custom cond;
  cond.arity = 3;
  cond.build = [basis, m](std::span<const Var> q, const NetFn& net, const ParamBindings&) {
    Graph& g = q[0].graph();
    const std::size_t n = q[0].shape().rows;
    const Var xt = (q[0] - kPoissonR0) / (kPoissonR1 - kPoissonR0);
    const Var r_only[] = {q[0]};
    const Var raw = net(r_only);
    const Var bubble = broadcast(xt * (1.0 - xt), {n, m});
    const double y00 = std::sqrt(4.0 * kPi);
    const Var ends = (1.0 - xt) * (y00 * gaussian_potential(kPoissonR0)) + xt * (y00 * gaussian_potential(kPoissonR1));
    const Var coeff = bubble * raw + pad_cols(ends, 0, m);
    (void)g;
    return basis_solution(basis, coeff, q[1], q[2]);
  };
  p.config.conditions = {cond};
  p.input_names = p.problem.coord_names;
  p.reference = [](std::span<const double> x) { return gaussian_potential(x[0]); };
  std::vector<std::vector<double>> rows;
  for (double theta : {kPi / 3.0, kPi / 2.0, 2.0 * kPi / 3.0})
    for (double phi : {0.0, 2.0 * kPi / 3.0, 4.0 * kPi / 3.0, 2.0 * kPi})
      for (double r : linspace(kPoissonR0, kPoissonR1, 50)) rows.push_back({r, theta, phi});
  p.grid = rows_of(rows);
  return p;
}

Preset decay_bundle(const PresetOptions& o) {
  Preset p;
  p.name = "decay-bundle";
  p.batch_size = o.batch_size.value_or(128);
  p.problem.residual = [](const ResidualContext& c) {
    return std::vector<Var>{d_dt(c.u[0], c.coords[0]) + c.param("lambda") * c.u[0]};
  };
  p.problem.coord_names = {"t"};
  p.problem.train = Generator::uniform1d(0.0, 2.0, p.batch_size, Spacing::equally_spaced_noisy);
  p.problem.valid = Generator::uniform1d(0.0, 2.0, p.batch_size, Spacing::uniform_random);
  p.layout.theta_ic = {{"u0", 0.5, 2.0}};
  p.layout.theta_eq = {{"lambda", 0.5, 2.0}};
  finish_config(p, o, 3000, 1e-3, 16);
  p.config.networks = {net_spec(3, 1, o, p.config.seed, 0)};
  p.config.conditions = {conditions::IVP1{0.0, ParamRef{"u0"}}};
  p.input_names = {"t", "u0", "lambda"};
  p.reference = [](std::span<const double> x) { return x[1] * std::exp(-x[2] * x[0]); };
  std::vector<std::vector<double>> rows;
  for (double u0 : {0.5, 1.25, 2.0})
    for (double lambda : {0.5, 1.25, 2.0})
      for (double t : linspace(0.0, 2.0, 41)) rows.push_back({t, u0, lambda});
  p.grid = rows_of(rows);
  return p;
}

Preset sho_bundle(const PresetOptions& o) {
  Preset p;
  p.name = "sho-bundle";
  p.batch_size = o.batch_size.value_or(64);
  p.problem.residual = [](const ResidualContext& c) {
    return std::vector<Var>{nth_derivative(c.u[0], c.coords[0], 2) + c.u[0]};
  };
  p.problem.coord_names = {"t"};
  p.problem.train = Generator::uniform1d(0.0, 2.0 * kPi, p.batch_size, Spacing::equally_spaced_noisy);
  p.problem.valid = Generator::uniform1d(0.0, 2.0 * kPi, p.batch_size, Spacing::uniform_random);
  p.layout.theta_ic = {{"u0", 0.0, 1.0}, {"v0", 0.0, 1.0}};
  // Many small batches: the bundle needs far more optimizer steps than the
  // single-solution presets to resolve the late-time end of the interval.
  finish_config(p, o, 5000, 5e-3, 32);
  p.config.networks = {net_spec(3, 1, o, p.config.seed, 0)};
  p.config.conditions = {conditions::IVP2{0.0, ParamRef{"u0"}, ParamRef{"v0"}}};
  p.input_names = {"t", "u0", "v0"};
  p.reference = [](std::span<const double> x) { return x[1] * std::cos(x[0]) + x[2] * std::sin(x[0]); };
  std::vector<std::vector<double>> rows;
  for (auto [u0, v0] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0}, std::pair{0.5, 0.5}})
    for (double t : linspace(0.0, 2.0 * kPi, 100)) rows.push_back({t, u0, v0});
  p.grid = rows_of(rows);
  return p;
}

}  // namespace

std::vector<Callback> step_decay(double lr, std::size_t epochs, std::span<const double> fractions,
                                 std::span<const double> factors) {
  if (fractions.size() != factors.size()) throw Error("step_decay: fractions and factors differ in length");
  std::vector<Callback> out;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const auto at = static_cast<std::size_t>(std::llround(fractions[i] * static_cast<double>(epochs)));
    out.push_back({Trigger::after_epoch(at), {actions::SetLearningRate{lr * factors[i]}}});
  }
  return out;
}

const std::vector<std::string>& solve_preset_names() {
  static const std::vector<std::string> names{"decay", "sho", "heat", "gravity", "poisson-gaussian"};
  return names;
}

const std::vector<std::string>& bundle_preset_names() {
  static const std::vector<std::string> names{"decay-bundle", "sho-bundle"};
  return names;
}

Preset make_preset(std::string_view name, const PresetOptions& options) {
  if (options.batch_size && *options.batch_size == 0) throw Error("batch size must be positive");
  if (options.lr && !(*options.lr > 0.0)) throw Error("learning rate must be positive");
  if (options.hidden) {
    for (std::size_t h : *options.hidden)
      if (h == 0) throw Error("hidden layer widths must be positive");
  }
  Preset p;
  if (name == "decay") p = decay(options);
  else if (name == "sho") p = sho(options);
  else if (name == "heat") p = heat(options);
  else if (name == "gravity") p = gravity(options);
  else if (name == "poisson-gaussian") p = poisson_gaussian(options);
  else if (name == "decay-bundle") p = decay_bundle(options);
  else if (name == "sho-bundle") p = sho_bundle(options);
  else throw Error("unknown preset '" + std::string(name) + "'");
  if (p.config.loss.kind == LossKind::h1 || p.config.loss.kind == LossKind::semi_h1)
    p.config.loss.domain_dims = all_dims(p.problem.coord_names.size());
  return p;
}

double gaussian_potential(double r) {
  return -std::erf(r / std::numbers::sqrt2) / (4.0 * kPi * r);
}

SolutionTable solution_table(const Preset& preset, const Solution& solution) {
  const Tensor u = solution(preset.grid);
  SolutionTable t;
  t.header = preset.input_names;
  if (u.cols() == 1) {
    t.header.push_back("u");
  } else {
    for (std::size_t k = 0; k < u.cols(); ++k) t.header.push_back("u" + std::to_string(k));
  }
  const bool exact = static_cast<bool>(preset.reference) && u.cols() == 1;
  if (exact) {
    t.header.push_back("u_exact");
    t.header.push_back("abs_error");
  }
  const std::size_t in_cols = preset.grid.cols();
  t.rows = Tensor({preset.grid.rows(), t.header.size()});
  for (std::size_t r = 0; r < preset.grid.rows(); ++r) {
    std::vector<double> x(in_cols);
    for (std::size_t c = 0; c < in_cols; ++c) {
      x[c] = preset.grid(r, c);
      t.rows(r, c) = x[c];
    }
    for (std::size_t k = 0; k < u.cols(); ++k) t.rows(r, in_cols + k) = u(r, k);
    if (exact) {
      const double ref = preset.reference(x);
      t.rows(r, in_cols + 1) = ref;
      t.rows(r, in_cols + 2) = std::abs(u(r, 0) - ref);
    }
  }
  return t;
}

void write_solution_csv(std::ostream& out, const SolutionTable& table) {
  for (std::size_t c = 0; c < table.header.size(); ++c) out << (c ? "," : "") << table.header[c];
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < table.rows.rows(); ++r) {
    for (std::size_t c = 0; c < table.rows.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", table.rows(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace neurodiff
