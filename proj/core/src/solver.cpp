#include "neurodiff/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "neurodiff/error.hpp"

namespace neurodiff {

namespace {

Var as_column_input(std::span<const Var> cols) {
  if (cols.size() == 1) return cols.front();
  return concat_cols(cols);
}

// Trial solutions for every unknown on graph `g`.
std::vector<Var> trial_solutions(const std::vector<BoundMLP>& nets, const std::vector<Condition>& conditions,
                                 std::span<const Var> coords, std::span<const Var> theta,
                                 const ParamBindings& params) {
  std::vector<Var> u;
  u.reserve(nets.size());
  for (std::size_t i = 0; i < nets.size(); ++i) {
    const BoundMLP& net = nets[i];
    const NetFn fn = [&net, theta](std::span<const Var> cols) {
      if (theta.empty()) return net(as_column_input(cols));
      std::vector<Var> all(cols.begin(), cols.end());
      all.insert(all.end(), theta.begin(), theta.end());
      return net(concat_cols(all));
    };
    const Var ui = reparameterize(conditions[i], coords, fn, params);
    if (ui.shape().cols != 1 || ui.shape().rows != coords.front().shape().rows) {
      throw ShapeError("trial solution " + std::to_string(i) + " has shape " + to_string(ui.shape()) +
                       ", expected one column per sample");
    }
    u.push_back(ui);
  }
  return u;
}

ParamBindings bind_params(const BundleLayout& layout, std::span<const Var> theta) {
  ParamBindings params;
  const auto all = layout.all();
  for (std::size_t j = 0; j < all.size(); ++j) params.emplace(all[j].name, theta[j]);
  return params;
}

Tensor column_of(const Tensor& t, std::size_t c) { return Tensor::column(t.column_values(c)); }

struct LossBuild {
  Var loss;
  std::vector<Var> parameters;
};

// Loss of `networks` on `batch` (coords then theta columns).
LossBuild build_loss(Graph& g, const Problem& problem, const std::vector<MLP>& networks,
                     const std::vector<Condition>& conditions, const BundleLayout& layout, std::size_t n_coords,
                     const LossSpec& spec, const Tensor& batch, bool parameter_grads) {
  if (batch.cols() != n_coords + layout.size()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) + " columns, expected " +
                     std::to_string(n_coords + layout.size()));
  }
  std::vector<Var> coords, theta;
  for (std::size_t c = 0; c < n_coords; ++c) coords.push_back(g.variable(column_of(batch, c), true));
  for (std::size_t j = 0; j < layout.size(); ++j) theta.push_back(g.constant(column_of(batch, n_coords + j)));
  const ParamBindings params = bind_params(layout, theta);

  LossBuild out;
  std::vector<BoundMLP> nets;
  for (const MLP& m : networks) {
    nets.push_back(m.bind(g, parameter_grads));
    out.parameters.insert(out.parameters.end(), nets.back().parameters.begin(), nets.back().parameters.end());
  }
  const std::vector<Var> u = trial_solutions(nets, conditions, coords, theta, params);
  const ResidualContext ctx{g, u, coords, params};
  const std::vector<Var> residuals = problem.residual(ctx);
  if (residuals.empty()) throw Error("residual function returned no equations");
  out.loss = loss(spec, as_column_input(residuals), coords);
  return out;
}

std::vector<Tensor> split_rows(const Tensor& batch, std::size_t parts) {
  const std::size_t n = batch.rows();
  parts = std::max<std::size_t>(1, std::min(parts, n));
  std::vector<Tensor> out;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t len = n / parts + (p < n % parts ? 1 : 0);
    Tensor chunk({len, batch.cols()});
    std::copy_n(batch.data().begin() + static_cast<std::ptrdiff_t>(begin * batch.cols()), len * batch.cols(),
                chunk.data().begin());
    out.push_back(std::move(chunk));
    begin += len;
  }
  return out;
}

Generator with_theta(const Generator& coords, const BundleLayout& layout) {
  if (layout.empty()) return coords;
  std::vector<double> lo, hi;
  for (const ParamRange& p : layout.all()) {
    lo.push_back(p.lo);
    hi.push_back(p.hi);
  }
  return coords * Generator::cube(std::move(lo), std::move(hi), coords.size());
}

void check_setup(const Problem& problem, const SolverConfig& config, const BundleLayout& layout) {
  if (!problem.residual) throw Error("problem has no residual function");
  if (problem.n_unknowns == 0) throw Error("problem must have at least one unknown");
  if (config.networks.size() != problem.n_unknowns)
    throw Error("config has " + std::to_string(config.networks.size()) + " networks for " +
                std::to_string(problem.n_unknowns) + " unknowns");
  if (config.conditions.size() != problem.n_unknowns)
    throw Error("config has " + std::to_string(config.conditions.size()) + " conditions for " +
                std::to_string(problem.n_unknowns) + " unknowns");
  if (config.batches_per_epoch == 0) throw Error("batches_per_epoch must be positive");
  if (config.accumulation_passes == 0) throw Error("accumulation_passes must be positive");
  if (problem.train.size() == 0 || problem.valid.size() == 0) throw Error("problem needs train and validation generators");
  if (problem.train.dim() != problem.valid.dim()) throw Error("train and validation generators differ in dimension");
  if (!problem.coord_names.empty() && problem.coord_names.size() != problem.train.dim())
    throw Error("coord_names has " + std::to_string(problem.coord_names.size()) + " entries for " +
                std::to_string(problem.train.dim()) + " coordinates");
  layout.validate();
  for (const Condition& c : config.conditions) neurodiff::validate(c);
  for (const MLPSpec& spec : config.networks) spec.validate();
}

[[noreturn]] void abort_training(const SolverState& s, std::size_t batch, const char* what) {
  const std::string kind(to_string(s.loss.kind));
  throw TrainingAborted("non-finite " + std::string(what) + " at epoch " + std::to_string(s.epoch + 1) + ", batch " +
                            std::to_string(batch) + " (loss " + kind + ")",
                        static_cast<long>(s.epoch + 1), static_cast<long>(batch), kind);
}

SolverState train(const Problem& problem, const BundleLayout& layout, const SolverConfig& config,
                  std::span<const Callback> callbacks) {
  check_setup(problem, config, layout);

  SolverState s;
  for (const MLPSpec& spec : config.networks) s.networks.push_back(MLP::init(spec));
  s.best_networks = s.networks;
  s.optimizer = make_optimizer(config.optimizer);
  s.rng = Rng(config.seed);
  s.loss = config.loss;
  s.log = config.log;
  s.conditions = config.conditions;
  s.layout = layout;
  s.n_coords = problem.train.dim();
  s.train_generator = with_theta(problem.train, layout);

  // The validation set is drawn once from its own stream and kept fixed.
  Rng valid_rng = Rng(config.seed).split(1);
  const Tensor valid_batch = with_theta(problem.valid, layout).sample(valid_rng);

  for (std::size_t e = 0; e < config.epochs && !s.stop_requested; ++e) {
    const LossSpec epoch_loss = s.loss;
    const double epoch_lr = s.optimizer->learning_rate();
    double train_sum = 0.0;
    for (std::size_t b = 0; b < config.batches_per_epoch; ++b) {
      const Tensor batch = s.train_generator->sample(s.rng);
      const std::vector<Tensor> chunks = split_rows(batch, config.accumulation_passes);
      const PassFn pass = [&](Graph& g, const Tensor& chunk) {
        LossBuild lb = build_loss(g, problem, s.networks, s.conditions, s.layout, s.n_coords, epoch_loss, chunk, true);
        return PassResult{lb.loss, std::move(lb.parameters)};
      };
      AccumulatedGradients acc = accumulate_gradients(pass, chunks);
      if (!std::isfinite(acc.loss)) abort_training(s, b + 1, "training loss");
      for (const Tensor& gr : acc.gradients)
        if (!gr.all_finite()) abort_training(s, b + 1, "gradient");

      std::vector<Tensor*> params;
      for (MLP& m : s.networks) {
        auto p = m.parameters();
        params.insert(params.end(), p.begin(), p.end());
      }
      s.optimizer->step(params, acc.gradients);
      ++s.step;
      train_sum += acc.loss;
    }

    const double train_loss = train_sum / static_cast<double>(config.batches_per_epoch);
    const double valid_loss = evaluate_loss(problem, s, valid_batch);
    if (!std::isfinite(valid_loss)) abort_training(s, config.batches_per_epoch, "validation loss");

    ++s.epoch;
    s.train_history.push_back(train_loss);
    s.valid_history.push_back(valid_loss);
    s.best_updated = valid_loss < s.best_valid_loss;
    if (s.best_updated) {
      s.best_valid_loss = valid_loss;
      s.best_networks = s.networks;
      s.best_epoch = s.epoch;
    }
    s.metrics.push_back(MetricsRow{s.epoch, train_loss, valid_loss, epoch_loss.kind, epoch_lr});

    run_callbacks(callbacks, s);
  }
  return s;
}

}  // namespace

Var ResidualContext::param(const std::string& name) const {
  const auto it = params.find(name);
  if (it == params.end()) throw Error("residual refers to unknown parameter '" + name + "'");
  return it->second;
}

Solution::Solution(std::vector<MLP> networks, std::vector<Condition> conditions, std::size_t n_coords,
                   BundleLayout layout)
    : networks_(std::move(networks)),
      conditions_(std::move(conditions)),
      n_coords_(n_coords),
      layout_(std::move(layout)) {
  if (networks_.size() != conditions_.size()) throw Error("solution needs one condition per network");
  if (n_coords_ == 0) throw Error("solution needs at least one coordinate");
}

std::vector<Var> Solution::build(Graph& graph, std::span<const Var> coords, std::span<const Var> theta) const {
  if (coords.size() != n_coords_)
    throw ShapeError("solution expects " + std::to_string(n_coords_) + " coordinate columns, got " +
                     std::to_string(coords.size()));
  if (theta.size() != layout_.size())
    throw ShapeError("solution expects " + std::to_string(layout_.size()) + " parameter columns, got " +
                     std::to_string(theta.size()));
  std::vector<BoundMLP> nets;
  for (const MLP& m : networks_) nets.push_back(m.bind(graph, false));
  return trial_solutions(nets, conditions_, coords, theta, bind_params(layout_, theta));
}

Tensor Solution::operator()(const Tensor& inputs) const {
  if (inputs.cols() != n_coords_ + layout_.size())
    throw ShapeError("solution input has " + std::to_string(inputs.cols()) + " columns, expected " +
                     std::to_string(n_coords_ + layout_.size()));
  Graph g;
  std::vector<Var> coords, theta;
  for (std::size_t c = 0; c < n_coords_; ++c) coords.push_back(g.constant(column_of(inputs, c)));
  for (std::size_t j = 0; j < layout_.size(); ++j) theta.push_back(g.constant(column_of(inputs, n_coords_ + j)));
  const std::vector<Var> u = build(g, coords, theta);
  Tensor out({inputs.rows(), u.size()});
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Tensor& col = u[k].value();
    for (std::size_t r = 0; r < inputs.rows(); ++r) out(r, k) = col[r];
  }
  return out;
}

SolverState fit(const Problem& problem, const SolverConfig& config, std::span<const Callback> callbacks) {
  return train(problem, BundleLayout{}, config, callbacks);
}

SolverState fit_bundle(const Problem& problem, const BundleLayout& layout, const SolverConfig& config,
                       std::span<const Callback> callbacks) {
  return train(problem, layout, config, callbacks);
}

Solution get_solution(const SolverState& state, Strategy strategy) {
  const auto& nets = strategy == Strategy::best ? state.best_networks : state.networks;
  return Solution(nets, state.conditions, state.n_coords, state.layout);
}

double evaluate_loss(const Problem& problem, const SolverState& state, const Tensor& batch) {
  Graph g;
  const LossBuild lb = build_loss(g, problem, state.networks, state.conditions, state.layout, state.n_coords,
                                  state.loss, batch, false);
  return lb.loss.item();
}

InverseResult fit_inverse(const Solution& solution, const InverseData& data, std::vector<double> init_theta,
                          std::size_t steps, double lr) {
  const std::size_t n = data.coords.rows();
  if (n == 0) throw Error("fit_inverse: no observations");
  if (data.coords.cols() != solution.n_coords())
    throw ShapeError("fit_inverse: observations have " + std::to_string(data.coords.cols()) +
                     " coordinate columns, solution expects " + std::to_string(solution.n_coords()));
  if (!(data.values.shape() == Shape{n, solution.n_unknowns()}))
    throw ShapeError("fit_inverse: values have shape " + to_string(data.values.shape()) + ", expected " +
                     to_string(Shape{n, solution.n_unknowns()}));
  const auto ranges = solution.layout().all();
  if (ranges.empty()) throw Error("fit_inverse: solution has no bundle parameters");
  if (init_theta.size() != ranges.size())
    throw Error("fit_inverse: expected " + std::to_string(ranges.size()) + " initial parameters, got " +
                std::to_string(init_theta.size()));
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    if (!(init_theta[j] >= ranges[j].lo && init_theta[j] <= ranges[j].hi))
      throw Error("fit_inverse: initial '" + ranges[j].name + "' is outside its range");
  }
  if (!(lr >= 0.0)) throw Error("fit_inverse: learning rate must be non-negative");

  // Mean squared mismatch at theta, and its gradient when requested.
  auto objective = [&](const std::vector<double>& theta, std::vector<double>* grad) {
    Graph g;
    std::vector<Var> coords, theta_vars, theta_cols;
    for (std::size_t c = 0; c < solution.n_coords(); ++c) coords.push_back(g.constant(column_of(data.coords, c)));
    for (double t : theta) {
      theta_vars.push_back(g.variable(Tensor::scalar(t), true));
      theta_cols.push_back(broadcast(theta_vars.back(), {n, 1}));
    }
    const std::vector<Var> u = solution.build(g, coords, theta_cols);
    const Var diff = as_column_input(u) - g.constant(data.values);
    const Var l = mean(square(diff));
    if (grad) {
      const std::vector<Var> gs = g.backward(l, theta_vars);
      grad->clear();
      for (const Var& gv : gs) grad->push_back(gv.item());
    }
    return l.item();
  };

  std::vector<double> theta = std::move(init_theta);
  std::vector<double> grad;
  InverseResult result;
  for (std::size_t k = 0; k < steps; ++k) {
    objective(theta, &grad);
    for (std::size_t j = 0; j < theta.size(); ++j)
      theta[j] = std::clamp(theta[j] - lr * grad[j], ranges[j].lo, ranges[j].hi);
    ++result.steps;
  }
  result.loss = objective(theta, nullptr);
  result.theta = std::move(theta);
  return result;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "epoch,train_loss,valid_loss,loss_kind,lr\n";
  char buf[160];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,", r.epoch, r.train_loss, r.valid_loss);
    out << buf << to_string(r.loss_kind);
    std::snprintf(buf, sizeof buf, ",%.17g\n", r.lr);
    out << buf;
  }
}

}  // namespace neurodiff
