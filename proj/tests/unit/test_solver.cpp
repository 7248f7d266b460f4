#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "neurodiff/error.hpp"
#include "neurodiff/solver.hpp"
#include "oracles.hpp"

using namespace neurodiff;
using namespace neurodiff::conditions;

namespace {

Problem decay_problem(std::size_t n = 64) {
  Problem p;
  p.residual = [](const ResidualContext& c) {
    return std::vector<Var>{c.graph.backward(sum(c.u[0]), c.coords[0]) + c.u[0]};
  };
  p.coord_names = {"t"};
  p.train = Generator::uniform1d(0, 2, n, Spacing::equally_spaced_noisy);
  p.valid = Generator::uniform1d(0, 2, n, Spacing::equally_spaced);
  return p;
}

SolverConfig decay_config(std::size_t epochs, std::uint64_t seed = 1) {
  SolverConfig c;
  MLPSpec net;
  net.hidden_dims = {16, 16};
  net.seed = seed;
  c.networks = {net};
  c.conditions = {IVP1{0.0, 1.0}};
  c.optimizer = AdamConfig{1e-2};
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

// du/dt + lambda u = 0, u(0) = u0 with (u0, lambda) bundle inputs.
Problem decay_family(std::size_t n = 64) {
  Problem p = decay_problem(n);
  p.residual = [](const ResidualContext& c) {
    return std::vector<Var>{c.graph.backward(sum(c.u[0]), c.coords[0]) + c.param("lambda") * c.u[0]};
  };
  return p;
}

BundleLayout decay_layout() { return BundleLayout{{{"u0", 0.5, 2.0}}, {{"lambda", 0.5, 2.0}}}; }

SolverConfig bundle_config(std::size_t epochs) {
  SolverConfig c = decay_config(epochs);
  c.networks[0].input_dim = 3;
  c.conditions = {IVP1{0.0, ParamRef{"u0"}}};
  return c;
}

}  // namespace

TEST(Fit, ZeroEpochsKeepsInitialParameters) {
  const SolverConfig cfg = decay_config(0);
  const SolverState s = fit(decay_problem(), cfg);
  EXPECT_EQ(s.epoch, 0u);
  EXPECT_EQ(s.step, 0u);
  EXPECT_TRUE(s.train_history.empty());
  EXPECT_EQ(s.networks[0], MLP::init(cfg.networks[0]));
  const Solution sol = get_solution(s);
  EXPECT_EQ(sol(Tensor::scalar(0.0)).item(), 1.0);
}

TEST(Fit, ConditionExactAfterTraining) {
  const SolverState s = fit(decay_problem(), decay_config(30));
  for (Strategy st : {Strategy::best, Strategy::latest}) EXPECT_EQ(get_solution(s, st)(Tensor::scalar(0.0)).item(), 1.0);
}

TEST(Fit, HistoriesAndBestSnapshot) {
  const Problem p = decay_problem();
  const SolverState s = fit(p, decay_config(60));
  EXPECT_EQ(s.train_history.size(), 60u);
  EXPECT_EQ(s.valid_history.size(), 60u);
  EXPECT_EQ(s.metrics.size(), 60u);
  EXPECT_EQ(s.step, 60u);
  EXPECT_EQ(s.metrics.back().epoch, 60u);
  double best = INFINITY;
  for (std::size_t i = 0; i < 60; ++i) best = std::min(best, s.valid_history[i]);
  EXPECT_EQ(s.best_valid_loss, best);
  EXPECT_EQ(s.valid_history[s.best_epoch - 1], best);

  // best-strategy validation loss never exceeds latest
  Rng vrng = Rng(1).split(1);
  const Tensor vbatch = p.valid.sample(vrng);
  SolverState best_view;
  best_view.networks = s.best_networks;
  best_view.conditions = s.conditions;
  best_view.n_coords = 1;
  best_view.loss = s.loss;
  EXPECT_LE(evaluate_loss(p, best_view, vbatch), evaluate_loss(p, s, vbatch));
  EXPECT_EQ(evaluate_loss(p, best_view, vbatch), s.best_valid_loss);
}

TEST(Fit, LossDecreasesOnDecay) {
  const SolverState s = fit(decay_problem(), decay_config(300));
  EXPECT_LT(s.valid_history.back(), 0.05 * s.valid_history.front());
}

TEST(Fit, DeterministicHistories) {
  const SolverState a = fit(decay_problem(), decay_config(40, 7));
  const SolverState b = fit(decay_problem(), decay_config(40, 7));
  EXPECT_EQ(a.train_history, b.train_history);
  EXPECT_EQ(a.valid_history, b.valid_history);
  EXPECT_EQ(a.networks, b.networks);
  const SolverState c = fit(decay_problem(), decay_config(40, 8));
  EXPECT_NE(a.train_history, c.train_history);
}

TEST(Fit, ValidationDoesNotMutate) {
  const Problem p = decay_problem();
  const SolverState s = fit(p, decay_config(10));
  const Tensor batch = Tensor::column(linspace(0, 2, 33));
  const double a = evaluate_loss(p, s, batch);
  const double b = evaluate_loss(p, s, batch);
  EXPECT_EQ(a, b);
  const SolverState again = fit(p, decay_config(10));
  EXPECT_EQ(again.networks, s.networks);
}

TEST(Fit, AccumulationMatchesSingleBatch) {
  for (std::size_t k : {2u, 4u}) {
    SolverConfig one = decay_config(5);
    one.optimizer = SgdConfig{1e-2, 0.0};
    SolverConfig acc = one;
    acc.accumulation_passes = k;
    const SolverState a = fit(decay_problem(), one);
    const SolverState b = fit(decay_problem(), acc);
    const auto pa = a.networks[0].flat_parameters(), pb = b.networks[0].flat_parameters();
    double worst = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) worst = std::max(worst, std::abs(pa[i] - pb[i]));
    EXPECT_LT(worst, 1e-10) << k;
    for (std::size_t e = 0; e < 5; ++e) EXPECT_NEAR(a.train_history[e], b.train_history[e], 1e-10);
  }
}

TEST(Fit, BatchesPerEpochTakesMoreSteps) {
  SolverConfig cfg = decay_config(7);
  cfg.batches_per_epoch = 3;
  const SolverState s = fit(decay_problem(), cfg);
  EXPECT_EQ(s.step, 21u);
  EXPECT_EQ(s.train_history.size(), 7u);
}

TEST(Fit, ConfigErrors) {
  SolverConfig cfg = decay_config(1);
  cfg.conditions.clear();
  EXPECT_THROW((void)fit(decay_problem(), cfg), Error);
  cfg = decay_config(1);
  cfg.networks[0].input_dim = 2;
  EXPECT_THROW((void)fit(decay_problem(), cfg), Error);
  cfg = decay_config(1);
  cfg.batches_per_epoch = 0;
  EXPECT_THROW((void)fit(decay_problem(), cfg), Error);
  cfg = decay_config(1);
  cfg.accumulation_passes = 0;
  EXPECT_THROW((void)fit(decay_problem(), cfg), Error);
  Problem p = decay_problem();
  p.valid = Generator::cube({0, 0}, {1, 1}, 4);
  EXPECT_THROW((void)fit(p, decay_config(1)), Error);
  // residual names a parameter that does not exist
  EXPECT_THROW((void)fit(decay_family(), decay_config(1)), Error);
}

TEST(Fit, NonFiniteLossAborts) {
  Problem p = decay_problem();
  p.residual = [](const ResidualContext& c) { return std::vector<Var>{ln(c.u[0] - 10.0)}; };
  try {
    (void)fit(p, decay_config(5));
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("epoch 1"), std::string::npos) << what;
    EXPECT_NE(what.find("mse"), std::string::npos) << what;
  }
}

TEST(Fit, SgdAndAdamBothTrain) {
  SolverConfig cfg = decay_config(200);
  cfg.optimizer = SgdConfig{5e-2, 0.9};
  const SolverState s = fit(decay_problem(), cfg);
  EXPECT_EQ(s.optimizer->name(), "sgd");
  EXPECT_LT(s.valid_history.back(), 0.2 * s.valid_history.front());
}

TEST(Fit, SystemOfTwoUnknowns) {
  // u' = v, v' = -u with u(0) = 0, v(0) = 1.
  Problem p;
  p.n_unknowns = 2;
  p.coord_names = {"t"};
  p.residual = [](const ResidualContext& c) {
    const Var du = c.graph.backward(sum(c.u[0]), c.coords[0]);
    const Var dv = c.graph.backward(sum(c.u[1]), c.coords[0]);
    return std::vector<Var>{du - c.u[1], dv + c.u[0]};
  };
  p.train = Generator::uniform1d(0, 1, 32);
  p.valid = Generator::uniform1d(0, 1, 32, Spacing::equally_spaced);
  SolverConfig cfg = decay_config(150);
  MLPSpec second = cfg.networks[0];
  second.seed = 2;
  cfg.networks.push_back(second);
  cfg.conditions = {IVP1{0.0, 0.0}, IVP1{0.0, 1.0}};
  const SolverState s = fit(p, cfg);
  const Tensor out = get_solution(s)(Tensor::column(std::vector<double>{0.0, 0.5}));
  EXPECT_EQ(out.shape(), (Shape{2, 2}));
  EXPECT_EQ(out(0, 0), 0.0);
  EXPECT_EQ(out(0, 1), 1.0);
  EXPECT_LT(s.valid_history.back(), s.valid_history.front());
}

TEST(Solution, VectorizedEqualsScalarCalls) {
  const SolverState s = fit(decay_problem(), decay_config(20));
  const Solution sol = get_solution(s);
  const auto ts = linspace(0, 2, 50);
  const Tensor all = sol(Tensor::column(ts));
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_NEAR(all[i], sol(Tensor::scalar(ts[i])).item(), 1e-14);
  EXPECT_THROW((void)sol(Tensor({3, 2})), Error);
}

TEST(Bundle, ExactAtInitialTimeAndCallableAnywhere) {
  const SolverState s = fit_bundle(decay_family(), decay_layout(), bundle_config(20));
  const Solution sol = get_solution(s);
  ASSERT_EQ(sol.layout().size(), 2u);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const double u0 = rng.uniform(0.5, 2.0), lam = rng.uniform(0.5, 2.0);
    EXPECT_EQ(sol(Tensor::from_rows({{0.0, u0, lam}})).item(), u0);
  }
}

TEST(Bundle, LayoutErrors) {
  BundleLayout bad = decay_layout();
  bad.theta_eq[0].name = "u0";
  EXPECT_THROW((void)fit_bundle(decay_family(), bad, bundle_config(1)), Error);
  bad = decay_layout();
  bad.theta_ic[0].lo = 3.0;
  EXPECT_THROW((void)fit_bundle(decay_family(), bad, bundle_config(1)), Error);
  SolverConfig cfg = bundle_config(1);
  cfg.conditions = {IVP1{0.0, ParamRef{"nope"}}};
  EXPECT_THROW((void)fit_bundle(decay_family(), decay_layout(), cfg), Error);
}

TEST(Inverse, RecoversParametersOfFrozenBundle) {
  const SolverState s = fit_bundle(decay_family(), decay_layout(), bundle_config(200));
  const Solution sol = get_solution(s);
  // Self-consistency: data from the bundle itself at theta = (u0 0.7, lambda 1.3).
  const auto ts = linspace(0, 2, 20);
  Tensor inputs({20, 3});
  for (std::size_t i = 0; i < 20; ++i) {
    inputs(i, 0) = ts[i];
    inputs(i, 1) = 0.7;
    inputs(i, 2) = 1.3;
  }
  const InverseData data{Tensor::column(ts), sol(inputs)};
  const InverseResult r = fit_inverse(sol, data, {1.5, 0.8}, 3000, 0.5);
  EXPECT_NEAR(r.theta[0], 0.7, 0.05);
  EXPECT_NEAR(r.theta[1], 1.3, 0.05);
  EXPECT_EQ(r.steps, 3000u);

  const InverseResult at_opt = fit_inverse(sol, data, {0.7, 1.3}, 100, 0.5);
  EXPECT_NEAR(at_opt.theta[0], 0.7, 1e-6);
  EXPECT_NEAR(at_opt.theta[1], 1.3, 1e-6);
  EXPECT_LT(at_opt.loss, 1e-20);

  const InverseResult none = fit_inverse(sol, data, {1.5, 0.8}, 0, 0.5);
  EXPECT_EQ(none.theta, (std::vector<double>{1.5, 0.8}));
}

TEST(Inverse, ClipsToRangesAndValidates) {
  const SolverState s = fit_bundle(decay_family(), decay_layout(), bundle_config(5));
  const Solution sol = get_solution(s);
  // Data far above anything the bundle can produce drives u0 to its bound.
  const InverseData high{Tensor::column(std::vector<double>{0.0, 0.1}), Tensor::column(std::vector<double>{50.0, 50.0})};
  const InverseResult r = fit_inverse(sol, high, {1.0, 1.0}, 50, 0.5);
  EXPECT_EQ(r.theta[0], 2.0);
  EXPECT_GE(r.theta[1], 0.5);
  EXPECT_LE(r.theta[1], 2.0);

  EXPECT_THROW((void)fit_inverse(sol, InverseData{Tensor({0, 1}), Tensor({0, 1})}, {1, 1}, 5, 0.1), Error);
  EXPECT_THROW((void)fit_inverse(sol, high, {1.0}, 5, 0.1), Error);
  EXPECT_THROW((void)fit_inverse(sol, high, {3.0, 1.0}, 5, 0.1), Error);
  const SolverState plain = fit(decay_problem(), decay_config(0));
  EXPECT_THROW((void)fit_inverse(get_solution(plain), high, {}, 5, 0.1), Error);
}

TEST(Metrics, CsvFormat) {
  const SolverState s = fit(decay_problem(), decay_config(3));
  std::ostringstream out;
  write_metrics_csv(out, s.metrics);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,train_loss,valid_loss,loss_kind,lr");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.rfind(std::to_string(rows) + ",", 0), 0u);
    EXPECT_NE(line.find(",mse,"), std::string::npos);
  }
  EXPECT_EQ(rows, 3);
}

TEST(Precision, Float32ModeRoundsValues) {
  set_precision(Precision::f32);
  const SolverState s = fit(decay_problem(), decay_config(3));
  set_precision(Precision::f64);
  for (double v : s.train_history) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
}
