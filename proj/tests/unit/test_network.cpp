#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "neurodiff/error.hpp"
#include "neurodiff/network.hpp"
#include "oracles.hpp"

using namespace neurodiff;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("neurodiff_test_" + name);
}

}  // namespace

TEST(MlpInit, ParameterCounts) {
  MLPSpec linear;
  linear.hidden_dims = {};
  EXPECT_EQ(MLP::init(linear).parameter_count(), 2u);
  EXPECT_EQ(MLP::init(linear).num_layers(), 1u);

  MLPSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {32, 32};
  const MLP m = MLP::init(spec);
  EXPECT_EQ(m.parameter_count(), 1185u);
  EXPECT_EQ(m.weight(0).shape(), (Shape{32, 2}));
  EXPECT_EQ(m.bias(0).shape(), (Shape{1, 32}));
  EXPECT_EQ(m.weight(2).shape(), (Shape{1, 32}));
}

TEST(MlpInit, XavierBoundsZeroBiasAndDeterminism) {
  MLPSpec spec;
  spec.input_dim = 3;
  spec.hidden_dims = {16};
  spec.output_dim = 2;
  spec.seed = 99;
  const MLP a = MLP::init(spec);
  const MLP b = MLP::init(spec);
  EXPECT_EQ(a.flat_parameters(), b.flat_parameters());
  const double bound0 = std::sqrt(6.0 / (3 + 16));
  for (double w : a.weight(0).data()) EXPECT_LE(std::abs(w), bound0);
  for (double v : a.bias(0).data()) EXPECT_EQ(v, 0.0);
  spec.seed = 100;
  EXPECT_NE(MLP::init(spec).flat_parameters(), a.flat_parameters());
}

TEST(MlpInit, InvalidSpec) {
  MLPSpec spec;
  spec.hidden_dims = {4, 0};
  EXPECT_THROW((void)MLP::init(spec), Error);
  spec.hidden_dims = {4};
  spec.input_dim = 0;
  EXPECT_THROW((void)MLP::init(spec), Error);
}

TEST(MlpForward, ZeroWeightsGiveBias) {
  MLPSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {5};
  MLP m = MLP::init(spec);
  std::vector<double> zeros(m.parameter_count(), 0.0);
  m.set_flat_parameters(zeros);
  const Tensor out = m.evaluate(Tensor::from_rows({{1.0, 2.0}, {-3.0, 0.5}}));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(MlpForward, IdentityLinearLayer) {
  MLPSpec spec;
  spec.input_dim = 1;
  spec.hidden_dims = {};
  MLP m = MLP::init(spec);
  m.weight(0)[0] = 1.0;
  m.bias(0)[0] = 0.0;
  const Tensor x = Tensor::column(std::vector<double>{-1.5, 0.0, 2.25});
  EXPECT_EQ(m.evaluate(x), x);
}

TEST(MlpForward, DimensionMismatch) {
  MLPSpec spec;
  spec.input_dim = 2;
  const MLP m = MLP::init(spec);
  EXPECT_THROW((void)m.evaluate(Tensor({4, 3})), ShapeError);
}

TEST(MlpForward, WeightGradientMatchesFiniteDifference) {
  MLPSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {8, 8};
  spec.seed = 5;
  const MLP m = MLP::init(spec);
  const Tensor batch = Tensor::from_rows({{0.3, -0.2}, {1.1, 0.7}, {-0.5, 0.9}});
  Graph g;
  const BoundMLP net = m.bind(g);
  const Var grad = g.backward(sum(net(g.constant(batch))), net.parameters[0]);
  const Tensor fd = oracle::fd_gradient(
      [&](const Tensor& w) {
        MLP copy = m;
        copy.weight(0) = w;
        const Tensor out = copy.evaluate(batch);
        double s = 0;
        for (double v : out.data()) s += v;
        return s;
      },
      m.weight(0));
  for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_TRUE(oracle::close(grad.value()[i], fd[i], 1e-6, 1e-9));
}

TEST(MlpForward, BatchEqualsSingleSamples) {
  MLPSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {32, 32};
  spec.seed = 17;
  const MLP m = MLP::init(spec);
  Rng rng(3);
  const Tensor batch = oracle::random_tensor(rng, {64, 2});
  const Tensor out = m.evaluate(batch);
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    const Tensor one = m.evaluate(Tensor::from_rows({{batch(r, 0), batch(r, 1)}}));
    EXPECT_NEAR(out(r, 0), one.item(), 1e-14);
  }
}

TEST(MlpForward, SecondDerivativeMatchesFiniteDifference) {
  MLPSpec spec;
  spec.input_dim = 1;
  spec.seed = 23;
  const MLP m = MLP::init(spec);
  for (double x0 : {-1.3, 0.0, 0.4, 1.9}) {
    Graph g;
    const Var x = g.variable(Tensor::scalar(x0));
    const double ad = nth_derivative(m.bind(g, false)(x), x, 2).item();
    const double fd = oracle::second_diff([&](double v) { return m.evaluate(Tensor::scalar(v)).item(); }, x0, 1e-4);
    EXPECT_TRUE(oracle::close(ad, fd, 1e-5, 1e-7)) << x0 << ": " << ad << " vs " << fd;
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  MLPSpec spec;
  spec.input_dim = 3;
  spec.hidden_dims = {7, 5};
  spec.output_dim = 2;
  spec.activation = Activation::sin;
  spec.seed = 0xDEADBEEF;
  MLP m = MLP::init(spec);
  m.bias(1)[2] = -0.1234567890123;
  const auto path = temp_path("roundtrip.ndnet");
  m.save(path);
  const MLP back = MLP::load(path);
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.spec().activation, Activation::sin);
  const Tensor batch = Tensor::from_rows({{0.1, 0.2, 0.3}, {-1.0, 2.0, 0.5}});
  EXPECT_EQ(back.evaluate(batch), m.evaluate(batch));
  std::filesystem::remove(path);
}

TEST(Checkpoint, TruncatedAndCorruptFilesNameTheField) {
  MLPSpec spec;
  spec.input_dim = 2;
  const MLP m = MLP::init(spec);
  std::ostringstream out;
  m.write(out);
  const std::string bytes = out.str();

  for (std::size_t cut : {std::size_t{3}, std::size_t{9}, std::size_t{20}, bytes.size() - 4}) {
    std::istringstream in(bytes.substr(0, cut));
    try {
      (void)MLP::read(in);
      FAIL() << "no error at cut " << cut;
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find("field '"), std::string::npos) << e.what();
    }
  }
  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream in_magic(bad);
  EXPECT_THROW((void)MLP::read(in_magic), FormatError);
  bad = bytes;
  bad[8] = 9;  // version
  std::istringstream in_version(bad);
  try {
    (void)MLP::read(in_version);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  bad = bytes;
  bad[9] = 7;  // activation tag
  std::istringstream in_act(bad);
  EXPECT_THROW((void)MLP::read(in_act), FormatError);
  EXPECT_THROW((void)MLP::load(temp_path("does_not_exist.ndnet")), Error);
}

TEST(Activation, ParseAndSoftplus) {
  EXPECT_EQ(parse_activation("softplus"), Activation::softplus);
  EXPECT_EQ(to_string(Activation::sin), "sin");
  EXPECT_THROW((void)parse_activation("relu"), Error);
  Graph g;
  EXPECT_NEAR(activate(Activation::softplus, g.constant(0.0)).item(), std::log(2.0), 1e-15);
}
