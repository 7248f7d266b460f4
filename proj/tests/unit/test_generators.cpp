#include <gtest/gtest.h>

#include <cmath>

#include "neurodiff/error.hpp"
#include "neurodiff/generators.hpp"

using namespace neurodiff;

TEST(Uniform1D, EquallySpacedGrid) {
  Rng rng(0);
  const Tensor s = Generator::uniform1d(0, 1, 5, Spacing::equally_spaced).sample(rng);
  ASSERT_EQ(s.shape(), (Shape{5, 1}));
  const double want[] = {0, 0.25, 0.5, 0.75, 1};
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(s[i], want[i]);
}

TEST(Uniform1D, NoisyStaysNearGridAndInBounds) {
  const Generator g = Generator::uniform1d(-1, 3, 41, Spacing::equally_spaced_noisy);
  const double h = 4.0 / 40;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Tensor s = g.sample(rng);
    for (std::size_t i = 0; i < 41; ++i) {
      EXPECT_GE(s[i], -1.0);
      EXPECT_LE(s[i], 3.0);
      EXPECT_LE(std::abs(s[i] - (-1.0 + h * i)), h / 2 + 1e-15);
    }
  }
}

TEST(Uniform1D, RandomContainmentAndDeterminism) {
  const Generator g = Generator::uniform1d(2, 5, 300);
  Rng a(11), b(11), c(12);
  const Tensor sa = g.sample(a);
  EXPECT_EQ(sa, g.sample(b));
  EXPECT_NE(sa, g.sample(c));
  for (double v : sa.data()) {
    EXPECT_GE(v, 2.0);
    EXPECT_LE(v, 5.0);
  }
  // consecutive batches from one stream differ
  EXPECT_NE(g.sample(a), sa);
}

TEST(Uniform1D, InvalidArguments) {
  EXPECT_THROW((void)Generator::uniform1d(1, 1, 5), Error);
  EXPECT_THROW((void)Generator::uniform1d(0, 1, 0), Error);
  EXPECT_THROW((void)Generator::cube({0, 0}, {1}, 5), Error);
  EXPECT_THROW((void)Generator::cube({0, 2}, {1, 1}, 5), Error);
}

TEST(Cube, MeanAndContainment) {
  Rng rng(2024);
  const Tensor s = Generator::cube({0, 0, 0}, {1, 1, 1}, 1000).sample(rng);
  ASSERT_EQ(s.shape(), (Shape{1000, 3}));
  for (std::size_t d = 0; d < 3; ++d) {
    double m = 0;
    for (std::size_t r = 0; r < 1000; ++r) {
      EXPECT_GE(s(r, d), 0.0);
      EXPECT_LE(s(r, d), 1.0);
      m += s(r, d);
    }
    EXPECT_NEAR(m / 1000, 0.5, 0.05);
  }
}

TEST(Composition, ProductPairsByIndex) {
  Rng rng(0);
  const Generator a = Generator::fixed(Tensor::column(std::vector<double>{1, 2}));
  const Generator b = Generator::fixed(Tensor::column(std::vector<double>{10, 20}));
  EXPECT_EQ((a * b).sample(rng), Tensor::from_rows({{1, 10}, {2, 20}}));
  EXPECT_THROW((void)(a * Generator::uniform1d(0, 1, 3)), Error);
}

TEST(Composition, MeshAndConcatSizes) {
  Rng rng(0);
  const Generator a = Generator::uniform1d(0, 1, 3, Spacing::equally_spaced);
  const Generator b = Generator::uniform1d(5, 6, 4);
  const Generator m = a ^ b;
  EXPECT_EQ(m.size(), 12u);
  EXPECT_EQ(m.dim(), 2u);
  const Tensor s = m.sample(rng);
  EXPECT_EQ(s.shape(), (Shape{12, 2}));
  // every (a_i, b_j) pair appears exactly once
  for (std::size_t i = 0; i < 3; ++i) {
    int count = 0;
    for (std::size_t r = 0; r < 12; ++r) count += s(r, 0) == 0.5 * i;
    EXPECT_EQ(count, 4);
  }
  const Generator c = a + Generator::uniform1d(7, 8, 5);
  EXPECT_EQ(c.size(), 8u);
  EXPECT_EQ(c.sample(rng).rows(), 8u);
  EXPECT_THROW((void)(a + m), Error);
}

TEST(Composition, FilterKeepsOnlyAcceptedPoints) {
  const Generator disk = Generator::filter(Generator::cube({-1, -1}, {1, 1}, 200),
                                           [](std::span<const double> p) { return p[0] * p[0] + p[1] * p[1] < 1; });
  Rng rng(5);
  const Tensor s = disk.sample(rng);
  EXPECT_EQ(s.rows(), 200u);
  for (std::size_t r = 0; r < s.rows(); ++r) EXPECT_LT(s(r, 0) * s(r, 0) + s(r, 1) * s(r, 1), 1.0);
}

TEST(Composition, FilterRejectingEverythingTerminates) {
  const Generator none =
      Generator::filter(Generator::uniform1d(0, 1, 10), [](std::span<const double>) { return false; });
  Rng rng(0);
  EXPECT_THROW((void)none.sample(rng), Error);
}

TEST(Composition, FilterOnThinSetReturnsWhatItFound) {
  // Only the point 0 of an equally spaced grid passes; the loop gives up
  // after the bounded number of rounds and returns the accepted points.
  const Generator thin = Generator::filter(Generator::uniform1d(0, 1, 11, Spacing::equally_spaced),
                                           [](std::span<const double> p) { return p[0] == 0.0; });
  Rng rng(0);
  const Tensor s = thin.sample(rng);
  EXPECT_EQ(s.rows(), 11u);  // one per round, 100 rounds available
  for (double v : s.data()) EXPECT_EQ(v, 0.0);
}

TEST(Composition, TransformMapsPoints) {
  const Generator polar = Generator::transform(
      Generator::uniform1d(0, 1, 16),
      [](std::span<const double> in, std::span<double> out) {
        out[0] = std::cos(2 * M_PI * in[0]);
        out[1] = std::sin(2 * M_PI * in[0]);
      },
      2);
  Rng rng(3);
  const Tensor s = polar.sample(rng);
  EXPECT_EQ(s.shape(), (Shape{16, 2}));
  for (std::size_t r = 0; r < 16; ++r) EXPECT_NEAR(s(r, 0) * s(r, 0) + s(r, 1) * s(r, 1), 1.0, 1e-14);
}

TEST(Resized, ChangesBatchSize) {
  const Generator g = Generator::cube({0}, {1}, 10) * Generator::uniform1d(0, 1, 10);
  EXPECT_EQ(g.resized(64).size(), 64u);
  Rng rng(0);
  EXPECT_EQ(g.resized(64).sample(rng).rows(), 64u);
  EXPECT_THROW((void)Generator::fixed(Tensor({3, 1})).resized(4), Error);
  EXPECT_THROW((void)Generator().sample(rng), Error);
  EXPECT_EQ(Generator().size(), 0u);
}

TEST(Rng, SplitStreamsAreIndependentAndStable) {
  const Rng root(42);
  Rng a = root.split(1), b = root.split(1), c = root.split(2);
  const double x = a.uniform();
  EXPECT_EQ(x, b.uniform());
  EXPECT_NE(x, c.uniform());
  Rng d(42);
  double mean = 0;
  for (int i = 0; i < 20000; ++i) mean += d.uniform();
  EXPECT_NEAR(mean / 20000, 0.5, 0.01);
  Rng e(7);
  double m = 0, v = 0;
  for (int i = 0; i < 20000; ++i) {
    const double z = e.normal();
    m += z;
    v += z * z;
  }
  EXPECT_NEAR(m / 20000, 0.0, 0.03);
  EXPECT_NEAR(v / 20000, 1.0, 0.05);
}
