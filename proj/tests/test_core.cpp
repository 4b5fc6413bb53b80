#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "advrec/core/adam.hpp"
#include "advrec/core/gradcheck.hpp"
#include "advrec/core/parallel.hpp"
#include "advrec/core/rng.hpp"

using namespace advrec;

TEST(Softmax, UniformOnZeros) {
  auto p = softmax(Vec{0, 0, 0});
  for (double x : p) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, ShiftInvariant) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Vec v(7);
    for (double& x : v) x = rng.normal(0, 3);
    const double c = rng.uniform(-100, 100);
    Vec w = v;
    for (double& x : w) x += c;
    auto a = softmax(v), b = softmax(w);
    for (std::size_t i = 0; i < v.dim(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
    EXPECT_EQ(argmax(a), argmax(b));
    double s = 0;
    for (double x : a) s += x;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Softmax, MatchesDirectFormula) {
  auto p = softmax(Vec{1, 2, 3});
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(p[0], std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(p[1], std::exp(2.0) / z, 1e-12);
  EXPECT_NEAR(p[2], std::exp(3.0) / z, 1e-12);
}

TEST(Softmax, EmptyIsDimensionError) {
  try {
    softmax(Vec{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(CrossEntropy, Examples) {
  EXPECT_NEAR(cross_entropy(Vec{1, 0}, Vec{1, 0}), 0.0, 1e-12);
  EXPECT_NEAR(cross_entropy(Vec{0.5, 0.5}, Vec{0, 1}), std::log(2.0), 1e-12);
  EXPECT_NEAR(cross_entropy(Vec{0.25, 0.75}, Vec{1, 0}), std::log(4.0), 1e-12);
  // Clamped, not infinite.
  EXPECT_NEAR(cross_entropy(Vec{0, 1}, Vec{1, 0}), -std::log(1e-12), 1e-9);
}

TEST(CrossEntropy, DimMismatch) {
  try {
    cross_entropy(Vec{0.5, 0.5}, Vec{1, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(CrossEntropy, Nonnegative) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    Vec l(4);
    for (double& x : l) x = rng.normal();
    EXPECT_GE(cross_entropy(softmax(l), one_hot(4, rng.below(4))), 0.0);
  }
}

TEST(FiniteDiff, Examples) {
  auto g = finite_diff_grad([](const Vec& x) { return x[0] * x[0] + x[1] * x[1]; }, Vec{1, 2});
  EXPECT_NEAR(g[0], 2.0, 1e-6);
  EXPECT_NEAR(g[1], 4.0, 1e-6);
  auto z = finite_diff_grad([](const Vec&) { return 3.0; }, Vec{1, 2, 3});
  for (double x : z) EXPECT_EQ(x, 0.0);
  auto p = finite_diff_grad([](const Vec& x) { return x[0] * x[1]; }, Vec{3, 5});
  EXPECT_NEAR(p[0], 5.0, 1e-6);
  EXPECT_NEAR(p[1], 3.0, 1e-6);
}

TEST(FiniteDiff, NonFiniteIsNumericError) {
  try {
    finite_diff_grad([](const Vec& x) { return std::log(x[0]); }, Vec{0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
}

TEST(GradCheck, Examples) {
  EXPECT_TRUE(grad_check(Vec{1, 2}, Vec{1, 2}, 1e-4));
  EXPECT_FALSE(grad_check(Vec{1, 0}, Vec{0, 1}, 1e-4));
  EXPECT_TRUE(grad_check(Vec{0, 0}, Vec{0, 0}, 1e-4));
  EXPECT_THROW(grad_check(Vec{1}, Vec{1, 2}, 1e-4), Error);
}

TEST(Rng, StreamsAreDeterministicAndDistinct) {
  Rng a(stream_key(5, {1, 2})), b(stream_key(5, {1, 2})), c(stream_key(5, {2, 1}));
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
}

TEST(Rng, BelowAndCategoricalInRange) {
  Rng r(9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    auto v = r.below(5);
    ASSERT_LT(v, 5u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 5u);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(r.categorical({0.0, 1.0, 0.0}), 1u);
}

TEST(Adam, MinimizesQuadratic) {
  std::vector<double> x{3.0, -2.0};
  Adam opt({0.05});
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> g{2 * x[0], 2 * x[1]};
    opt.step({&x}, {&g});
  }
  EXPECT_NEAR(x[0], 0.0, 1e-2);
  EXPECT_NEAR(x[1], 0.0, 1e-2);
}

TEST(Adam, FirstStepHasMagnitudeLr) {
  std::vector<double> x{1.0};
  std::vector<double> g{123.0};
  Adam opt({0.01});
  opt.step({&x}, {&g});
  EXPECT_NEAR(x[0], 1.0 - 0.01, 1e-9);
}

TEST(Adam, DecoupledWeightDecayWithZeroGradient) {
  std::vector<double> x{2.0};
  std::vector<double> g{0.0};
  Adam opt({0.1, 0.9, 0.999, 1e-8, 0.5});
  opt.step({&x}, {&g});
  EXPECT_NEAR(x[0], 2.0 - 0.1 * 0.5 * 2.0, 1e-12);
}

TEST(Parallel, ResultsIndependentOfJobs) {
  auto run = [](std::size_t jobs) {
    std::vector<double> out(257);
    parallel_for(out.size(), jobs, [&](std::size_t i) {
      Rng r(stream_key(1, {i}));
      out[i] = r.normal();
    });
    return out;
  };
  const auto ref = run(1);
  EXPECT_EQ(ref, run(2));
  EXPECT_EQ(ref, run(7));
}

TEST(Parallel, RethrowsLowestIndex) {
  try {
    parallel_for(100, 4, [](std::size_t i) {
      if (i == 17 || i == 60) fail(ErrorKind::data, std::to_string(i));
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("17"), std::string::npos);
  }
}

TEST(ExitCodes, Contract) {
  EXPECT_EQ(exit_code_for(ErrorKind::usage), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::config), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::io), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::data), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::parse), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::report), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::numeric), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::training), 4);
}
