#include "noisysde/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "noisysde/problems.hpp"

namespace noisysde {
namespace {

CoefficientField drift_of(CoefficientField::Function f) {
  return CoefficientField(std::move(f), {1.0, 1.0}, CoefficientRole::Drift);
}

TEST(NoisyOracle, ZeroDeltaIsBitIdentical) {
  const auto p = problems::paper_sine(0.2, 1.0);
  const auto exact = NoisyOracle::exact(p.drift());
  const auto zero = make_noisy(p.drift(), 0.0, make_uniform_corruption(0.0, CorruptionClass::K1, 3));
  EXPECT_TRUE(exact.is_exact());
  EXPECT_TRUE(zero.is_exact());
  EvalContext c1, c2;
  const CounterRng rng(1);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double t = rng.uniform(i), y = 10 * (rng.uniform(i, 1) - 0.5);
    EXPECT_EQ(exact(t, y, c1), p.drift()(t, y));
    EXPECT_EQ(zero(t, y, c2), p.drift()(t, y));
  }
  EXPECT_EQ(c1.calls, 1000u);
}

TEST(NoisyOracle, ConstantCorruptionExample) {
  const auto o = NoisyOracle::with_function(drift_of([](double, double y) { return y; }), 0.1,
                                            CorruptionClass::K1, [](double, double) { return 1.0; });
  EvalContext ctx;
  EXPECT_DOUBLE_EQ(o(0.0, 2.0, ctx), 2.1);
  EXPECT_FALSE(o.is_exact());
}

TEST(NoisyOracle, RejectsPrecisionOutsideUnitInterval) {
  const auto f = drift_of([](double, double) { return 0.0; });
  EXPECT_THROW(make_uniform_corruption(-0.1, CorruptionClass::K1, 0), std::invalid_argument);
  EXPECT_THROW(make_uniform_corruption(1.5, CorruptionClass::K1, 0), std::invalid_argument);
  EXPECT_THROW(NoisyOracle::with_function(f, 1.01, CorruptionClass::K2, [](double, double) { return 0.0; }),
               std::invalid_argument);
  EXPECT_THROW(NoisyOracle::with_function(f, 0.5, CorruptionClass::K2, nullptr), std::invalid_argument);
  EXPECT_NO_THROW(make_noisy(f, 1.0, make_uniform_corruption(1.0, CorruptionClass::K2, 0)));
}

TEST(NoisyOracle, DeterministicPerTrajectoryAndCall) {
  const auto p = problems::paper_sine(0.2, 1.0);
  const auto o = make_noisy(p.diffusion(), 0.3, make_uniform_corruption(0.3, CorruptionClass::K2, 99));
  EvalContext a{4, 0}, b{4, 0}, c{5, 0};
  double same = 0, diff = 0;
  for (int i = 0; i < 100; ++i) {
    const double va = o(0.5, 1.0, a), vb = o(0.5, 1.0, b), vc = o(0.5, 1.0, c);
    EXPECT_EQ(va, vb);
    same += va == vb;
    diff += va != vc;
  }
  EXPECT_EQ(same, 100);
  EXPECT_GT(diff, 95);
  // Per-call keying: repeated calls at one point differ.
  EvalContext d{0, 0};
  EXPECT_NE(o(0.5, 1.0, d), o(0.5, 1.0, d));
}

TEST(NoisyOracle, PointKeyingIsAFunctionOfThePoint) {
  const auto p = problems::paper_sine(0.2, 1.0);
  NoiseOptions opts;
  opts.keying = NoiseKeying::Point;
  const auto o = make_noisy(p.diffusion(), 0.3, make_uniform_corruption(0.3, CorruptionClass::K2, 99, opts));
  EvalContext a{0, 0}, b{7, 123};
  EXPECT_EQ(o(0.5, 1.0, a), o(0.5, 1.0, b));
  EXPECT_EQ(o(0.5, 1.0, a), o(0.5, 1.0, a));
  EXPECT_NE(o(0.5, 1.0, a), o(0.5, 1.0 + 1e-9, a));
}

TEST(NoisyOracle, SymmetricAndUnitDrawRanges) {
  const auto zero = drift_of([](double, double) { return 0.0; });
  NoiseOptions u01;
  u01.uniform01 = true;
  const auto sym = make_noisy(zero, 1.0, make_uniform_corruption(1.0, CorruptionClass::K2, 5));
  const auto pos = make_noisy(zero, 1.0, make_uniform_corruption(1.0, CorruptionClass::K2, 5, u01));
  EvalContext c1, c2;
  double sum_sym = 0, sum_pos = 0, min_pos = 1;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    const double s = sym(0.1, 0.0, c1), p = pos(0.1, 0.0, c2);
    ASSERT_LE(std::abs(s), 1.0);
    ASSERT_GE(p, 0.0);
    ASSERT_LE(p, 1.0);
    sum_sym += s;
    sum_pos += p;
    min_pos = std::min(min_pos, p);
  }
  const double sd = std::sqrt(1.0 / 3.0 / kDraws);
  EXPECT_NEAR(sum_sym / kDraws, 0.0, 4 * sd);
  EXPECT_NEAR(sum_pos / kDraws, 0.5, 4 * sd);
}

TEST(NoisyOracle, SaturatedK1FillsTheEnvelope) {
  const auto zero = drift_of([](double, double) { return 0.0; });
  NoiseOptions sat;
  sat.saturate_growth = true;
  const auto o = make_noisy(zero, 1.0, make_uniform_corruption(1.0, CorruptionClass::K1, 8, sat));
  EvalContext ctx;
  double worst = 0;
  for (int i = 0; i < 10000; ++i) worst = std::max(worst, std::abs(o(0.0, 9.0, ctx)));
  EXPECT_LE(worst, 10.0);
  EXPECT_GT(worst, 9.9);
}

TEST(RelativeRoundoff, FixedAlphaScalesTheValue) {
  const double alpha = std::ldexp(1.0, -11);
  const auto f = drift_of([](double, double y) { return 3.0 * y; });
  const auto o = make_relative_roundoff_fixed(f, 1.0, alpha);
  EvalContext ctx;
  EXPECT_DOUBLE_EQ(o(0.0, 2.0, ctx), 6.0 * (1.0 + alpha));
  const auto o2 = make_relative_roundoff_fixed(f, 0.5, -alpha);
  EXPECT_DOUBLE_EQ(o2(0.0, 2.0, ctx), 6.0 * (1.0 - 0.5 * alpha));
}

TEST(RelativeRoundoff, RandomAlphaRespectsBoundAndClass) {
  const auto p = problems::gbm(0.5, 1.0);
  const double bound = std::ldexp(1.0, -11);
  const auto o = make_relative_roundoff(p.drift(), 1.0, bound, 17);
  EvalContext ctx;
  const CounterRng rng(2);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double y = 100 * (rng.uniform(i) - 0.5);
    const double v = p.drift()(0.0, y);
    EXPECT_LE(std::abs(o(0.0, y, ctx) - v), bound * std::abs(v) * (1 + 1e-12) + 1e-15);
  }
  // |alpha f| <= bound K1 (1+|y|) places it in K1 for bound K1 <= 1.
  EXPECT_TRUE(check_corruption_class(o, 1.0, 10000, 50.0, 3).ok());
  EXPECT_THROW(make_relative_roundoff(p.drift(), 1.0, -1.0, 0), std::invalid_argument);
}

struct ClassCase {
  CorruptionClass cls;
  NoiseOptions options;
  const char* name;
};

class ClassBoundTest : public ::testing::TestWithParam<ClassCase> {};

TEST_P(ClassBoundTest, NoViolationsOverManySamples) {
  const auto& c = GetParam();
  const auto p = problems::paper_sine(0.1, 1.0);
  for (double delta : {1.0, 0.1, 1e-6}) {
    for (const CoefficientField* f : {&p.drift(), &p.diffusion()}) {
      const auto o = make_noisy(*f, delta, make_uniform_corruption(delta, c.cls, 41, c.options));
      const auto check = check_corruption_class(o, 1.0, 100000, 100.0, 77);
      EXPECT_TRUE(check.ok()) << c.name << " delta=" << delta << " violations=" << check.violations;
      EXPECT_EQ(check.samples, 100000);
      EXPECT_LE(check.worst_ratio, 1.0 + 1e-6);
    }
  }
}

NoiseOptions with(bool u01, bool sat, NoiseKeying keying = NoiseKeying::PerCall) {
  NoiseOptions o;
  o.uniform01 = u01;
  o.saturate_growth = sat;
  o.keying = keying;
  return o;
}

INSTANTIATE_TEST_SUITE_P(
    AllClasses, ClassBoundTest,
    ::testing::Values(ClassCase{CorruptionClass::K1, with(false, false), "K1"},
                      ClassCase{CorruptionClass::K1, with(false, true), "K1 saturated"},
                      ClassCase{CorruptionClass::K1, with(true, true), "K1 saturated [0,1]"},
                      ClassCase{CorruptionClass::K2, with(false, false), "K2"},
                      ClassCase{CorruptionClass::K2, with(true, false), "K2 [0,1]"},
                      ClassCase{CorruptionClass::K2, with(false, false, NoiseKeying::Point), "K2 point"},
                      ClassCase{CorruptionClass::K1Lip, with(false, false), "K1Lip"},
                      ClassCase{CorruptionClass::K1Lip, with(false, true), "K1Lip saturated"}));

TEST(CheckCorruptionClass, DetectsViolations) {
  const auto f = drift_of([](double, double) { return 0.5; });
  // |p| = 1 + |y| + 0.01 exceeds K1 everywhere.
  const auto bad_k1 = NoisyOracle::with_function(f, 0.5, CorruptionClass::K1,
                                                 [](double, double y) { return 1.01 + std::abs(y); });
  EXPECT_EQ(check_corruption_class(bad_k1, 1.0, 1000, 10.0, 1).violations, 1000);
  // |p| = 1 + |y| is fine for K1 but breaks K2.
  const auto k1_only = NoisyOracle::with_function(f, 0.5, CorruptionClass::K2,
                                                  [](double, double y) { return 1.0 + std::abs(y); });
  EXPECT_GT(check_corruption_class(k1_only, 1.0, 1000, 10.0, 1).violations, 900);
  // Within the envelope but with slope 3: not K1Lip.
  const auto steep = NoisyOracle::with_function(f, 0.5, CorruptionClass::K1Lip,
                                                [](double, double y) { return std::sin(3.0 * y) / 3.0 * 2.9; });
  EXPECT_GT(check_corruption_class(steep, 1.0, 1000, 10.0, 1).violations, 0);
  // Per-call draws inside the envelope are not Lipschitz.
  const auto percall = NoisyOracle::with_corruption(
      f, 0.5, CorruptionClass::K1Lip, UniformCorruption{CorruptionClass::K2, 4, {}});
  EXPECT_GT(check_corruption_class(percall, 1.0, 1000, 1.0, 1).violations, 0);
}

TEST(NoisyOracle, WorstCaseErrorIsMonotoneInDelta) {
  const auto p = problems::paper_sine(0.2, 1.0);
  double previous = 0.0;
  for (double delta : {0.0, 0.01, 0.1, 0.5, 1.0}) {
    const auto o = NoisyOracle::with_function(p.diffusion(), delta, CorruptionClass::K2,
                                              [](double, double) { return 1.0; });
    EvalContext ctx;
    const double err = std::abs(o(0.3, 0.7, ctx) - p.diffusion()(0.3, 0.7));
    EXPECT_NEAR(err, delta, 1e-15);
    EXPECT_GE(err, previous);
    previous = err;
  }
}

}  // namespace
}  // namespace noisysde
