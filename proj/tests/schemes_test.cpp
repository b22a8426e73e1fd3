#include "noisysde/schemes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "noisysde/problems.hpp"

namespace noisysde {
namespace {

const auto kConstA = [](double, double) { return 1.0; };
const auto kIdentity = [](double, double y) { return y; };
const auto kZero = [](double, double) { return 0.0; };

TEST(StepDfRandMilstein, WorkedExamples) {
  // a = 1, b(t,y) = y, x = 1, h = 0.25, dW = 0.5: 1 + 0.25 + 0.5 + 1 * (0.25 - 0.25)/2
  EXPECT_DOUBLE_EQ(step_df_rand_milstein(1.0, kConstA, kIdentity, 0.0, 0.25, 0.1, 0.5,
                                         ito_double_integral(0.5, 0.25)),
                   1.75);
  // b = y: the Milstein term is x * I = 1 * (1 - 0.5)/2 = 0.25 with h = 0.5, dW = 1.
  EXPECT_DOUBLE_EQ(step_df_rand_milstein(1.0, kZero, kIdentity, 0.0, 0.5, 0.25, 1.0,
                                         ito_double_integral(1.0, 0.5)),
                   2.25);
  // b = y^2 at x = 1, h = 0.5: L1h b = 1 * (2.25 - 1)/0.5 = 2.5, I = 0.25.
  const auto sq = [](double, double y) { return y * y; };
  EXPECT_DOUBLE_EQ(step_df_rand_milstein(1.0, kZero, sq, 0.0, 0.5, 0.0, 1.0, 0.25), 1.0 + 1.0 + 0.625);
}

TEST(StepDfRandMilstein, UnitStepExample) {
  // a = 0, b = y, x = 1, h = 1, dW = 0.5: L1h b = 1, I = -0.375.
  EXPECT_DOUBLE_EQ(step_df_rand_milstein(1.0, kZero, kIdentity, 0.0, 1.0, 0.5, 0.5,
                                         ito_double_integral(0.5, 1.0)),
                   1.125);
  const CoefficientField b(kIdentity, {1, 1}, CoefficientRole::Diffusion, [](double, double) { return 1.0; });
  EXPECT_DOUBLE_EQ(step_rand_milstein(1.0, kZero, b, 0.0, 1.0, 0.5, 0.5, ito_double_integral(0.5, 1.0)), 1.125);
  EXPECT_EQ(step_df_rand_milstein(3.0, kZero, kZero, 0.0, 1.0, 0.5, 0.5, -0.375), 3.0);
  const auto sigma = [](double, double) { return 0.4; };
  EXPECT_DOUBLE_EQ(step_df_rand_milstein(3.0, kZero, sigma, 0.0, 1.0, 0.5, 0.5, -0.375), 3.2);
}

TEST(StepDfRandMilstein, DriftIsEvaluatedAtXi) {
  const auto a = [](double t, double) { return t; };
  EXPECT_DOUBLE_EQ(step_df_rand_milstein(0.0, a, kZero, 1.0, 0.5, 1.25, 0.0, -0.25), 1.25 * 0.5);
  EXPECT_DOUBLE_EQ(step_rand_euler(0.0, a, kZero, 1.0, 0.5, 1.5, 0.0), 0.75);
  EXPECT_DOUBLE_EQ(step_euler(0.0, a, kZero, 1.0, 0.5, 0.0), 0.5);
}

TEST(StepDfRandMilstein, RejectsXiOutsideTheStep) {
  EXPECT_THROW(step_df_rand_milstein(0.0, kConstA, kIdentity, 1.0, 0.5, 0.99, 0.0, 0.0),
               std::invalid_argument);
  EXPECT_THROW(step_df_rand_milstein(0.0, kConstA, kIdentity, 1.0, 0.5, 1.51, 0.0, 0.0),
               std::invalid_argument);
  EXPECT_THROW(step_rand_euler(0.0, kConstA, kIdentity, 1.0, 0.5, 2.0, 0.0), std::invalid_argument);
  EXPECT_NO_THROW(step_df_rand_milstein(0.0, kConstA, kIdentity, 1.0, 0.5, 1.0, 0.0, 0.0));
  EXPECT_NO_THROW(step_df_rand_milstein(0.0, kConstA, kIdentity, 1.0, 0.5, 1.5, 0.0, 0.0));
  EXPECT_THROW(step_df_rand_milstein(0.0, kConstA, kIdentity, 1.0, 0.5, 1.2, 0.0, 0.0, 0.0),
               std::invalid_argument);
}

TEST(StepRandMilstein, NeedsDerivative) {
  const CoefficientField no_df(kIdentity, {1, 1}, CoefficientRole::Diffusion);
  EXPECT_THROW(step_rand_milstein(1.0, kZero, no_df, 0.0, 0.5, 0.1, 1.0, 0.25), unsupported_operation);
  const CoefficientField with_df(kIdentity, {1, 1}, CoefficientRole::Diffusion, [](double, double) { return 1.0; });
  EXPECT_DOUBLE_EQ(step_rand_milstein(1.0, kZero, with_df, 0.0, 0.5, 0.1, 1.0, 0.25), 2.25);
}

TEST(RandomizationStream, StaysInsideEachStep) {
  const Mesh mesh(0.3, 1000);
  const RandomizationStream xi(12);
  double mean_offset = 0.0;
  for (std::int64_t i = 0; i < 1000; ++i) {
    const double x = xi.at(mesh, i);
    ASSERT_GE(x, mesh.node(i));
    ASSERT_LE(x, mesh.node(i) + mesh.step());
    mean_offset += (x - mesh.node(i)) / mesh.step();
    EXPECT_EQ(x, RandomizationStream(12).at(mesh, i));
  }
  EXPECT_NEAR(mean_offset / 1000, 0.5, 4 * std::sqrt(1.0 / 12 / 1000));
}

TEST(SchemeNames, RoundTrip) {
  for (SchemeKind k : kAllSchemes) EXPECT_EQ(parse_scheme(to_string(k)), k);
  EXPECT_FALSE(parse_scheme("milstein").has_value());
  EXPECT_TRUE(requires_derivative(SchemeKind::Milstein));
  EXPECT_FALSE(requires_derivative(SchemeKind::DfRandomizedMilstein));
  EXPECT_FALSE(randomizes_drift(SchemeKind::Euler));
}

struct Fixture {
  SdeProblem problem;
  NoisyOracle a, b;
  explicit Fixture(SdeProblem p)
      : problem(std::move(p)), a(NoisyOracle::exact(problem.drift())), b(NoisyOracle::exact(problem.diffusion())) {}
};

TEST(RunScheme, ConstantCoefficientsAreExact) {
  Fixture f(problems::constant(0.7, -1.3, 2.0, 1.5));
  for (std::int64_t n : {1, 10, 1000}) {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const auto path = wiener_generate(n, 1.5, k);
      // eta + mu T + sigma W(T), independent of the scheme under test
      const double expected = 2.0 + 0.7 * 1.5 - 1.3 * path.terminal();
      for (SchemeKind kind : kAllSchemes) {
        const auto run = run_scheme(f.problem, f.a, f.b, kind, path.mesh(), path.increments(),
                                    RandomizationStream(k));
        EXPECT_NEAR(run.terminal, expected, 1e-12 * std::abs(expected)) << to_string(kind) << " n=" << n;
      }
    }
  }
}

TEST(RunScheme, LinearDiffusionMatchesRandomizedMilstein) {
  Fixture f(problems::gbm(0.1, 0.2));
  RunOptions opts;
  opts.record_trajectory = true;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto path = wiener_generate(256, 1.0, derive_stream(3, k));
    const RandomizationStream xi(derive_stream(4, k));
    const auto df = run_scheme(f.problem, f.a, f.b, SchemeKind::DfRandomizedMilstein, path.mesh(),
                               path.increments(), xi, opts);
    const auto rm = run_scheme(f.problem, f.a, f.b, SchemeKind::Milstein, path.mesh(),
                               path.increments(), xi, opts);
    ASSERT_EQ(df.trajectory.size(), 257u);
    for (std::size_t i = 0; i < df.trajectory.size(); ++i) {
      EXPECT_NEAR(df.trajectory[i], rm.trajectory[i], 1e-12 * std::abs(rm.trajectory[i]));
    }
  }
}

TEST(RunScheme, SingleStepMatchesHandComputation) {
  Fixture f(problems::gbm(0.1, 0.2, 1.0, 1.0));
  const std::vector<double> dw{0.3};
  const RandomizationStream xi(0);
  const double i11 = 0.5 * (0.09 - 1.0);
  // b(x+h) - b(x) = 0.2 h, so L1h b = 0.2 * 0.2 x.
  const double expected = 1.0 + 0.1 + 0.2 * 0.3 + 0.04 * i11;
  const auto run = run_scheme(f.problem, f.a, f.b, SchemeKind::DfRandomizedMilstein, Mesh(1.0, 1), dw, xi);
  EXPECT_NEAR(run.terminal, expected, 1e-15);
  EXPECT_EQ(run.evaluations, 3u);
}

TEST(RunScheme, ValidatesInputs) {
  Fixture f(problems::paper_sine(0.2, 1.0));
  const std::vector<double> dw(10, 0.0);
  const RandomizationStream xi(0);
  EXPECT_THROW(run_scheme(f.problem, f.a, f.b, SchemeKind::Euler, Mesh(1.0, 11), dw, xi),
               std::invalid_argument);
  EXPECT_THROW(run_scheme(f.problem, f.a, f.b, SchemeKind::Euler, Mesh(2.0, 10), dw, xi),
               std::invalid_argument);
  const auto noisy = make_noisy(f.problem.diffusion(), 0.1,
                                make_uniform_corruption(0.1, CorruptionClass::K2, 1));
  EXPECT_THROW(run_scheme(f.problem, f.a, noisy, SchemeKind::Milstein, Mesh(1.0, 10), dw, xi),
               unsupported_operation);
  SdeProblem no_df("no-df", f.problem.drift(),
                   CoefficientField([](double, double y) { return y; }, {1, 1}, CoefficientRole::Diffusion),
                   1.0, 1.0);
  const auto b = NoisyOracle::exact(no_df.diffusion());
  EXPECT_THROW(run_scheme(no_df, f.a, b, SchemeKind::Milstein, Mesh(1.0, 10), dw, xi),
               unsupported_operation);
  EXPECT_NO_THROW(run_scheme(no_df, f.a, b, SchemeKind::DfRandomizedMilstein, Mesh(1.0, 10), dw, xi));
}

TEST(RunScheme, ZeroNoiseEqualsExactOracle) {
  Fixture f(problems::paper_sine(0.2, 1.0));
  const auto a0 = make_noisy(f.problem.drift(), 0.0, make_uniform_corruption(0.0, CorruptionClass::K1, 5));
  const auto b0 = make_noisy(f.problem.diffusion(), 0.0, make_uniform_corruption(0.0, CorruptionClass::K2, 6));
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto path = wiener_generate(64, 1.0, k);
    const RandomizationStream xi(k + 100);
    EXPECT_EQ(run_scheme(f.problem, f.a, f.b, SchemeKind::DfRandomizedMilstein, path.mesh(), path.increments(), xi).terminal,
              run_scheme(f.problem, a0, b0, SchemeKind::DfRandomizedMilstein, path.mesh(), path.increments(), xi).terminal);
  }
}

TEST(RunScheme, EvaluationCounts) {
  Fixture f(problems::paper_sine(0.2, 1.0));
  for (std::int64_t n : {1, 5, 100}) {
    const auto path = wiener_generate(n, 1.0, 9);
    for (SchemeKind kind : kAllSchemes) {
      const auto run = run_scheme(f.problem, f.a, f.b, kind, path.mesh(), path.increments(), RandomizationStream(1));
      EXPECT_EQ(run.evaluations, static_cast<std::uint64_t>(evaluations_per_step(kind) * n));
    }
  }
}

TEST(RunScheme, WorstCaseDriftShiftGrowsWithDelta) {
  // Linear problem, p = +1: the shift is positive and increasing in delta.
  Fixture f(problems::gbm(0.1, 0.2));
  const auto path = wiener_generate(128, 1.0, 1);
  const RandomizationStream xi(2);
  double previous = 0.0;
  for (double delta : {1e-8, 1e-4, 1e-1}) {
    const auto a = NoisyOracle::with_function(f.problem.drift(), delta, CorruptionClass::K1,
                                              [](double, double) { return 1.0; });
    const double x0 = run_scheme(f.problem, f.a, f.b, SchemeKind::DfRandomizedMilstein, path.mesh(), path.increments(), xi).terminal;
    const double x1 = run_scheme(f.problem, a, f.b, SchemeKind::DfRandomizedMilstein, path.mesh(), path.increments(), xi).terminal;
    EXPECT_GT(x1, x0);
    EXPECT_GT(std::abs(x1 - x0), previous);
    previous = std::abs(x1 - x0);
  }
}

// Sample second moment of X(T) stays bounded in n (stability).
TEST(RunScheme, SecondMomentBoundedInN) {
  Fixture f(problems::paper_sine(0.2, 1.0));
  for (std::int64_t n : {16, 256, 4096}) {
    double m2 = 0.0;
    for (std::uint64_t k = 0; k < 200; ++k) {
      const auto path = wiener_generate(n, 1.0, derive_stream(n, k));
      const double x = run_scheme(f.problem, f.a, f.b, SchemeKind::DfRandomizedMilstein, path.mesh(),
                                  path.increments(), RandomizationStream(k))
                           .terminal;
      m2 += x * x;
    }
    // |a|, |b| <= 1: E X(T)^2 <= (|eta| + T + 1)^2 + slack.
    EXPECT_LT(m2 / 200, 16.0) << "n=" << n;
  }
}

// Order of convergence on GBM with the closed form as reference, small scale.
TEST(RunScheme, GbmStrongErrorDecaysLikeOneOverN) {
  const auto p = problems::gbm(0.1, 0.2);
  Fixture f(p);
  std::vector<double> errs;
  for (std::int64_t n : {8, 64}) {
    double e2 = 0.0;
    for (std::uint64_t k = 0; k < 400; ++k) {
      const auto path = wiener_generate(4096, 1.0, derive_stream(77, k));
      const auto coarse = coarsen(path, 4096 / n);
      const double x = run_scheme(p, f.a, f.b, SchemeKind::DfRandomizedMilstein, Mesh(1.0, n), coarse,
                                  RandomizationStream(derive_stream(78, k)))
                           .terminal;
      const double ref = p.exact_terminal(1.0, path.increments());
      e2 += (x - ref) * (x - ref);
    }
    errs.push_back(std::sqrt(e2 / 400));
  }
  const double rate = std::log(errs[0] / errs[1]) / std::log(8.0);
  EXPECT_GT(rate, 0.8);
  EXPECT_LT(rate, 1.3);
}

}  // namespace
}  // namespace noisysde
