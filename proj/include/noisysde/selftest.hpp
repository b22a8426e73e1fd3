#pragma once

// Invariant suites run by `noisysde selftest`: operator bounds, corruption
// class envelopes, coarsening identities, constant-coefficient exactness,
// linear-diffusion equivalence and evaluation counts.

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "noisysde/core.hpp"
#include "noisysde/harness.hpp"
#include "noisysde/oracles.hpp"
#include "noisysde/problems.hpp"
#include "noisysde/random.hpp"
#include "noisysde/schemes.hpp"

namespace noisysde {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::int64_t checks = 0;
  std::string detail;
};

struct SelftestOptions {
  std::int64_t samples = 20000;
  std::uint64_t seed = 2024;
  /// Fault injection: run the coarsening suite with a factor that does not
  /// divide the path length.
  bool inject_bad_coarsen = false;
};

/// A randomly drawn diffusion coefficient with declared constants that make
/// it a member of the B class on [0, T]: either
///   b(t,y) = A sin(w y + phi) + B t^g   (bounded, smooth in y), or
///   b(t,y) = s y + B t^g                (linear in y).
/// K covers |b| growth, the Lipschitz constants of b, db/dy and L1 b.
struct DiffusionSample {
  CoefficientField field;
  double k = 0.0;
  double k1 = 0.0;
};

inline DiffusionSample draw_diffusion_field(std::uint64_t stream, double horizon) {
  const CounterRng rng(stream);
  const double u0 = rng.uniform(0), u1 = rng.uniform(1), u2 = rng.uniform(2);
  const double u3 = rng.uniform(3), u4 = rng.uniform(4), u5 = rng.uniform(5);
  const double gamma = 0.05 + 0.95 * u0;
  const double bt = 2.0 * u1 - 1.0;
  double k = 0.0;
  CoefficientField::Function f, df;
  if (u5 < 0.5) {
    const double amp = 0.2 + 2.0 * u2;
    const double w = 0.5 + 10.0 * u3;
    const double phi = 6.283185307179586 * u4;
    f = [=](double t, double y) { return amp * std::sin(w * y + phi) + bt * std::pow(t, gamma); };
    df = [=](double, double y) { return amp * w * std::cos(w * y + phi); };
    const double lip_l1 = amp * amp * w * w + (amp + std::abs(bt)) * amp * w * w;
    k = std::max({amp + std::abs(bt), amp * w, amp * w * w, lip_l1, 1.0});
  } else {
    const double s = 4.0 * u2 - 2.0;
    f = [=](double t, double y) { return s * y + bt * std::pow(t, gamma); };
    df = [=](double, double) { return s; };
    k = std::max({std::abs(s), std::abs(bt), s * s, 1.0});
  }
  DiffusionSample out{CoefficientField(f, {k, gamma}, CoefficientRole::Diffusion, df), k, 0.0};
  out.k1 = growth_constant(k, horizon, gamma, gamma);
  return out;
}

namespace selftest_detail {

inline SuiteResult operator_bounds(const SelftestOptions& o) {
  SuiteResult r{"operator-bounds", true, 0, {}};
  const double horizon = 1.0;
  const CounterRng rng(derive_stream(o.seed, 1));
  std::int64_t violations = 0;
  for (std::int64_t k = 0; k < o.samples; ++k) {
    const auto sample = draw_diffusion_field(derive_stream(o.seed, 2, k), horizon);
    const auto b = rng.block(static_cast<std::uint64_t>(k));
    const double t = horizon * CounterRng::to_open_unit(b[0], b[1]);
    const double y = 20.0 * (CounterRng::to_open_unit(b[2], b[3]) - 0.5);
    const double h = std::pow(2.0, -1.0 - 14.0 * rng.uniform(static_cast<std::uint64_t>(k), 1));
    const double env = sample.k * sample.k1 * (1.0 + std::abs(y));
    const double lh = l1h(sample.field, t, y, h);
    const double diff = std::abs(l1(sample.field, t, y) - lh);
    if (std::abs(lh) > env * (1.0 + 1e-12)) ++violations;
    if (diff > env * h * (1.0 + 1e-9) + 1e-12 * env) ++violations;
    r.checks += 2;
  }
  if (violations > 0) {
    r.passed = false;
    r.detail = std::to_string(violations) + " violations";
  }
  return r;
}

inline SuiteResult oracle_bounds(const SelftestOptions& o) {
  SuiteResult r{"oracle-bounds", true, 0, {}};
  const auto problem = problems::paper_sine(0.2, 1.0);
  struct Case {
    NoisyOracle oracle;
    const char* label;
  };
  NoiseOptions saturate;
  saturate.saturate_growth = true;
  NoiseOptions point;
  point.keying = NoiseKeying::Point;
  const std::vector<Case> cases = {
      {make_noisy(problem.drift(), 0.3,
                  make_uniform_corruption(0.3, CorruptionClass::K1, derive_stream(o.seed, 10))),
       "drift K1"},
      {make_noisy(problem.drift(), 1.0,
                  make_uniform_corruption(1.0, CorruptionClass::K1, derive_stream(o.seed, 11),
                                          saturate)),
       "drift K1 saturated"},
      {make_noisy(problem.diffusion(), 0.05,
                  make_uniform_corruption(0.05, CorruptionClass::K2, derive_stream(o.seed, 12))),
       "diffusion K2"},
      {make_noisy(problem.diffusion(), 0.05,
                  make_uniform_corruption(0.05, CorruptionClass::K2, derive_stream(o.seed, 13),
                                          point)),
       "diffusion K2 point-keyed"},
      {make_noisy(problem.diffusion(), 0.2,
                  make_uniform_corruption(0.2, CorruptionClass::K1Lip, derive_stream(o.seed, 14))),
       "diffusion K1Lip"},
  };
  for (const auto& c : cases) {
    const auto check = check_corruption_class(c.oracle, problem.horizon(), o.samples, 50.0,
                                              derive_stream(o.seed, 20, r.checks));
    r.checks += check.samples;
    if (!check.ok()) {
      r.passed = false;
      r.detail += std::string(c.label) + ": " + std::to_string(check.violations) + " violations; ";
    }
  }
  return r;
}

inline SuiteResult coarsening(const SelftestOptions& o) {
  SuiteResult r{"coarsening", true, 0, {}};
  try {
    for (std::int64_t k = 0; k < 50; ++k) {
      const auto path = wiener_generate(4 * 6 * 5, 1.0, derive_stream(o.seed, 30, k));
      const std::int64_t f1 = o.inject_bad_coarsen ? 7 : 4;
      const auto direct = coarsen(path, f1 * 6);
      const auto nested = coarsen(coarsen(path, f1), 6);
      double fine_total = 0.0, coarse_total = 0.0;
      for (double v : path.increments()) fine_total += v;
      for (double v : direct) coarse_total += v;
      if (direct != nested) throw std::runtime_error("nested coarsening differs from direct");
      if (fine_total != coarse_total) throw std::runtime_error("coarsening changed W(T)");
      if (coarsen(path, 1) != std::vector<double>(path.increments().begin(), path.increments().end())) {
        throw std::runtime_error("factor 1 is not the identity");
      }
      r.checks += 3;
    }
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = e.what();
  }
  return r;
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

inline SuiteResult constant_exactness(const SelftestOptions& o) {
  SuiteResult r{"constant-exactness", true, 0, {}};
  const auto problem = problems::constant(0.7, -1.3, 2.0, 1.0);
  const auto a = NoisyOracle::exact(problem.drift());
  const auto b = NoisyOracle::exact(problem.diffusion());
  for (std::int64_t n : {1, 10, 1000}) {
    for (std::int64_t k = 0; k < 20; ++k) {
      const auto path = wiener_generate(n, 1.0, derive_stream(o.seed, 40, n, k));
      const double exact = problem.exact_terminal(2.0, path.increments());
      for (SchemeKind kind : kAllSchemes) {
        const auto run = run_scheme(problem, a, b, kind, path.mesh(), path.increments(),
                                    RandomizationStream(derive_stream(o.seed, 41, k)));
        ++r.checks;
        if (!close_rel(run.terminal, exact, 1e-12)) {
          r.passed = false;
          r.detail = std::string(to_string(kind)) + " misses the exact value at n=" +
                     std::to_string(n);
        }
      }
    }
  }
  return r;
}

inline SuiteResult linear_equivalence(const SelftestOptions& o) {
  SuiteResult r{"linear-diffusion-equivalence", true, 0, {}};
  const auto problem = problems::gbm(0.1, 0.2, 1.0, 1.0);
  const auto a = NoisyOracle::exact(problem.drift());
  const auto b = NoisyOracle::exact(problem.diffusion());
  RunOptions opts;
  opts.record_trajectory = true;
  for (std::int64_t k = 0; k < 100; ++k) {
    const auto path = wiener_generate(256, 1.0, derive_stream(o.seed, 50, k));
    const RandomizationStream xi(derive_stream(o.seed, 51, k));
    const auto df = run_scheme(problem, a, b, SchemeKind::DfRandomizedMilstein, path.mesh(),
                               path.increments(), xi, opts);
    const auto rm = run_scheme(problem, a, b, SchemeKind::Milstein, path.mesh(),
                               path.increments(), xi, opts);
    for (std::size_t i = 0; i < df.trajectory.size(); ++i) {
      ++r.checks;
      if (!close_rel(df.trajectory[i], rm.trajectory[i], 1e-12)) {
        r.passed = false;
        r.detail = "trajectories diverge at step " + std::to_string(i);
      }
    }
  }
  return r;
}

inline SuiteResult evaluation_counts(const SelftestOptions& o) {
  SuiteResult r{"evaluation-counts", true, 0, {}};
  const auto problem = problems::paper_sine(0.2, 1.0);
  const auto a = NoisyOracle::exact(problem.drift());
  const auto b = NoisyOracle::exact(problem.diffusion());
  for (std::int64_t n : {1, 7, 64}) {
    const auto path = wiener_generate(n, 1.0, derive_stream(o.seed, 60, n));
    for (SchemeKind kind : kAllSchemes) {
      const auto run = run_scheme(problem, a, b, kind, path.mesh(), path.increments(),
                                  RandomizationStream(derive_stream(o.seed, 61, n)));
      ++r.checks;
      if (run.evaluations != static_cast<std::uint64_t>(evaluations_per_step(kind) * n)) {
        r.passed = false;
        r.detail = std::string(to_string(kind)) + ": " + std::to_string(run.evaluations) +
                   " evaluations for n=" + std::to_string(n);
      }
    }
  }
  return r;
}

}  // namespace selftest_detail

inline std::vector<SuiteResult> run_selftest(const SelftestOptions& options = {}) {
  using namespace selftest_detail;
  std::vector<SuiteResult> out;
  for (auto suite : {operator_bounds, oracle_bounds, coarsening, constant_exactness,
                     linear_equivalence, evaluation_counts}) {
    try {
      out.push_back(suite(options));
    } catch (const std::exception& e) {
      out.push_back({"(suite aborted)", false, 0, e.what()});
    }
  }
  return out;
}

inline bool report_selftest(std::ostream& out, const std::vector<SuiteResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.checks << " checks)";
    if (!r.detail.empty()) out << ": " << r.detail;
    out << '\n';
    all = all && r.passed;
  }
  return all;
}

}  // namespace noisysde
