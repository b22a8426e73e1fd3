#pragma once

// Monte Carlo strong-error estimation against a reference solution on a
// refined mesh, and empirical convergence rates from log-log regression.
//
// Random streams are derived from the master seed per (purpose, n, k), so
// each trajectory is an independent work unit and the table does not
// depend on the number of workers or on scheduling.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "noisysde/core.hpp"
#include "noisysde/oracles.hpp"
#include "noisysde/problems.hpp"
#include "noisysde/random.hpp"
#include "noisysde/schemes.hpp"

namespace noisysde {

/// A precision level: a constant, or delta = n^{-1/2}.
struct Precision {
  enum class Rule { Constant, InvSqrtN };
  Rule rule = Rule::Constant;
  double value = 0.0;

  static Precision constant(double v) { return {Rule::Constant, v}; }
  static Precision inv_sqrt_n() { return {Rule::InvSqrtN, 0.0}; }

  double at(std::int64_t n) const {
    return rule == Rule::Constant ? value : 1.0 / std::sqrt(static_cast<double>(n));
  }
  std::string label() const;
  friend bool operator==(const Precision&, const Precision&) = default;
};

struct PrecisionSchedule {
  Precision drift;
  Precision diffusion;

  static PrecisionSchedule exact() { return {}; }
  bool is_exact() const {
    return drift.rule == Precision::Rule::Constant && drift.value == 0.0 &&
           diffusion.rule == Precision::Rule::Constant && diffusion.value == 0.0;
  }
  /// "<delta1>/<delta2>", e.g. "0/0", "0.1/0.05", "n^-0.5/n^-0.5".
  std::string label() const { return drift.label() + "/" + diffusion.label(); }
  friend bool operator==(const PrecisionSchedule&, const PrecisionSchedule&) = default;
};

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline std::string Precision::label() const {
  return rule == Rule::InvSqrtN ? "n^-0.5" : detail::format_number(value);
}

/// How corruption is injected into the coarse scheme's evaluations.
struct NoiseConfig {
  CorruptionClass drift_class = CorruptionClass::K1;
  CorruptionClass diffusion_class = CorruptionClass::K2;
  NoiseOptions options{};
  /// Replace random draws by the constant worst case p = 1.
  bool constant_worst_case = false;
};

struct ProblemConfig {
  std::string id = "paper-sine";  ///< paper-sine | gbm | constant
  double gamma1 = 0.2;
  double m = 100.0;
  std::optional<double> horizon{};  ///< defaults: 0.1 for paper-sine, 1 otherwise
  double mu = 0.1;
  double sigma = 0.2;
  double eta = 1.0;

  double resolved_horizon() const { return horizon.value_or(id == "paper-sine" ? 0.1 : 1.0); }
};

enum class ReferenceMode {
  Auto,        ///< closed form when the problem has one, refined mesh otherwise
  FineMesh,    ///< always the refined-mesh run with exact coefficients
  ClosedForm,  ///< closed form; error if the problem has none
};

struct ExperimentConfig {
  ProblemConfig problem{};
  /// Overrides `problem` when set.
  std::optional<SdeProblem> custom_problem{};
  std::vector<SchemeKind> schemes{SchemeKind::DfRandomizedMilstein};
  std::vector<std::int64_t> n_grid{16, 32, 64, 128, 256, 512, 1024};
  double q = 2.0;
  std::int64_t trajectories = 1000;
  std::int64_t reference_factor = 100;
  std::vector<PrecisionSchedule> schedules{PrecisionSchedule::exact()};
  NoiseConfig noise{};
  ReferenceMode reference = ReferenceMode::Auto;
  std::uint64_t seed = 1;
  /// Mixed into the evaluation-time streams only; the Wiener paths stay put.
  std::uint64_t randomization_salt = 0;
  int workers = 1;
  /// Fill the seconds column with wall time. Off by default so that tables
  /// are byte-reproducible.
  bool record_timing = false;

  SdeProblem build_problem() const {
    if (custom_problem) return *custom_problem;
    const double t = problem.resolved_horizon();
    if (problem.id == "paper-sine") return problems::paper_sine(problem.gamma1, t, problem.m, problem.eta);
    if (problem.id == "gbm") return problems::gbm(problem.mu, problem.sigma, problem.eta, t);
    if (problem.id == "constant") return problems::constant(problem.mu, problem.sigma, problem.eta, t);
    throw std::invalid_argument("unknown problem '" + problem.id + "'");
  }

  bool uses_closed_form(const SdeProblem& p) const {
    switch (reference) {
      case ReferenceMode::Auto: return p.has_exact_solution();
      case ReferenceMode::FineMesh: return false;
      case ReferenceMode::ClosedForm: return true;
    }
    return false;
  }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const {
    if (schemes.empty()) throw std::invalid_argument("schemes: at least one scheme is required");
    if (n_grid.empty()) throw std::invalid_argument("n-grid: at least one n is required");
    for (auto n : n_grid) {
      if (n < 1) throw std::invalid_argument("n-grid: every n must be >= 1");
    }
    if (!(q >= 2.0) || !std::isfinite(q)) throw std::invalid_argument("q: must be >= 2");
    if (trajectories < 1) throw std::invalid_argument("trajectories: must be >= 1");
    if (reference_factor < 1) throw std::invalid_argument("reference-factor: must be >= 1");
    if (workers < 1) throw std::invalid_argument("workers: must be >= 1");
    if (schedules.empty()) throw std::invalid_argument("schedules: at least one is required");
    for (std::size_t i = 0; i < schedules.size(); ++i) {
      for (std::size_t j = i + 1; j < schedules.size(); ++j) {
        if (schedules[i].label() == schedules[j].label()) {
          throw std::invalid_argument("schedules: duplicate schedule " + schedules[i].label());
        }
      }
    }
    for (std::size_t i = 0; i < schemes.size(); ++i) {
      for (std::size_t j = i + 1; j < schemes.size(); ++j) {
        if (schemes[i] == schemes[j]) {
          throw std::invalid_argument("schemes: duplicate scheme " + std::string(to_string(schemes[i])));
        }
      }
    }
    for (const auto& s : schedules) {
      for (const Precision* p : {&s.drift, &s.diffusion}) {
        if (p->rule == Precision::Rule::Constant && !(p->value >= 0.0 && p->value <= 1.0)) {
          throw std::invalid_argument("delta: precision levels must lie in [0, 1]");
        }
      }
      if (!s.is_exact()) {
        for (auto k : schemes) {
          if (requires_derivative(k)) {
            throw std::invalid_argument(
                "schemes: rand-milstein is defined for exact information only");
          }
        }
      }
    }
    if (!custom_problem && problem.id != "paper-sine" && problem.id != "gbm" &&
        problem.id != "constant") {
      throw std::invalid_argument("problem: unknown problem '" + problem.id + "'");
    }
    if (!(problem.gamma1 > 0.0 && problem.gamma1 <= 1.0)) {
      throw std::invalid_argument("gamma1: must lie in (0, 1]");
    }
    if (problem.horizon && !(*problem.horizon > 0.0)) {
      throw std::invalid_argument("horizon: must be positive");
    }
    const SdeProblem p = build_problem();
    if (reference == ReferenceMode::ClosedForm && !p.has_exact_solution()) {
      throw std::invalid_argument("reference: problem '" + p.name() + "' has no closed form");
    }
    if (!uses_closed_form(p) && reference_factor < 2) {
      throw std::invalid_argument("reference-factor: must be >= 2 without a closed-form solution");
    }
    if (n_grid.size() >= 3 && trajectories < 100) {
      throw std::invalid_argument("trajectories: rate fits need at least 100 trajectories");
    }
  }
};

struct ErrorRow {
  SchemeKind scheme = SchemeKind::DfRandomizedMilstein;
  std::string schedule;
  std::int64_t n = 0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double q = 2.0;
  double error = 0.0;   ///< (mean |X_ref - X_n|^q)^{1/q}
  double standard_error = 0.0; ///< delta-method standard error of `error`
  double seconds = 0.0;
};

struct ErrorTable {
  std::vector<ErrorRow> rows;

  std::vector<ErrorRow> select(SchemeKind scheme, const std::string& schedule) const {
    std::vector<ErrorRow> out;
    for (const auto& r : rows) {
      if (r.scheme == scheme && r.schedule == schedule) out.push_back(r);
    }
    return out;
  }
  const ErrorRow* find(SchemeKind scheme, const std::string& schedule, std::int64_t n) const {
    for (const auto& r : rows) {
      if (r.scheme == scheme && r.schedule == schedule && r.n == n) return &r;
    }
    return nullptr;
  }
};

/// Least-squares fit of -log(error) against log(n). A positive slope means
/// the error decays.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Raised when a rate cannot be fitted (zero errors, too few points).
class degenerate_fit : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline RateFit fit_rate(std::span<const ErrorRow> rows) {
  if (rows.size() < 3) throw degenerate_fit("fit_rate: need at least 3 points");
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (!(r.error > 0.0) || !std::isfinite(r.error)) {
      throw degenerate_fit("fit_rate: error at n=" + std::to_string(r.n) + " is not positive");
    }
    xs.push_back(std::log(static_cast<double>(r.n)));
    ys.push_back(-std::log(r.error));
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw degenerate_fit("fit_rate: all n are equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.points = xs.size();
  return fit;
}

struct RateRow {
  SchemeKind scheme = SchemeKind::DfRandomizedMilstein;
  std::string schedule;
  std::optional<RateFit> fit;  ///< empty when the fit is degenerate
  std::string note;
};

struct ExperimentResult {
  ErrorTable table;
  std::vector<RateRow> rates;
};

/// Stream ids for one trajectory of one mesh size.
struct TrajectoryStreams {
  std::uint64_t wiener;
  std::uint64_t xi;
  std::uint64_t xi_reference;

  /// `salt` changes only the evaluation-time streams.
  static TrajectoryStreams make(std::uint64_t seed, std::int64_t n, std::int64_t k,
                                std::uint64_t salt = 0) {
    const auto nn = static_cast<std::uint64_t>(n);
    const auto kk = static_cast<std::uint64_t>(k);
    return {derive_stream(seed, 0x57'49'45'4Eull, nn, kk),      // "WIEN"
            derive_stream(seed, 0x58'49ull ^ salt, nn, kk),     // "XI"
            derive_stream(seed, 0x58'49'52ull ^ salt, nn, kk)};  // "XIR"
  }
};

inline std::uint64_t noise_stream(std::uint64_t seed, std::int64_t n, std::size_t schedule,
                                  bool diffusion) {
  return derive_stream(seed, diffusion ? 0x4E'42ull : 0x4E'41ull, static_cast<std::uint64_t>(n),
                       static_cast<std::uint64_t>(schedule));
}

/// X(T) for the path: the closed form when requested, otherwise the
/// derivative-free randomized Milstein scheme with exact coefficients on the
/// path's own (fine) mesh.
inline double reference_terminal(const SdeProblem& problem, const WienerPath& path,
                                 std::uint64_t xi_reference, bool closed_form,
                                 std::uint64_t trajectory = 0) {
  const double eta = problem.initial_value(trajectory);
  if (closed_form) return problem.exact_terminal(eta, path.increments());
  const auto a = NoisyOracle::exact(problem.drift());
  const auto b = NoisyOracle::exact(problem.diffusion());
  RunOptions opts;
  opts.trajectory_id = trajectory;
  return run_scheme(problem, a, b, SchemeKind::DfRandomizedMilstein, path.mesh(),
                    path.increments(), RandomizationStream(xi_reference), opts)
      .terminal;
}

/// Noisy oracle for one coefficient under the configured noise model.
inline NoisyOracle make_oracle(const CoefficientField& base, double delta, CorruptionClass cls,
                               const NoiseConfig& noise, std::uint64_t stream) {
  if (delta == 0.0) return NoisyOracle::exact(base);
  if (noise.constant_worst_case) {
    return NoisyOracle::with_function(base, delta, cls, [](double, double) { return 1.0; });
  }
  return make_noisy(base, delta, make_uniform_corruption(delta, cls, stream, noise.options));
}

namespace detail {

/// Runs fn(k) for k in [0, count) on `workers` threads, k striped by worker.
template <class Fn>
void parallel_for(std::int64_t count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::int64_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::int64_t k = w; k < count; k += workers) fn(k);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline ErrorRow summarize(std::span<const double> powered, double q) {
  const double k = static_cast<double>(powered.size());
  double mean = 0.0;
  for (double v : powered) mean += v;
  mean /= k;
  double var = 0.0;
  for (double v : powered) var += (v - mean) * (v - mean);
  var = powered.size() > 1 ? var / (k - 1.0) : 0.0;
  ErrorRow row;
  row.q = q;
  row.error = std::pow(mean, 1.0 / q);
  const double se_mean = std::sqrt(var / k);
  row.standard_error = mean > 0.0 ? se_mean * std::pow(mean, 1.0 / q - 1.0) / q : 0.0;
  return row;
}

}  // namespace detail

/// Error rows for every (scheme, schedule) at mesh size n. All cells share
/// the same Brownian paths, evaluation times and reference values.
inline std::vector<ErrorRow> estimate_cells(const ExperimentConfig& config,
                                            const SdeProblem& problem, std::int64_t n) {
  const double horizon = problem.horizon();
  const Mesh mesh(horizon, n);
  const std::int64_t r = config.reference_factor;
  const bool closed_form = config.uses_closed_form(problem);
  const std::size_t n_schemes = config.schemes.size();
  const std::size_t n_cells = config.schedules.size() * n_schemes;

  std::vector<NoisyOracle> drifts, diffusions;
  for (std::size_t s = 0; s < config.schedules.size(); ++s) {
    const auto& sch = config.schedules[s];
    drifts.push_back(make_oracle(problem.drift(), sch.drift.at(n), config.noise.drift_class,
                                 config.noise, noise_stream(config.seed, n, s, false)));
    diffusions.push_back(make_oracle(problem.diffusion(), sch.diffusion.at(n),
                                     config.noise.diffusion_class, config.noise,
                                     noise_stream(config.seed, n, s, true)));
  }

  const auto count = static_cast<std::size_t>(config.trajectories);
  std::vector<std::vector<double>> powered(n_cells, std::vector<double>(count));
  std::vector<double> cell_seconds(n_cells * static_cast<std::size_t>(config.workers), 0.0);

  detail::parallel_for(config.trajectories, config.workers, [&](std::int64_t k) {
    const auto streams = TrajectoryStreams::make(config.seed, n, k, config.randomization_salt);
    const auto uk = static_cast<std::uint64_t>(k);
    const WienerPath path = wiener_generate(n * r, horizon, streams.wiener);
    const std::vector<double> coarse = coarsen(path, r);
    const double reference = reference_terminal(problem, path, streams.xi_reference, closed_form, uk);
    const RandomizationStream xi(streams.xi);
    RunOptions opts;
    opts.trajectory_id = uk;
    const auto worker = static_cast<std::size_t>(k % config.workers);
    for (std::size_t s = 0; s < config.schedules.size(); ++s) {
      for (std::size_t j = 0; j < n_schemes; ++j) {
        const auto start = std::chrono::steady_clock::now();
        const double x = run_scheme(problem, drifts[s], diffusions[s], config.schemes[j], mesh,
                                    coarse, xi, opts)
                             .terminal;
        const std::size_t cell = s * n_schemes + j;
        powered[cell][static_cast<std::size_t>(k)] = std::pow(std::abs(reference - x), config.q);
        if (config.record_timing) {
          cell_seconds[cell * static_cast<std::size_t>(config.workers) + worker] +=
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
      }
    }
  });

  std::vector<ErrorRow> rows;
  for (std::size_t s = 0; s < config.schedules.size(); ++s) {
    for (std::size_t j = 0; j < n_schemes; ++j) {
      const std::size_t cell = s * n_schemes + j;
      ErrorRow row = detail::summarize(powered[cell], config.q);
      row.scheme = config.schemes[j];
      row.schedule = config.schedules[s].label();
      row.n = n;
      row.delta1 = config.schedules[s].drift.at(n);
      row.delta2 = config.schedules[s].diffusion.at(n);
      for (int w = 0; w < config.workers; ++w) {
        row.seconds += cell_seconds[cell * static_cast<std::size_t>(config.workers) +
                                    static_cast<std::size_t>(w)];
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// One row: the strong error of `scheme` on mesh size n under `schedule`.
inline ErrorRow estimate_strong_error(const ExperimentConfig& config, SchemeKind scheme,
                                      std::int64_t n, const PrecisionSchedule& schedule) {
  ExperimentConfig one = config;
  one.schemes = {scheme};
  one.schedules = {schedule};
  one.n_grid = {n};
  one.validate();
  return estimate_cells(one, one.build_problem(), n).front();
}

/// Full sweep over n, schedules and schemes, plus one rate fit per
/// (scheme, schedule) when the grid has at least three sizes.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const SdeProblem problem = config.build_problem();
  ExperimentResult result;
  std::vector<ErrorRow> by_n;
  for (std::int64_t n : config.n_grid) {
    auto rows = estimate_cells(config, problem, n);
    by_n.insert(by_n.end(), rows.begin(), rows.end());
  }
  // Order rows by (schedule, scheme, n) for readable tables.
  for (const auto& sch : config.schedules) {
    for (SchemeKind k : config.schemes) {
      for (std::int64_t n : config.n_grid) {
        for (const auto& r : by_n) {
          if (r.scheme == k && r.schedule == sch.label() && r.n == n) {
            result.table.rows.push_back(r);
            break;
          }
        }
      }
    }
  }
  if (config.n_grid.size() >= 3) {
    for (const auto& sch : config.schedules) {
      for (SchemeKind k : config.schemes) {
        RateRow rate{k, sch.label(), std::nullopt, {}};
        const auto rows = result.table.select(k, sch.label());
        try {
          rate.fit = fit_rate(rows);
        } catch (const degenerate_fit& e) {
          rate.note = e.what();
        }
        result.rates.push_back(std::move(rate));
      }
    }
  }
  return result;
}

}  // namespace noisysde
