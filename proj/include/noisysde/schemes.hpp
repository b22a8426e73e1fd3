#pragma once

// One-step maps and the trajectory driver for the four schemes:
//   Euler                  x + a(t_i,x) h + b(t_i,x) dW
//   RandomizedEuler        x + a(xi_i,x) h + b(t_i,x) dW
//   Milstein               x + a(xi_i,x) h + b(t_i,x) dW + L1 b(t_i,x) I
//   DfRandomizedMilstein   x + a(xi_i,x) h + b(t_i,x) dW + L1h b(t_i,x) I
// where xi_i ~ U[t_i, t_{i+1}] and I = (dW^2 - h)/2. The Milstein variant
// randomizes the drift like the derivative-free one and needs db/dy.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "noisysde/core.hpp"
#include "noisysde/oracles.hpp"
#include "noisysde/random.hpp"

namespace noisysde {

enum class SchemeKind { Euler, RandomizedEuler, Milstein, DfRandomizedMilstein };

inline constexpr SchemeKind kAllSchemes[] = {SchemeKind::Euler, SchemeKind::RandomizedEuler,
                                             SchemeKind::Milstein,
                                             SchemeKind::DfRandomizedMilstein};

inline std::string_view to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::Euler: return "euler";
    case SchemeKind::RandomizedEuler: return "rand-euler";
    case SchemeKind::Milstein: return "rand-milstein";
    case SchemeKind::DfRandomizedMilstein: return "df-rand-milstein";
  }
  return "?";
}

inline std::optional<SchemeKind> parse_scheme(std::string_view s) {
  for (SchemeKind k : kAllSchemes) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

constexpr bool requires_derivative(SchemeKind k) noexcept { return k == SchemeKind::Milstein; }
constexpr bool randomizes_drift(SchemeKind k) noexcept { return k != SchemeKind::Euler; }
constexpr int evaluations_per_step(SchemeKind k) noexcept {
  return (k == SchemeKind::Euler || k == SchemeKind::RandomizedEuler) ? 2 : 3;
}

/// Uniform evaluation times xi_i in [t_i, t_{i+1}], drawn lazily from a
/// counter-based stream keyed by the step index.
class RandomizationStream {
 public:
  explicit RandomizationStream(std::uint64_t stream) noexcept : stream_(stream), rng_(stream) {}

  std::uint64_t stream() const noexcept { return stream_; }

  double at(const Mesh& mesh, std::int64_t i) const {
    const double t = mesh.node(i);
    const double h = mesh.step();
    return std::min(t + h * rng_.uniform(static_cast<std::uint64_t>(i)), t + h);
  }

 private:
  std::uint64_t stream_;
  CounterRng rng_;
};

namespace detail {

inline void check_xi(double t_i, double h, double xi) {
  if (!(xi >= t_i && xi <= t_i + h)) {
    throw std::invalid_argument("step: xi = " + std::to_string(xi) + " outside [" +
                                std::to_string(t_i) + ", " + std::to_string(t_i + h) + "]");
  }
}

}  // namespace detail

/// Derivative-free randomized Milstein step. `spatial_step` defaults to the
/// time step h; other values are an experimentation knob.
template <class Drift, class Diffusion>
double step_df_rand_milstein(double x, Drift&& a, Diffusion&& b, double t_i, double h, double xi,
                             double dw, double ito, std::optional<double> spatial_step = {}) {
  detail::check_xi(t_i, h, xi);
  const double dx = spatial_step.value_or(h);
  if (!(dx > 0.0)) throw std::invalid_argument("step_df_rand_milstein: spatial step must be > 0");
  const double drift = a(xi, x);
  const double b0 = b(t_i, x);
  const double b1 = b(t_i, x + dx);
  const double l1h_b = b0 * ((b1 - b0) / dx);
  return x + drift * h + b0 * dw + l1h_b * ito;
}

/// Randomized Milstein step with the exact L1 b = b * db/dy.
template <class Drift>
double step_rand_milstein(double x, Drift&& a, const CoefficientField& b, double t_i, double h,
                          double xi, double dw, double ito) {
  detail::check_xi(t_i, h, xi);
  if (!b.has_derivative()) {
    throw unsupported_operation("step_rand_milstein: diffusion has no spatial derivative");
  }
  return x + a(xi, x) * h + b(t_i, x) * dw + l1(b, t_i, x) * ito;
}

template <class Drift, class Diffusion>
double step_euler(double x, Drift&& a, Diffusion&& b, double t_i, double h, double dw) {
  return x + a(t_i, x) * h + b(t_i, x) * dw;
}

template <class Drift, class Diffusion>
double step_rand_euler(double x, Drift&& a, Diffusion&& b, double t_i, double h, double xi,
                       double dw) {
  detail::check_xi(t_i, h, xi);
  return x + a(xi, x) * h + b(t_i, x) * dw;
}

struct SchemeRun {
  double terminal = 0.0;
  std::vector<double> trajectory;  ///< X at every node when recorded, else empty
  std::uint64_t evaluations = 0;   ///< coefficient evaluations (a, b and db/dy)
};

struct RunOptions {
  std::uint64_t trajectory_id = 0;
  bool record_trajectory = false;
  std::optional<double> spatial_step{};
};

/// Iterates `kind` from eta over every step of `mesh`, driven by the given
/// increments and evaluation-time stream.
inline SchemeRun run_scheme(const SdeProblem& problem, const NoisyOracle& drift,
                            const NoisyOracle& diffusion, SchemeKind kind, const Mesh& mesh,
                            std::span<const double> increments, const RandomizationStream& xi,
                            const RunOptions& options = {}) {
  if (static_cast<std::int64_t>(increments.size()) != mesh.steps()) {
    throw std::invalid_argument("run_scheme: " + std::to_string(increments.size()) +
                                " increments for a mesh of " + std::to_string(mesh.steps()) +
                                " steps");
  }
  if (mesh.horizon() != problem.horizon()) {
    throw std::invalid_argument("run_scheme: mesh horizon differs from the problem horizon");
  }
  if (requires_derivative(kind)) {
    if (!drift.is_exact() || !diffusion.is_exact()) {
      throw unsupported_operation(
          "run_scheme: rand-milstein needs exact information (no noisy derivative model)");
    }
    if (!diffusion.base().has_derivative()) {
      throw unsupported_operation("run_scheme: rand-milstein needs the diffusion derivative");
    }
  }

  EvalContext ctx{options.trajectory_id, 0};
  const auto a = [&](double t, double y) { return drift(t, y, ctx); };
  const auto b = [&](double t, double y) { return diffusion(t, y, ctx); };

  SchemeRun run;
  double x = problem.initial_value(options.trajectory_id);
  if (options.record_trajectory) {
    run.trajectory.reserve(static_cast<std::size_t>(mesh.steps()) + 1);
    run.trajectory.push_back(x);
  }
  const double h = mesh.step();
  for (std::int64_t i = 0; i < mesh.steps(); ++i) {
    const double t = mesh.node(i);
    const double dw = increments[static_cast<std::size_t>(i)];
    switch (kind) {
      case SchemeKind::Euler:
        x = step_euler(x, a, b, t, h, dw);
        break;
      case SchemeKind::RandomizedEuler:
        x = step_rand_euler(x, a, b, t, h, xi.at(mesh, i), dw);
        break;
      case SchemeKind::Milstein:
        x = step_rand_milstein(x, a, diffusion.base(), t, h, xi.at(mesh, i), dw,
                               ito_double_integral(dw, h));
        ctx.calls += 2;  // b and db/dy bypass the oracle
        break;
      case SchemeKind::DfRandomizedMilstein:
        x = step_df_rand_milstein(x, a, b, t, h, xi.at(mesh, i), dw, ito_double_integral(dw, h),
                                  options.spatial_step);
        break;
    }
    if (options.record_trajectory) run.trajectory.push_back(x);
  }
  run.terminal = x;
  run.evaluations = ctx.calls;
  return run;
}

}  // namespace noisysde
