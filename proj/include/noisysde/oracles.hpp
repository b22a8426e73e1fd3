#pragma once

// Inexact information about the coefficients: every evaluation returns
// base(t,y) + delta * p(t,y) for a corrupting function p drawn from one of
// the classes
//   K1     |p(t,y)| <= 1 + |y|
//   K1Lip  K1 and |p(t,y) - p(t,z)| <= |y - z|
//   K2     |p(t,y)| <= 1

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>

#include "noisysde/core.hpp"
#include "noisysde/random.hpp"

namespace noisysde {

enum class CorruptionClass { K1, K1Lip, K2 };

inline std::string_view to_string(CorruptionClass c) {
  switch (c) {
    case CorruptionClass::K1: return "K1";
    case CorruptionClass::K1Lip: return "K1Lip";
    case CorruptionClass::K2: return "K2";
  }
  return "?";
}

/// Largest |p(t,y)| the class admits at y.
inline double class_envelope(CorruptionClass c, double y) {
  return c == CorruptionClass::K2 ? 1.0 : 1.0 + std::abs(y);
}

/// Per-trajectory evaluation state. `calls` counts every coefficient
/// evaluation made through an oracle and keys per-call noise.
struct EvalContext {
  std::uint64_t trajectory = 0;
  std::uint64_t calls = 0;
};

/// How random corruption is keyed.
enum class NoiseKeying {
  PerCall,  ///< fresh draw per evaluation, keyed by (stream, trajectory, call index)
  Point,    ///< fixed function of (stream, t, y)
};

struct NoiseOptions {
  /// Draw u on [0,1] instead of the symmetric [-1,1].
  bool uniform01 = false;
  /// K1/K1Lip only: multiply the draw by (1+|y|) so p fills the class envelope.
  bool saturate_growth = false;
  NoiseKeying keying = NoiseKeying::PerCall;
};

/// p supplied as an explicit function, e.g. the constant worst case p = +-1.
struct FunctionCorruption {
  std::function<double(double, double)> p;
};

/// Uniformly distributed corruption scaled by delta.
///
/// K1Lip cannot be honoured by independent draws, so for that class the
/// corruption is the smooth field c * sin(y + phi) (or c * sqrt(1+y^2) when
/// saturating), with c and phi drawn once per (stream, trajectory). Both
/// have unit Lipschitz constant and stay inside the K1 envelope.
struct UniformCorruption {
  CorruptionClass cls = CorruptionClass::K2;
  std::uint64_t stream = 0;
  NoiseOptions options{};
};

/// Relative roundoff p = alpha(t,y) * f(t,y), |alpha| <= bound. alpha is a
/// per-call uniform draw on [-bound, bound] unless `fixed_alpha` is set.
struct RelativeRoundoff {
  double bound = 0.0;
  std::uint64_t stream = 0;
  std::optional<double> fixed_alpha{};
};

using Corruption =
    std::variant<std::monostate, FunctionCorruption, UniformCorruption, RelativeRoundoff>;

namespace detail {

inline double signed_draw(double u, bool uniform01) { return uniform01 ? u : 2.0 * u - 1.0; }

inline std::uint64_t point_key(std::uint64_t stream, double t, double y) {
  return derive_stream(stream, std::bit_cast<std::uint64_t>(t), std::bit_cast<std::uint64_t>(y));
}

}  // namespace detail

/// A coefficient field seen through noisy evaluations. Immutable; all
/// randomness is derived from the oracle's stream and the caller's
/// EvalContext.
class NoisyOracle {
 public:
  NoisyOracle() = default;

  /// delta = 0, no corruption: evaluations are bit-identical to the base.
  static NoisyOracle exact(CoefficientField base) {
    return NoisyOracle(std::move(base), 0.0, CorruptionClass::K2, std::monostate{});
  }

  static NoisyOracle with_function(CoefficientField base, double delta, CorruptionClass cls,
                                   std::function<double(double, double)> p) {
    if (!p) throw std::invalid_argument("NoisyOracle: empty corruption function");
    return NoisyOracle(std::move(base), delta, cls, FunctionCorruption{std::move(p)});
  }

  static NoisyOracle with_corruption(CoefficientField base, double delta, CorruptionClass cls,
                                     Corruption corruption) {
    return NoisyOracle(std::move(base), delta, cls, std::move(corruption));
  }

  const CoefficientField& base() const noexcept { return base_; }
  double delta() const noexcept { return delta_; }
  CorruptionClass corruption_class() const noexcept { return cls_; }
  const Corruption& corruption() const noexcept { return corruption_; }
  bool is_exact() const noexcept {
    return delta_ == 0.0 || std::holds_alternative<std::monostate>(corruption_);
  }

  /// Noisy evaluation; advances ctx.calls by one.
  double operator()(double t, double y, EvalContext& ctx) const {
    const std::uint64_t call = ctx.calls++;
    const double v = base_(t, y);
    if (is_exact()) return v;
    return v + delta_ * raw_corruption(t, y, v, ctx.trajectory, call);
  }

  /// p(t,y) for the given evaluation, before scaling by delta.
  double raw_corruption(double t, double y, double base_value, std::uint64_t trajectory,
                        std::uint64_t call) const {
    return std::visit(
        [&](const auto& c) -> double {
          using C = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<C, std::monostate>) {
            return 0.0;
          } else if constexpr (std::is_same_v<C, FunctionCorruption>) {
            return c.p(t, y);
          } else if constexpr (std::is_same_v<C, UniformCorruption>) {
            return uniform_corruption(c, t, y, trajectory, call);
          } else {
            double alpha = 0.0;
            if (c.fixed_alpha) {
              alpha = *c.fixed_alpha;
            } else {
              const CounterRng rng(derive_stream(c.stream, trajectory));
              alpha = c.bound * (2.0 * rng.uniform(call) - 1.0);
            }
            return alpha * base_value;
          }
        },
        corruption_);
  }

 private:
  NoisyOracle(CoefficientField base, double delta, CorruptionClass cls, Corruption corruption)
      : base_(std::move(base)), delta_(delta), cls_(cls), corruption_(std::move(corruption)) {
    if (!(delta_ >= 0.0 && delta_ <= 1.0)) {
      throw std::invalid_argument("NoisyOracle: precision level must lie in [0, 1], got " +
                                  std::to_string(delta_));
    }
  }

  static double uniform_corruption(const UniformCorruption& c, double t, double y,
                                   std::uint64_t trajectory, std::uint64_t call) {
    if (c.cls == CorruptionClass::K1Lip) {
      const CounterRng rng(derive_stream(c.stream, trajectory));
      const auto b = rng.block(0);
      const double amp = detail::signed_draw(CounterRng::to_open_unit(b[0], b[1]),
                                             c.options.uniform01);
      if (c.options.saturate_growth) return amp * std::sqrt(1.0 + y * y);
      const double phase = 2.0 * std::numbers::pi * CounterRng::to_open_unit(b[2], b[3]);
      return amp * std::sin(y + phase);
    }
    double u = 0.0;
    if (c.options.keying == NoiseKeying::PerCall) {
      u = CounterRng(derive_stream(c.stream, trajectory)).uniform(call);
    } else {
      u = CounterRng(detail::point_key(c.stream, t, y)).uniform(0);
    }
    double p = detail::signed_draw(u, c.options.uniform01);
    if (c.cls == CorruptionClass::K1 && c.options.saturate_growth) p *= 1.0 + std::abs(y);
    return p;
  }

  CoefficientField base_;
  double delta_ = 0.0;
  CorruptionClass cls_ = CorruptionClass::K2;
  Corruption corruption_;
};

/// Uniform corruption source for `make_noisy`. Throws for delta outside [0,1].
inline UniformCorruption make_uniform_corruption(double delta, CorruptionClass cls,
                                                 std::uint64_t stream, NoiseOptions options = {}) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("make_uniform_corruption: delta must lie in [0, 1]");
  }
  return UniformCorruption{cls, stream, options};
}

inline NoisyOracle make_noisy(CoefficientField base, double delta, UniformCorruption source) {
  const auto cls = source.cls;
  return NoisyOracle::with_corruption(std::move(base), delta, cls, source);
}

inline NoisyOracle make_relative_roundoff(CoefficientField f, double delta, double bound,
                                          std::uint64_t stream) {
  if (!(bound >= 0.0)) throw std::invalid_argument("make_relative_roundoff: bound must be >= 0");
  return NoisyOracle::with_corruption(std::move(f), delta, CorruptionClass::K1,
                                      RelativeRoundoff{bound, stream, std::nullopt});
}

inline NoisyOracle make_relative_roundoff_fixed(CoefficientField f, double delta, double alpha) {
  return NoisyOracle::with_corruption(std::move(f), delta, CorruptionClass::K1,
                                      RelativeRoundoff{std::abs(alpha), 0, alpha});
}

/// Result of sampling an oracle against its class envelope.
struct ClassCheck {
  std::int64_t samples = 0;
  std::int64_t violations = 0;
  double worst_ratio = 0.0;  ///< max |p| / envelope (and Lipschitz quotient for K1Lip)
  bool ok() const noexcept { return violations == 0; }
};

/// Samples (t, y) on [0,T] x [-y_max, y_max] and checks the declared class
/// bound on the realised corruption (v_noisy - v) / delta. For K1Lip the
/// Lipschitz condition is also checked on pairs with the same t.
///
/// Per-call noise is not Lipschitz across calls, so for K1Lip only the
/// smooth-field fallback (and user-supplied functions) can pass.
inline ClassCheck check_corruption_class(const NoisyOracle& oracle, double horizon,
                                         std::int64_t samples, double y_max,
                                         std::uint64_t stream) {
  ClassCheck out;
  if (oracle.is_exact()) {
    out.samples = samples;
    return out;
  }
  const CounterRng rng(stream);
  const double delta = oracle.delta();
  // Slack for the rounding in (base + delta*p) - base.
  constexpr double kEps = 8.0 * std::numeric_limits<double>::epsilon();
  for (std::int64_t k = 0; k < samples; ++k) {
    const auto b = rng.block(static_cast<std::uint64_t>(k));
    const double t = horizon * CounterRng::to_open_unit(b[0], b[1]);
    const double y = y_max * (2.0 * CounterRng::to_open_unit(b[2], b[3]) - 1.0);
    EvalContext ctx{static_cast<std::uint64_t>(k) % 64, static_cast<std::uint64_t>(k)};
    const double v = oracle.base()(t, y);
    const double vn = oracle(t, y, ctx);
    const double p = (vn - v) / delta;
    const double env = class_envelope(oracle.corruption_class(), y);
    const double slack = kEps * (1.0 + std::abs(v)) / delta;
    const double ratio = std::abs(p) / env;
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    if (std::abs(p) > env + slack) ++out.violations;
    if (oracle.corruption_class() == CorruptionClass::K1Lip) {
      const auto b2 = rng.block(static_cast<std::uint64_t>(k), 1);
      const double z = y_max * (2.0 * CounterRng::to_open_unit(b2[0], b2[1]) - 1.0);
      if (z != y) {
        const double wn = oracle(t, z, ctx);
        const double pz = (wn - oracle.base()(t, z)) / delta;
        const double lip = std::abs(p - pz) / std::abs(y - z);
        out.worst_ratio = std::max(out.worst_ratio, lip);
        if (std::abs(p - pz) > std::abs(y - z) + 2.0 * slack + kEps * (1.0 + std::abs(z)) / delta) {
          ++out.violations;
        }
      }
    }
    ++out.samples;
  }
  return out;
}

}  // namespace noisysde
