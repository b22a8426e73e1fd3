#pragma once

// Meshes, Brownian paths, iterated Ito integrals, the operators L1 and its
// forward-difference counterpart, and the problem definition.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "noisysde/random.hpp"

namespace noisysde {

/// Raised when an operation needs a capability the inputs do not carry
/// (e.g. L1 on a field without a spatial derivative).
class unsupported_operation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Equidistant mesh t_i = i*T/n on [0, T].
class Mesh {
 public:
  Mesh(double horizon, std::int64_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw std::invalid_argument("Mesh: horizon must be positive and finite");
    }
    if (steps < 1) throw std::invalid_argument("Mesh: number of steps must be >= 1");
  }

  double horizon() const noexcept { return horizon_; }
  std::int64_t steps() const noexcept { return steps_; }
  double step() const noexcept { return horizon_ / static_cast<double>(steps_); }

  /// Node i; node(0) == 0 and node(steps()) == horizon() exactly.
  double node(std::int64_t i) const noexcept {
    if (i >= steps_) return horizon_;
    return static_cast<double>(i) * horizon_ / static_cast<double>(steps_);
  }

  Mesh refined(std::int64_t factor) const {
    if (factor < 1) throw std::invalid_argument("Mesh: refinement factor must be >= 1");
    return Mesh(horizon_, steps_ * factor);
  }

  friend bool operator==(const Mesh&, const Mesh&) = default;

 private:
  double horizon_;
  std::int64_t steps_;
};

/// Brownian increments over every subinterval of a fine mesh.
class WienerPath {
 public:
  WienerPath(Mesh mesh, std::vector<double> increments, std::uint64_t stream)
      : mesh_(mesh), increments_(std::move(increments)), stream_(stream) {
    if (static_cast<std::int64_t>(increments_.size()) != mesh_.steps()) {
      throw std::invalid_argument("WienerPath: increment count must equal the number of steps");
    }
  }

  const Mesh& mesh() const noexcept { return mesh_; }
  std::span<const double> increments() const noexcept { return increments_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// W(T), summed in index order.
  double terminal() const noexcept {
    double w = 0.0;
    for (double dw : increments_) w += dw;
    return w;
  }

 private:
  Mesh mesh_;
  std::vector<double> increments_;
  std::uint64_t stream_;
};

/// I_{t_i,t_i+dt}(W,W) = ((W(t)-W(t_i))^2 - (t-t_i)) / 2.
inline double ito_double_integral(double dw, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("ito_double_integral: dt must be positive");
  return 0.5 * (dw * dw - dt);
}

/// Increments are rounded to multiples of this quantum. Any sum of them is
/// then exact in binary64 while its magnitude stays below 2^5, so block sums
/// do not depend on grouping and coarse paths match the fine path exactly.
inline constexpr double kIncrementQuantum = 0x1.0p-48;

inline double quantize_increment(double dw) {
  return std::nearbyint(dw / kIncrementQuantum) * kIncrementQuantum;
}

/// n_fine i.i.d. N(0, T/n_fine) increments; increment j depends only on
/// (stream, j).
inline WienerPath wiener_generate(std::int64_t n_fine, double horizon, std::uint64_t stream) {
  if (n_fine < 1) throw std::invalid_argument("wiener_generate: n_fine must be >= 1");
  const Mesh mesh(horizon, n_fine);
  const double scale = std::sqrt(mesh.step());
  const CounterRng rng(stream);
  std::vector<double> dw(static_cast<std::size_t>(n_fine));
  for (std::int64_t j = 0; j < n_fine; j += 2) {
    const auto z = rng.normal_pair(static_cast<std::uint64_t>(j / 2));
    dw[static_cast<std::size_t>(j)] = quantize_increment(scale * z[0]);
    if (j + 1 < n_fine) dw[static_cast<std::size_t>(j + 1)] = quantize_increment(scale * z[1]);
  }
  return WienerPath(mesh, std::move(dw), stream);
}

/// Block sums of `factor` consecutive increments.
inline std::vector<double> coarsen(std::span<const double> fine, std::int64_t factor) {
  if (factor < 1 || fine.size() % static_cast<std::size_t>(factor) != 0) {
    throw std::invalid_argument("coarsen: factor " + std::to_string(factor) +
                                " does not divide " + std::to_string(fine.size()));
  }
  const auto f = static_cast<std::size_t>(factor);
  std::vector<double> out(fine.size() / f);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < f; ++j) s += fine[i * f + j];
    out[i] = s;
  }
  return out;
}

inline std::vector<double> coarsen(const WienerPath& path, std::int64_t factor) {
  return coarsen(path.increments(), factor);
}

enum class CoefficientRole { Drift, Diffusion };

/// Declared regularity of a coefficient: Lipschitz constant K in space and
/// Hoelder exponent gamma in time. Declared by the problem author, never
/// inferred.
struct Regularity {
  double lipschitz = 1.0;
  double holder = 1.0;
};

/// A coefficient (t, y) -> R, optionally with its spatial derivative.
class CoefficientField {
 public:
  using Function = std::function<double(double, double)>;

  CoefficientField() = default;
  CoefficientField(Function f, Regularity reg, CoefficientRole role,
                   Function derivative = nullptr)
      : f_(std::move(f)), df_(std::move(derivative)), reg_(reg), role_(role) {
    if (!f_) throw std::invalid_argument("CoefficientField: empty function");
    if (!(reg_.lipschitz > 0.0)) throw std::invalid_argument("CoefficientField: K must be > 0");
    if (!(reg_.holder > 0.0 && reg_.holder <= 1.0)) {
      throw std::invalid_argument("CoefficientField: gamma must lie in (0, 1]");
    }
  }

  double operator()(double t, double y) const { return f_(t, y); }

  bool has_derivative() const noexcept { return static_cast<bool>(df_); }
  double derivative(double t, double y) const {
    if (!df_) throw unsupported_operation("CoefficientField: no spatial derivative supplied");
    return df_(t, y);
  }

  const Regularity& regularity() const noexcept { return reg_; }
  CoefficientRole role() const noexcept { return role_; }

 private:
  Function f_;
  Function df_;
  Regularity reg_;
  CoefficientRole role_ = CoefficientRole::Drift;
};

/// Forward difference (f(t,y+h) - f(t,y)) / h.
template <class F>
double delta_h(const F& f, double t, double y, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("delta_h: h must be positive");
  return (f(t, y + h) - f(t, y)) / h;
}

/// f(t,y) * delta_h f(t,y).
template <class F>
double l1h(const F& f, double t, double y, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("l1h: h must be positive");
  const double fy = f(t, y);
  return fy * ((f(t, y + h) - fy) / h);
}

/// f(t,y) * df/dy(t,y).
inline double l1(const CoefficientField& f, double t, double y) {
  if (!f.has_derivative()) throw unsupported_operation("l1: field carries no spatial derivative");
  return f(t, y) * f.derivative(t, y);
}

/// Growth constant K1 = K (1 + max(T^g1, T^g2)) with |f(t,y)| <= K1 (1+|y|).
inline double growth_constant(double lipschitz, double horizon, double gamma1, double gamma2) {
  return lipschitz * (1.0 + std::max(std::pow(horizon, gamma1), std::pow(horizon, gamma2)));
}

/// Initial value: a constant, or a sampler keyed by trajectory id.
using InitialValue = std::variant<double, std::function<double(std::uint64_t)>>;

/// Terminal solution map X(T) from (eta, fine increments, T), when known.
using ExactSolution = std::function<double(double, std::span<const double>, double)>;

/// dX = a(t,X) dt + b(t,X) dW on [0, T], X(0) = eta.
class SdeProblem {
 public:
  SdeProblem(std::string name, CoefficientField drift, CoefficientField diffusion,
             InitialValue eta, double horizon, ExactSolution exact = nullptr)
      : name_(std::move(name)),
        drift_(std::move(drift)),
        diffusion_(std::move(diffusion)),
        eta_(std::move(eta)),
        horizon_(horizon),
        exact_(std::move(exact)) {
    if (!(horizon_ > 0.0)) throw std::invalid_argument("SdeProblem: horizon must be positive");
    if (drift_.role() != CoefficientRole::Drift || diffusion_.role() != CoefficientRole::Diffusion) {
      throw std::invalid_argument("SdeProblem: coefficient roles do not match drift/diffusion");
    }
  }

  const std::string& name() const noexcept { return name_; }
  const CoefficientField& drift() const noexcept { return drift_; }
  const CoefficientField& diffusion() const noexcept { return diffusion_; }
  double horizon() const noexcept { return horizon_; }

  double initial_value(std::uint64_t trajectory) const {
    if (const auto* c = std::get_if<double>(&eta_)) return *c;
    return std::get<1>(eta_)(trajectory);
  }

  bool has_exact_solution() const noexcept { return static_cast<bool>(exact_); }
  double exact_terminal(double eta, std::span<const double> increments) const {
    if (!exact_) throw unsupported_operation("SdeProblem: no closed-form solution");
    return exact_(eta, increments, horizon_);
  }

  /// K1 for this problem's declared regularity.
  double growth_constant() const {
    const double k = std::max(drift_.regularity().lipschitz, diffusion_.regularity().lipschitz);
    return noisysde::growth_constant(k, horizon_, drift_.regularity().holder,
                                     diffusion_.regularity().holder);
  }

 private:
  std::string name_;
  CoefficientField drift_;
  CoefficientField diffusion_;
  InitialValue eta_;
  double horizon_;
  ExactSolution exact_;
};

}  // namespace noisysde
