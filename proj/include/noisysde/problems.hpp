#pragma once

// Built-in test problems.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "noisysde/core.hpp"

namespace noisysde::problems {

inline double sum(std::span<const double> increments) {
  double w = 0.0;
  for (double dw : increments) w += dw;
  return w;
}

/// dX = sin(M X t^g1) dt + cos(M X t^g2) dW, X(0) = eta, g2 = min(g1 + 1/2, 1).
/// No closed-form solution.
inline SdeProblem paper_sine(double gamma1, double horizon = 0.1, double m = 100.0,
                             double eta = 1.0) {
  const double gamma2 = std::min(gamma1 + 0.5, 1.0);
  const double k = m * std::max(1.0, horizon);
  CoefficientField drift([=](double t, double y) { return std::sin(m * y * std::pow(t, gamma1)); },
                         {k, gamma1}, CoefficientRole::Drift);
  CoefficientField diffusion(
      [=](double t, double y) { return std::cos(m * y * std::pow(t, gamma2)); }, {k, gamma2},
      CoefficientRole::Diffusion, [=](double t, double y) {
        const double s = std::pow(t, gamma2);
        return -m * s * std::sin(m * y * s);
      });
  return SdeProblem("paper-sine", std::move(drift), std::move(diffusion), eta, horizon);
}

/// Geometric Brownian motion, X(T) = eta exp((mu - sigma^2/2) T + sigma W(T)).
inline SdeProblem gbm(double mu, double sigma, double eta = 1.0, double horizon = 1.0) {
  const double k = std::max({std::abs(mu), std::abs(sigma), 1e-12});
  CoefficientField drift([=](double, double y) { return mu * y; }, {k, 1.0},
                         CoefficientRole::Drift, [=](double, double) { return mu; });
  CoefficientField diffusion([=](double, double y) { return sigma * y; }, {k, 1.0},
                             CoefficientRole::Diffusion, [=](double, double) { return sigma; });
  return SdeProblem(
      "gbm", std::move(drift), std::move(diffusion), eta, horizon,
      [=](double x0, std::span<const double> dw, double t) {
        return x0 * std::exp((mu - 0.5 * sigma * sigma) * t + sigma * sum(dw));
      });
}

/// dX = mu dt + sigma dW, X(T) = eta + mu T + sigma W(T).
inline SdeProblem constant(double mu, double sigma, double eta = 1.0, double horizon = 1.0) {
  const double k = std::max({std::abs(mu), std::abs(sigma), 1e-12});
  CoefficientField drift([=](double, double) { return mu; }, {k, 1.0}, CoefficientRole::Drift,
                         [](double, double) { return 0.0; });
  CoefficientField diffusion([=](double, double) { return sigma; }, {k, 1.0},
                             CoefficientRole::Diffusion, [](double, double) { return 0.0; });
  return SdeProblem("constant", std::move(drift), std::move(diffusion), eta, horizon,
                    [=](double x0, std::span<const double> dw, double t) {
                      return x0 + mu * t + sigma * sum(dw);
                    });
}

}  // namespace noisysde::problems
