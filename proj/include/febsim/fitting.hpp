#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace febsim {

/// Result of a weighted straight-line fit y = intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_err = 0.0;
  double intercept_err = 0.0;
  double chi2 = 0.0;
  int ndf = 0;
};

/// Closed-form weighted least squares for a line; weight_i = 1 / var(y_i).
/// Throws on size mismatch, fewer than two points, non-positive weights, or
/// degenerate (all-equal) abscissae.
LineFit fit_weighted_line(std::span<const double> x, std::span<const double> y,
                          std::span<const double> weight);

/// Result of a two-parameter nonlinear least-squares fit.
struct Fit2Result {
  double p0 = 0.0;
  double p1 = 0.0;
  std::array<std::array<double, 2>, 2> covariance{{{0.0, 0.0}, {0.0, 0.0}}};
  double chi2 = 0.0;
  int ndf = 0;
  int iterations = 0;
};

/// Levenberg-Marquardt for two-parameter models with analytic gradients.
/// `model(x, p0, p1, d0, d1)` returns the model value and fills the partial
/// derivatives.  sigma_i are the per-point standard deviations (must be > 0).
/// Throws std::runtime_error if the solver fails to converge.
template <class Model>
Fit2Result fit_curve_2p(const Model& model, std::span<const double> x,
                        std::span<const double> y,
                        std::span<const double> sigma, double init0,
                        double init1) {
  const std::size_t n = x.size();
  if (y.size() != n || sigma.size() != n)
    throw std::invalid_argument("fit_curve_2p: size mismatch");
  if (n < 3) throw std::invalid_argument("fit_curve_2p: need >= 3 points");
  for (double s : sigma)
    if (!(s > 0.0)) throw std::invalid_argument("fit_curve_2p: sigma <= 0");

  auto chi2_at = [&](double p0, double p1) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d0 = 0.0;
      double d1 = 0.0;
      const double r = (y[i] - model(x[i], p0, p1, d0, d1)) / sigma[i];
      c += r * r;
    }
    return c;
  };

  double p0 = init0;
  double p1 = init1;
  double chi2 = chi2_at(p0, p1);
  double lambda = 1e-3;
  int iter = 0;
  const int max_iter = 200;
  for (; iter < max_iter; ++iter) {
    // Normal equations J^T W J and gradient J^T W r at the current point.
    double a00 = 0.0, a01 = 0.0, a11 = 0.0, g0 = 0.0, g1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d0 = 0.0;
      double d1 = 0.0;
      const double m = model(x[i], p0, p1, d0, d1);
      const double w = 1.0 / (sigma[i] * sigma[i]);
      const double r = y[i] - m;
      a00 += w * d0 * d0;
      a01 += w * d0 * d1;
      a11 += w * d1 * d1;
      g0 += w * d0 * r;
      g1 += w * d1 * r;
    }
    bool stepped = false;
    while (lambda < 1e12) {
      const double b00 = a00 * (1.0 + lambda);
      const double b11 = a11 * (1.0 + lambda);
      const double det = b00 * b11 - a01 * a01;
      if (std::abs(det) > 0.0) {
        const double s0 = (g0 * b11 - g1 * a01) / det;
        const double s1 = (g1 * b00 - g0 * a01) / det;
        const double c2 = chi2_at(p0 + s0, p1 + s1);
        if (c2 <= chi2) {
          const bool converged =
              chi2 - c2 <= 1e-12 * (1.0 + chi2) &&
              std::abs(s0) <= 1e-10 * (1.0 + std::abs(p0)) &&
              std::abs(s1) <= 1e-10 * (1.0 + std::abs(p1));
          p0 += s0;
          p1 += s1;
          chi2 = c2;
          lambda = std::max(lambda * 0.125, 1e-12);
          stepped = true;
          if (converged) iter = max_iter + 1;  // flag convergence, exit loops
          break;
        }
      }
      lambda *= 8.0;
    }
    if (!stepped || iter > max_iter) break;
  }
  if (iter == max_iter)
    throw std::runtime_error("fit_curve_2p: no convergence after bounded iterations");

  // Covariance from the undamped normal matrix at the optimum.
  double a00 = 0.0, a01 = 0.0, a11 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d0 = 0.0;
    double d1 = 0.0;
    (void)model(x[i], p0, p1, d0, d1);
    const double w = 1.0 / (sigma[i] * sigma[i]);
    a00 += w * d0 * d0;
    a01 += w * d0 * d1;
    a11 += w * d1 * d1;
  }
  const double det = a00 * a11 - a01 * a01;
  if (!(std::abs(det) > 0.0))
    throw std::runtime_error("fit_curve_2p: degenerate covariance");
  Fit2Result out;
  out.p0 = p0;
  out.p1 = p1;
  out.covariance = {{{a11 / det, -a01 / det}, {-a01 / det, a00 / det}}};
  out.chi2 = chi2;
  out.ndf = static_cast<int>(n) - 2;
  out.iterations = std::min(iter, max_iter);
  return out;
}

}  // namespace febsim
