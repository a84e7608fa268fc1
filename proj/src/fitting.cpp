#include "febsim/fitting.hpp"

namespace febsim {

LineFit fit_weighted_line(std::span<const double> x, std::span<const double> y,
                          std::span<const double> weight) {
  const std::size_t n = x.size();
  if (y.size() != n || weight.size() != n)
    throw std::invalid_argument("fit_weighted_line: size mismatch");
  if (n < 2) throw std::invalid_argument("fit_weighted_line: need >= 2 points");
  double s = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weight[i];
    if (!(w > 0.0))
      throw std::invalid_argument("fit_weighted_line: non-positive weight");
    s += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = s * sxx - sx * sx;
  if (!(det > 0.0) || !(std::abs(det) > 1e-14 * s * sxx))
    throw std::invalid_argument("fit_weighted_line: degenerate abscissae");
  LineFit fit;
  fit.slope = (s * sxy - sx * sy) / det;
  fit.intercept = (sxx * sy - sx * sxy) / det;
  fit.slope_err = std::sqrt(s / det);
  fit.intercept_err = std::sqrt(sxx / det);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    fit.chi2 += weight[i] * r * r;
  }
  fit.ndf = static_cast<int>(n) - 2;
  return fit;
}

}  // namespace febsim
