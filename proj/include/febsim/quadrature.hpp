#pragma once

#include <cmath>
#include <stdexcept>

namespace febsim {

namespace detail {

// 15-point Kronrod / 7-point Gauss rule (positive abscissae; index 7 is the
// interval centre).  Gauss nodes sit at the odd Kronrod indices.
inline constexpr double kGk15X[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kGk15Wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGk15Wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(const F& f, double a, double b, double& value, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = fc * kGk15Wk[7];
  double resg = fc * kGk15Wg[3];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kGk15X[j];
    const double f1 = f(c - x);
    const double f2 = f(c + x);
    resk += kGk15Wk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kGk15Wg[j / 2] * (f1 + f2);
  }
  value = resk * h;
  err = std::abs((resk - resg) * h);
}

template <class F>
double integrate_recurse(const F& f, double a, double b, double tol,
                         int depth) {
  double value = 0.0;
  double err = 0.0;
  gk15(f, a, b, value, err);
  if (err <= tol || depth <= 0) return value;
  const double c = 0.5 * (a + b);
  return integrate_recurse(f, a, c, 0.5 * tol, depth - 1) +
         integrate_recurse(f, c, b, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b] to an absolute
/// tolerance.  Bisects until the local 15/7 error estimate meets the split
/// tolerance; depth is bounded so pathological integrands terminate.
template <class F>
double integrate_adaptive(const F& f, double a, double b,
                          double abs_tol = 1e-9) {
  if (!(b >= a)) throw std::invalid_argument("integrate_adaptive: b < a");
  if (a == b) return 0.0;
  return detail::integrate_recurse(f, a, b, abs_tol, 48);
}

/// Adaptive integration of f over [a, +inf) via the rational map
/// t = a + u/(1-u), dt = du/(1-u)^2.  The integrand must decay fast enough
/// for the transformed integral to be proper (all spectral densities used
/// here fall at least as 1/omega^4).
template <class F>
double integrate_half_line(const F& f, double a, double abs_tol = 1e-9) {
  auto g = [&f, a](double u) {
    const double om = 1.0 - u;
    const double t = a + u / om;
    const double jac = 1.0 / (om * om);
    const double v = f(t) * jac;
    return std::isfinite(v) ? v : 0.0;
  };
  return detail::integrate_recurse(g, 0.0, 1.0, abs_tol, 48);
}

}  // namespace febsim
