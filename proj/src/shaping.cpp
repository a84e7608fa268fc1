#include "febsim/shaping.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "febsim/constants.hpp"

namespace febsim {

namespace {

// u^k for small non-negative integer k, with the 0^0 = 1 convention the
// shape formulas rely on at t = 0.
double ipow(double u, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= u;
  return r;
}

}  // namespace

RcCodeMap::RcCodeMap() {
  // Piecewise-linear through the anchors (0, 5.0), (3, 5.3), (6, 9.0) ns.
  for (int c = 0; c < kCodes; ++c) {
    tp_ns_[static_cast<std::size_t>(c)] =
        c <= 3 ? 5.0 + (5.3 - 5.0) * c / 3.0 : 5.3 + (9.0 - 5.3) * (c - 3) / 3.0;
  }
}

RcCodeMap::RcCodeMap(const std::array<double, kCodes>& tp_ns) : tp_ns_(tp_ns) {
  for (int c = 0; c < kCodes; ++c) {
    if (!(tp_ns_[static_cast<std::size_t>(c)] > 0.0))
      throw std::invalid_argument("RcCodeMap: peaking times must be > 0");
    if (c > 0 && tp_ns_[static_cast<std::size_t>(c)] <
                     tp_ns_[static_cast<std::size_t>(c - 1)])
      throw std::invalid_argument("RcCodeMap: table must be monotone non-decreasing");
  }
}

double RcCodeMap::peaking_time_ns(int code) const {
  if (code < 0 || code >= kCodes)
    throw std::out_of_range("RcCodeMap: code " + std::to_string(code) +
                            " outside [0, 6]");
  return tp_ns_[static_cast<std::size_t>(code)];
}

double peaking_time_from_rc(int code, const RcCodeMap& map) {
  return map.peaking_time_ns(code);
}

PulseShape::PulseShape(const ShaperConfig& config) : config_(config) {
  if (config_.order < 1)
    throw std::invalid_argument("PulseShape: order must be >= 1");
  if (!(config_.peaking_time_ns > 0.0))
    throw std::invalid_argument("PulseShape: peaking_time must be > 0");
  const int n = config_.order;
  tau_ = config_.peaking_time_ns / n;
  // With H(s) = K tau s / (1 + s tau)^(n+1), the delta response is
  // K (t/tau)^n exp(-t/tau) / n!; a unit peak at t = n tau needs K = n! e^n.
  const double k = std::tgamma(n + 1.0) * std::exp(static_cast<double>(n));
  norm_sq_ = k * k;
}

PulseShape PulseShape::from_rc_code(int code, const RcCodeMap& map, int order) {
  ShaperConfig cfg;
  cfg.order = order;
  cfg.peaking_time_ns = map.peaking_time_ns(code);
  cfg.rc_code = code;
  return PulseShape(cfg);
}

double PulseShape::weighting(double t_ns) const {
  if (t_ns < 0.0) throw std::domain_error("weighting: t must be >= 0");
  const int n = config_.order;
  const double u = t_ns / config_.peaking_time_ns;
  return ipow(u, n) * std::exp(n * (1.0 - u));
}

double PulseShape::weighting_derivative(double t_ns) const {
  if (t_ns < 0.0)
    throw std::domain_error("weighting_derivative: t must be >= 0");
  const int n = config_.order;
  const double tp = config_.peaking_time_ns;
  const double u = t_ns / tp;
  return (n / tp) * ipow(u, n - 1) * (1.0 - u) * std::exp(n * (1.0 - u));
}

double PulseShape::weighting_second_derivative(double t_ns) const {
  if (t_ns < 0.0)
    throw std::domain_error("weighting_second_derivative: t must be >= 0");
  const int n = config_.order;
  const double tp = config_.peaking_time_ns;
  const double u = t_ns / tp;
  // d/du of u^(n-1) (1-u) e^(n(1-u)); the (n-1) u^(n-2) term vanishes
  // identically for n = 1, where u^(n-2) would be singular at u = 0.
  const double t1 = n == 1 ? 0.0 : (n - 1) * ipow(u, n - 2) * (1.0 - u);
  const double t2 = ipow(u, n - 1);
  const double t3 = n * ipow(u, n - 1) * (1.0 - u);
  return (n / (tp * tp)) * std::exp(n * (1.0 - u)) * (t1 - t2 - t3);
}

double PulseShape::transfer_magnitude_sq(double f_ghz) const {
  if (f_ghz < 0.0)
    throw std::domain_error("transfer_magnitude_sq: f must be >= 0");
  const int n = config_.order;
  const double wt = 2.0 * constants::pi * f_ghz * tau_;
  const double x = wt * wt;
  return norm_sq_ * x / std::pow(1.0 + x, n + 1);
}

}  // namespace febsim
