#pragma once

#include <array>
#include <optional>

namespace febsim {

/// Static configuration of the semi-Gaussian shaping stage: one CR
/// differentiation followed by `order` RC integrations, all sharing the time
/// constant tau = peaking_time / order.
struct ShaperConfig {
  int order = 3;                 ///< number of RC integrations, n >= 1
  double peaking_time_ns = 5.3;  ///< time of the unit response peak, > 0
  std::optional<int> rc_code;    ///< feedback code the peaking time came from
};

/// Monotone lookup from the 3-bit feedback code (0..6) to a peaking time.
/// The default table interpolates linearly between the anchor points
/// code 0 -> 5.0 ns, code 3 -> 5.3 ns, code 6 -> 9.0 ns.
class RcCodeMap {
 public:
  static constexpr int kCodes = 7;

  RcCodeMap();

  /// Custom table; must be positive and monotone non-decreasing.
  explicit RcCodeMap(const std::array<double, kCodes>& tp_ns);

  /// Peaking time for a code; throws std::out_of_range outside [0, 6].
  double peaking_time_ns(int code) const;

  const std::array<double, kCodes>& table() const { return tp_ns_; }

  bool operator==(const RcCodeMap&) const = default;

 private:
  std::array<double, kCodes> tp_ns_;
};

/// Convenience lookup against a (default) code map.
double peaking_time_from_rc(int code, const RcCodeMap& map = RcCodeMap());

/// Immutable analytic pulse shape of the shaping chain, normalized to a unit
/// peak at t = peaking_time.  Thread-safe to share and evaluate concurrently.
class PulseShape {
 public:
  explicit PulseShape(const ShaperConfig& config);

  /// Builds the shape for a feedback code (order defaults to 3).
  static PulseShape from_rc_code(int code, const RcCodeMap& map = RcCodeMap(),
                                 int order = 3);

  /// Normalized delta response w(t) = (t/tp)^n exp(n (1 - t/tp)); unit peak
  /// at t = tp.  Throws std::domain_error for t < 0.
  double weighting(double t_ns) const;

  /// Analytic dw/dt [1/ns].  Throws std::domain_error for t < 0.
  double weighting_derivative(double t_ns) const;

  /// Analytic d2w/dt2 [1/ns^2]; needed by the level-crossing-rate moments.
  double weighting_second_derivative(double t_ns) const;

  /// |H(f)|^2 of the voltage chain at frequency f [GHz]: one zero (the CR
  /// stage) over n+1 coincident poles, scaled so that the time-domain delta
  /// response peaks at 1.  Throws std::domain_error for f < 0.
  double transfer_magnitude_sq(double f_ghz) const;

  int order() const { return config_.order; }
  double peaking_time_ns() const { return config_.peaking_time_ns; }
  double time_constant_ns() const { return tau_; }
  const ShaperConfig& config() const { return config_; }

 private:
  ShaperConfig config_;
  double tau_ = 0.0;      // tp / n
  double norm_sq_ = 0.0;  // (n! e^n)^2, fixes the unit time-domain peak
};

}  // namespace febsim
