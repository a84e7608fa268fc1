#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "febsim/channel_sim.hpp"
#include "febsim/shaping.hpp"

#include "json.hpp"

namespace febsim {

enum class ScanKind { threshold_scan, noise_occupancy, time_walk };

std::string to_string(ScanKind kind);
ScanKind scan_kind_from_string(const std::string& name);

/// One measured curve: thresholds/charges on x, occupancy/rate/delay on y.
struct ScanCurve {
  ScanKind kind = ScanKind::threshold_scan;
  std::vector<double> x{};
  std::vector<double> y{};
  std::vector<double> y_err{};

  /// Throws std::invalid_argument unless x is strictly monotone, sizes
  /// match, errors are non-negative, and occupancies (if any) are in [0, 1].
  void validate() const;
};

/// Complementary-error-function fit of an occupancy curve.
struct SCurveFit {
  double median_mv = 0.0;
  double sigma_mv = 0.0;
  double chi2_ndf = 0.0;
  std::array<std::array<double, 2>, 2> covariance{{{0.0, 0.0}, {0.0, 0.0}}};
};

/// Gaussian level-crossing-rate fit of a noise-occupancy curve.
struct RiceFit {
  double f0_mhz = 0.0;            ///< zero-threshold crossing rate
  double sigma_mv = 0.0;          ///< noise RMS from the rate curve
  double peaking_time_est_ns = 0.0;
  double r_squared = 0.0;         ///< weighted log-linearity of rate vs v^2
  int points_used = 0;
};

/// Straight-line gain extraction from S-curve medians vs charge.
struct GainFit {
  double gain_mv_per_fc = 0.0;
  double offset_mv = 0.0;
  double gain_err = 0.0;
  double offset_err = 0.0;
  double chi2_ndf = 0.0;
};

/// Delay-vs-charge measurement plus the derived walk value.
struct TimeWalkResult {
  ScanCurve delays{};             ///< x: charge fC, y: mean delay ns
  std::vector<double> tot_ns{};   ///< mean time over threshold per charge
  double walk_ns = 0.0;           ///< delay(min charge) - delay(max charge)
};

/// Occupancy vs threshold for a fixed injected charge; binomial errors with
/// a one-effective-count floor.  Scan points are independently seeded and
/// may run on up to `jobs` workers without affecting the result.
ScanCurve run_threshold_scan(const ChannelSimulator& sim, double q_fc,
                             std::span<const double> thresholds_mv, int n_inj,
                             std::uint64_t seed, int jobs = 1);

/// Weighted least-squares fit of occ = 0.5 erfc((v - median)/(sqrt(2) sigma));
/// deterministic initialization from the interpolated 50% crossing and the
/// 16-84% width.  Requires the curve to bracket occupancy 0.5.
SCurveFit fit_scurve(const ScanCurve& curve);

/// Least-squares line through (charge, fitted median); slope is the gain.
GainFit extract_gain(const std::vector<std::pair<double, SCurveFit>>& fits);

/// Noise crossing rate vs threshold; Poisson errors with a one-count floor.
ScanCurve run_noise_occupancy(const ChannelSimulator& sim,
                              std::span<const double> thresholds_mv,
                              double duration_ns, std::uint64_t seed,
                              int jobs = 1);

/// Dimensionless level-crossing constant kappa_n = nu0 * tp of the shaper's
/// noise spectrum, from the angular spectral moments of |H|^2.  Defined for
/// order >= 2 only (the curvature moment diverges for order 1).
double rice_kappa(const PulseShape& shape);

/// Same constant recomputed from a user-supplied (f_ghz, PSD) table for a
/// chain with the given peaking time.
double rice_kappa_from_psd(std::span<const std::pair<double, double>> psd_table,
                           double tp_ns);

/// Weighted log-linear fit of rate = f0 exp(-v^2 / (2 sigma^2)) and the
/// peaking-time estimate tp = kappa / f0 for the given shaper.
RiceFit fit_rice(const ScanCurve& curve, const PulseShape& shape);

/// Variant taking a precomputed kappa (e.g. from a custom PSD).
RiceFit fit_rice(const ScanCurve& curve, double kappa);

/// Output noise re-expressed as input charge: (sigma/gain) * 6241.5 e-.
double enc_from_noise(double sigma_mv, double gain_mv_per_fc);

/// Mean discriminator delay vs charge at a fixed charge threshold
/// (threshold_fc * gain is the effective voltage threshold).  All charges
/// must exceed the threshold.  Charges must be sorted ascending.
TimeWalkResult measure_time_walk(const ChannelSimulator& sim,
                                 std::span<const double> charges_fc,
                                 double threshold_fc, int n_inj,
                                 std::uint64_t seed);

/// CSV round trip: header "x,y,y_err,kind", one row per point, RFC-style
/// quoting (never needed for numeric fields), '.' decimal.
void write_scan_csv(const ScanCurve& curve, std::ostream& os);
ScanCurve read_scan_csv(std::istream& is);

/// Uniform fit-report shape: {kind, params, errors, chi2_ndf, inputs_digest}.
nlohmann::json make_fit_report(const std::string& kind,
                               const nlohmann::json& params,
                               const nlohmann::json& errors, double chi2_ndf,
                               const ScanCurve& inputs);

}  // namespace febsim
