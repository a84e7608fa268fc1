#include "febsim/characterization.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "febsim/constants.hpp"
#include "febsim/csv.hpp"
#include "febsim/digest.hpp"
#include "febsim/fitting.hpp"
#include "febsim/parallel.hpp"
#include "febsim/quadrature.hpp"
#include "febsim/rng.hpp"

namespace febsim {

namespace {

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

void require_increasing(std::span<const double> v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1]))
      throw std::invalid_argument(std::string(what) +
                                  ": values must be strictly increasing");
}

// Interpolated abscissa where a non-increasing occupancy curve crosses
// `level`; nullopt when the curve never brackets it.
std::optional<double> crossing_abscissa(const ScanCurve& c, double level) {
  for (std::size_t i = 0; i + 1 < c.y.size(); ++i) {
    const double y0 = c.y[i];
    const double y1 = c.y[i + 1];
    if (y0 >= level && level >= y1) {
      if (y0 == y1) return 0.5 * (c.x[i] + c.x[i + 1]);
      return c.x[i] + (y0 - level) * (c.x[i + 1] - c.x[i]) / (y0 - y1);
    }
  }
  return std::nullopt;
}

}  // namespace

std::string to_string(ScanKind kind) {
  switch (kind) {
    case ScanKind::threshold_scan:
      return "threshold_scan";
    case ScanKind::noise_occupancy:
      return "noise_occupancy";
    case ScanKind::time_walk:
      return "time_walk";
  }
  throw std::logic_error("to_string: unknown scan kind");
}

ScanKind scan_kind_from_string(const std::string& name) {
  if (name == "threshold_scan") return ScanKind::threshold_scan;
  if (name == "noise_occupancy") return ScanKind::noise_occupancy;
  if (name == "time_walk") return ScanKind::time_walk;
  throw std::invalid_argument("unknown scan kind: '" + name + "'");
}

void ScanCurve::validate() const {
  if (x.size() != y.size() || x.size() != y_err.size())
    throw std::invalid_argument("ScanCurve: column sizes differ");
  if (x.empty()) throw std::invalid_argument("ScanCurve: empty curve");
  if (x.size() > 1 && !strictly_increasing(x) && !strictly_decreasing(x))
    throw std::invalid_argument("ScanCurve: x must be strictly monotone");
  for (double e : y_err)
    if (!(e >= 0.0)) throw std::invalid_argument("ScanCurve: y_err must be >= 0");
  if (kind == ScanKind::threshold_scan) {
    for (double v : y)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("ScanCurve: occupancy outside [0, 1]");
  }
}

ScanCurve run_threshold_scan(const ChannelSimulator& sim, double q_fc,
                             std::span<const double> thresholds_mv, int n_inj,
                             std::uint64_t seed, int jobs) {
  if (n_inj < 100)
    throw std::invalid_argument("run_threshold_scan: need n_inj >= 100");
  if (thresholds_mv.empty())
    throw std::invalid_argument("run_threshold_scan: empty threshold list");
  require_increasing(thresholds_mv, "run_threshold_scan: thresholds");
  ScanCurve curve;
  curve.kind = ScanKind::threshold_scan;
  curve.x.assign(thresholds_mv.begin(), thresholds_mv.end());
  curve.y.resize(curve.x.size());
  curve.y_err.resize(curve.x.size());
  const double n = static_cast<double>(n_inj);
  parallel_for(curve.x.size(), jobs, [&](std::size_t i) {
    const InjectionRun run = sim.simulate_injections(
        q_fc, n_inj, curve.x[i],
        derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    curve.y[i] = run.occupancy;
    // binomial error with a one-effective-count floor at the extremes
    const double p_eff = std::clamp(run.occupancy, 1.0 / n, 1.0 - 1.0 / n);
    curve.y_err[i] = std::sqrt(p_eff * (1.0 - p_eff) / n);
  });
  return curve;
}

SCurveFit fit_scurve(const ScanCurve& curve) {
  curve.validate();
  if (curve.kind != ScanKind::threshold_scan)
    throw std::invalid_argument("fit_scurve: curve is not a threshold scan");
  if (curve.x.size() > 1 && !strictly_increasing(curve.x))
    throw std::invalid_argument("fit_scurve: reversed-axis input rejected");
  if (curve.x.size() < 3)
    throw std::invalid_argument("fit_scurve: need >= 3 points");
  const double y_max = *std::max_element(curve.y.begin(), curve.y.end());
  const double y_min = *std::min_element(curve.y.begin(), curve.y.end());
  if (!(y_max > 0.5) || !(y_min < 0.5))
    throw std::invalid_argument(
        "fit_scurve: curve must span occupancies on both sides of 0.5");

  // Deterministic initialization: interpolated 50% crossing and 16-84% width.
  const double span = curve.x.back() - curve.x.front();
  const double median0 = crossing_abscissa(curve, 0.5).value();
  const auto v84 = crossing_abscissa(curve, 0.84);  // ~median - sigma
  const auto v16 = crossing_abscissa(curve, 0.16);  // ~median + sigma
  double sigma0 = v84 && v16 ? 0.5 * (*v16 - *v84) : span / 6.0;
  if (!(sigma0 > 0.0)) sigma0 = span / 6.0;

  // Error floor for imported curves carrying zero errors on some points.
  double err_floor = std::numeric_limits<double>::infinity();
  for (double e : curve.y_err)
    if (e > 0.0) err_floor = std::min(err_floor, e);
  if (!std::isfinite(err_floor)) err_floor = 1.0;
  std::vector<double> sigma(curve.y_err.size());
  for (std::size_t i = 0; i < sigma.size(); ++i)
    sigma[i] = curve.y_err[i] > 0.0 ? curve.y_err[i] : err_floor;

  auto model = [](double v, double median, double width, double& d_median,
                  double& d_width) {
    const double s = std::max(std::abs(width), 1e-12);
    const double z = (v - median) / s;
    const double phi =
        std::exp(-0.5 * z * z) / std::sqrt(2.0 * constants::pi);
    d_median = phi / s;
    d_width = (width < 0.0 ? -1.0 : 1.0) * phi * z / s;
    return 0.5 * std::erfc(z / std::sqrt(2.0));
  };
  const Fit2Result res =
      fit_curve_2p(model, curve.x, curve.y, sigma, median0, sigma0);

  SCurveFit fit;
  fit.median_mv = res.p0;
  fit.sigma_mv = std::abs(res.p1);
  fit.chi2_ndf = res.ndf > 0 ? res.chi2 / res.ndf : 0.0;
  fit.covariance = res.covariance;
  if (!(fit.sigma_mv > 0.0))
    throw std::runtime_error("fit_scurve: non-positive fitted sigma");
  if (fit.median_mv < curve.x.front() - 3.0 * fit.sigma_mv ||
      fit.median_mv > curve.x.back() + 3.0 * fit.sigma_mv)
    throw std::runtime_error("fit_scurve: median outside the scanned range");
  return fit;
}

GainFit extract_gain(const std::vector<std::pair<double, SCurveFit>>& fits) {
  if (fits.size() < 2)
    throw std::invalid_argument("extract_gain: need >= 2 charges");
  bool distinct = false;
  for (std::size_t i = 1; i < fits.size(); ++i)
    if (fits[i].first != fits[0].first) distinct = true;
  if (!distinct)
    throw std::invalid_argument("extract_gain: degenerate identical charges");
  std::vector<double> q, median, weight;
  bool all_errors = true;
  for (const auto& [charge, fit] : fits) {
    q.push_back(charge);
    median.push_back(fit.median_mv);
    const double var = fit.covariance[0][0];
    if (var > 0.0)
      weight.push_back(1.0 / var);
    else
      all_errors = false;
  }
  if (!all_errors) weight.assign(q.size(), 1.0);
  const LineFit lf = fit_weighted_line(q, median, weight);
  GainFit gf;
  gf.gain_mv_per_fc = lf.slope;
  gf.offset_mv = lf.intercept;
  gf.gain_err = lf.slope_err;
  gf.offset_err = lf.intercept_err;
  gf.chi2_ndf = lf.ndf > 0 ? lf.chi2 / lf.ndf : 0.0;
  return gf;
}

ScanCurve run_noise_occupancy(const ChannelSimulator& sim,
                              std::span<const double> thresholds_mv,
                              double duration_ns, std::uint64_t seed,
                              int jobs) {
  if (thresholds_mv.empty())
    throw std::invalid_argument("run_noise_occupancy: empty threshold list");
  require_increasing(thresholds_mv, "run_noise_occupancy: thresholds");
  ScanCurve curve;
  curve.kind = ScanKind::noise_occupancy;
  curve.x.assign(thresholds_mv.begin(), thresholds_mv.end());
  curve.y.resize(curve.x.size());
  curve.y_err.resize(curve.x.size());
  parallel_for(curve.x.size(), jobs, [&](std::size_t i) {
    const NoiseRateResult res = sim.noise_rate(
        curve.x[i], duration_ns,
        derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    curve.y[i] = res.rate_mhz;
    // Poisson error with a one-count floor
    const double counts =
        std::max<double>(1.0, static_cast<double>(res.crossings));
    curve.y_err[i] = std::sqrt(counts) / res.duration_ns * 1e3;
  });
  return curve;
}

double rice_kappa(const PulseShape& shape) {
  if (shape.order() < 2)
    throw std::domain_error(
        "rice_kappa: undefined for shaper order < 2 (curvature moment diverges)");
  // Zero-threshold upward-crossing rate nu0 = (1/2pi) sqrt(m2/m0) with
  // angular-frequency moments; in ordinary frequency this collapses to
  // sqrt(int f^2 |H|^2 df / int |H|^2 df).
  const double m0 = integrate_half_line(
      [&shape](double f) { return shape.transfer_magnitude_sq(f); }, 0.0,
      1e-8);
  const double m2 = integrate_half_line(
      [&shape](double f) { return f * f * shape.transfer_magnitude_sq(f); },
      0.0, 1e-8);
  const double nu0_ghz = std::sqrt(m2 / m0);
  return nu0_ghz * shape.peaking_time_ns();
}

double rice_kappa_from_psd(std::span<const std::pair<double, double>> psd_table,
                           double tp_ns) {
  if (psd_table.size() < 2)
    throw std::invalid_argument("rice_kappa_from_psd: need >= 2 table points");
  if (!(tp_ns > 0.0))
    throw std::invalid_argument("rice_kappa_from_psd: tp must be > 0");
  double m0 = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 1; i < psd_table.size(); ++i) {
    const auto [f0, p0] = psd_table[i - 1];
    const auto [f1, p1] = psd_table[i];
    if (!(f1 > f0))
      throw std::invalid_argument(
          "rice_kappa_from_psd: frequencies must be strictly increasing");
    const double df = f1 - f0;
    m0 += 0.5 * (p0 + p1) * df;
    m2 += 0.5 * (f0 * f0 * p0 + f1 * f1 * p1) * df;
  }
  if (!(m0 > 0.0))
    throw std::invalid_argument("rice_kappa_from_psd: PSD integrates to zero");
  return std::sqrt(m2 / m0) * tp_ns;
}

RiceFit fit_rice(const ScanCurve& curve, const PulseShape& shape) {
  return fit_rice(curve, rice_kappa(shape));
}

RiceFit fit_rice(const ScanCurve& curve, double kappa) {
  curve.validate();
  if (curve.kind != ScanKind::noise_occupancy)
    throw std::invalid_argument("fit_rice: curve is not a noise-occupancy scan");
  if (curve.x.size() > 1 && !strictly_increasing(curve.x))
    throw std::invalid_argument("fit_rice: reversed-axis input rejected");
  if (!(kappa > 0.0)) throw std::invalid_argument("fit_rice: kappa must be > 0");

  double min_abs = std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
  for (double v : curve.x) {
    min_abs = std::min(min_abs, std::abs(v));
    max_abs = std::max(max_abs, std::abs(v));
  }
  if (!(max_abs > 0.0) || min_abs > 0.3 * max_abs)
    throw std::invalid_argument("fit_rice: missing near-zero points");

  // Counts per point recovered from the Poisson errors; fit range extends to
  // the last point with at least 10 observed crossings.
  std::vector<double> counts(curve.x.size(), 0.0);
  double v_fit_max = 0.0;
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    if (curve.y[i] > 0.0 && curve.y_err[i] > 0.0) {
      const double c = curve.y[i] / curve.y_err[i];
      counts[i] = c * c;
      if (counts[i] >= 10.0)
        v_fit_max = std::max(v_fit_max, std::abs(curve.x[i]));
    }
  }
  if (!(v_fit_max > 0.0))
    throw std::runtime_error("fit_rice: no points with >= 10 counts");

  std::vector<double> v2, log_rate, weight;
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    if (curve.y[i] > 0.0 && std::abs(curve.x[i]) <= v_fit_max) {
      v2.push_back(curve.x[i] * curve.x[i]);
      log_rate.push_back(std::log(curve.y[i]));
      weight.push_back(counts[i]);  // var(ln N) ~ 1/N for Poisson counts
    }
  }
  if (v2.size() < 3)
    throw std::runtime_error("fit_rice: fewer than 3 usable points");
  const LineFit lf = fit_weighted_line(v2, log_rate, weight);
  if (!(lf.slope < 0.0))
    throw std::runtime_error("fit_rice: non-positive fitted sigma");

  RiceFit fit;
  fit.sigma_mv = std::sqrt(-1.0 / (2.0 * lf.slope));
  fit.f0_mhz = std::exp(lf.intercept);
  fit.peaking_time_est_ns = 1e3 * kappa / fit.f0_mhz;
  fit.points_used = static_cast<int>(v2.size());
  if (v_fit_max < 2.0 * fit.sigma_mv)
    throw std::runtime_error("fit_rice: fit range does not reach 2 sigma");

  double wsum = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < v2.size(); ++i) {
    wsum += weight[i];
    mean += weight[i] * log_rate[i];
  }
  mean /= wsum;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < v2.size(); ++i)
    ss_tot += weight[i] * (log_rate[i] - mean) * (log_rate[i] - mean);
  fit.r_squared = ss_tot > 0.0 ? 1.0 - lf.chi2 / ss_tot : 1.0;
  return fit;
}

double enc_from_noise(double sigma_mv, double gain_mv_per_fc) {
  if (!(gain_mv_per_fc > 0.0))
    throw std::domain_error("enc_from_noise: gain must be > 0");
  if (sigma_mv < 0.0)
    throw std::domain_error("enc_from_noise: sigma must be >= 0");
  return sigma_mv / gain_mv_per_fc * constants::electrons_per_fc;
}

TimeWalkResult measure_time_walk(const ChannelSimulator& sim,
                                 std::span<const double> charges_fc,
                                 double threshold_fc, int n_inj,
                                 std::uint64_t seed) {
  if (charges_fc.empty())
    throw std::invalid_argument("measure_time_walk: empty charge list");
  require_increasing(charges_fc, "measure_time_walk: charges");
  if (!(threshold_fc > 0.0))
    throw std::invalid_argument("measure_time_walk: threshold must be > 0");
  if (n_inj < 1) throw std::invalid_argument("measure_time_walk: n_inj >= 1");
  for (double q : charges_fc)
    if (!(q > threshold_fc))
      throw std::invalid_argument(
          "measure_time_walk: charge <= threshold never fires");
  const double v_th = threshold_fc * sim.gain_mv_per_fc();

  TimeWalkResult result;
  result.delays.kind = ScanKind::time_walk;
  for (std::size_t i = 0; i < charges_fc.size(); ++i) {
    const InjectionRun run = sim.simulate_injections(
        charges_fc[i], n_inj, v_th,
        derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    if (run.hits.empty())
      throw std::runtime_error("measure_time_walk: no discriminator firings");
    double mean_delay = 0.0;
    double mean_tot = 0.0;
    for (const auto& hit : run.hits) {
      mean_delay += hit.crossing_time_ns;
      mean_tot += hit.time_over_threshold_ns;
    }
    const double cnt = static_cast<double>(run.hits.size());
    mean_delay /= cnt;
    mean_tot /= cnt;
    double var = 0.0;
    for (const auto& hit : run.hits) {
      const double d = hit.crossing_time_ns - mean_delay;
      var += d * d;
    }
    var = run.hits.size() > 1 ? var / (cnt - 1.0) : 0.0;
    result.delays.x.push_back(charges_fc[i]);
    result.delays.y.push_back(mean_delay);
    result.delays.y_err.push_back(std::sqrt(var / cnt));
    result.tot_ns.push_back(mean_tot);
  }
  result.walk_ns = result.delays.y.front() - result.delays.y.back();
  return result;
}

void write_scan_csv(const ScanCurve& curve, std::ostream& os) {
  curve.validate();
  os << "x,y,y_err,kind\n";
  const std::string kind = to_string(curve.kind);
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    os << format_g10(curve.x[i]) << ',' << format_g10(curve.y[i]) << ','
       << format_g10(curve.y_err[i]) << ',' << csv_escape(kind) << '\n';
  }
}

ScanCurve read_scan_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw std::invalid_argument("scan CSV: empty stream");
  {
    const auto header = split_csv_line(line);
    if (header != std::vector<std::string>{"x", "y", "y_err", "kind"})
      throw std::invalid_argument("scan CSV: header must be x,y,y_err,kind");
  }
  ScanCurve curve;
  bool kind_set = false;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4)
      throw std::invalid_argument("scan CSV: line " + std::to_string(line_no) +
                                  ": expected 4 fields");
    const auto parse = [&](const std::string& s, const char* col) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
      } catch (const std::exception&) {
        throw std::invalid_argument("scan CSV: line " +
                                    std::to_string(line_no) + ": bad " + col +
                                    " value '" + s + "'");
      }
    };
    curve.x.push_back(parse(fields[0], "x"));
    curve.y.push_back(parse(fields[1], "y"));
    curve.y_err.push_back(parse(fields[2], "y_err"));
    const ScanKind k = scan_kind_from_string(fields[3]);
    if (kind_set && k != curve.kind)
      throw std::invalid_argument("scan CSV: line " + std::to_string(line_no) +
                                  ": mixed kinds in one file");
    curve.kind = k;
    kind_set = true;
  }
  curve.validate();
  return curve;
}

nlohmann::json make_fit_report(const std::string& kind,
                               const nlohmann::json& params,
                               const nlohmann::json& errors, double chi2_ndf,
                               const ScanCurve& inputs) {
  std::string blob = to_string(inputs.kind);
  for (std::size_t i = 0; i < inputs.x.size(); ++i) {
    blob += '\n';
    blob += format_g10(inputs.x[i]) + "," + format_g10(inputs.y[i]) + "," +
            format_g10(inputs.y_err[i]);
  }
  return nlohmann::json{{"kind", kind},
                        {"params", params},
                        {"errors", errors},
                        {"chi2_ndf", chi2_ndf},
                        {"inputs_digest", hex_digest(blob)}};
}

}  // namespace febsim
