#include "febsim/noise_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "febsim/constants.hpp"
#include "febsim/quadrature.hpp"

namespace febsim {

namespace {

// Integration window [0, 20 tp] with absolute tolerance 1e-9.  The truncated
// tail is bounded by the exponential envelope: w(20 tp)^2 < 1e-30 for any
// order >= 1, far below the tolerance.
constexpr double kIntegralSpanTp = 20.0;
constexpr double kIntegralTol = 1e-9;

}  // namespace

SensorModel thin_sensor_preset() {
  SensorModel s;
  s.thickness_um = 150.0;
  s.capacitance_pf = 4.0;
  s.fluence_neq_cm2 = 2.5e15;
  s.cce = 0.5;
  return s;
}

SensorModel thick_sensor_preset() {
  SensorModel s;
  s.thickness_um = 290.0;
  s.capacitance_pf = 2.0;
  s.fluence_neq_cm2 = 2.5e15;
  s.cce = 0.5;
  return s;
}

double shape_factor_parallel(const PulseShape& shape) {
  const double tp = shape.peaking_time_ns();
  const double integral = integrate_adaptive(
      [&shape](double t) {
        const double w = shape.weighting(t);
        return w * w;
      },
      0.0, kIntegralSpanTp * tp, kIntegralTol);
  return integral / tp;
}

double shape_factor_series(const PulseShape& shape) {
  const double tp = shape.peaking_time_ns();
  const double integral = integrate_adaptive(
      [&shape](double t) {
        const double d = shape.weighting_derivative(t);
        return d * d;
      },
      0.0, kIntegralSpanTp * tp, kIntegralTol);
  return integral * tp;
}

double leakage_from_fluence(const SensorModel& sensor, double alpha_a_per_cm) {
  if (sensor.fluence_neq_cm2 < 0.0)
    throw std::domain_error("leakage_from_fluence: fluence must be >= 0");
  if (alpha_a_per_cm < 0.0)
    throw std::domain_error("leakage_from_fluence: alpha must be >= 0");
  const double volume_cm3 = sensor.active_area_cm2 * sensor.thickness_um * 1e-4;
  const double i_a = alpha_a_per_cm * sensor.fluence_neq_cm2 * volume_cm3;
  return i_a * 1e6;
}

double scale_leakage_temperature(double i_ref_ua, double t_ref_k, double t_k,
                                 double eg_eff_ev) {
  if (!(t_ref_k > 0.0) || !(t_k > 0.0))
    throw std::domain_error("scale_leakage_temperature: temperatures must be > 0");
  const double ratio = t_k / t_ref_k;
  const double expo = -(eg_eff_ev / (2.0 * constants::boltzmann_ev_per_k)) *
                      (1.0 / t_k - 1.0 / t_ref_k);
  return i_ref_ua * ratio * ratio * std::exp(expo);
}

double inversion_coefficient(const InputTransistor& tr) {
  if (!(tr.width_um > 0.0) || !(tr.length_um > 0.0) ||
      !(tr.drain_current_ma > 0.0))
    throw std::domain_error("inversion_coefficient: geometry and bias must be > 0");
  const double id_ua = tr.drain_current_ma * 1e3;
  return id_ua / (tr.process.tech_current_ua * tr.width_um / tr.length_um);
}

double gm_ekv_ms(const InputTransistor& tr) {
  const double ic = inversion_coefficient(tr);
  const double ut_v = constants::boltzmann_j_per_k * tr.process.temperature_k /
                      constants::elementary_charge_c;
  const double id_a = tr.drain_current_ma * 1e-3;
  const double gm_s = id_a / (tr.process.subthreshold_slope * ut_v *
                              (0.5 + std::sqrt(0.25 + ic)));
  return gm_s * 1e3;
}

double gate_capacitance_pf(const InputTransistor& tr) {
  const double channel_ff =
      (2.0 / 3.0) * tr.width_um * tr.length_um * tr.process.cox_ff_per_um2;
  const double overlap_ff = tr.process.overlap_cap_ff_per_um * tr.width_um;
  return (channel_ff + overlap_ff) * 1e-3;
}

double enc_parallel(double i_leak_ua, const PulseShape& shape) {
  if (i_leak_ua < 0.0)
    throw std::domain_error("enc_parallel: leakage must be >= 0");
  const double a_p = shape_factor_parallel(shape);
  const double tp_s = shape.peaking_time_ns() * 1e-9;
  const double i_a = i_leak_ua * 1e-6;
  const double q = constants::elementary_charge_c;
  // One-sided shot PSD 2 q I folded with the normalized weighting function
  // gives a mean-square charge of q * I * A_p * tp.
  return std::sqrt(q * i_a * a_p * tp_s) / q;
}

double enc_series(double c_in_pf, const InputTransistor& tr,
                  const PulseShape& shape) {
  if (!(c_in_pf > 0.0)) throw std::domain_error("enc_series: c_in must be > 0");
  const double a_s = shape_factor_series(shape);
  const double tp_s = shape.peaking_time_ns() * 1e-9;
  const double gm_s = gm_ekv_ms(tr) * 1e-3;
  const double e_n2 = 4.0 * constants::boltzmann_j_per_k *
                      tr.process.temperature_k * tr.process.excess_noise_gamma /
                      gm_s;
  const double c_total_pf =
      c_in_pf + (tr.process.include_gate_cap ? gate_capacitance_pf(tr) : 0.0);
  const double c_f = c_total_pf * 1e-12;
  const double q = constants::elementary_charge_c;
  return std::sqrt(e_n2 * c_f * c_f * a_s / (2.0 * tp_s)) / q;
}

NoiseBudget enc_total(const SensorModel& sensor, const InputTransistor& tr,
                      const PulseShape& shape, double i_leak_ua) {
  NoiseBudget b;
  b.enc_parallel_e = enc_parallel(i_leak_ua, shape);
  b.enc_series_e = sensor.capacitance_pf > 0.0
                       ? enc_series(sensor.capacitance_pf, tr, shape)
                       : 0.0;
  b.enc_total_e = std::hypot(b.enc_parallel_e, b.enc_series_e);
  b.operating_point = {sensor.capacitance_pf, i_leak_ua,
                       shape.peaking_time_ns()};
  return b;
}

std::pair<double, NoiseBudget> optimal_peaking_time(
    const SensorModel& sensor, const InputTransistor& tr,
    std::span<const double> tp_grid_ns, int order) {
  if (tp_grid_ns.empty())
    throw std::invalid_argument("optimal_peaking_time: empty grid");
  for (std::size_t i = 1; i < tp_grid_ns.size(); ++i)
    if (!(tp_grid_ns[i] > tp_grid_ns[i - 1]))
      throw std::invalid_argument("optimal_peaking_time: grid must be sorted ascending");
  const double i_leak =
      scale_leakage_temperature(sensor.leakage_ref_ua > 0.0
                                    ? sensor.leakage_ref_ua
                                    : leakage_from_fluence(sensor),
                                sensor.temperature_ref_k,
                                tr.process.temperature_k);
  double best_tp = 0.0;
  NoiseBudget best{};
  best.enc_total_e = std::numeric_limits<double>::infinity();
  for (double tp : tp_grid_ns) {
    PulseShape shape(ShaperConfig{order, tp, std::nullopt});
    const NoiseBudget b = enc_total(sensor, tr, shape, i_leak);
    // strict comparison keeps the earliest (smallest) tp on ties
    if (b.enc_total_e < best.enc_total_e) {
      best = b;
      best_tp = tp;
    }
  }
  return {best_tp, best};
}

double snr(double signal_charge_fc, double cce, const NoiseBudget& budget) {
  if (!(signal_charge_fc > 0.0))
    throw std::domain_error("snr: signal charge must be > 0");
  if (!(budget.enc_total_e > 0.0))
    throw std::domain_error("snr: undefined for zero noise");
  return signal_charge_fc * cce * constants::electrons_per_fc /
         budget.enc_total_e;
}

std::vector<EncSweepPoint> enc_sweep(const InputTransistor& tr, int order,
                                     std::span<const double> tp_ns,
                                     std::span<const double> c_pf,
                                     std::span<const double> i_ua) {
  if (tp_ns.empty() || c_pf.empty() || i_ua.empty())
    throw std::invalid_argument("enc_sweep: empty grid axis");
  std::vector<EncSweepPoint> out;
  out.reserve(tp_ns.size() * c_pf.size() * i_ua.size());
  for (double c : c_pf) {
    for (double i : i_ua) {
      for (double tp : tp_ns) {
        PulseShape shape(ShaperConfig{order, tp, std::nullopt});
        EncSweepPoint p;
        p.tp_ns = tp;
        p.c_pf = c;
        p.i_ua = i;
        p.enc_p = enc_parallel(i, shape);
        p.enc_s = c > 0.0 ? enc_series(c, tr, shape) : 0.0;
        p.enc_tot = std::hypot(p.enc_p, p.enc_s);
        out.push_back(p);
      }
    }
  }
  return out;
}

std::vector<EncSweepSummary> summarize_enc_sweep(
    std::span<const EncSweepPoint> points) {
  std::vector<EncSweepSummary> out;
  for (const auto& p : points) {
    if (out.empty() || out.back().c_pf != p.c_pf || out.back().i_ua != p.i_ua) {
      out.push_back({p.c_pf, p.i_ua, p.tp_ns, p.enc_tot});
    } else if (p.enc_tot < out.back().enc_min_e) {
      out.back().tp_opt_ns = p.tp_ns;
      out.back().enc_min_e = p.enc_tot;
    }
  }
  return out;
}

}  // namespace febsim
