#pragma once

#include <span>
#include <utility>
#include <vector>

#include "febsim/shaping.hpp"

namespace febsim {

/// Silicon pad sensor description for leakage and capacitance budgets.
struct SensorModel {
  double thickness_um = 150.0;
  double capacitance_pf = 4.0;
  double fluence_neq_cm2 = 0.0;   ///< 1-MeV neutron-equivalent fluence
  double cce = 1.0;               ///< charge collection efficiency, (0, 1]
  double active_area_cm2 = 0.0289;  ///< 1.7 mm x 1.7 mm pad
  double leakage_ref_ua = 0.0;    ///< measured leakage at temperature_ref_k
  double temperature_ref_k = 293.15;
};

/// End-of-lifetime thin-sensor preset (150 um, ~4 pF pad).
SensorModel thin_sensor_preset();
/// End-of-lifetime thick-sensor preset (290 um, ~2 pF pad).
SensorModel thick_sensor_preset();

/// Technology constants for the input-device model.  The defaults are
/// documented, plausible deep-submicron values; every field is a config knob.
struct ProcessParams {
  double cox_ff_per_um2 = 12.0;      ///< gate oxide capacitance density
  double subthreshold_slope = 1.3;   ///< slope factor n
  double tech_current_ua = 0.6;      ///< specific-current normalization I0
  double excess_noise_gamma = 0.7;   ///< channel thermal excess factor
  double temperature_k = 253.15;     ///< operating temperature (-20 C)
  double overlap_cap_ff_per_um = 0.3;  ///< gate overlap capacitance per width
  bool include_gate_cap = true;      ///< fold the gate cap into the series term
  double flicker_coeff = 0.0;        ///< reserved hook; 1/f noise not modeled
};

/// Input transistor geometry and bias.
struct InputTransistor {
  double width_um = 2000.0;
  double length_um = 0.2;
  double drain_current_ma = 2.0;
  ProcessParams process{};
};

struct OperatingPoint {
  double capacitance_pf = 0.0;
  double leakage_ua = 0.0;
  double peaking_time_ns = 0.0;
};

/// ENC decomposition at one operating point, all in electrons.
struct NoiseBudget {
  double enc_parallel_e = 0.0;
  double enc_series_e = 0.0;
  double enc_total_e = 0.0;
  OperatingPoint operating_point{};
};

/// Parallel-noise shape factor A_p = (1/tp) * int w(t)^2 dt; depends only on
/// the shaper order.
double shape_factor_parallel(const PulseShape& shape);

/// Series-noise shape factor A_s = tp * int (dw/dt)^2 dt; order-only.
double shape_factor_series(const PulseShape& shape);

/// Bulk damage leakage I = alpha * fluence * (area * thickness), reported in
/// uA at the sensor's reference temperature.
double leakage_from_fluence(const SensorModel& sensor,
                            double alpha_a_per_cm = 4.0e-17);

/// Leakage temperature scaling (T/T_ref)^2 exp(-(Eg/2k)(1/T - 1/T_ref)).
double scale_leakage_temperature(double i_ref_ua, double t_ref_k, double t_k,
                                 double eg_eff_ev = 1.21);

/// Inversion coefficient IC = Id / (I0 * W/L).
double inversion_coefficient(const InputTransistor& tr);

/// Transconductance [mS] from the inversion-coefficient interpolation
/// gm = Id / (n * U_T * (0.5 + sqrt(0.25 + IC))).
double gm_ekv_ms(const InputTransistor& tr);

/// Gate capacitance [pF]: 2/3 W L cox channel term plus the overlap term.
double gate_capacitance_pf(const InputTransistor& tr);

/// Shot-noise ENC in electrons: sqrt(q * I * A_p * tp) / q.
double enc_parallel(double i_leak_ua, const PulseShape& shape);

/// Channel-thermal-noise ENC in electrons for a total input capacitance of
/// c_in plus (optionally) the transistor gate capacitance:
/// sqrt(e_n^2 * C^2 * A_s / (2 tp)) / q with e_n^2 = 4 k T gamma / gm.
double enc_series(double c_in_pf, const InputTransistor& tr,
                  const PulseShape& shape);

/// Quadrature combination of the two contributions at one operating point.
NoiseBudget enc_total(const SensorModel& sensor, const InputTransistor& tr,
                      const PulseShape& shape, double i_leak_ua);

/// Argmin of enc_total over a sorted peaking-time grid; ties break toward the
/// smaller peaking time (faster shaping is preferred for timing).
std::pair<double, NoiseBudget> optimal_peaking_time(
    const SensorModel& sensor, const InputTransistor& tr,
    std::span<const double> tp_grid_ns, int order = 3);

/// Signal-to-noise ratio of a collected charge against a noise budget.
double snr(double signal_charge_fc, double cce, const NoiseBudget& budget);

/// One row of an ENC sweep grid.
struct EncSweepPoint {
  double tp_ns = 0.0;
  double c_pf = 0.0;
  double i_ua = 0.0;
  double enc_p = 0.0;
  double enc_s = 0.0;
  double enc_tot = 0.0;
};

/// Dense ENC decomposition over tp x C x I (row order: C, then I, then tp
/// fastest); deterministic regardless of evaluation scheduling.
std::vector<EncSweepPoint> enc_sweep(const InputTransistor& tr, int order,
                                     std::span<const double> tp_ns,
                                     std::span<const double> c_pf,
                                     std::span<const double> i_ua);

/// Per-(C, I) minimum over the swept peaking times.
struct EncSweepSummary {
  double c_pf = 0.0;
  double i_ua = 0.0;
  double tp_opt_ns = 0.0;
  double enc_min_e = 0.0;
};

std::vector<EncSweepSummary> summarize_enc_sweep(
    std::span<const EncSweepPoint> points);

}  // namespace febsim
