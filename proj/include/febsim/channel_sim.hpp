#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "febsim/fft.hpp"
#include "febsim/shaping.hpp"

namespace febsim {

/// Optional overdrive-dependent comparator delay
/// delta(v_over) = d0 * (v0 / v_over)^p, added to reported crossing times.
/// Off by default; exists so measured walk values can be calibrated without
/// hard-coding circuit behavior the model does not derive.
struct LedDelayHook {
  bool enabled = false;
  double d0_ns = 0.0;
  double v0_mv = 60.0;
  double exponent = 1.0;

  bool operator==(const LedDelayHook&) const = default;
};

/// Per-channel front-end settings.
struct ChannelConfig {
  double gain_mv_per_fc = 60.0;
  int rc_code = 3;            ///< feedback code, [0, 6]
  int feedback_kohm = 50;     ///< feedback resistor selector, 50 or 25
  int threshold_dac_a = 0;    ///< 8-bit trim DAC, adds to the threshold
  int threshold_dac_b = 0;    ///< 8-bit trim DAC, subtracts from the threshold
  double dc_offset_mv = 0.0;  ///< channel baseline offset (mismatch)
  int channel_index = 0;      ///< [0, 5]

  bool operator==(const ChannelConfig&) const = default;
};

/// LSB sizes of the threshold DACs [mV/code].
struct DacScales {
  double lsb_a_mv = 0.5;
  double lsb_b_mv = 0.5;
  double lsb_global_mv = 0.5;

  bool operator==(const DacScales&) const = default;
};

/// Whole-chip configuration: six channels plus shared settings.
struct ChipConfig {
  static constexpr int kChannels = 6;

  std::array<ChannelConfig, kChannels> channels{};
  int global_offset_dac = 0;          ///< 8-bit, common to all channels
  double calibration_cap_ff = 52.0;   ///< injection capacitor
  double injection_fullscale_fc = 5.1;  ///< injection DAC full scale
  double offset_spread_pkpk_mv = 100.0; ///< mismatch spread drawn per channel
  std::uint64_t rng_seed = 1;
  DacScales dac{};
  int shaper_order = 3;
  RcCodeMap rc_map{};
  LedDelayHook led_delay{};

  bool operator==(const ChipConfig&) const = default;
};

/// Throws std::invalid_argument if any field violates its documented range.
void validate(const ChipConfig& chip);

/// The seeded mismatch draw for one channel: uniform(-spread/2, +spread/2)
/// from a stream derived from (rng_seed, channel index), so a channel's offset
/// never changes when other channels are reconfigured.
double drawn_dc_offset_mv(const ChipConfig& chip, int channel);

/// Overwrites every channel's dc_offset with its seeded mismatch draw.
void draw_dc_offsets(ChipConfig& chip);

/// Default chip: channel indices assigned, offsets drawn from the seed.
ChipConfig nominal_chip_config(std::uint64_t seed = 1);

/// Noise environment at the discriminator input.  The spectrum defaults to
/// the channel shaper's |H(f)|^2 (white series noise at the input); a
/// user-supplied table of (f_ghz, relative PSD) points overrides it.
struct NoiseSpec {
  double output_sigma_mv = 2.9;
  std::vector<std::pair<double, double>> psd_table{};
};

/// Discretization of the Monte Carlo traces.
struct SimParams {
  double dt_ns = 0.1;         ///< sample pitch; must satisfy dt <= tp/20
  double trace_span_tp = 20.0;  ///< injection trace length in units of tp
};

/// One discriminator firing: leading-edge time and width, both relative to
/// the injection epoch, plus the binary samples at 800 ps pitch (phase 0).
struct HitRecord {
  int channel = 0;
  double crossing_time_ns = 0.0;
  double time_over_threshold_ns = 0.0;
  std::vector<std::uint8_t> sampled_bins{};
};

/// Result of a batch of charge injections at one threshold.
struct InjectionRun {
  double occupancy = 0.0;
  int fired = 0;
  int trials = 0;
  std::vector<HitRecord> hits{};
};

/// Result of a pure-noise crossing-rate measurement.
struct NoiseRateResult {
  double rate_mhz = 0.0;
  std::uint64_t crossings = 0;
  double duration_ns = 0.0;
};

/// Charge delivered by an injection DAC code: linear, code/255 * full scale.
double injected_charge(int dac_code, const ChipConfig& chip);

/// Effective discriminator threshold over the channel baseline:
/// lsb_a * dac_a - lsb_b * dac_b + lsb_g * global - dc_offset.
double threshold_voltage(const ChannelConfig& ch, const ChipConfig& chip);

/// Binary samples of a comparator pulse at 800 ps pitch: bit k is 1 iff the
/// discriminator is high at t = phase + 0.8 k (t relative to the injection
/// epoch, k >= 0).  Throws unless 0 <= phase < 0.8.
std::vector<std::uint8_t> sample_slvs(const HitRecord& hit, double phase_ns);

/// Immutable single-channel simulator: configuration plus derived spectral
/// tables.  All runs are pure functions of (config, seed), so they may be
/// executed concurrently and still reproduce bit-identical results.
class ChannelSimulator {
 public:
  ChannelSimulator(const ChipConfig& chip, int channel_index,
                   NoiseSpec noise = {}, SimParams params = {});

  const PulseShape& shape() const { return shape_; }
  double gain_mv_per_fc() const;
  double noise_sigma_mv() const { return noise_.output_sigma_mv; }
  const NoiseSpec& noise_spec() const { return noise_; }
  const SimParams& sim_params() const { return params_; }
  const ChipConfig& chip() const { return chip_; }
  int channel_index() const { return index_; }

  /// Threshold of this channel's current DAC settings.
  double threshold_voltage_mv() const;

  /// Shaped signal at time t for a charge injected at t0 [mV]; zero before
  /// t0.  Baseline (dc offset) is not included: thresholds are effective.
  double analog_pulse_mv(double q_fc, double t0_ns, double t_ns) const;

  /// Stationary Gaussian noise trace with the configured spectrum and RMS.
  /// Deterministic in (seed); duration is rounded up to whole samples.
  std::vector<double> synth_noise(double duration_ns, double dt_ns,
                                  std::uint64_t seed) const;

  /// n charge injections against an effective threshold v_th.  An injection
  /// fires iff signal + noise is >= v_th at the in-time instant t0 + tp; the
  /// reported edge and width come from the surrounding over-threshold
  /// excursion (linear interpolation between samples).
  InjectionRun simulate_injections(double q_fc, int n, double v_th_mv,
                                   std::uint64_t seed) const;

  /// Upward-crossing rate of the pure noise trace at threshold v_th.
  /// Requires duration >= 1e5 * tp for usable statistics.
  NoiseRateResult noise_rate(double v_th_mv, double duration_ns,
                             std::uint64_t seed) const;

 private:
  /// Spectral amplitudes for an N-sample synthesis at pitch dt, scaled so
  /// the time-domain RMS equals output_sigma.
  std::vector<double> spectral_amplitudes(std::size_t n, double dt_ns) const;

  /// Fills `out` (size plan.size()) with one noise realization.
  void fill_noise(const FftPlan& plan, const std::vector<double>& amps,
                  class GaussianStream& stream,
                  std::vector<std::complex<double>>& spectrum,
                  std::vector<double>& out) const;

  ChipConfig chip_;
  int index_;
  NoiseSpec noise_;
  SimParams params_;
  PulseShape shape_;
  std::size_t trace_n_;
  FftPlan trace_plan_;
  std::vector<double> trace_amps_;
};

}  // namespace febsim
