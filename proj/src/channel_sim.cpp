#include "febsim/channel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include "febsim/rng.hpp"

namespace febsim {

namespace {

void validate_channel(const ChannelConfig& ch, int slot) {
  const std::string where = "channels[" + std::to_string(slot) + "].";
  if (!(ch.gain_mv_per_fc > 0.0))
    throw std::invalid_argument(where + "gain_mv_per_fc: must be > 0");
  if (ch.rc_code < 0 || ch.rc_code > 6)
    throw std::invalid_argument(where + "rc_code: value " +
                                std::to_string(ch.rc_code) + " outside [0, 6]");
  if (ch.feedback_kohm != 50 && ch.feedback_kohm != 25)
    throw std::invalid_argument(where + "feedback_kohm: must be 50 or 25");
  for (auto [name, code] : {std::pair{"threshold_dac_a", ch.threshold_dac_a},
                            std::pair{"threshold_dac_b", ch.threshold_dac_b}}) {
    if (code < 0 || code > 255)
      throw std::invalid_argument(where + name + ": value " +
                                  std::to_string(code) +
                                  " outside 8-bit range");
  }
  if (ch.channel_index < 0 || ch.channel_index >= ChipConfig::kChannels)
    throw std::invalid_argument(where + "channel_index: outside [0, 5]");
}

}  // namespace

void validate(const ChipConfig& chip) {
  for (int i = 0; i < ChipConfig::kChannels; ++i)
    validate_channel(chip.channels[static_cast<std::size_t>(i)], i);
  if (chip.global_offset_dac < 0 || chip.global_offset_dac > 255)
    throw std::invalid_argument("global_offset_dac: value " +
                                std::to_string(chip.global_offset_dac) +
                                " outside 8-bit range");
  if (!(chip.calibration_cap_ff > 0.0))
    throw std::invalid_argument("calibration_cap_ff: must be > 0");
  if (!(chip.injection_fullscale_fc > 0.0))
    throw std::invalid_argument("injection_fullscale_fc: must be > 0");
  if (chip.offset_spread_pkpk_mv < 0.0)
    throw std::invalid_argument("offset_spread_pkpk_mv: must be >= 0");
  if (!(chip.dac.lsb_a_mv > 0.0) || !(chip.dac.lsb_b_mv > 0.0) ||
      !(chip.dac.lsb_global_mv > 0.0))
    throw std::invalid_argument("dac: LSB sizes must be > 0");
  if (chip.shaper_order < 1)
    throw std::invalid_argument("shaper_order: must be >= 1");
  if (chip.led_delay.enabled && !(chip.led_delay.v0_mv > 0.0))
    throw std::invalid_argument("led_delay.v0_mv: must be > 0 when enabled");
}

double drawn_dc_offset_mv(const ChipConfig& chip, int channel) {
  // Stream depends only on (chip seed, channel index): a channel's offset
  // never changes when other channels are reconfigured.
  GaussianStream stream(derive_seed(
      chip.rng_seed, {0xD0ULL, static_cast<std::uint64_t>(channel)}));
  return (stream.uniform() - 0.5) * chip.offset_spread_pkpk_mv;
}

void draw_dc_offsets(ChipConfig& chip) {
  for (int i = 0; i < ChipConfig::kChannels; ++i)
    chip.channels[static_cast<std::size_t>(i)].dc_offset_mv =
        drawn_dc_offset_mv(chip, i);
}

ChipConfig nominal_chip_config(std::uint64_t seed) {
  ChipConfig chip;
  chip.rng_seed = seed;
  for (int i = 0; i < ChipConfig::kChannels; ++i)
    chip.channels[static_cast<std::size_t>(i)].channel_index = i;
  draw_dc_offsets(chip);
  return chip;
}

double injected_charge(int dac_code, const ChipConfig& chip) {
  if (dac_code < 0 || dac_code > 255)
    throw std::out_of_range("injected_charge: DAC code " +
                            std::to_string(dac_code) + " outside 8-bit range");
  // Linear DAC: the injected charge is the calibration-capacitor charge
  // Q = C_cal * V_step * code; expressed directly as code/255 of full scale.
  return static_cast<double>(dac_code) / 255.0 * chip.injection_fullscale_fc;
}

double threshold_voltage(const ChannelConfig& ch, const ChipConfig& chip) {
  return chip.dac.lsb_a_mv * ch.threshold_dac_a -
         chip.dac.lsb_b_mv * ch.threshold_dac_b +
         chip.dac.lsb_global_mv * chip.global_offset_dac - ch.dc_offset_mv;
}

std::vector<std::uint8_t> sample_slvs(const HitRecord& hit, double phase_ns) {
  if (phase_ns < 0.0 || phase_ns >= 0.8)
    throw std::domain_error("sample_slvs: phase must be in [0, 0.8) ns");
  const double pitch = 0.8;
  const double start = hit.crossing_time_ns;
  const double stop = start + hit.time_over_threshold_ns;
  if (!(hit.time_over_threshold_ns > 0.0)) return {};
  const double k_lo = std::ceil((start - phase_ns) / pitch);
  const long k_min = std::max(0L, static_cast<long>(k_lo));
  // largest k with phase + pitch*k strictly before the falling edge
  const long k_max =
      static_cast<long>(std::ceil((stop - phase_ns) / pitch)) - 1;
  if (k_max < k_min) return {};
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(k_max) + 1, 0);
  for (long k = k_min; k <= k_max; ++k)
    bits[static_cast<std::size_t>(k)] = 1;
  return bits;
}

ChannelSimulator::ChannelSimulator(const ChipConfig& chip, int channel_index,
                                   NoiseSpec noise, SimParams params)
    : chip_(chip),
      index_(channel_index),
      noise_(std::move(noise)),
      params_(params),
      shape_(PulseShape::from_rc_code(
          chip.channels[static_cast<std::size_t>(
              channel_index >= 0 && channel_index < ChipConfig::kChannels
                  ? channel_index
                  : 0)].rc_code,
          chip.rc_map, chip.shaper_order)),
      trace_n_(0),
      trace_plan_(1) {
  validate(chip_);
  if (channel_index < 0 || channel_index >= ChipConfig::kChannels)
    throw std::out_of_range("ChannelSimulator: channel index outside [0, 5]");
  if (noise_.output_sigma_mv < 0.0)
    throw std::invalid_argument("NoiseSpec: output_sigma must be >= 0");
  if (!noise_.psd_table.empty()) {
    if (noise_.psd_table.size() < 2)
      throw std::invalid_argument("NoiseSpec: PSD table needs >= 2 points");
    for (std::size_t i = 0; i < noise_.psd_table.size(); ++i) {
      if (noise_.psd_table[i].first < 0.0 || noise_.psd_table[i].second < 0.0)
        throw std::invalid_argument("NoiseSpec: PSD table must be non-negative");
      if (i > 0 &&
          !(noise_.psd_table[i].first > noise_.psd_table[i - 1].first))
        throw std::invalid_argument(
            "NoiseSpec: PSD table frequencies must be strictly increasing");
    }
  }
  const double tp = shape_.peaking_time_ns();
  if (!(params_.dt_ns > 0.0))
    throw std::invalid_argument("SimParams: dt must be > 0");
  if (params_.dt_ns > tp / 20.0)
    throw std::invalid_argument("SimParams: dt too coarse (dt > tp/20)");
  if (params_.trace_span_tp < 6.0)
    throw std::invalid_argument("SimParams: trace span must be >= 6 tp");
  const double samples = std::ceil(params_.trace_span_tp * tp / params_.dt_ns);
  trace_n_ = next_pow2(static_cast<std::size_t>(samples));
  trace_plan_ = FftPlan(trace_n_);
  trace_amps_ = spectral_amplitudes(trace_n_, params_.dt_ns);
}

double ChannelSimulator::gain_mv_per_fc() const {
  return chip_.channels[static_cast<std::size_t>(index_)].gain_mv_per_fc;
}

double ChannelSimulator::threshold_voltage_mv() const {
  return threshold_voltage(chip_.channels[static_cast<std::size_t>(index_)],
                           chip_);
}

double ChannelSimulator::analog_pulse_mv(double q_fc, double t0_ns,
                                         double t_ns) const {
  if (q_fc < 0.0)
    throw std::domain_error("analog_pulse: charge must be >= 0");
  if (t_ns < t0_ns) return 0.0;
  return gain_mv_per_fc() * q_fc * shape_.weighting(t_ns - t0_ns);
}

std::vector<double> ChannelSimulator::spectral_amplitudes(std::size_t n,
                                                          double dt_ns) const {
  std::vector<double> amps(n / 2, 0.0);
  if (noise_.output_sigma_mv == 0.0) return amps;
  const double df_ghz = 1.0 / (static_cast<double>(n) * dt_ns);
  double sumsq = 0.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    const double f = static_cast<double>(k) * df_ghz;
    double psd = 0.0;
    if (noise_.psd_table.empty()) {
      psd = shape_.transfer_magnitude_sq(f);
    } else {
      const auto& tab = noise_.psd_table;
      if (f >= tab.front().first && f <= tab.back().first) {
        auto hi = std::lower_bound(
            tab.begin(), tab.end(), f,
            [](const std::pair<double, double>& p, double v) {
              return p.first < v;
            });
        if (hi == tab.begin()) {
          psd = hi->second;
        } else {
          auto lo = hi - 1;
          const double frac = (f - lo->first) / (hi->first - lo->first);
          psd = lo->second + frac * (hi->second - lo->second);
        }
      }
    }
    amps[k] = std::sqrt(std::max(psd, 0.0));
    sumsq += amps[k] * amps[k];
  }
  if (!(sumsq > 0.0))
    throw std::invalid_argument(
        "NoiseSpec: spectrum vanishes on the synthesis grid");
  // E[x_i^2] = (4 / n^2) * sum_k amp_k^2 for a hermitian spectrum with
  // independent N(0, amp^2) real/imag parts; scale to the requested RMS.
  const double scale = noise_.output_sigma_mv * static_cast<double>(n) /
                       (2.0 * std::sqrt(sumsq));
  for (auto& a : amps) a *= scale;
  return amps;
}

void ChannelSimulator::fill_noise(const FftPlan& plan,
                                  const std::vector<double>& amps,
                                  GaussianStream& stream,
                                  std::vector<std::complex<double>>& spectrum,
                                  std::vector<double>& out) const {
  const std::size_t n = plan.size();
  spectrum.assign(n, {0.0, 0.0});
  // Draw order pinned: ascending k, real part then imaginary part.
  for (std::size_t k = 1; k < n / 2; ++k) {
    const double re = amps[k] * stream.normal();
    const double im = amps[k] * stream.normal();
    spectrum[k] = {re, im};
    spectrum[n - k] = {re, -im};
  }
  plan.inverse(spectrum.data());
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = spectrum[i].real();
}

std::vector<double> ChannelSimulator::synth_noise(double duration_ns,
                                                  double dt_ns,
                                                  std::uint64_t seed) const {
  if (!(dt_ns > 0.0)) throw std::invalid_argument("synth_noise: dt must be > 0");
  if (dt_ns > shape_.peaking_time_ns() / 20.0)
    throw std::invalid_argument("synth_noise: dt too coarse (dt > tp/20)");
  if (!(duration_ns > 0.0))
    throw std::invalid_argument("synth_noise: duration must be > 0");
  const std::size_t samples =
      static_cast<std::size_t>(std::ceil(duration_ns / dt_ns));
  const std::size_t n = next_pow2(samples);
  const bool cached = n == trace_n_ && dt_ns == params_.dt_ns;
  const FftPlan local_plan = cached ? FftPlan(1) : FftPlan(n);
  const FftPlan& plan = cached ? trace_plan_ : local_plan;
  const std::vector<double> local_amps =
      cached ? std::vector<double>{} : spectral_amplitudes(n, dt_ns);
  const std::vector<double>& amps = cached ? trace_amps_ : local_amps;
  GaussianStream stream(seed);
  std::vector<std::complex<double>> spectrum;
  std::vector<double> out;
  fill_noise(plan, amps, stream, spectrum, out);
  out.resize(samples);
  return out;
}

InjectionRun ChannelSimulator::simulate_injections(double q_fc, int n,
                                                   double v_th_mv,
                                                   std::uint64_t seed) const {
  if (n < 1) throw std::invalid_argument("simulate_injections: n must be >= 1");
  if (q_fc < 0.0)
    throw std::domain_error("simulate_injections: charge must be >= 0");
  const double dt = params_.dt_ns;
  const double tp = shape_.peaking_time_ns();
  const double gain = gain_mv_per_fc();
  const std::size_t len = trace_n_;

  InjectionRun run;
  run.trials = n;
  std::vector<std::complex<double>> spectrum;
  std::vector<double> v;
  for (int trial = 0; trial < n; ++trial) {
    GaussianStream stream(
        derive_seed(seed, {static_cast<std::uint64_t>(trial)}));
    // Draw order pinned: epoch jitter first, then the noise spectrum.
    const double t0 = 2.0 * tp + stream.uniform() * dt;
    fill_noise(trace_plan_, trace_amps_, stream, spectrum, v);
    if (q_fc > 0.0) {
      const double amp = gain * q_fc;
      const std::size_t i_start =
          static_cast<std::size_t>(std::floor(t0 / dt)) + 1;
      for (std::size_t i = i_start; i < len; ++i) {
        const double t = static_cast<double>(i) * dt - t0;
        if (t > 14.0 * tp) break;  // w < 1e-11 beyond, below double noise floor
        v[i] += amp * shape_.weighting(t);
      }
    }
    // In-time decision: composite trace at t0 + tp, linearly interpolated.
    const double ta = t0 + tp;
    const std::size_t i0 = static_cast<std::size_t>(std::floor(ta / dt));
    const double frac = ta / dt - static_cast<double>(i0);
    const double va = v[i0] * (1.0 - frac) + v[i0 + 1] * frac;
    if (!(va >= v_th_mv)) continue;
    ++run.fired;

    // Leading edge of the over-threshold excursion containing the in-time
    // instant; linear interpolation between the bracketing samples.
    std::size_t m = v[i0] >= v_th_mv ? i0 : i0 + 1;
    while (m > 0 && v[m - 1] >= v_th_mv) --m;
    const double t_cross =
        m == 0 ? 0.0
               : dt * (static_cast<double>(m - 1) +
                       (v_th_mv - v[m - 1]) / (v[m] - v[m - 1]));
    std::size_t j = m;
    double v_max = v[j];
    while (j + 1 < len && v[j + 1] >= v_th_mv) {
      ++j;
      v_max = std::max(v_max, v[j]);
    }
    const double t_fall =
        j + 1 < len ? dt * (static_cast<double>(j) +
                            (v[j] - v_th_mv) / (v[j] - v[j + 1]))
                    : dt * static_cast<double>(len - 1);

    HitRecord hit;
    hit.channel = index_;
    hit.crossing_time_ns = t_cross - t0;
    hit.time_over_threshold_ns = std::max(0.0, t_fall - t_cross);
    if (chip_.led_delay.enabled) {
      const double v_over = std::max(v_max - v_th_mv, 1e-9);
      hit.crossing_time_ns += chip_.led_delay.d0_ns *
                              std::pow(chip_.led_delay.v0_mv / v_over,
                                       chip_.led_delay.exponent);
    }
    hit.sampled_bins = sample_slvs(hit, 0.0);
    run.hits.push_back(std::move(hit));
  }
  run.occupancy = static_cast<double>(run.fired) / static_cast<double>(n);
  return run;
}

NoiseRateResult ChannelSimulator::noise_rate(double v_th_mv,
                                             double duration_ns,
                                             std::uint64_t seed) const {
  const double tp = shape_.peaking_time_ns();
  if (!(duration_ns >= 1e5 * tp))
    throw std::invalid_argument(
        "noise_rate: duration too short (need >= 1e5 * tp for usable statistics)");
  const double dt = params_.dt_ns;
  const std::size_t total =
      static_cast<std::size_t>(std::ceil(duration_ns / dt));
  const std::size_t block = std::min<std::size_t>(std::size_t{1} << 20,
                                                  next_pow2(total));
  const bool cached = block == trace_n_;
  const FftPlan local_plan = cached ? FftPlan(1) : FftPlan(block);
  const FftPlan& plan = cached ? trace_plan_ : local_plan;
  const std::vector<double> local_amps =
      cached ? std::vector<double>{} : spectral_amplitudes(block, dt);
  const std::vector<double>& amps = cached ? trace_amps_ : local_amps;

  std::vector<std::complex<double>> spectrum;
  std::vector<double> v;
  std::uint64_t crossings = 0;
  double prev = std::numeric_limits<double>::infinity();
  std::size_t remaining = total;
  std::uint64_t block_idx = 0;
  while (remaining > 0) {
    GaussianStream stream(derive_seed(seed, {block_idx}));
    fill_noise(plan, amps, stream, spectrum, v);
    const std::size_t take = std::min(block, remaining);
    for (std::size_t i = 0; i < take; ++i) {
      const double cur = v[i];
      if (prev < v_th_mv && cur >= v_th_mv) ++crossings;
      prev = cur;
    }
    remaining -= take;
    ++block_idx;
  }
  NoiseRateResult res;
  res.crossings = crossings;
  res.duration_ns = static_cast<double>(total) * dt;
  res.rate_mhz = static_cast<double>(crossings) / res.duration_ns * 1e3;
  return res;
}

}  // namespace febsim
