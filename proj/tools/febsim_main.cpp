// Command-line front end: analytic ENC sweeps, Monte Carlo bench procedures
// (threshold scans, noise occupancy, time walk) and the register-map view.
//
// Exit codes: 0 success, 2 usage/config errors, 3 runtime failures.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "febsim/channel_sim.hpp"
#include "febsim/characterization.hpp"
#include "febsim/config_io.hpp"
#include "febsim/csv.hpp"
#include "febsim/manifest.hpp"
#include "febsim/noise_model.hpp"
#include "febsim/presets_gen.hpp"
#include "febsim/rng.hpp"
#include "febsim/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace febsim;

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::string format = "csv";
  std::uint64_t seed = 0;
  int jobs = 1;
  CLI::Option* seed_opt = nullptr;

  bool seed_given() const { return seed_opt != nullptr && seed_opt->count() > 0; }
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--preset", o.preset, "bundled preset name (see README)");
  cmd->add_option("--out", o.out_dir,
                  "output directory (default: $FEBSIM_OUT, else '.')");
  cmd->add_option("--format", o.format, "curve file format")
      ->check(CLI::IsMember({"csv", "json"}));
  o.seed_opt = cmd->add_option("--seed", o.seed, "override the chip RNG seed");
  cmd->add_option("--jobs", o.jobs, "worker-thread hint (never changes results)")
      ->check(CLI::PositiveNumber);
}

fs::path resolve_out_dir(const CommonOpts& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("FEBSIM_OUT"); env != nullptr && *env != '\0')
    return env;
  return ".";
}

json load_config(const CommonOpts& o, bool required) {
  const bool has_cfg = !o.config_path.empty();
  const bool has_preset = !o.preset.empty();
  if (has_cfg && has_preset)
    throw std::invalid_argument("--config and --preset are mutually exclusive");
  if (!has_cfg && !has_preset) {
    if (!required) return json::object();
    throw std::invalid_argument("one of --config or --preset is required");
  }
  std::string text;
  if (has_preset) {
    const auto& table = presets::bundled();
    auto it = table.find(o.preset);
    if (it == table.end()) {
      std::string names;
      for (const auto& [name, unused] : table) {
        (void)unused;
        names += names.empty() ? name : ", " + name;
      }
      throw std::invalid_argument("unknown preset '" + o.preset +
                                  "' (available: " + names + ")");
    }
    text = it->second;
  } else {
    std::ifstream in(o.config_path);
    if (!in)
      throw std::invalid_argument("cannot open config file: " + o.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                e.what());
  }
}

void check_command(const json& cfg, const std::string& expected) {
  if (!cfg.is_object())
    throw std::invalid_argument("config: expected a JSON object");
  if (cfg.contains("command")) {
    const auto cmd = cfg.at("command").get<std::string>();
    if (cmd != expected)
      throw std::invalid_argument("config is for command '" + cmd + "' but '" +
                                  expected + "' was invoked");
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw std::invalid_argument(ctx + ": unknown field '" + it.key() + "'");
  }
}

template <class T>
T field_or(const json& j, const char* key, T fallback, const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(ctx + "." + key + ": " + e.what());
  }
}

template <class T>
T required_field(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key))
    throw std::invalid_argument(ctx + ": missing required field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(ctx + "." + key + ": " + e.what());
  }
}

std::vector<double> parse_axis(const json& j, const std::string& name) {
  std::vector<double> out;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number())
        throw std::invalid_argument(name + ": entries must be numbers");
      out.push_back(v.get<double>());
    }
  } else if (j.is_object()) {
    reject_unknown(j, {"min", "max", "step"}, name);
    const double lo = required_field<double>(j, "min", name);
    const double hi = required_field<double>(j, "max", name);
    const double step = required_field<double>(j, "step", name);
    if (!(step > 0.0))
      throw std::invalid_argument(name + ".step: must be > 0");
    if (hi < lo) throw std::invalid_argument(name + ": max < min");
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(lo + step * i);
  } else {
    throw std::invalid_argument(name +
                                ": expected an array or a {min, max, step} "
                                "object");
  }
  if (out.empty()) throw std::invalid_argument(name + ": empty axis");
  for (double v : out) {
    if (!std::isfinite(v))
      throw std::invalid_argument(name + ": entries must be finite");
  }
  return out;
}

InputTransistor transistor_from_json(const json& j) {
  if (!j.is_object())
    throw std::invalid_argument("transistor: expected a JSON object");
  reject_unknown(j, {"width_um", "length_um", "drain_current_ma", "process"},
                 "transistor");
  InputTransistor tr;
  tr.width_um = field_or(j, "width_um", tr.width_um, "transistor");
  tr.length_um = field_or(j, "length_um", tr.length_um, "transistor");
  tr.drain_current_ma =
      field_or(j, "drain_current_ma", tr.drain_current_ma, "transistor");
  if (j.contains("process")) {
    const json& p = j.at("process");
    if (!p.is_object())
      throw std::invalid_argument("transistor.process: expected a JSON object");
    reject_unknown(p,
                   {"cox_ff_per_um2", "subthreshold_slope", "tech_current_ua",
                    "excess_noise_gamma", "temperature_k",
                    "overlap_cap_ff_per_um", "include_gate_cap",
                    "flicker_coeff"},
                   "transistor.process");
    ProcessParams& pp = tr.process;
    const std::string ctx = "transistor.process";
    pp.cox_ff_per_um2 = field_or(p, "cox_ff_per_um2", pp.cox_ff_per_um2, ctx);
    pp.subthreshold_slope =
        field_or(p, "subthreshold_slope", pp.subthreshold_slope, ctx);
    pp.tech_current_ua = field_or(p, "tech_current_ua", pp.tech_current_ua, ctx);
    pp.excess_noise_gamma =
        field_or(p, "excess_noise_gamma", pp.excess_noise_gamma, ctx);
    pp.temperature_k = field_or(p, "temperature_k", pp.temperature_k, ctx);
    pp.overlap_cap_ff_per_um =
        field_or(p, "overlap_cap_ff_per_um", pp.overlap_cap_ff_per_um, ctx);
    pp.include_gate_cap =
        field_or(p, "include_gate_cap", pp.include_gate_cap, ctx);
    pp.flicker_coeff = field_or(p, "flicker_coeff", pp.flicker_coeff, ctx);
  }
  return tr;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

json curve_to_json(const ScanCurve& curve) {
  return json{{"kind", to_string(curve.kind)},
              {"x", curve.x},
              {"y", curve.y},
              {"y_err", curve.y_err}};
}

std::string write_curve(const ScanCurve& curve, const fs::path& dir,
                        const std::string& base, const std::string& format) {
  const std::string name = base + (format == "json" ? ".json" : ".csv");
  auto out = open_output(dir / name);
  if (format == "json")
    out << curve_to_json(curve).dump(2) << '\n';
  else
    write_scan_csv(curve, out);
  return name;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return out;
}

void finish_manifest(const std::string& command, const json& cfg,
                     std::uint64_t seed, std::vector<std::string> outputs,
                     const fs::path& dir) {
  RunManifest manifest;
  manifest.command = command;
  manifest.config_digest = config_digest(cfg);
  manifest.seed = seed;
  manifest.tool_version = kToolVersion;
  manifest.outputs = std::move(outputs);
  write_manifest(manifest, dir);
}

int cmd_enc_sweep(const CommonOpts& o) {
  json cfg = load_config(o, true);
  check_command(cfg, "enc-sweep");
  reject_unknown(cfg, {"command", "transistor", "shaper_order", "grid"},
                 "config");
  const InputTransistor tr = cfg.contains("transistor")
                                 ? transistor_from_json(cfg.at("transistor"))
                                 : InputTransistor{};
  const int order = field_or(cfg, "shaper_order", 3, "config");
  if (!cfg.contains("grid"))
    throw std::invalid_argument("config: missing required field 'grid'");
  const json& grid = cfg.at("grid");
  if (!grid.is_object())
    throw std::invalid_argument("grid: expected a JSON object");
  reject_unknown(grid, {"tp_ns", "c_pf", "i_ua"}, "grid");
  if (!grid.contains("tp_ns") || !grid.contains("c_pf") || !grid.contains("i_ua"))
    throw std::invalid_argument("grid: tp_ns, c_pf and i_ua are all required");
  const auto tp = parse_axis(grid.at("tp_ns"), "grid.tp_ns");
  const auto c = parse_axis(grid.at("c_pf"), "grid.c_pf");
  const auto i = parse_axis(grid.at("i_ua"), "grid.i_ua");

  const auto points = enc_sweep(tr, order, tp, c, i);
  const auto summary = summarize_enc_sweep(points);

  const fs::path dir = resolve_out_dir(o);
  fs::create_directories(dir);
  std::vector<std::string> outputs;

  if (o.format == "json") {
    json rows = json::array();
    for (const auto& p : points) {
      rows.push_back(json{{"tp_ns", p.tp_ns},
                          {"c_pf", p.c_pf},
                          {"i_ua", p.i_ua},
                          {"enc_p", p.enc_p},
                          {"enc_s", p.enc_s},
                          {"enc_tot", p.enc_tot}});
    }
    auto out = open_output(dir / "enc_sweep.json");
    out << rows.dump(2) << '\n';
    outputs.push_back("enc_sweep.json");
  } else {
    auto out = open_output(dir / "enc_sweep.csv");
    out << "tp_ns,c_pf,i_ua,enc_p,enc_s,enc_tot\n";
    for (const auto& p : points) {
      out << format_g10(p.tp_ns) << ',' << format_g10(p.c_pf) << ','
          << format_g10(p.i_ua) << ',' << format_g10(p.enc_p) << ','
          << format_g10(p.enc_s) << ',' << format_g10(p.enc_tot) << '\n';
    }
    outputs.push_back("enc_sweep.csv");
  }

  json rows = json::array();
  for (const auto& s : summary) {
    rows.push_back(json{{"c_pf", s.c_pf},
                        {"i_ua", s.i_ua},
                        {"tp_opt_ns", s.tp_opt_ns},
                        {"enc_min_e", s.enc_min_e}});
  }
  {
    auto out = open_output(dir / "enc_summary.json");
    out << json{{"summary", rows}}.dump(2) << '\n';
    outputs.push_back("enc_summary.json");
  }

  finish_manifest("enc-sweep", cfg, o.seed_given() ? o.seed : 0, outputs, dir);
  std::cout << "enc-sweep: " << points.size() << " grid points -> "
            << dir.string() << "\n";
  return 0;
}

json fit_report_with_context(const std::string& kind, const json& params,
                             const json& errors, double chi2_ndf,
                             const ScanCurve& inputs, const json& extra) {
  json report = make_fit_report(kind, params, errors, chi2_ndf, inputs);
  for (auto it = extra.begin(); it != extra.end(); ++it)
    report[it.key()] = it.value();
  return report;
}

void run_threshold_scan_cmd(const json& sc, const ChipConfig& chip,
                            const NoiseSpec& noise, std::uint64_t seed,
                            const CommonOpts& o, const fs::path& dir,
                            std::vector<std::string>& outputs, json& fits) {
  reject_unknown(sc,
                 {"type", "channel", "charges_fc", "n_inj", "points",
                  "span_sigmas", "rc_codes", "thresholds_mv"},
                 "scan");
  const int channel = field_or(sc, "channel", 0, "scan");
  const auto charges = required_field<std::vector<double>>(sc, "charges_fc", "scan");
  if (charges.empty())
    throw std::invalid_argument("scan.charges_fc: must be non-empty");
  const int n_inj = field_or(sc, "n_inj", 1000, "scan");
  const int points = field_or(sc, "points", 21, "scan");
  const double span = field_or(sc, "span_sigmas", 5.0, "scan");
  if (points < 3) throw std::invalid_argument("scan.points: must be >= 3");
  if (!(span > 0.0))
    throw std::invalid_argument("scan.span_sigmas: must be > 0");
  std::vector<double> explicit_thresholds;
  if (sc.contains("thresholds_mv"))
    explicit_thresholds =
        required_field<std::vector<double>>(sc, "thresholds_mv", "scan");
  const bool multi_rc = sc.contains("rc_codes");
  std::vector<int> rc_codes;
  if (multi_rc) {
    rc_codes = required_field<std::vector<int>>(sc, "rc_codes", "scan");
    if (rc_codes.empty())
      throw std::invalid_argument("scan.rc_codes: must be non-empty");
  } else {
    if (channel < 0 || channel >= ChipConfig::kChannels)
      throw std::invalid_argument("scan.channel: outside [0, 5]");
    rc_codes.push_back(
        chip.channels[static_cast<std::size_t>(channel)].rc_code);
  }

  for (std::size_t ri = 0; ri < rc_codes.size(); ++ri) {
    ChipConfig variant = chip;
    if (channel < 0 || channel >= ChipConfig::kChannels)
      throw std::invalid_argument("scan.channel: outside [0, 5]");
    variant.channels[static_cast<std::size_t>(channel)].rc_code = rc_codes[ri];
    const ChannelSimulator sim(variant, channel, noise);
    std::vector<std::pair<double, SCurveFit>> gain_points;
    for (std::size_t qi = 0; qi < charges.size(); ++qi) {
      const double q = charges[qi];
      std::vector<double> thresholds = explicit_thresholds;
      if (thresholds.empty()) {
        const double center = sim.gain_mv_per_fc() * q;
        const double half = span * sim.noise_sigma_mv();
        thresholds = linspace(center - half, center + half, points);
      }
      const auto curve = run_threshold_scan(
          sim, q, thresholds, n_inj,
          derive_seed(seed, {0x5CA17ULL,
                             static_cast<std::uint64_t>(rc_codes[ri]), qi}),
          o.jobs);
      std::string base = "scurve";
      if (multi_rc) base += "_rc" + std::to_string(rc_codes[ri]);
      base += "_q" + std::to_string(qi);
      outputs.push_back(write_curve(curve, dir, base, o.format));

      const SCurveFit fit = fit_scurve(curve);
      gain_points.emplace_back(q, fit);
      fits.push_back(fit_report_with_context(
          "scurve_erfc",
          json{{"median_mv", fit.median_mv}, {"sigma_mv", fit.sigma_mv}},
          json{{"median_mv", std::sqrt(fit.covariance[0][0])},
               {"sigma_mv", std::sqrt(fit.covariance[1][1])}},
          fit.chi2_ndf, curve,
          json{{"charge_fc", q},
               {"rc_code", rc_codes[ri]},
               {"file", outputs.back()}}));
    }
    if (gain_points.size() >= 2) {
      const GainFit g = extract_gain(gain_points);
      ScanCurve medians;
      medians.kind = ScanKind::threshold_scan;
      for (const auto& [q, fit] : gain_points) {
        medians.x.push_back(q);
        medians.y.push_back(fit.median_mv / 1000.0);  // keep rows in [0, 1]
        medians.y_err.push_back(std::sqrt(fit.covariance[0][0]) / 1000.0);
      }
      fits.push_back(fit_report_with_context(
          "gain_line",
          json{{"gain_mv_per_fc", g.gain_mv_per_fc}, {"offset_mv", g.offset_mv}},
          json{{"gain_mv_per_fc", g.gain_err}, {"offset_mv", g.offset_err}},
          g.chi2_ndf, medians, json{{"rc_code", rc_codes[ri]}}));
    }
  }
}

void run_noise_occupancy_cmd(const json& sc, const ChipConfig& chip,
                             const NoiseSpec& noise, std::uint64_t seed,
                             const CommonOpts& o, const fs::path& dir,
                             std::vector<std::string>& outputs, json& fits) {
  reject_unknown(
      sc, {"type", "channel", "points", "max_sigmas", "duration_ns",
           "thresholds_mv"},
      "scan");
  const int channel = field_or(sc, "channel", 0, "scan");
  const int points = field_or(sc, "points", 15, "scan");
  const double max_sigmas = field_or(sc, "max_sigmas", 3.5, "scan");
  const double duration = required_field<double>(sc, "duration_ns", "scan");
  if (points < 3) throw std::invalid_argument("scan.points: must be >= 3");
  if (!(max_sigmas > 0.0))
    throw std::invalid_argument("scan.max_sigmas: must be > 0");

  const ChannelSimulator sim(chip, channel, noise);
  std::vector<double> thresholds;
  if (sc.contains("thresholds_mv"))
    thresholds = required_field<std::vector<double>>(sc, "thresholds_mv", "scan");
  else
    thresholds = linspace(0.0, max_sigmas * sim.noise_sigma_mv(), points);

  const auto curve = run_noise_occupancy(
      sim, thresholds, duration, derive_seed(seed, {0x0CCULL}), o.jobs);
  outputs.push_back(write_curve(curve, dir, "noise_occupancy", o.format));

  const double kappa =
      noise.psd_table.empty()
          ? rice_kappa(sim.shape())
          : rice_kappa_from_psd(noise.psd_table, sim.shape().peaking_time_ns());
  const RiceFit rf = fit_rice(curve, kappa);
  {
    auto out = open_output(dir / "rice_fit.json");
    out << fit_report_with_context(
               "rice_rate",
               json{{"f0_mhz", rf.f0_mhz},
                    {"sigma_mv", rf.sigma_mv},
                    {"peaking_time_est_ns", rf.peaking_time_est_ns},
                    {"r_squared", rf.r_squared},
                    {"points_used", rf.points_used}},
               json::object(), 0.0, curve, json{{"kappa", kappa}})
               .dump(2)
        << '\n';
    outputs.push_back("rice_fit.json");
  }
  fits.push_back(json{{"kind", "rice_rate"}, {"file", "rice_fit.json"}});
}

void run_time_walk_cmd(const json& sc, const ChipConfig& chip,
                       const NoiseSpec& noise, std::uint64_t seed,
                       const CommonOpts& o, const fs::path& dir,
                       std::vector<std::string>& outputs, json& fits) {
  reject_unknown(sc, {"type", "channel", "charges_fc", "threshold_fc", "n_inj"},
                 "scan");
  const int channel = field_or(sc, "channel", 0, "scan");
  const auto charges = required_field<std::vector<double>>(sc, "charges_fc", "scan");
  const double threshold_fc = required_field<double>(sc, "threshold_fc", "scan");
  const int n_inj = field_or(sc, "n_inj", 200, "scan");
  if (n_inj < 1) throw std::invalid_argument("scan.n_inj: must be >= 1");

  const ChannelSimulator sim(chip, channel, noise);
  const TimeWalkResult tw = measure_time_walk(sim, charges, threshold_fc, n_inj,
                                              derive_seed(seed, {0x7A1CULL}));
  outputs.push_back(write_curve(tw.delays, dir, "time_walk", o.format));
  {
    auto out = open_output(dir / "walk.json");
    out << fit_report_with_context(
               "time_walk",
               json{{"walk_ns", tw.walk_ns},
                    {"threshold_fc", threshold_fc},
                    {"tot_ns", tw.tot_ns}},
               json::object(), 0.0, tw.delays, json::object())
               .dump(2)
        << '\n';
    outputs.push_back("walk.json");
  }
  fits.push_back(json{{"kind", "time_walk"}, {"file", "walk.json"}});
}

int cmd_scan(const CommonOpts& o) {
  json cfg = load_config(o, true);
  check_command(cfg, "scan");
  reject_unknown(cfg, {"command", "chip", "noise", "scan"}, "config");
  if (o.seed_given()) cfg["chip"]["rng_seed"] = o.seed;
  const ChipConfig chip = cfg.contains("chip")
                              ? chip_config_from_json(cfg.at("chip"))
                              : nominal_chip_config(1);
  const NoiseSpec noise = cfg.contains("noise")
                              ? noise_spec_from_json(cfg.at("noise"))
                              : NoiseSpec{};
  if (!cfg.contains("scan"))
    throw std::invalid_argument("config: missing required field 'scan'");
  const json& sc = cfg.at("scan");
  if (!sc.is_object())
    throw std::invalid_argument("scan: expected a JSON object");
  const auto type = required_field<std::string>(sc, "type", "scan");

  const std::uint64_t seed = chip.rng_seed;
  const fs::path dir = resolve_out_dir(o);
  fs::create_directories(dir);
  std::vector<std::string> outputs;
  json fits = json::array();

  if (type == "threshold_scan")
    run_threshold_scan_cmd(sc, chip, noise, seed, o, dir, outputs, fits);
  else if (type == "noise_occupancy")
    run_noise_occupancy_cmd(sc, chip, noise, seed, o, dir, outputs, fits);
  else if (type == "time_walk")
    run_time_walk_cmd(sc, chip, noise, seed, o, dir, outputs, fits);
  else
    throw std::invalid_argument(
        "scan.type: expected one of threshold_scan, noise_occupancy, "
        "time_walk");

  {
    auto out = open_output(dir / "scan_fits.json");
    out << json{{"fits", fits}}.dump(2) << '\n';
    outputs.push_back("scan_fits.json");
  }
  finish_manifest("scan", cfg, seed, outputs, dir);
  std::cout << "scan (" << type << "): " << outputs.size() << " files -> "
            << dir.string() << "\n";
  return 0;
}

int cmd_registers(const CommonOpts& o, bool do_dump,
                  const std::string& load_path) {
  if (do_dump == !load_path.empty())
    throw std::invalid_argument(
        "registers: exactly one of --dump and --load is required");
  json cfg = load_config(o, false);
  if (o.seed_given()) {
    if (cfg.contains("chip") || cfg.empty())
      cfg["chip"]["rng_seed"] = o.seed;
    else
      cfg["rng_seed"] = o.seed;
  }
  ChipConfig chip;
  if (cfg.empty()) {
    chip = nominal_chip_config(o.seed_given() ? o.seed : 1);
  } else if (cfg.contains("chip")) {
    chip = chip_config_from_json(cfg.at("chip"));
  } else {
    chip = chip_config_from_json(cfg);
  }

  const fs::path dir = resolve_out_dir(o);
  fs::create_directories(dir);
  std::vector<std::string> outputs;

  if (do_dump) {
    const auto text = format_register_dump(dump_registers(chip));
    std::cout << text;
    auto out = open_output(dir / "registers.txt");
    out << text;
    outputs.push_back("registers.txt");
  } else {
    std::ifstream in(load_path);
    if (!in)
      throw std::invalid_argument("cannot open register file: " + load_path);
    apply_registers(chip, parse_register_dump(in));
    validate(chip);
    const auto text = format_register_dump(dump_registers(chip));
    std::cout << text;
    auto out = open_output(dir / "chip_config.json");
    out << chip_config_to_json(chip).dump(2) << '\n';
    outputs.push_back("chip_config.json");
  }

  finish_manifest("registers", chip_config_to_json(chip), chip.rng_seed,
                  outputs, dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Simulation and characterization toolkit for binary silicon-sensor "
      "readout front ends"};
  app.require_subcommand(1);

  CommonOpts enc_opts, scan_opts, reg_opts;
  CLI::App* enc = app.add_subcommand(
      "enc-sweep", "Analytic ENC decomposition over a (tp, C, I) grid");
  add_common_options(enc, enc_opts);
  CLI::App* scan = app.add_subcommand(
      "scan",
      "Monte Carlo bench procedures: threshold scans, noise occupancy, "
      "time walk");
  add_common_options(scan, scan_opts);
  CLI::App* reg =
      app.add_subcommand("registers", "Dump or load the 8-bit register map");
  add_common_options(reg, reg_opts);
  bool do_dump = false;
  std::string load_path;
  reg->add_flag("--dump", do_dump, "print and save the register map");
  reg->add_option("--load", load_path, "apply a register dump to the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (enc->parsed()) return cmd_enc_sweep(enc_opts);
    if (scan->parsed()) return cmd_scan(scan_opts);
    if (reg->parsed()) return cmd_registers(reg_opts, do_dump, load_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
