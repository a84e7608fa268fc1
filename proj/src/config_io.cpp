#include "febsim/config_io.hpp"

#include <cstdlib>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "febsim/rng.hpp"

namespace febsim {

namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& ctx) {
  if (!j.is_object())
    throw std::invalid_argument(ctx + ": expected a JSON object");
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw std::invalid_argument(ctx + ": unknown field '" + it.key() + "'");
  }
}

template <class T>
T get_field(const json& j, const char* key, T fallback, const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(ctx + "." + key + ": " + e.what());
  }
}

ChannelConfig channel_from_json(const json& j, int slot, bool& offset_given) {
  const std::string ctx = "channels[" + std::to_string(slot) + "]";
  expect_object(j, ctx);
  reject_unknown_keys(j,
                      {"gain_mv_per_fc", "rc_code", "feedback_kohm",
                       "threshold_dac_a", "threshold_dac_b", "dc_offset_mv",
                       "channel_index"},
                      ctx);
  ChannelConfig ch;
  ch.channel_index = slot;
  ch.gain_mv_per_fc = get_field(j, "gain_mv_per_fc", ch.gain_mv_per_fc, ctx);
  ch.rc_code = get_field(j, "rc_code", ch.rc_code, ctx);
  ch.feedback_kohm = get_field(j, "feedback_kohm", ch.feedback_kohm, ctx);
  ch.threshold_dac_a = get_field(j, "threshold_dac_a", ch.threshold_dac_a, ctx);
  ch.threshold_dac_b = get_field(j, "threshold_dac_b", ch.threshold_dac_b, ctx);
  ch.channel_index = get_field(j, "channel_index", ch.channel_index, ctx);
  offset_given = j.contains("dc_offset_mv");
  if (offset_given) ch.dc_offset_mv = get_field(j, "dc_offset_mv", 0.0, ctx);
  return ch;
}

}  // namespace

ChipConfig chip_config_from_json(const json& j) {
  expect_object(j, "chip config");
  reject_unknown_keys(j,
                      {"channels", "global_offset_dac", "calibration_cap_ff",
                       "injection_fullscale_fc", "offset_spread_pkpk_mv",
                       "rng_seed", "dac", "shaper_order", "rc_map",
                       "led_delay"},
                      "chip config");
  ChipConfig chip;
  chip.global_offset_dac =
      get_field(j, "global_offset_dac", chip.global_offset_dac, "chip config");
  chip.calibration_cap_ff =
      get_field(j, "calibration_cap_ff", chip.calibration_cap_ff, "chip config");
  chip.injection_fullscale_fc = get_field(
      j, "injection_fullscale_fc", chip.injection_fullscale_fc, "chip config");
  chip.offset_spread_pkpk_mv = get_field(
      j, "offset_spread_pkpk_mv", chip.offset_spread_pkpk_mv, "chip config");
  chip.rng_seed = get_field(j, "rng_seed", chip.rng_seed, "chip config");
  chip.shaper_order =
      get_field(j, "shaper_order", chip.shaper_order, "chip config");
  if (j.contains("dac")) {
    const json& d = j.at("dac");
    expect_object(d, "dac");
    reject_unknown_keys(d, {"lsb_a_mv", "lsb_b_mv", "lsb_global_mv"}, "dac");
    chip.dac.lsb_a_mv = get_field(d, "lsb_a_mv", chip.dac.lsb_a_mv, "dac");
    chip.dac.lsb_b_mv = get_field(d, "lsb_b_mv", chip.dac.lsb_b_mv, "dac");
    chip.dac.lsb_global_mv =
        get_field(d, "lsb_global_mv", chip.dac.lsb_global_mv, "dac");
  }
  if (j.contains("rc_map")) {
    try {
      const auto table = j.at("rc_map").get<std::array<double, 7>>();
      chip.rc_map = RcCodeMap(table);
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("rc_map: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string("rc_map: ") + e.what());
    }
  }
  if (j.contains("led_delay")) {
    const json& d = j.at("led_delay");
    expect_object(d, "led_delay");
    reject_unknown_keys(d, {"enabled", "d0_ns", "v0_mv", "exponent"},
                        "led_delay");
    chip.led_delay.enabled =
        get_field(d, "enabled", chip.led_delay.enabled, "led_delay");
    chip.led_delay.d0_ns =
        get_field(d, "d0_ns", chip.led_delay.d0_ns, "led_delay");
    chip.led_delay.v0_mv =
        get_field(d, "v0_mv", chip.led_delay.v0_mv, "led_delay");
    chip.led_delay.exponent =
        get_field(d, "exponent", chip.led_delay.exponent, "led_delay");
  }
  std::array<bool, ChipConfig::kChannels> offset_given{};
  if (j.contains("channels")) {
    const json& arr = j.at("channels");
    if (!arr.is_array() || arr.size() != ChipConfig::kChannels)
      throw std::invalid_argument("channels: expected an array of exactly 6");
    for (int i = 0; i < ChipConfig::kChannels; ++i) {
      chip.channels[static_cast<std::size_t>(i)] = channel_from_json(
          arr.at(static_cast<std::size_t>(i)), i,
          offset_given[static_cast<std::size_t>(i)]);
    }
  } else {
    for (int i = 0; i < ChipConfig::kChannels; ++i)
      chip.channels[static_cast<std::size_t>(i)].channel_index = i;
  }
  // Channels without an explicit offset get the seeded mismatch draw.
  for (int i = 0; i < ChipConfig::kChannels; ++i) {
    if (!offset_given[static_cast<std::size_t>(i)])
      chip.channels[static_cast<std::size_t>(i)].dc_offset_mv =
          drawn_dc_offset_mv(chip, i);
  }
  validate(chip);
  return chip;
}

json chip_config_to_json(const ChipConfig& chip) {
  json channels = json::array();
  for (const auto& ch : chip.channels) {
    channels.push_back(json{{"gain_mv_per_fc", ch.gain_mv_per_fc},
                            {"rc_code", ch.rc_code},
                            {"feedback_kohm", ch.feedback_kohm},
                            {"threshold_dac_a", ch.threshold_dac_a},
                            {"threshold_dac_b", ch.threshold_dac_b},
                            {"dc_offset_mv", ch.dc_offset_mv},
                            {"channel_index", ch.channel_index}});
  }
  json rc_map = json::array();
  for (double tp : chip.rc_map.table()) rc_map.push_back(tp);
  return json{
      {"channels", channels},
      {"global_offset_dac", chip.global_offset_dac},
      {"calibration_cap_ff", chip.calibration_cap_ff},
      {"injection_fullscale_fc", chip.injection_fullscale_fc},
      {"offset_spread_pkpk_mv", chip.offset_spread_pkpk_mv},
      {"rng_seed", chip.rng_seed},
      {"dac",
       {{"lsb_a_mv", chip.dac.lsb_a_mv},
        {"lsb_b_mv", chip.dac.lsb_b_mv},
        {"lsb_global_mv", chip.dac.lsb_global_mv}}},
      {"shaper_order", chip.shaper_order},
      {"rc_map", rc_map},
      {"led_delay",
       {{"enabled", chip.led_delay.enabled},
        {"d0_ns", chip.led_delay.d0_ns},
        {"v0_mv", chip.led_delay.v0_mv},
        {"exponent", chip.led_delay.exponent}}}};
}

NoiseSpec noise_spec_from_json(const json& j) {
  expect_object(j, "noise");
  reject_unknown_keys(j, {"output_sigma_mv", "psd_table"}, "noise");
  NoiseSpec spec;
  spec.output_sigma_mv =
      get_field(j, "output_sigma_mv", spec.output_sigma_mv, "noise");
  if (j.contains("psd_table")) {
    try {
      for (const auto& row : j.at("psd_table")) {
        if (!row.is_array() || row.size() != 2)
          throw std::invalid_argument("entries must be [f_ghz, psd] pairs");
        spec.psd_table.emplace_back(row.at(0).get<double>(),
                                    row.at(1).get<double>());
      }
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("noise.psd_table: ") + e.what());
    }
  }
  return spec;
}

json noise_spec_to_json(const NoiseSpec& noise) {
  json table = json::array();
  for (const auto& [f, p] : noise.psd_table) table.push_back(json::array({f, p}));
  return json{{"output_sigma_mv", noise.output_sigma_mv},
              {"psd_table", table}};
}

std::vector<RegisterWrite> dump_registers(const ChipConfig& chip) {
  std::vector<RegisterWrite> w;
  for (int i = 0; i < ChipConfig::kChannels; ++i) {
    const auto& ch = chip.channels[static_cast<std::size_t>(i)];
    const std::string prefix = "CH" + std::to_string(i) + "_";
    w.push_back({prefix + "THR_A", ch.threshold_dac_a});
    w.push_back({prefix + "THR_B", ch.threshold_dac_b});
    w.push_back({prefix + "RC_SEL", ch.rc_code});
    w.push_back({prefix + "FB_SEL", ch.feedback_kohm == 25 ? 1 : 0});
  }
  w.push_back({"GLOBAL_OFFSET", chip.global_offset_dac});
  return w;
}

void apply_registers(ChipConfig& chip, const std::vector<RegisterWrite>& writes) {
  for (const auto& rw : writes) {
    auto range_check = [&rw](int lo, int hi) {
      if (rw.value < lo || rw.value > hi)
        throw std::out_of_range("register " + rw.name + ": value " +
                                std::to_string(rw.value) + " outside [" +
                                std::to_string(lo) + ", " + std::to_string(hi) +
                                "]");
    };
    if (rw.name == "GLOBAL_OFFSET") {
      range_check(0, 255);
      chip.global_offset_dac = rw.value;
      continue;
    }
    if (rw.name.size() < 4 || rw.name.compare(0, 2, "CH") != 0 ||
        rw.name[3] != '_' || rw.name[2] < '0' || rw.name[2] > '5')
      throw std::invalid_argument("unknown register name: '" + rw.name + "'");
    const int ch_idx = rw.name[2] - '0';
    auto& ch = chip.channels[static_cast<std::size_t>(ch_idx)];
    const std::string field = rw.name.substr(4);
    if (field == "THR_A") {
      range_check(0, 255);
      ch.threshold_dac_a = rw.value;
    } else if (field == "THR_B") {
      range_check(0, 255);
      ch.threshold_dac_b = rw.value;
    } else if (field == "RC_SEL") {
      range_check(0, 6);
      ch.rc_code = rw.value;
    } else if (field == "FB_SEL") {
      range_check(0, 1);
      ch.feedback_kohm = rw.value == 1 ? 25 : 50;
    } else {
      throw std::invalid_argument("unknown register name: '" + rw.name + "'");
    }
  }
}

std::string format_register_dump(const std::vector<RegisterWrite>& writes) {
  std::string out = "# 8-bit configuration registers (name value)\n";
  for (const auto& rw : writes)
    out += rw.name + " " + std::to_string(rw.value) + "\n";
  return out;
}

std::vector<RegisterWrite> parse_register_dump(std::istream& is) {
  std::vector<RegisterWrite> writes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string name;
    if (!(ss >> name)) continue;  // blank or comment-only line
    long value = 0;
    std::string rest;
    if (!(ss >> value) || (ss >> rest)) {
      throw std::invalid_argument("register file line " +
                                  std::to_string(line_no) +
                                  ": expected 'NAME value'");
    }
    writes.push_back({name, static_cast<int>(value)});
  }
  return writes;
}

}  // namespace febsim
