#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "febsim/channel_sim.hpp"

#include "json.hpp"

namespace febsim {

/// Parses a ChipConfig from JSON.  Unknown keys are rejected and every
/// diagnostic names the offending field.  Channels may be given as a full
/// 6-element array or omitted (defaults with offsets drawn from rng_seed);
/// a channel object without "dc_offset_mv" also gets a drawn offset.
ChipConfig chip_config_from_json(const nlohmann::json& j);

/// Serializes a ChipConfig to JSON (sorted keys; canonical for digests).
nlohmann::json chip_config_to_json(const ChipConfig& chip);

/// Noise spec (output_sigma_mv, optional psd_table of [f_ghz, psd] pairs).
NoiseSpec noise_spec_from_json(const nlohmann::json& j);
nlohmann::json noise_spec_to_json(const NoiseSpec& noise);

/// One register write in the bus-accessible map.
struct RegisterWrite {
  std::string name;
  int value = 0;

  bool operator==(const RegisterWrite&) const = default;
};

/// Register-map view of the bus-accessible settings: per channel THR_A,
/// THR_B, RC_SEL, FB_SEL (0 = 50 kOhm, 1 = 25 kOhm) plus GLOBAL_OFFSET.
std::vector<RegisterWrite> dump_registers(const ChipConfig& chip);

/// Applies register writes onto a config.  Throws on unknown names or
/// values outside each register's documented range.
void apply_registers(ChipConfig& chip, const std::vector<RegisterWrite>& writes);

/// Plain-text rendering: "NAME value" per line, '#' comments allowed.
std::string format_register_dump(const std::vector<RegisterWrite>& writes);
std::vector<RegisterWrite> parse_register_dump(std::istream& is);

}  // namespace febsim
