#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"

#include "febsim/config_io.hpp"
#include "febsim/manifest.hpp"

using namespace febsim;
using nlohmann::json;

TEST_CASE("chip config json: canonical round trip") {
  ChipConfig chip = nominal_chip_config(99);
  chip.channels[2].threshold_dac_a = 120;
  chip.channels[4].rc_code = 6;
  chip.channels[5].feedback_kohm = 25;
  chip.global_offset_dac = 17;
  chip.led_delay.enabled = true;
  chip.led_delay.d0_ns = 0.391;
  const json j = chip_config_to_json(chip);
  const ChipConfig back = chip_config_from_json(j);
  CHECK(back == chip);
  // Canonical rendering is stable (sorted keys).
  CHECK(j.dump() == chip_config_to_json(back).dump());
}

TEST_CASE("chip config json: unknown keys and shape errors are named") {
  json j = chip_config_to_json(nominal_chip_config(1));
  j["chip_id"] = 5;
  CHECK_THROWS_WITH_AS(chip_config_from_json(j), doctest::Contains("chip_id"),
                       std::invalid_argument);

  json five = chip_config_to_json(nominal_chip_config(1));
  five["channels"].erase(5);
  CHECK_THROWS_WITH_AS(chip_config_from_json(five),
                       doctest::Contains("channels"), std::invalid_argument);

  json bad_dac = chip_config_to_json(nominal_chip_config(1));
  bad_dac["channels"][2]["threshold_dac_a"] = 256;
  CHECK_THROWS_AS(chip_config_from_json(bad_dac), std::invalid_argument);

  json bad_type = chip_config_to_json(nominal_chip_config(1));
  bad_type["calibration_cap_ff"] = "large";
  CHECK_THROWS_WITH_AS(chip_config_from_json(bad_type),
                       doctest::Contains("calibration_cap_ff"),
                       std::invalid_argument);

  json bad_map = chip_config_to_json(nominal_chip_config(1));
  bad_map["rc_map"] = {5.0, 4.0, 5.0, 5.3, 6.0, 7.0, 9.0};  // not monotone
  CHECK_THROWS_WITH_AS(chip_config_from_json(bad_map),
                       doctest::Contains("rc_map"), std::invalid_argument);
}

TEST_CASE("chip config json: defaults and seeded offsets") {
  // No channels section: defaults with drawn offsets.
  const ChipConfig chip = chip_config_from_json(json{{"rng_seed", 42}});
  CHECK(chip.rng_seed == 42);
  for (int i = 0; i < ChipConfig::kChannels; ++i) {
    CHECK(chip.channels[static_cast<std::size_t>(i)].channel_index == i);
    CHECK(chip.channels[static_cast<std::size_t>(i)].dc_offset_mv ==
          drawn_dc_offset_mv(chip, i));
  }
  CHECK(chip == nominal_chip_config(42));

  // A channel without dc_offset_mv gets the seeded draw; one with it keeps it.
  json j = chip_config_to_json(nominal_chip_config(7));
  j["channels"][3].erase("dc_offset_mv");
  j["channels"][1]["dc_offset_mv"] = -4.25;
  const ChipConfig mixed = chip_config_from_json(j);
  CHECK(mixed.channels[3].dc_offset_mv ==
        drawn_dc_offset_mv(mixed, 3));
  CHECK(mixed.channels[1].dc_offset_mv == doctest::Approx(-4.25));

  // Different seeds give different mismatch draws.
  CHECK(chip_config_from_json(json{{"rng_seed", 1}}).channels[0].dc_offset_mv !=
        chip_config_from_json(json{{"rng_seed", 2}}).channels[0].dc_offset_mv);
}

TEST_CASE("noise spec json round trip") {
  NoiseSpec spec;
  spec.output_sigma_mv = 3.25;
  spec.psd_table = {{0.0, 1.0}, {0.1, 0.5}, {0.4, 0.0}};
  const NoiseSpec back = noise_spec_from_json(noise_spec_to_json(spec));
  CHECK(back.output_sigma_mv == doctest::Approx(3.25));
  REQUIRE(back.psd_table.size() == 3);
  CHECK(back.psd_table[1].first == doctest::Approx(0.1));
  CHECK(back.psd_table[1].second == doctest::Approx(0.5));

  CHECK_THROWS_WITH_AS(noise_spec_from_json(json{{"sigma", 1.0}}),
                       doctest::Contains("sigma"), std::invalid_argument);
  CHECK_THROWS_AS(
      noise_spec_from_json(json{{"psd_table", {{0.0, 1.0, 2.0}}}}),
      std::invalid_argument);
}

TEST_CASE("register map: dump/apply round trip") {
  ChipConfig chip = nominal_chip_config(3);
  chip.channels[0].threshold_dac_a = 200;
  chip.channels[1].threshold_dac_b = 9;
  chip.channels[2].rc_code = 5;
  chip.channels[3].feedback_kohm = 25;
  chip.global_offset_dac = 33;

  const auto writes = dump_registers(chip);
  CHECK(writes.size() == 4 * 6 + 1);

  ChipConfig target = nominal_chip_config(3);
  apply_registers(target, writes);
  CHECK(target == chip);

  // Text form round trips through the parser.
  const std::string text = format_register_dump(writes);
  std::istringstream in(text);
  const auto parsed = parse_register_dump(in);
  CHECK(parsed == writes);
  ChipConfig target2 = nominal_chip_config(3);
  apply_registers(target2, parsed);
  CHECK(target2 == chip);
}

TEST_CASE("register map: names, encodings, and range errors") {
  ChipConfig chip = nominal_chip_config(1);
  apply_registers(chip, {{"CH2_FB_SEL", 1}});
  CHECK(chip.channels[2].feedback_kohm == 25);
  apply_registers(chip, {{"CH2_FB_SEL", 0}});
  CHECK(chip.channels[2].feedback_kohm == 50);
  apply_registers(chip, {{"GLOBAL_OFFSET", 255}});
  CHECK(chip.global_offset_dac == 255);

  CHECK_THROWS_AS(apply_registers(chip, {{"CH6_THR_A", 1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_registers(chip, {{"CH0_MAGIC", 1}}),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(apply_registers(chip, {{"CH0_THR_A", 256}}),
                       doctest::Contains("CH0_THR_A"), std::out_of_range);
  CHECK_THROWS_AS(apply_registers(chip, {{"CH0_RC_SEL", 7}}),
                  std::out_of_range);
  CHECK_THROWS_AS(apply_registers(chip, {{"CH0_FB_SEL", 2}}),
                  std::out_of_range);

  std::istringstream bad("CH0_THR_A one\n");
  CHECK_THROWS_WITH_AS(parse_register_dump(bad), doctest::Contains("line 1"),
                       std::invalid_argument);
  std::istringstream comments("# header\n\nCH0_THR_A 12  # trailing comment\n");
  const auto writes = parse_register_dump(comments);
  REQUIRE(writes.size() == 1);
  CHECK(writes[0].name == "CH0_THR_A");
  CHECK(writes[0].value == 12);
}

TEST_CASE("run manifest: round trip, digest, and file output") {
  RunManifest m;
  m.command = "scan";
  m.config_digest = config_digest(json{{"a", 1}, {"b", 2}});
  m.seed = 20230901;
  m.tool_version = "1.0.0";
  m.outputs = {"scurve_q0.csv", "scan_fits.json"};
  const RunManifest back = manifest_from_json(manifest_to_json(m));
  CHECK(back == m);

  // The digest is over the canonical sorted-key rendering.
  CHECK(config_digest(json{{"b", 2}, {"a", 1}}) == m.config_digest);
  CHECK(config_digest(json{{"a", 1}, {"b", 3}}) != m.config_digest);

  const auto dir = std::filesystem::temp_directory_path() / "febsim_test_manifest";
  std::filesystem::create_directories(dir);
  const auto path = write_manifest(m, dir);
  std::ifstream in(path);
  REQUIRE(in.good());
  json loaded;
  in >> loaded;
  CHECK(manifest_from_json(loaded) == m);
  std::filesystem::remove_all(dir);

  CHECK_THROWS_AS(manifest_from_json(json{{"command", "scan"}}),
                  std::invalid_argument);
}
