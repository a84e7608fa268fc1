#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace febsim {

/// Reproducibility record written next to every command's outputs.  Two runs
/// with the same manifest (minus the output list ordering) are byte-identical.
struct RunManifest {
  std::string command;
  std::string config_digest;  ///< digest of the canonical (sorted-key) config
  std::uint64_t seed = 0;
  std::string tool_version;
  std::vector<std::string> outputs;  ///< file names written by the run

  bool operator==(const RunManifest&) const = default;
};

/// Digest of a JSON document in its canonical sorted-key rendering.
std::string config_digest(const nlohmann::json& config);

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

/// Writes `manifest.json` into `dir` and records it in the returned path.
std::filesystem::path write_manifest(const RunManifest& manifest,
                                     const std::filesystem::path& dir);

}  // namespace febsim
