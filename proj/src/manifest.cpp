#include "febsim/manifest.hpp"

#include <fstream>
#include <stdexcept>

#include "febsim/digest.hpp"

namespace febsim {

std::string config_digest(const nlohmann::json& config) {
  return hex_digest(config.dump());
}

nlohmann::json manifest_to_json(const RunManifest& manifest) {
  return nlohmann::json{{"command", manifest.command},
                        {"config_digest", manifest.config_digest},
                        {"seed", manifest.seed},
                        {"tool_version", manifest.tool_version},
                        {"outputs", manifest.outputs}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config_digest = j.at("config_digest").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("manifest: ") + e.what());
  }
}

std::filesystem::path write_manifest(const RunManifest& manifest,
                                     const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << manifest_to_json(manifest).dump(2) << '\n';
  return path;
}

}  // namespace febsim
