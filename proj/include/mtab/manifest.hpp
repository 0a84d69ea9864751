#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtab/core.hpp"
#include "mtab/fs.hpp"

namespace mtab {

// Every command run writes one of these next to its outputs: the resolved
// configuration plus content hashes of all inputs and outputs. No
// timestamps, so a rerun of the same command is byte-identical.
inline nlohmann::json build_manifest(
    const std::string& command, const nlohmann::json& resolved_config,
    std::uint64_t seed, const std::vector<std::filesystem::path>& inputs,
    const std::vector<std::filesystem::path>& outputs) {
  nlohmann::json j;
  j["schema"] = "mtab.manifest.v1";
  j["artifact_version"] = kVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = resolved_config;
  j["config_hash"] = fnv1a64_hex(resolved_config.dump());
  auto hash_all = [](const std::vector<std::filesystem::path>& paths) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& p : paths)
      out[p.generic_string()] = fnv1a64_hex(read_text_file(p));
    return out;
  };
  j["inputs"] = hash_all(inputs);
  j["outputs"] = hash_all(outputs);
  return j;
}

inline void write_manifest(const std::filesystem::path& path,
                           const nlohmann::json& manifest) {
  write_text_file(path, manifest.dump(2) + "\n");
}

}  // namespace mtab
