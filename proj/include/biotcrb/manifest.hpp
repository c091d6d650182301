#pragma once

#include <string>
#include <vector>

#include "biotcrb/config.hpp"

namespace biotcrb {

inline constexpr const char* kToolVersion = "0.1.0";

// Sidecar written next to every CSV. The body is itself a valid config file
// holding every resolved key, so re-running the same subcommand with
// --config <manifest> reproduces the CSV byte for byte; command, version,
// source config path and timestamp ride along as comments.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::string timestamp;  // ISO 8601 UTC
  std::vector<std::pair<std::string, std::string>> resolved;

  std::string render() const;
};

RunManifest make_manifest(const std::string& command, const Config& cfg);

std::string manifest_path_for(const std::string& csv_path);

}  // namespace biotcrb
