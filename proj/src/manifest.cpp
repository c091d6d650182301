#include "biotcrb/manifest.hpp"

#include <ctime>

namespace biotcrb {

std::string RunManifest::render() const {
  std::string out;
  out += "# command: " + command + "\n";
  out += "# tool_version: ";
  out += kToolVersion;
  out += "\n";
  out += "# source_config: " + config_path + "\n";
  out += "# timestamp: " + timestamp + "\n";
  for (const auto& kv : resolved) {
    out += kv.first + " = " + kv.second + "\n";
  }
  return out;
}

RunManifest make_manifest(const std::string& command, const Config& cfg) {
  RunManifest m;
  m.command = command;
  m.config_path = cfg.origin();
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  m.timestamp = buf;
  m.resolved = cfg.entries();
  return m;
}

std::string manifest_path_for(const std::string& csv_path) {
  return csv_path + ".manifest";
}

}  // namespace biotcrb
