#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biotcrb/pmf.hpp"
#include "biotcrb/scenario.hpp"

namespace biotcrb {

// Flat key = value configuration. Values are whitespace-separated tokens;
// '#' starts a comment. Unknown keys are rejected (typo safety).
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text,
                             const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  // Typed getters throw ConfigError naming the key on absence/malformation.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  int64_t get_int(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }
  const std::string& origin() const { return origin_; }

  // Throws ConfigError listing the offending key when one is not in the
  // documented schema.
  void reject_unknown_keys() const;

 private:
  std::string origin_;
  std::vector<std::pair<std::string, std::string>> entries_;  // insertion order
  std::map<std::string, std::string> values_;
};

// Fully resolved run inputs.
struct ResolvedRun {
  Scenario scenario;
  AlphabetPmf honest_pmf;
  std::function<AlphabetPmf(double)> honest_theta_family;  // gaussian model

  bool attack_present = false;
  AttackSpec attack;
  std::optional<PmfFamily> attack_family;   // present for injection model
  std::vector<double> dsa_profile;          // P(La) for La=1..L0, may be empty
  std::optional<double> adversary_share;

  uint64_t seed = 0;
  uint64_t cap = kDefaultOutcomeCap;
  int threads = 1;
};

// Builds and validates the run inputs; throws ConfigError / validation
// errors with actionable messages.
ResolvedRun resolve_run(const Config& cfg);

}  // namespace biotcrb
