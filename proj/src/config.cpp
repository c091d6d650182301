#include "biotcrb/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "biotcrb/dsa.hpp"
#include "biotcrb/error.hpp"

namespace biotcrb {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void config_error(const std::string& origin,
                               const std::string& what) {
  raise(ErrorCode::ConfigError, origin + ": " + what);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorCode::ConfigError, "cannot open config file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text,
                            const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      config_error(origin, "line " + std::to_string(lineno) +
                               ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      config_error(origin,
                   "line " + std::to_string(lineno) + ": empty key");
    }
    if (cfg.values_.count(key)) {
      config_error(origin, "line " + std::to_string(lineno) +
                               ": duplicate key '" + key + "'");
    }
    cfg.values_[key] = value;
    cfg.entries_.emplace_back(key, value);
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    config_error(origin_, "missing required key '" + key + "'");
  }
  return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int64_t Config::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  char* end = nullptr;
  const long long parsed = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    config_error(origin_, "key '" + key + "': not an integer: " + v);
  }
  return parsed;
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  char* end = nullptr;
  const double parsed = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    config_error(origin_, "key '" + key + "': not a number: " + v);
  }
  return parsed;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  const std::string v = get_string(key);
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double parsed = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
      config_error(origin_,
                   "key '" + key + "': not a number: " + tok);
    }
    out.push_back(parsed);
  }
  if (out.empty()) {
    config_error(origin_, "key '" + key + "': empty list");
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& key) const {
  const std::string v = get_string(key);
  std::istringstream in(v);
  std::vector<int> out;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const long long parsed = std::strtoll(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0') {
      config_error(origin_,
                   "key '" + key + "': not an integer: " + tok);
    }
    out.push_back(static_cast<int>(parsed));
  }
  if (out.empty()) {
    config_error(origin_, "key '" + key + "': empty list");
  }
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  for (auto& kv : entries_) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Config::reject_unknown_keys() const {
  static const std::unordered_set<std::string> known = {
      "n_devices", "honest", "malicious", "chain_length",
      "authentic_length", "alphabet_size", "theta",
      "pmf_model", "threshold", "noise_std", "pmf_table", "pmf_dtheta",
      "attack_family", "attack_threshold", "attack_noise_std",
      "attack_pmf_table", "attack_dtheta", "attack_dxi",
      "fork_point", "xi", "dsa_prob", "dsa_profile", "adversary_share",
      "seed", "cap", "threads", "trials", "chains_per_estimate",
      "waterfill_x", "waterfill_w",
  };
  for (const auto& kv : entries_) {
    const std::string& key = kv.first;
    if (known.count(key)) continue;
    // Sweep definitions and per-length race rows are namespaced prefixes.
    if (key.rfind("sweep_", 0) == 0) continue;
    if (key.rfind("dsa_profile_l", 0) == 0) continue;
    config_error(origin_, "unknown key '" + key + "'");
  }
}

namespace {

AlphabetPmf tabulated_from_config(const Config& cfg, int alphabet_size,
                                  const std::string& probs_key,
                                  const std::string& dtheta_key,
                                  const std::string& dxi_key) {
  const std::vector<double> probs = cfg.get_doubles(probs_key);
  if (static_cast<int>(probs.size()) != alphabet_size) {
    raise(ErrorCode::ConfigError,
          "key '" + probs_key + "': expected " +
              std::to_string(alphabet_size) + " entries");
  }
  Eigen::VectorXd pv =
      Eigen::Map<const Eigen::VectorXd>(probs.data(),
                                        static_cast<Eigen::Index>(probs.size()));
  std::optional<Eigen::VectorXd> dtheta;
  if (cfg.has(dtheta_key)) {
    const std::vector<double> d = cfg.get_doubles(dtheta_key);
    if (d.size() != probs.size()) {
      raise(ErrorCode::ConfigError,
            "key '" + dtheta_key + "': length must match the pmf");
    }
    dtheta = Eigen::Map<const Eigen::VectorXd>(
        d.data(), static_cast<Eigen::Index>(d.size()));
  }
  std::optional<Eigen::MatrixXd> dxi;
  if (!dxi_key.empty() && cfg.has(dxi_key)) {
    const std::vector<double> d = cfg.get_doubles(dxi_key);
    if (d.size() % probs.size() != 0) {
      raise(ErrorCode::ConfigError,
            "key '" + dxi_key +
                "': length must be a multiple of the alphabet size");
    }
    const Eigen::Index cols =
        static_cast<Eigen::Index>(d.size() / probs.size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(probs.size()), cols);
    // component-major: first |O| numbers form the first xi column
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index o = 0; o < m.rows(); ++o) {
        m(o, c) = d[static_cast<size_t>(c * m.rows() + o)];
      }
    }
    dxi = std::move(m);
  }
  return AlphabetPmf::tabulated(pv, dtheta, dxi);
}

}  // namespace

ResolvedRun resolve_run(const Config& cfg) {
  cfg.reject_unknown_keys();
  ResolvedRun run;

  Scenario& s = run.scenario;
  s.n_devices = static_cast<int>(cfg.get_int("n_devices"));
  s.honest = cfg.get_ints("honest");
  if (cfg.has("malicious")) s.malicious = cfg.get_ints("malicious");
  s.chain_length = static_cast<int>(cfg.get_int("chain_length"));
  s.authentic_length = static_cast<int>(cfg.get_int("authentic_length"));
  s.alphabet_size = static_cast<int>(cfg.get_int("alphabet_size", 2));
  s.theta = cfg.get_double("theta");
  validate_scenario(s);

  run.seed = static_cast<uint64_t>(cfg.get_int("seed", 0));
  const int64_t cap = cfg.get_int("cap", static_cast<int64_t>(kDefaultOutcomeCap));
  if (cap < 1) {
    raise(ErrorCode::ConfigError, "key 'cap': must be positive");
  }
  run.cap = static_cast<uint64_t>(cap);
  run.threads = static_cast<int>(cfg.get_int("threads", 1));
  if (run.threads < 1) {
    raise(ErrorCode::ConfigError, "key 'threads': must be positive");
  }

  const std::string pmf_model = cfg.get_string("pmf_model", "gaussian");
  const double threshold = cfg.get_double("threshold", 0.0);
  const double noise_std = cfg.get_double("noise_std", 1.0);
  if (pmf_model == "gaussian") {
    if (!(noise_std > 0.0)) {
      raise(ErrorCode::ConfigError, "key 'noise_std': must be positive");
    }
    if (s.alphabet_size != 2) {
      raise(ErrorCode::ConfigError,
            "pmf_model gaussian is a one-bit quantizer; alphabet_size must "
            "be 2");
    }
    run.honest_pmf = gaussian_quantizer_pmf(s.theta, threshold, noise_std);
    run.honest_theta_family = [threshold, noise_std](double theta) {
      return gaussian_quantizer_pmf(theta, threshold, noise_std);
    };
  } else if (pmf_model == "table") {
    run.honest_pmf = tabulated_from_config(cfg, s.alphabet_size, "pmf_table",
                                           "pmf_dtheta", "");
  } else {
    raise(ErrorCode::ConfigError,
          "key 'pmf_model': expected gaussian or table, got " + pmf_model);
  }

  const std::string family = cfg.get_string(
      "attack_family", s.malicious.empty() ? "none" : "injection");
  if (family == "none") {
    run.attack_present = false;
  } else if (family == "injection") {
    const double at = cfg.get_double("attack_threshold", threshold);
    const double an = cfg.get_double("attack_noise_std", noise_std);
    if (!(an > 0.0)) {
      raise(ErrorCode::ConfigError,
            "key 'attack_noise_std': must be positive");
    }
    if (s.alphabet_size != 2) {
      raise(ErrorCode::ConfigError,
            "attack_family injection is a one-bit quantizer; alphabet_size "
            "must be 2");
    }
    run.attack_present = true;
    run.attack_family = injection_attack_family(at, an);
    std::vector<double> xi =
        cfg.has("xi") ? cfg.get_doubles("xi") : std::vector<double>{0.0};
    if (xi.size() != 1) {
      raise(ErrorCode::ConfigError,
            "key 'xi': injection attacks take exactly one component");
    }
    run.attack.xi = Eigen::Map<const Eigen::VectorXd>(xi.data(), 1);
    run.attack.attack_pmf = (*run.attack_family)(s.theta, run.attack.xi);
  } else if (family == "table") {
    run.attack_present = true;
    run.attack.attack_pmf = tabulated_from_config(
        cfg, s.alphabet_size, "attack_pmf_table", "attack_dtheta",
        "attack_dxi");
    const int d = run.attack.attack_pmf.xi_dim();
    if (cfg.has("xi")) {
      const std::vector<double> xi = cfg.get_doubles("xi");
      if (static_cast<int>(xi.size()) != d) {
        raise(ErrorCode::ConfigError,
              "key 'xi': length must match attack_dxi columns");
      }
      run.attack.xi = Eigen::Map<const Eigen::VectorXd>(
          xi.data(), static_cast<Eigen::Index>(xi.size()));
    } else {
      run.attack.xi = Eigen::VectorXd::Zero(d);
    }
  } else {
    raise(ErrorCode::ConfigError,
          "key 'attack_family': expected injection, table, or none, got " +
              family);
  }

  if (cfg.has("adversary_share")) {
    run.adversary_share = cfg.get_double("adversary_share");
  }
  if (cfg.has("dsa_profile")) {
    run.dsa_profile = cfg.get_doubles("dsa_profile");
    if (static_cast<int>(run.dsa_profile.size()) != s.authentic_length) {
      raise(ErrorCode::ConfigError,
            "key 'dsa_profile': expected one entry per fork point "
            "1..authentic_length");
    }
  } else if (run.adversary_share) {
    run.dsa_profile = success_profile(s, *run.adversary_share);
  }

  if (run.attack_present) {
    run.attack.fork_point = static_cast<int>(cfg.get_int("fork_point", 1));
    if (cfg.has("dsa_prob")) {
      run.attack.dsa_prob = cfg.get_double("dsa_prob");
    } else if (!run.dsa_profile.empty()) {
      if (run.attack.fork_point < 1 ||
          run.attack.fork_point > static_cast<int>(run.dsa_profile.size())) {
        raise(ErrorCode::ConfigError,
              "key 'fork_point': outside the race profile");
      }
      run.attack.dsa_prob =
          run.dsa_profile[static_cast<size_t>(run.attack.fork_point - 1)];
    } else if (!s.malicious.empty()) {
      raise(ErrorCode::ConfigError,
            "no race model: set dsa_prob, dsa_profile, or adversary_share");
    }
    if (!s.malicious.empty()) {
      validate_scenario(s, run.attack);
    }
  }
  return run;
}

}  // namespace biotcrb
