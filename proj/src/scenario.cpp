#include "biotcrb/scenario.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "biotcrb/error.hpp"

namespace biotcrb {

void validate_scenario(const Scenario& s) {
  if (s.n_devices < 1) {
    raise(ErrorCode::InvalidParameter, "n_devices must be >= 1");
  }
  if (s.alphabet_size < 2) {
    raise(ErrorCode::InvalidParameter, "alphabet_size must be >= 2");
  }
  if (s.chain_length < 1) {
    raise(ErrorCode::InvalidParameter, "chain_length must be >= 1");
  }
  if (s.authentic_length < 1 || s.authentic_length > s.chain_length) {
    std::ostringstream msg;
    msg << "authentic_length " << s.authentic_length
        << " must lie in [1, chain_length=" << s.chain_length << "]";
    raise(ErrorCode::InvalidParameter, msg.str());
  }
  if (s.honest.empty()) {
    raise(ErrorCode::DegenerateScenario,
          "empty honest set: theta carries no always-authentic data and the "
          "estimation floor is unbounded");
  }
  std::set<int> seen;
  auto check_ids = [&](const std::vector<int>& ids, const char* label) {
    for (int id : ids) {
      if (id < 1 || id > s.n_devices) {
        std::ostringstream msg;
        msg << label << " device id " << id << " outside {1.." << s.n_devices
            << "}";
        raise(ErrorCode::InvalidPartition, msg.str());
      }
      if (!seen.insert(id).second) {
        std::ostringstream msg;
        msg << "device id " << id << " appears in both sets";
        raise(ErrorCode::InvalidPartition, msg.str());
      }
    }
  };
  check_ids(s.honest, "honest");
  check_ids(s.malicious, "malicious");
  if (static_cast<int>(seen.size()) != s.n_devices) {
    raise(ErrorCode::InvalidPartition,
          "honest and malicious sets must cover every device exactly once");
  }
}

void validate_scenario(const Scenario& s, const AttackSpec& a) {
  validate_scenario(s);
  if (s.malicious.empty()) return;  // trivial attack, nothing else to check
  if (a.fork_point < 1 || a.fork_point > s.authentic_length) {
    std::ostringstream msg;
    msg << "fork_point " << a.fork_point << " outside {1..authentic_length="
        << s.authentic_length
        << "}: the fork cannot branch past the authentic chain";
    raise(ErrorCode::InvalidFork, msg.str());
  }
  if (!(a.dsa_prob >= 0.0 && a.dsa_prob <= 1.0)) {
    raise(ErrorCode::InvalidParameter, "dsa_prob must lie in [0,1]");
  }
  a.attack_pmf.validate();
  if (a.attack_pmf.alphabet_size() != s.alphabet_size) {
    raise(ErrorCode::InvalidParameter,
          "attack pmf alphabet size does not match the scenario");
  }
  if (a.attack_pmf.dxi && a.xi.size() > 0 &&
      a.attack_pmf.dxi->cols() != a.xi.size()) {
    raise(ErrorCode::InvalidParameter,
          "attack pmf dxi has a different dimension than xi");
  }
}

void require_matching_alphabet(const Scenario& s, const AlphabetPmf& p) {
  if (p.alphabet_size() != s.alphabet_size) {
    std::ostringstream msg;
    msg << "honest pmf has " << p.alphabet_size()
        << " symbols but the scenario alphabet size is " << s.alphabet_size;
    raise(ErrorCode::InvalidParameter, msg.str());
  }
}

std::vector<int> honest_rows(const Scenario& s) {
  std::vector<int> rows;
  rows.reserve(s.honest.size());
  for (int id : s.honest) rows.push_back(id - 1);
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<int> malicious_rows(const Scenario& s) {
  std::vector<int> rows;
  rows.reserve(s.malicious.size());
  for (int id : s.malicious) rows.push_back(id - 1);
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace biotcrb
