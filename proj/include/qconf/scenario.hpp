#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qconf/adversary.hpp"
#include "qconf/channel.hpp"

namespace qconf {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Full declarative description of one experiment. Loaded from a JSON file;
// unknown keys are rejected so typos in probability names cannot silently
// fall back to defaults. The seed is mandatory.
struct ScenarioConfig {
  int scheme = 1;
  int parties = 3;
  std::uint64_t seed = 0;
  int trials = 1;

  // scheme 1
  std::int64_t rounds = 0;
  double sample_ratio = 0.0;
  double abort_threshold_z = 0.02;
  double abort_threshold_x = 0.02;

  // scheme 2
  std::int64_t key_length = 0;
  double check_fraction = 0.2;
  double reuse_check_fraction = 0.1;
  int sender = 0;

  // conference payload (scheme 1 `conference`, scheme 2 message round)
  std::int64_t message_bits = 0;

  // Link and detector overrides; every pair/party not listed is ideal.
  std::vector<LinkConfig> links;
  std::vector<DetectorConfig> detectors;
  AttackStrategy attack;

  LinkConfig link_between(int from, int to) const;
  double detector_p_d(int party) const;

  // Distribution topology: the preparer (party 0) sends one particle per
  // non-preparer over a dedicated link.
  std::vector<LinkConfig> star_links() const;
  // Traveling-qubit topology: sender -> next -> ... -> last, cyclic order.
  std::vector<LinkConfig> chain_links(int sender_party) const;
  std::vector<DetectorConfig> all_detectors() const;
};

ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario_json(const std::string& text);

// Cartesian sweep over scheme-1 parameters; every cell runs with uniform
// link/detector probabilities.
struct SweepConfig {
  std::vector<int> parties;
  std::vector<double> sample_ratio;
  std::vector<double> p_t;
  std::vector<double> p_d;
  std::int64_t rounds = 0;
  int trials = 1;
  std::uint64_t seed = 0;
};

SweepConfig load_sweep(const std::string& path);
SweepConfig parse_sweep_json(const std::string& text);

}  // namespace qconf
