#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qconf/adversary.hpp"
#include "qconf/rng.hpp"
#include "qconf/state_vector.hpp"

namespace qconf {

struct LinkConfig {
  int from = 0;
  int to = 0;
  double p_t = 1.0;      // transmission probability
  double q_depol = 0.0;  // depolarizing probability

  void validate() const;
};

struct DetectorConfig {
  int party = 0;
  double p_d = 1.0;  // detection probability

  void validate() const;
};

struct BusMessage {
  int sender = 0;
  std::uint64_t round_id = 0;
  std::string payload;
};

// Ideal authenticated broadcast channel. Append-only: every party sees the
// same log in the same order, and past entries never change.
class ClassicalBus {
 public:
  void broadcast(int sender, std::uint64_t round_id, std::string payload) {
    log_.push_back(BusMessage{sender, round_id, std::move(payload)});
  }
  const std::vector<BusMessage>& log() const { return log_; }
  std::size_t size() const { return log_.size(); }

 private:
  std::vector<BusMessage> log_;
};

enum class Detection { Fired, Silent };

Detection detect(const DetectorConfig& detector, Rng& rng);

// Result of one qubit transmission. On loss the environment absorbs the
// qubit: it is collapsed (Z) and dropped from the register, so `state` is the
// surviving remainder either way.
struct Delivered {
  StateVector state;
};
struct Lost {
  StateVector state;
};
using TransmitResult = std::variant<Delivered, Lost>;

// Loss first (probability 1 - p_t), then the adversary if her strategy sits
// on this link, then depolarizing noise as a uniformly random Pauli with
// probability q_depol. Eve events land in `eve` when provided.
TransmitResult transmit_qubit(StateVector state, const QubitLabel& label, const LinkConfig& link,
                              const AttackStrategy& attack, EveRecord* eve,
                              std::uint64_t event_id, Rng& rng);

}  // namespace qconf
