#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qconf/adversary.hpp"
#include "qconf/channel.hpp"
#include "qconf/rng.hpp"
#include "qconf/state_vector.hpp"

namespace qconf {

// Conferencing over a reusable quantum key: a stored sequence of shared GHZ
// systems. A message bit rides a traveling qubit that the sender entangles
// with her key qubit (CNOT), each intermediate conferee copies the bit onto a
// fresh ancilla (two CNOTs) and reads the ancilla, and the last conferee
// unwinds the encryption and reads the traveling qubit itself. An honest
// round returns every key system to its exact GHZ state, so the key survives
// for the next round, shrinking only by the systems sacrificed to checks.

enum class SystemStatus { Fresh, InUse, CheckedConsumed, CompromisedFlagged };

struct QuantumKeySystem {
  std::int64_t index = 0;
  StateVector state;
  SystemStatus status = SystemStatus::Fresh;
};

struct QuantumKey {
  std::vector<QuantumKeySystem> systems;
  std::int64_t original_length = 0;
  int parties = 0;

  std::int64_t usable_length() const;
  QuantumKeySystem* next_fresh();
};

// Preparer's basis for one X/Y parity check, fixed by the other parties'
// announced bases: X when their Y count is even, Y when odd. The total Y
// count 2k is then even and the eigenvalue product is (-1)^k on a GHZ state.
struct CheckRule {
  Basis preparer_basis = Basis::X;
  int expected_parity = +1;
};
CheckRule choose_check_bases(std::span<const Basis> other_party_bases);

struct ParityCheckReport {
  std::int64_t checks = 0;
  std::int64_t errors = 0;
  std::int64_t voided = 0;  // checks lost to silent detectors

  std::optional<double> error_rate() const;
};

struct CheckRecord {
  std::int64_t system_index = 0;
  std::vector<Basis> bases;  // per party, preparer first
  std::vector<Outcome> outcomes;
  int expected_parity = +1;
  int observed_parity = +1;
};

struct EstablishResult {
  QuantumKey key;
  ParityCheckReport report;
  std::vector<CheckRecord> checks;
  std::int64_t delivered = 0;
  bool accepted = true;
};

// Distributes `n_systems` GHZ systems over the star links, checks a random
// Bernoulli(check_fraction) subset with the X/Y rule and keeps the rest as
// the quantum key. Lost systems are excluded from both key and checks.
EstablishResult establish_quantum_key(int parties, std::int64_t n_systems, double check_fraction,
                                      double abort_threshold,
                                      const std::vector<LinkConfig>& links,
                                      const std::vector<DetectorConfig>& detectors,
                                      const AttackStrategy& attack, EveRecord* eve,
                                      ClassicalBus* bus, Rng& rng);

// Attaches the traveling qubit in |bit> and entangles it with the sender's
// key qubit. The system is in use until the final conferee decrypts.
void encrypt_bit(QuantumKeySystem& system, int message_bit, int sender_party);

// Ancilla route for a middle conferee: CNOT(key -> ancilla), CNOT(T ->
// ancilla), read the ancilla in Z. Leaves the traveling qubit untouched for
// forwarding.
int intermediate_decrypt(QuantumKeySystem& system, int party, Rng& rng);

// Final conferee: CNOT(key -> T), read T in Z. Restores the key system.
int final_decrypt(QuantumKeySystem& system, int party, Rng& rng);

struct MessageRoundReport {
  // recovered[party][bit]; senders hold their own plaintext, absent entries
  // were never delivered.
  std::vector<std::vector<std::optional<int>>> recovered;
  std::vector<std::int64_t> flagged_systems;
  std::vector<std::pair<std::int64_t, double>> system_fidelity;  // post-round, used systems
  std::int64_t systems_used = 0;
  std::int64_t bits_delivered = 0;
  bool key_exhausted = false;
};

// Sends `message` from `sender` along the conferee chain, one key system per
// bit. A traveling qubit lost in flight flags its system as compromised and
// the bit is retransmitted on a fresh system.
MessageRoundReport run_message_round(QuantumKey& key, int sender,
                                     std::span<const std::uint8_t> message,
                                     const std::vector<LinkConfig>& chain_links,
                                     const AttackStrategy& attack, EveRecord* eve,
                                     ClassicalBus* bus, Rng& rng);

struct ReuseCheckResult {
  ParityCheckReport report;
  std::int64_t consumed = 0;
  bool accepted = true;
};

// Consumes ceil(fraction * usable) randomly chosen fresh systems in X/Y
// parity checks; survivors stay usable.
ReuseCheckResult reuse_check(QuantumKey& key, double fraction, double abort_threshold,
                             ClassicalBus* bus, Rng& rng);

}  // namespace qconf
