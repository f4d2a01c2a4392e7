#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "qconf/rng.hpp"
#include "qconf/state_vector.hpp"

namespace qconf {

enum class AttackKind { None, InterceptResend, TravelingMeasureZ };
enum class AttackBasis { Z, X, Y, RandomZX };

// One strategy per link per scenario; `None` matches nothing.
struct AttackStrategy {
  AttackKind kind = AttackKind::None;
  AttackBasis basis = AttackBasis::Z;  // intercept-resend only
  int link_from = -1;
  int link_to = -1;

  static AttackStrategy none() { return {}; }
  bool active() const { return kind != AttackKind::None; }
  bool applies_to(int from, int to) const {
    return active() && from == link_from && to == link_to;
  }
};

struct EveEvent {
  std::uint64_t event_id = 0;  // round id or key-system index
  Basis basis = Basis::Z;
  Outcome outcome;
};

// Append-only log of what Eve measured, plus ground-truth bits the simulator
// pairs with her outcomes for information accounting. truths[i] pairs with
// events[i] and stays empty until the secret Eve was after is known.
struct EveRecord {
  std::vector<EveEvent> events;
  std::vector<std::optional<int>> truths;

  void add(EveEvent event) {
    events.push_back(event);
    truths.emplace_back();
  }
};

// Projectively measures the in-flight qubit in Eve's basis and forwards the
// collapsed state.
std::pair<EveEvent, StateVector> attack_intercept_resend(StateVector state,
                                                         const QubitLabel& label, Basis basis,
                                                         std::uint64_t event_id, Rng& rng);

// Z measurement on the traveling qubit.
std::pair<EveEvent, StateVector> attack_traveling_measure(StateVector state,
                                                          std::uint64_t event_id, Rng& rng);

// Resolves the basis actually used for one interception (RandomZX draws).
Basis resolve_attack_basis(const AttackStrategy& strategy, Rng& rng);

// Plug-in empirical mutual information (bits) between Eve's outcome bits and
// the paired truth bits. Empty input is defined as 0.
double mutual_information(const EveRecord& record, std::span<const int> truth_bits);
// Same estimator over the record's own pairings; unpaired events are skipped.
double mutual_information(const EveRecord& record);
double mutual_information_bits(std::span<const int> xs, std::span<const int> ys);

// Exact per-round sample-error probabilities a distribution-phase attack
// leaves on a shared entangled state: probability that an all-Z measurement
// disagrees somewhere, and probability that the all-X eigenvalue product
// flips. Computed analytically from the post-attack ensemble, no sampling.
struct AttackSignature {
  double qber_z = 0.0;
  double qber_x = 0.0;
};
AttackSignature expected_attack_signature(const AttackStrategy& strategy, int parties);

}  // namespace qconf
