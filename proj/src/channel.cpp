#include "qconf/channel.hpp"

#include <stdexcept>

namespace qconf {

namespace {

void check_probability(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0))
    throw std::invalid_argument(std::string(name) + " must be in [0,1]");
}

}  // namespace

void LinkConfig::validate() const {
  check_probability(p_t, "LinkConfig.p_t");
  check_probability(q_depol, "LinkConfig.q_depol");
  if (from == to) throw std::invalid_argument("LinkConfig: from == to");
}

void DetectorConfig::validate() const { check_probability(p_d, "DetectorConfig.p_d"); }

Detection detect(const DetectorConfig& detector, Rng& rng) {
  return rng.bernoulli(detector.p_d) ? Detection::Fired : Detection::Silent;
}

TransmitResult transmit_qubit(StateVector state, const QubitLabel& label, const LinkConfig& link,
                              const AttackStrategy& attack, EveRecord* eve,
                              std::uint64_t event_id, Rng& rng) {
  if (!state.has_qubit(label))
    throw std::invalid_argument("transmit_qubit: unknown label '" + label + "'");

  if (!rng.bernoulli(link.p_t)) {
    auto [outcome, rest] = measure_and_remove(std::move(state), label, Basis::Z, rng);
    (void)outcome;
    return Lost{std::move(rest)};
  }

  // TravelingMeasureZ targets the message carrier only; distribution-phase
  // particles crossing the same link are left alone.
  const bool attack_fires =
      attack.applies_to(link.from, link.to) &&
      (attack.kind != AttackKind::TravelingMeasureZ || label == kTravelingLabel);
  if (attack_fires) {
    const Basis eve_basis =
        attack.kind == AttackKind::TravelingMeasureZ ? Basis::Z : resolve_attack_basis(attack, rng);
    auto [event, post] = attack_intercept_resend(std::move(state), label, eve_basis, event_id, rng);
    if (eve) eve->add(event);
    state = std::move(post);
  }

  if (link.q_depol > 0.0 && rng.bernoulli(link.q_depol)) {
    static constexpr Pauli kPaulis[3] = {Pauli::X, Pauli::Y, Pauli::Z};
    state = apply_pauli(std::move(state), kPaulis[rng.below(3)], label);
  }

  return Delivered{std::move(state)};
}

}  // namespace qconf
