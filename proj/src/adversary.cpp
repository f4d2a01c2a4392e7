#include "qconf/adversary.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace qconf {

std::pair<EveEvent, StateVector> attack_intercept_resend(StateVector state,
                                                         const QubitLabel& label, Basis basis,
                                                         std::uint64_t event_id, Rng& rng) {
  auto [outcome, post] = measure_qubit(std::move(state), label, basis, rng);
  return {EveEvent{event_id, basis, outcome}, std::move(post)};
}

std::pair<EveEvent, StateVector> attack_traveling_measure(StateVector state,
                                                          std::uint64_t event_id, Rng& rng) {
  if (!state.has_qubit(kTravelingLabel))
    throw std::invalid_argument("attack_traveling_measure: no traveling qubit in flight");
  return attack_intercept_resend(std::move(state), kTravelingLabel, Basis::Z, event_id, rng);
}

Basis resolve_attack_basis(const AttackStrategy& strategy, Rng& rng) {
  switch (strategy.basis) {
    case AttackBasis::Z: return Basis::Z;
    case AttackBasis::X: return Basis::X;
    case AttackBasis::Y: return Basis::Y;
    case AttackBasis::RandomZX: return rng.coin() ? Basis::X : Basis::Z;
  }
  throw std::logic_error("unreachable attack basis");
}

double mutual_information_bits(std::span<const int> xs, std::span<const int> ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("mutual_information: sample vectors differ in length");
  if (xs.empty()) return 0.0;

  std::array<std::array<double, 2>, 2> joint{};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if ((xs[i] & ~1) || (ys[i] & ~1))
      throw std::invalid_argument("mutual_information: samples must be bits");
    joint[xs[i]][ys[i]] += 1.0;
  }
  const double n = static_cast<double>(xs.size());
  double mi = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      const double pxy = joint[x][y] / n;
      if (pxy <= 0.0) continue;
      const double px = (joint[x][0] + joint[x][1]) / n;
      const double py = (joint[0][y] + joint[1][y]) / n;
      mi += pxy * std::log2(pxy / (px * py));
    }
  }
  return mi;
}

double mutual_information(const EveRecord& record, std::span<const int> truth_bits) {
  std::vector<int> eve_bits;
  eve_bits.reserve(record.events.size());
  for (const EveEvent& e : record.events) eve_bits.push_back(e.outcome.bit);
  return mutual_information_bits(eve_bits, truth_bits);
}

double mutual_information(const EveRecord& record) {
  std::vector<int> eve_bits, truth_bits;
  for (std::size_t i = 0; i < record.events.size(); ++i) {
    if (i < record.truths.size() && record.truths[i]) {
      eve_bits.push_back(record.events[i].outcome.bit);
      truth_bits.push_back(*record.truths[i]);
    }
  }
  return mutual_information_bits(eve_bits, truth_bits);
}

namespace {

// qber contributions of one post-attack pure state: all-Z disagreement
// probability and all-X parity-violation probability.
AttackSignature branch_signature(const StateVector& branch, int parties) {
  AttackSignature sig;
  const auto& amps = branch.amplitudes();
  const double agree = std::norm(amps.front()) + std::norm(amps.back());
  sig.qber_z = 1.0 - agree;

  std::vector<std::pair<QubitLabel, Pauli>> all_x;
  for (int p = 0; p < parties; ++p) all_x.emplace_back(conferee_label(p), Pauli::X);
  sig.qber_x = 0.5 * (1.0 - pauli_string_expectation(branch, all_x));
  return sig;
}

AttackSignature intercept_signature(Basis eve_basis, int parties, int attacked_party) {
  const StateVector ghz = make_ghz(parties);
  const QubitLabel target = conferee_label(attacked_party);
  AttackSignature sig;
  for (int bit = 0; bit < 2; ++bit) {
    Projection proj = project_qubit(ghz, target, eve_basis, bit);
    if (!proj.state) continue;
    const AttackSignature b = branch_signature(*proj.state, parties);
    sig.qber_z += proj.probability * b.qber_z;
    sig.qber_x += proj.probability * b.qber_x;
  }
  return sig;
}

}  // namespace

AttackSignature expected_attack_signature(const AttackStrategy& strategy, int parties) {
  if (parties < 2 || parties > 6)
    throw std::invalid_argument("expected_attack_signature: supported for 2..6 parties");
  switch (strategy.kind) {
    case AttackKind::None:
      return {};
    case AttackKind::TravelingMeasureZ:
      throw std::invalid_argument(
          "expected_attack_signature: traveling-qubit attacks have no distribution-phase "
          "signature");
    case AttackKind::InterceptResend:
      break;
  }

  // GHZ permutation symmetry makes the signature independent of which
  // non-preparer link is hit; honor the configured target when it is valid.
  int attacked = strategy.link_to;
  if (attacked < 1 || attacked >= parties) attacked = 1;

  switch (strategy.basis) {
    case AttackBasis::Z: return intercept_signature(Basis::Z, parties, attacked);
    case AttackBasis::X: return intercept_signature(Basis::X, parties, attacked);
    case AttackBasis::Y: return intercept_signature(Basis::Y, parties, attacked);
    case AttackBasis::RandomZX: {
      const AttackSignature z = intercept_signature(Basis::Z, parties, attacked);
      const AttackSignature x = intercept_signature(Basis::X, parties, attacked);
      return {0.5 * (z.qber_z + x.qber_z), 0.5 * (z.qber_x + x.qber_x)};
    }
  }
  throw std::logic_error("unreachable attack basis");
}

}  // namespace qconf
