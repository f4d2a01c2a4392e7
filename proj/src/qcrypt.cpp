#include "qconf/qcrypt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qconf {

std::int64_t QuantumKey::usable_length() const {
  std::int64_t count = 0;
  for (const auto& s : systems)
    if (s.status == SystemStatus::Fresh) ++count;
  return count;
}

QuantumKeySystem* QuantumKey::next_fresh() {
  for (auto& s : systems)
    if (s.status == SystemStatus::Fresh) return &s;
  return nullptr;
}

CheckRule choose_check_bases(std::span<const Basis> other_party_bases) {
  int y_count = 0;
  for (Basis b : other_party_bases) {
    if (b == Basis::Y) ++y_count;
    else if (b != Basis::X)
      throw std::invalid_argument("choose_check_bases: parties announce X or Y only");
  }
  CheckRule rule;
  rule.preparer_basis = (y_count % 2 == 0) ? Basis::X : Basis::Y;
  const int total_y = y_count + (rule.preparer_basis == Basis::Y ? 1 : 0);
  rule.expected_parity = (total_y / 2) % 2 == 0 ? +1 : -1;
  return rule;
}

std::optional<double> ParityCheckReport::error_rate() const {
  if (checks == 0) return std::nullopt;
  return static_cast<double>(errors) / static_cast<double>(checks);
}

namespace {

// Full X/Y parity check on one system: non-preparers pick random bases and
// everyone measures behind a detector; a silent detector voids the check.
// The system's register is consumed either way.
std::optional<CheckRecord> run_parity_check(QuantumKeySystem& system, int parties,
                                            const std::vector<DetectorConfig>* detectors,
                                            Rng& rng) {
  CheckRecord record;
  record.system_index = system.index;

  std::vector<Basis> others(parties - 1);
  for (auto& b : others) b = rng.coin() ? Basis::Y : Basis::X;
  const CheckRule rule = choose_check_bases(others);
  record.expected_parity = rule.expected_parity;
  record.bases.push_back(rule.preparer_basis);
  record.bases.insert(record.bases.end(), others.begin(), others.end());

  system.status = SystemStatus::CheckedConsumed;

  if (detectors) {
    for (int l = 0; l < parties; ++l) {
      if (detect((*detectors)[l], rng) == Detection::Silent) return std::nullopt;
    }
  }

  StateVector state = std::move(system.state);
  record.observed_parity = 1;
  // Non-preparers announce first, the preparer measures last.
  for (int l = 1; l < parties; ++l) {
    auto [outcome, rest] = measure_and_remove(std::move(state), conferee_label(l), others[l - 1], rng);
    state = std::move(rest);
    record.outcomes.push_back(outcome);
    record.observed_parity *= outcome.eigenvalue;
  }
  auto [outcome, rest] =
      measure_and_remove(std::move(state), conferee_label(0), rule.preparer_basis, rng);
  system.state = std::move(rest);
  record.outcomes.insert(record.outcomes.begin(), outcome);
  record.observed_parity *= outcome.eigenvalue;
  return record;
}

std::string parity_payload(const CheckRecord& record) {
  std::string payload = "check sys=" + std::to_string(record.system_index) + " bases=";
  for (Basis b : record.bases) payload += basis_name(b);
  payload += record.observed_parity == record.expected_parity ? " ok" : " ERR";
  return payload;
}

}  // namespace

EstablishResult establish_quantum_key(int parties, std::int64_t n_systems, double check_fraction,
                                      double abort_threshold,
                                      const std::vector<LinkConfig>& links,
                                      const std::vector<DetectorConfig>& detectors,
                                      const AttackStrategy& attack, EveRecord* eve,
                                      ClassicalBus* bus, Rng& rng) {
  if (n_systems < 1) throw std::invalid_argument("establish_quantum_key: need n_systems >= 1");
  if (!(check_fraction >= 0.0 && check_fraction < 1.0))
    throw std::invalid_argument("establish_quantum_key: check_fraction must be in [0,1)");
  if (links.size() != static_cast<std::size_t>(parties - 1))
    throw std::invalid_argument("establish_quantum_key: need one link per non-preparer");
  if (detectors.size() != static_cast<std::size_t>(parties))
    throw std::invalid_argument("establish_quantum_key: need one detector per party");

  EstablishResult result;
  result.key.original_length = n_systems;
  result.key.parties = parties;

  for (std::int64_t j = 0; j < n_systems; ++j) {
    StateVector state = make_ghz(parties);
    bool delivered = true;
    for (int l = 1; l < parties && delivered; ++l) {
      TransmitResult sent = transmit_qubit(std::move(state), conferee_label(l), links[l - 1],
                                           attack, eve, static_cast<std::uint64_t>(j), rng);
      if (auto* ok = std::get_if<Delivered>(&sent)) state = std::move(ok->state);
      else delivered = false;
    }
    if (!delivered) {
      if (bus) bus->broadcast(0, static_cast<std::uint64_t>(j), "system lost in distribution");
      continue;
    }
    ++result.delivered;

    QuantumKeySystem system{j, std::move(state), SystemStatus::Fresh};
    if (rng.bernoulli(check_fraction)) {
      auto record = run_parity_check(system, parties, &detectors, rng);
      if (!record) {
        ++result.report.voided;
      } else {
        ++result.report.checks;
        if (record->observed_parity != record->expected_parity) ++result.report.errors;
        if (bus) bus->broadcast(0, static_cast<std::uint64_t>(j), parity_payload(*record));
        result.checks.push_back(std::move(*record));
      }
    }
    result.key.systems.push_back(std::move(system));
  }

  if (auto rate = result.report.error_rate(); rate && *rate > abort_threshold) {
    result.accepted = false;
    if (bus) bus->broadcast(0, 0, "establishment aborted: parity error rate too high");
  }
  return result;
}

void encrypt_bit(QuantumKeySystem& system, int message_bit, int sender_party) {
  if (system.status != SystemStatus::Fresh)
    throw std::invalid_argument("encrypt_bit: key system " + std::to_string(system.index) +
                                " is not fresh");
  if (system.state.has_qubit(kTravelingLabel))
    throw std::invalid_argument("encrypt_bit: traveling qubit already attached");
  system.state = attach_qubit(std::move(system.state), kTravelingLabel, message_bit);
  system.state =
      apply_cnot(std::move(system.state), conferee_label(sender_party), kTravelingLabel);
  system.status = SystemStatus::InUse;
}

int intermediate_decrypt(QuantumKeySystem& system, int party, Rng& rng) {
  if (!system.state.has_qubit(kTravelingLabel))
    throw std::invalid_argument("intermediate_decrypt: no traveling qubit present");
  StateVector state = attach_qubit(std::move(system.state), kAncillaLabel, 0);
  state = apply_cnot(std::move(state), conferee_label(party), kAncillaLabel);
  state = apply_cnot(std::move(state), kTravelingLabel, kAncillaLabel);
  auto [outcome, rest] = measure_and_remove(std::move(state), kAncillaLabel, Basis::Z, rng);
  system.state = std::move(rest);
  return outcome.bit;
}

int final_decrypt(QuantumKeySystem& system, int party, Rng& rng) {
  if (!system.state.has_qubit(kTravelingLabel))
    throw std::invalid_argument("final_decrypt: no traveling qubit present");
  StateVector state =
      apply_cnot(std::move(system.state), conferee_label(party), kTravelingLabel);
  auto [outcome, rest] = measure_and_remove(std::move(state), kTravelingLabel, Basis::Z, rng);
  system.state = std::move(rest);
  system.status = SystemStatus::Fresh;
  return outcome.bit;
}

MessageRoundReport run_message_round(QuantumKey& key, int sender,
                                     std::span<const std::uint8_t> message,
                                     const std::vector<LinkConfig>& chain_links,
                                     const AttackStrategy& attack, EveRecord* eve,
                                     ClassicalBus* bus, Rng& rng) {
  const int m = static_cast<int>(chain_links.size()) + 1;
  if (sender < 0 || sender >= m)
    throw std::invalid_argument("run_message_round: sender out of range");

  MessageRoundReport report;
  report.recovered.assign(m, std::vector<std::optional<int>>(message.size()));

  // Chain order: sender, then the remaining conferees in cyclic party order.
  std::vector<int> chain;
  for (int step = 1; step < m; ++step) chain.push_back((sender + step) % m);

  const StateVector reference = make_ghz(m);

  // Bit j rides its own key system: the cursor only moves forward, so a
  // system restored by this round's final decrypt is not touched again until
  // the next round.
  std::size_t cursor = 0;
  const auto take_fresh = [&key, &cursor]() -> QuantumKeySystem* {
    while (cursor < key.systems.size()) {
      QuantumKeySystem& candidate = key.systems[cursor++];
      if (candidate.status == SystemStatus::Fresh) return &candidate;
    }
    return nullptr;
  };

  for (std::size_t bit_idx = 0; bit_idx < message.size(); ++bit_idx) {
    const int plaintext = message[bit_idx] & 1;
    report.recovered[sender][bit_idx] = plaintext;

    bool delivered = false;
    while (!delivered) {
      QuantumKeySystem* system = take_fresh();
      if (!system) {
        report.key_exhausted = true;
        if (bus) bus->broadcast(sender, bit_idx, "quantum key exhausted; conference halted");
        return report;
      }
      ++report.systems_used;
      encrypt_bit(*system, plaintext, sender);

      const std::size_t eve_events_before = eve ? eve->events.size() : 0;
      int prev = sender;
      bool lost = false;
      for (std::size_t hop = 0; hop < chain.size(); ++hop) {
        const int receiver = chain[hop];
        TransmitResult sent =
            transmit_qubit(std::move(system->state), kTravelingLabel, chain_links[hop], attack,
                           eve, static_cast<std::uint64_t>(system->index), rng);
        if (auto* lost_result = std::get_if<Lost>(&sent)) {
          system->state = std::move(lost_result->state);
          system->status = SystemStatus::CompromisedFlagged;
          report.flagged_systems.push_back(system->index);
          if (bus)
            bus->broadcast(prev, bit_idx,
                           "traveling qubit lost on link to party " + std::to_string(receiver) +
                               "; system " + std::to_string(system->index) +
                               " flagged, retransmitting");
          lost = true;
          break;
        }
        system->state = std::move(std::get<Delivered>(sent).state);

        const bool last_hop = hop + 1 == chain.size();
        const int bit = last_hop ? final_decrypt(*system, receiver, rng)
                                 : intermediate_decrypt(*system, receiver, rng);
        report.recovered[receiver][bit_idx] = bit;
        prev = receiver;
      }

      // Pair Eve's fresh observations with the plaintext she was after.
      if (eve) {
        for (std::size_t e = eve_events_before; e < eve->events.size(); ++e)
          eve->truths[e] = plaintext;
      }

      if (!lost) {
        delivered = true;
        ++report.bits_delivered;
        report.system_fidelity.emplace_back(system->index, fidelity(system->state, reference));
      }
    }
  }
  return report;
}

ReuseCheckResult reuse_check(QuantumKey& key, double fraction, double abort_threshold,
                             ClassicalBus* bus, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("reuse_check: fraction must be in (0,1]");

  std::vector<std::size_t> fresh;
  for (std::size_t i = 0; i < key.systems.size(); ++i)
    if (key.systems[i].status == SystemStatus::Fresh) fresh.push_back(i);

  const auto want = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(fresh.size())));
  std::vector<std::size_t> chosen = rng.sample_indices(fresh.size(), want);
  std::sort(chosen.begin(), chosen.end());

  ReuseCheckResult result;
  const int parties = key.parties;
  for (std::size_t c : chosen) {
    QuantumKeySystem& system = key.systems[fresh[c]];
    auto record = run_parity_check(system, parties, /*detectors=*/nullptr, rng);
    ++result.consumed;
    if (!record) continue;
    ++result.report.checks;
    if (record->observed_parity != record->expected_parity) ++result.report.errors;
    if (bus) bus->broadcast(0, static_cast<std::uint64_t>(system.index), parity_payload(*record));
  }

  if (auto rate = result.report.error_rate(); rate && *rate > abort_threshold) {
    result.accepted = false;
    if (bus) bus->broadcast(0, 0, "reuse check aborted: parity error rate too high");
  }
  return result;
}

}  // namespace qconf
