#include "qconf/keyconf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qconf {

void Scheme1Config::validate() const {
  if (parties < 3) throw std::invalid_argument("Scheme1Config.parties must be >= 3");
  if (rounds < 0) throw std::invalid_argument("Scheme1Config.rounds must be >= 0");
  if (!(sample_ratio >= 0.0 && sample_ratio <= 2.0))
    throw std::invalid_argument("Scheme1Config.sample_ratio must be in [0,2]");
  if (abort_threshold_z < 0.0 || abort_threshold_x < 0.0)
    throw std::invalid_argument("Scheme1Config abort thresholds must be >= 0");
}

double basis_probability(double sample_ratio, int parties) {
  if (parties < 1) throw std::invalid_argument("basis_probability: parties must be >= 1");
  if (!(sample_ratio >= 0.0 && sample_ratio <= 2.0))
    throw std::invalid_argument("basis_probability: sample ratio must be in [0,2]");
  return std::pow(sample_ratio / 2.0, 1.0 / parties);
}

bool RoundRecord::all_outcomes_equal() const {
  std::optional<int> first;
  for (const auto& o : outcomes) {
    if (!o) return false;
    if (!first) first = o->bit;
    else if (o->bit != *first) return false;
  }
  return first.has_value();
}

int RoundRecord::eigenvalue_product() const {
  int product = 1;
  for (const auto& o : outcomes)
    if (o) product *= o->eigenvalue;
  return product;
}

RoundRecord run_distribution_round(std::int64_t round_id, const Scheme1Config& config,
                                   const std::vector<LinkConfig>& links,
                                   const std::vector<DetectorConfig>& detectors,
                                   const AttackStrategy& attack, EveRecord* eve,
                                   ClassicalBus* bus, Rng& rng) {
  const int m = config.parties;
  if (links.size() != static_cast<std::size_t>(m - 1))
    throw std::invalid_argument("run_distribution_round: need one link per non-preparer");
  if (detectors.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("run_distribution_round: need one detector per party");
  const double p_x = basis_probability(config.sample_ratio, m);

  RoundRecord record;
  record.id = round_id;
  record.bases.resize(m);
  record.outcomes.assign(m, std::nullopt);

  // Preparer keeps qubit 0; every other qubit crosses its own star link.
  StateVector state = make_ghz(m);
  std::vector<bool> holds_particle(m, true);
  for (int l = 1; l < m; ++l) {
    TransmitResult sent = transmit_qubit(std::move(state), conferee_label(l), links[l - 1],
                                         attack, eve, static_cast<std::uint64_t>(round_id), rng);
    if (auto* ok = std::get_if<Delivered>(&sent)) {
      state = std::move(ok->state);
    } else {
      state = std::move(std::get<Lost>(sent).state);
      holds_particle[l] = false;
    }
  }

  // Everyone commits to a basis before looking at the detector.
  for (int l = 0; l < m; ++l)
    record.bases[l] = rng.bernoulli(p_x) ? Basis::X : Basis::Z;

  for (int l = 0; l < m; ++l) {
    if (!holds_particle[l]) continue;
    if (detect(detectors[l], rng) == Detection::Silent) continue;
    auto [outcome, post] = measure_qubit(std::move(state), conferee_label(l), record.bases[l], rng);
    state = std::move(post);
    record.outcomes[l] = outcome;
  }

  if (bus) {
    std::string payload = "bases=";
    for (int l = 0; l < m; ++l) payload += basis_name(record.bases[l]);
    bus->broadcast(/*sender=*/0, static_cast<std::uint64_t>(round_id), std::move(payload));
  }

  const bool complete =
      std::all_of(record.outcomes.begin(), record.outcomes.end(), [](const auto& o) {
        return o.has_value();
      });
  if (!complete) {
    record.cls = RoundClass::DiscardedLoss;
    return record;
  }
  const bool same_basis =
      std::all_of(record.bases.begin(), record.bases.end(),
                  [&](Basis b) { return b == record.bases.front(); });
  if (!same_basis) {
    record.cls = RoundClass::DiscardedBasisMismatch;
    return record;
  }
  record.cls =
      record.bases.front() == Basis::X ? RoundClass::KeptXSample : RoundClass::KeptZ;
  return record;
}

std::pair<SiftedKeySet, SamplePartition> sift_and_sample(std::vector<RoundRecord>& records,
                                                         Rng& rng) {
  SamplePartition partition;
  std::vector<std::size_t> z_rounds;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].cls == RoundClass::KeptXSample) partition.x_sample_rounds.push_back(i);
    else if (records[i].cls == RoundClass::KeptZ) z_rounds.push_back(i);
  }

  // Half the samples come from each basis: sacrifice as many Z rounds as
  // there are X rounds, clipped to availability.
  const std::size_t want = std::min(partition.x_sample_rounds.size(), z_rounds.size());
  std::vector<std::size_t> chosen = rng.sample_indices(z_rounds.size(), want);
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t c : chosen) {
    partition.z_sample_rounds.push_back(z_rounds[c]);
    records[z_rounds[c]].cls = RoundClass::KeptZSample;
  }

  SiftedKeySet keyset;
  if (!records.empty()) keyset.bits.resize(records.front().outcomes.size());
  for (std::size_t i : z_rounds) {
    if (records[i].cls != RoundClass::KeptZ) continue;
    keyset.key_rounds.push_back(i);
    for (std::size_t party = 0; party < keyset.bits.size(); ++party)
      keyset.bits[party].push_back(static_cast<std::uint8_t>(records[i].outcomes[party]->bit));
  }
  return {std::move(keyset), std::move(partition)};
}

std::optional<double> ErrorReport::qber_z() const {
  if (z_samples == 0) return std::nullopt;
  return static_cast<double>(z_errors) / static_cast<double>(z_samples);
}

std::optional<double> ErrorReport::qber_x() const {
  if (x_samples == 0) return std::nullopt;
  return static_cast<double>(x_errors) / static_cast<double>(x_samples);
}

ErrorReport estimate_errors(const std::vector<RoundRecord>& records,
                            const SamplePartition& partition) {
  ErrorReport report;
  for (std::size_t i : partition.z_sample_rounds) {
    ++report.z_samples;
    if (!records[i].all_outcomes_equal()) ++report.z_errors;
  }
  for (std::size_t i : partition.x_sample_rounds) {
    ++report.x_samples;
    if (records[i].eigenvalue_product() != +1) ++report.x_errors;
  }
  return report;
}

Verdict accept_or_abort(const ErrorReport& report, const Scheme1Config& config) {
  if (auto qz = report.qber_z(); qz && *qz > config.abort_threshold_z)
    return {false, "z-sample error rate " + std::to_string(*qz) + " exceeds threshold"};
  if (auto qx = report.qber_x(); qx && *qx > config.abort_threshold_x)
    return {false, "x-sample parity error rate " + std::to_string(*qx) + " exceeds threshold"};
  return {true, ""};
}

std::vector<std::vector<std::uint8_t>> distill_raw_key(const SiftedKeySet& keyset) {
  for (const auto& bits : keyset.bits) {
    if (bits.size() != keyset.key_rounds.size())
      throw std::logic_error("distill_raw_key: inconsistent per-party key lengths");
  }
  return keyset.bits;
}

double predicted_raw_key_rate(double sample_ratio, int parties,
                              std::span<const double> link_p_t,
                              std::span<const double> detector_p_d) {
  const double p_x = basis_probability(sample_ratio, parties);
  double rate = std::pow(1.0 - p_x, parties);
  for (double pt : link_p_t) {
    if (!(pt >= 0.0 && pt <= 1.0))
      throw std::invalid_argument("predicted_raw_key_rate: p_t out of [0,1]");
    rate *= pt;
  }
  for (double pd : detector_p_d) {
    if (!(pd >= 0.0 && pd <= 1.0))
      throw std::invalid_argument("predicted_raw_key_rate: p_d out of [0,1]");
    rate *= pd;
  }
  return rate;
}

std::vector<std::uint8_t> otp_encrypt(std::span<const std::uint8_t> message,
                                      std::span<const std::uint8_t> key) {
  if (key.size() < message.size())
    throw std::invalid_argument("otp_encrypt: key shorter than message");
  std::vector<std::uint8_t> out(message.size());
  for (std::size_t i = 0; i < message.size(); ++i)
    out[i] = static_cast<std::uint8_t>((message[i] ^ key[i]) & 1u);
  return out;
}

std::vector<std::uint8_t> otp_decrypt(std::span<const std::uint8_t> ciphertext,
                                      std::span<const std::uint8_t> key) {
  return otp_encrypt(ciphertext, key);
}

std::vector<KeySegment> allocate_key_segments(std::size_t key_length,
                                              std::span<const std::size_t> message_lengths) {
  std::vector<KeySegment> segments;
  std::size_t offset = 0;
  for (std::size_t len : message_lengths) {
    segments.push_back(KeySegment{offset, len});
    offset += len;
  }
  if (offset > key_length)
    throw std::invalid_argument("allocate_key_segments: key exhausted (" +
                                std::to_string(offset) + " bits needed, " +
                                std::to_string(key_length) + " available)");
  assert_disjoint(segments);
  return segments;
}

void assert_disjoint(std::span<const KeySegment> segments) {
  std::vector<KeySegment> sorted(segments.begin(), segments.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const KeySegment& a, const KeySegment& b) { return a.offset < b.offset; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1].offset + sorted[i - 1].length > sorted[i].offset)
      throw std::invalid_argument("key segments overlap");
  }
}

ConferenceResult run_secret_conference(
    const std::vector<std::vector<std::uint8_t>>& party_keys,
    const std::vector<std::vector<std::uint8_t>>& messages) {
  const std::size_t m = party_keys.size();
  if (messages.size() != m)
    throw std::invalid_argument("run_secret_conference: one message per party required");
  if (m == 0) throw std::invalid_argument("run_secret_conference: no parties");

  std::vector<std::size_t> lengths;
  lengths.reserve(m);
  for (const auto& msg : messages) lengths.push_back(msg.size());

  ConferenceResult result;
  result.segments = allocate_key_segments(party_keys.front().size(), lengths);
  for (const auto& key : party_keys) {
    if (key.size() < party_keys.front().size())
      throw std::invalid_argument("run_secret_conference: a party holds a shorter key");
  }

  result.recovered.assign(m, std::vector<std::vector<std::uint8_t>>(m));
  for (std::size_t sender = 0; sender < m; ++sender) {
    const KeySegment seg = result.segments[sender];
    const auto sender_segment =
        std::span(party_keys[sender]).subspan(seg.offset, seg.length);
    const std::vector<std::uint8_t> ciphertext = otp_encrypt(messages[sender], sender_segment);
    result.key_bits_consumed += seg.length;
    for (std::size_t receiver = 0; receiver < m; ++receiver) {
      if (receiver == sender) {
        result.recovered[sender][receiver] = messages[sender];
        continue;
      }
      const auto receiver_segment =
          std::span(party_keys[receiver]).subspan(seg.offset, seg.length);
      result.recovered[sender][receiver] = otp_decrypt(ciphertext, receiver_segment);
    }
  }
  return result;
}

}  // namespace qconf
