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

// Biased-basis GHZ key agreement: the preparer distributes one GHZ qubit per
// conferee, everyone measures Z with probability 1-p or X with probability p,
// all-X rounds plus an equal number of all-Z rounds are sacrificed as
// eavesdropping samples, and the surviving all-Z rounds become the shared key.

struct Scheme1Config {
  int parties = 3;
  std::int64_t rounds = 0;
  double sample_ratio = 0.0;         // fraction of transmitted rounds used as samples
  double abort_threshold_z = 0.02;   // strict-greater abort rule
  double abort_threshold_x = 0.02;

  void validate() const;
};

// X-basis probability p solving p^parties = sample_ratio / 2.
double basis_probability(double sample_ratio, int parties);

enum class RoundClass {
  DiscardedLoss,
  DiscardedBasisMismatch,
  KeptZ,
  KeptXSample,
  KeptZSample,
};

struct RoundRecord {
  std::int64_t id = 0;
  std::vector<Basis> bases;                      // one per party
  std::vector<std::optional<Outcome>> outcomes;  // nullopt = lost or silent
  RoundClass cls = RoundClass::DiscardedLoss;

  bool all_outcomes_equal() const;
  int eigenvalue_product() const;  // over present outcomes
};

// One full distribution round: prepare, transmit over the star links, choose
// bases, measure behind detectors, announce bases, classify.
RoundRecord run_distribution_round(std::int64_t round_id, const Scheme1Config& config,
                                   const std::vector<LinkConfig>& links,
                                   const std::vector<DetectorConfig>& detectors,
                                   const AttackStrategy& attack, EveRecord* eve,
                                   ClassicalBus* bus, Rng& rng);

struct SamplePartition {
  std::vector<std::size_t> x_sample_rounds;  // indices into the record list
  std::vector<std::size_t> z_sample_rounds;
};

struct SiftedKeySet {
  std::vector<std::vector<std::uint8_t>> bits;  // [party][position], samples excluded
  std::vector<std::size_t> key_rounds;          // indices into the record list
};

// Marks every all-X round as a sample, draws an equally sized random subset
// of the all-Z rounds as the Z samples (clipped to availability), and
// collects the remaining all-Z rounds as key material. Chosen Z rounds are
// reclassified KeptZSample in place.
std::pair<SiftedKeySet, SamplePartition> sift_and_sample(std::vector<RoundRecord>& records,
                                                         Rng& rng);

struct ErrorReport {
  std::int64_t z_samples = 0;
  std::int64_t z_errors = 0;  // rounds where not all bits agree
  std::int64_t x_samples = 0;
  std::int64_t x_errors = 0;  // rounds with eigenvalue product != +1

  // Empty sample classes are reported as absent, not as zero error.
  std::optional<double> qber_z() const;
  std::optional<double> qber_x() const;
};

ErrorReport estimate_errors(const std::vector<RoundRecord>& records,
                            const SamplePartition& partition);

struct Verdict {
  bool accepted = true;
  std::string reason;
};

Verdict accept_or_abort(const ErrorReport& report, const Scheme1Config& config);

// Per-party key strings; identical across parties in an honest noiseless run.
std::vector<std::vector<std::uint8_t>> distill_raw_key(const SiftedKeySet& keyset);

// (1 - (r/2)^(1/M))^M * prod(p_t) * prod(p_d): the probability that a round
// survives as raw-key material.
double predicted_raw_key_rate(double sample_ratio, int parties,
                              std::span<const double> link_p_t,
                              std::span<const double> detector_p_d);

// --- one-time-pad conferencing ------------------------------------------

std::vector<std::uint8_t> otp_encrypt(std::span<const std::uint8_t> message,
                                      std::span<const std::uint8_t> key);
std::vector<std::uint8_t> otp_decrypt(std::span<const std::uint8_t> ciphertext,
                                      std::span<const std::uint8_t> key);

struct KeySegment {
  std::size_t offset = 0;
  std::size_t length = 0;
};

// Contiguous disjoint segments in party order; throws on key exhaustion.
std::vector<KeySegment> allocate_key_segments(std::size_t key_length,
                                              std::span<const std::size_t> message_lengths);
void assert_disjoint(std::span<const KeySegment> segments);

struct ConferenceResult {
  // recovered[sender][receiver]; a party's own slot holds its plaintext.
  std::vector<std::vector<std::vector<std::uint8_t>>> recovered;
  std::vector<KeySegment> segments;
  std::size_t key_bits_consumed = 0;
};

// Every party broadcasts its message under its own key segment; every other
// party decrypts with its own key copy. Keys are expected to be identical,
// residual mismatches surface as wrong recovered bits.
ConferenceResult run_secret_conference(
    const std::vector<std::vector<std::uint8_t>>& party_keys,
    const std::vector<std::vector<std::uint8_t>>& messages);

}  // namespace qconf
