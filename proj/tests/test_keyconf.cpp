#include <cmath>
#include <numeric>

#include "doctest.h"
#include "qconf/adversary.hpp"
#include "qconf/keyconf.hpp"

using namespace qconf;

namespace {

std::vector<LinkConfig> ideal_star(int parties) {
  std::vector<LinkConfig> links;
  for (int l = 1; l < parties; ++l) links.push_back(LinkConfig{0, l, 1.0, 0.0});
  return links;
}

std::vector<DetectorConfig> ideal_detectors(int parties) {
  std::vector<DetectorConfig> dets;
  for (int l = 0; l < parties; ++l) dets.push_back(DetectorConfig{l, 1.0});
  return dets;
}

std::vector<RoundRecord> run_rounds(const Scheme1Config& config,
                                    const std::vector<LinkConfig>& links,
                                    const std::vector<DetectorConfig>& detectors,
                                    const AttackStrategy& attack, std::int64_t n, Rng& rng) {
  std::vector<RoundRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  for (std::int64_t r = 0; r < n; ++r)
    records.push_back(
        run_distribution_round(r, config, links, detectors, attack, nullptr, nullptr, rng));
  return records;
}

RoundRecord synthetic_round(std::int64_t id, RoundClass cls, const std::vector<int>& bits,
                            Basis basis) {
  RoundRecord rec;
  rec.id = id;
  rec.cls = cls;
  for (int b : bits) {
    rec.bases.push_back(basis);
    rec.outcomes.push_back(Outcome::from_bit(b));
  }
  return rec;
}

}  // namespace

TEST_CASE("basis_probability solves p^M = r/2") {
  CHECK(basis_probability(2.0, 3) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(basis_probability(0.25, 3) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(basis_probability(0.054, 3) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(basis_probability(-0.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(basis_probability(2.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(basis_probability(0.5, 0), std::invalid_argument);
}

TEST_CASE("predicted_raw_key_rate") {
  SUBCASE("frozen values") {
    const std::vector<double> ideal2{1.0, 1.0};
    const std::vector<double> ideal3{1.0, 1.0, 1.0};
    CHECK(predicted_raw_key_rate(0.0, 3, ideal2, ideal3) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(predicted_raw_key_rate(0.054, 3, ideal2, ideal3) ==
          doctest::Approx(0.343).epsilon(1e-12));
    const std::vector<double> lossy_links{0.9, 0.9};
    const std::vector<double> lossy_dets{0.8, 0.8, 0.8};
    CHECK(predicted_raw_key_rate(0.054, 3, lossy_links, lossy_dets) ==
          doctest::Approx(0.14224896).epsilon(1e-12));
  }
  SUBCASE("strictly decreasing in the sample ratio") {
    const std::vector<double> links{1.0, 1.0};
    const std::vector<double> dets{1.0, 1.0, 1.0};
    double prev = predicted_raw_key_rate(0.0, 3, links, dets);
    for (double r : {0.054, 0.25, 0.5, 1.0, 1.9}) {
      const double rate = predicted_raw_key_rate(r, 3, links, dets);
      CHECK(rate < prev);
      prev = rate;
    }
  }
  SUBCASE("strictly decreasing in any p_t or p_d") {
    const std::vector<double> dets{1.0, 1.0, 1.0};
    double prev = predicted_raw_key_rate(0.25, 3, std::vector<double>{1.0, 1.0}, dets);
    for (double pt : {0.95, 0.8, 0.5}) {
      const double rate = predicted_raw_key_rate(0.25, 3, std::vector<double>{pt, 1.0}, dets);
      CHECK(rate < prev);
      prev = rate;
    }
    const std::vector<double> links{1.0, 1.0};
    prev = predicted_raw_key_rate(0.25, 3, links, std::vector<double>{1.0, 1.0, 1.0});
    for (double pd : {0.95, 0.8, 0.5}) {
      const double rate =
          predicted_raw_key_rate(0.25, 3, links, std::vector<double>{1.0, pd, 1.0});
      CHECK(rate < prev);
      prev = rate;
    }
  }
  SUBCASE("out-of-range inputs rejected") {
    const std::vector<double> links{1.2};
    const std::vector<double> dets{1.0, 1.0};
    CHECK_THROWS_AS(predicted_raw_key_rate(0.25, 2, links, dets), std::invalid_argument);
  }
}

TEST_CASE("honest noiseless rounds satisfy the correlation identities") {
  Scheme1Config config;
  config.parties = 3;
  config.rounds = 20000;
  config.sample_ratio = 0.25;  // p = 0.5, plenty of both classes
  Rng rng(301);
  const auto records = run_rounds(config, ideal_star(3), ideal_detectors(3),
                                  AttackStrategy::none(), config.rounds, rng);

  std::int64_t kept_z = 0, kept_x = 0, mismatched = 0;
  for (const RoundRecord& rec : records) {
    switch (rec.cls) {
      case RoundClass::KeptZ:
        ++kept_z;
        REQUIRE(rec.all_outcomes_equal());
        break;
      case RoundClass::KeptXSample:
        ++kept_x;
        REQUIRE(rec.eigenvalue_product() == +1);
        break;
      case RoundClass::DiscardedBasisMismatch:
        ++mismatched;
        break;
      default:
        FAIL("no losses were configured");
    }
  }
  CHECK(kept_z > 0);
  CHECK(kept_x > 0);
  CHECK(mismatched > 0);
}

TEST_CASE("empirical raw-key fraction converges to the prediction") {
  Scheme1Config config;
  config.parties = 3;
  config.sample_ratio = 0.25;
  std::vector<LinkConfig> links{{0, 1, 0.9, 0.0}, {0, 2, 0.9, 0.0}};
  std::vector<DetectorConfig> dets{{0, 0.8}, {1, 0.8}, {2, 0.8}};
  const std::int64_t n = 40000;
  Rng rng(303);
  const auto records =
      run_rounds(config, links, dets, AttackStrategy::none(), n, rng);

  std::int64_t kept_z = 0;
  for (const RoundRecord& rec : records)
    if (rec.cls == RoundClass::KeptZ) ++kept_z;

  const double predicted = predicted_raw_key_rate(
      0.25, 3, std::vector<double>{0.9, 0.9}, std::vector<double>{0.8, 0.8, 0.8});
  const double sigma = std::sqrt(predicted * (1 - predicted) / static_cast<double>(n));
  CHECK(std::abs(kept_z / static_cast<double>(n) - predicted) < 3 * sigma);
}

TEST_CASE("sift_and_sample implements the half-and-half sampling rule") {
  Rng rng(305);
  SUBCASE("100 X rounds and 1000 Z rounds leave a 900-bit key") {
    std::vector<RoundRecord> records;
    for (int i = 0; i < 100; ++i)
      records.push_back(synthetic_round(i, RoundClass::KeptXSample, {0, 0, 0}, Basis::X));
    for (int i = 100; i < 1100; ++i)
      records.push_back(synthetic_round(i, RoundClass::KeptZ, {1, 1, 1}, Basis::Z));

    auto [keyset, partition] = sift_and_sample(records, rng);
    CHECK(partition.x_sample_rounds.size() == 100);
    CHECK(partition.z_sample_rounds.size() == 100);
    CHECK(keyset.key_rounds.size() == 900);
    for (const auto& bits : keyset.bits) CHECK(bits.size() == 900);
    std::int64_t promoted = 0;
    for (const RoundRecord& rec : records)
      if (rec.cls == RoundClass::KeptZSample) ++promoted;
    CHECK(promoted == 100);
  }
  SUBCASE("no X rounds means no Z samples") {
    std::vector<RoundRecord> records;
    for (int i = 0; i < 50; ++i)
      records.push_back(synthetic_round(i, RoundClass::KeptZ, {0, 0, 0}, Basis::Z));
    auto [keyset, partition] = sift_and_sample(records, rng);
    CHECK(partition.z_sample_rounds.empty());
    CHECK(keyset.key_rounds.size() == 50);
  }
  SUBCASE("selection is reproducible under a fixed seed") {
    auto build = [] {
      std::vector<RoundRecord> records;
      for (int i = 0; i < 30; ++i)
        records.push_back(synthetic_round(i, RoundClass::KeptXSample, {0, 0, 0}, Basis::X));
      for (int i = 30; i < 230; ++i)
        records.push_back(synthetic_round(i, RoundClass::KeptZ, {1, 1, 1}, Basis::Z));
      return records;
    };
    auto a = build();
    auto b = build();
    Rng rng_a(42), rng_b(42);
    const auto pa = sift_and_sample(a, rng_a).second;
    const auto pb = sift_and_sample(b, rng_b).second;
    CHECK(pa.z_sample_rounds == pb.z_sample_rounds);
  }
}

TEST_CASE("estimate_errors counts disagreements and parity violations") {
  std::vector<RoundRecord> records;
  records.push_back(synthetic_round(0, RoundClass::KeptZSample, {0, 0, 0}, Basis::Z));
  records.push_back(synthetic_round(1, RoundClass::KeptZSample, {0, 1, 0}, Basis::Z));
  records.push_back(synthetic_round(2, RoundClass::KeptXSample, {0, 0, 0}, Basis::X));   // +1
  records.push_back(synthetic_round(3, RoundClass::KeptXSample, {0, 1, 1}, Basis::X));   // +1
  records.push_back(synthetic_round(4, RoundClass::KeptXSample, {1, 0, 0}, Basis::X));   // -1

  SamplePartition partition;
  partition.z_sample_rounds = {0, 1};
  partition.x_sample_rounds = {2, 3, 4};

  const ErrorReport report = estimate_errors(records, partition);
  CHECK(report.z_samples == 2);
  CHECK(report.z_errors == 1);
  CHECK(report.x_samples == 3);
  CHECK(report.x_errors == 1);
  CHECK(*report.qber_z() == doctest::Approx(0.5));
  CHECK(*report.qber_x() == doctest::Approx(1.0 / 3));

  SUBCASE("empty classes report as absent") {
    const ErrorReport empty = estimate_errors(records, SamplePartition{});
    CHECK(!empty.qber_z().has_value());
    CHECK(!empty.qber_x().has_value());
  }
}

TEST_CASE("accept_or_abort uses strict-greater thresholds") {
  Scheme1Config config;
  config.parties = 3;
  config.rounds = 1;

  ErrorReport clean;
  clean.z_samples = 100;
  clean.x_samples = 100;
  CHECK(accept_or_abort(clean, config).accepted);

  ErrorReport bad_x = clean;
  bad_x.x_errors = 50;
  const Verdict v = accept_or_abort(bad_x, config);
  CHECK(!v.accepted);
  CHECK(!v.reason.empty());

  // exactly at the threshold is still acceptable
  ErrorReport boundary = clean;
  boundary.z_errors = 2;  // 2% of 100
  CHECK(accept_or_abort(boundary, config).accepted);
  boundary.z_errors = 3;
  CHECK(!accept_or_abort(boundary, config).accepted);
}

TEST_CASE("a single X error on one link flips exactly one party's bit") {
  Rng rng(307);
  // honest all-Z round on a corrupted state: apply X to particle B before
  // anyone measures
  StateVector state = apply_pauli(make_ghz(3), Pauli::X, "B");
  std::vector<int> bits;
  for (int q = 0; q < 3; ++q) {
    auto [outcome, post] = measure_qubit(std::move(state), conferee_label(q), Basis::Z, rng);
    state = std::move(post);
    bits.push_back(outcome.bit);
  }
  CHECK(bits[0] == bits[2]);
  CHECK(bits[1] != bits[0]);
}

TEST_CASE("one-time pad") {
  SUBCASE("frozen XOR triples") {
    const std::vector<std::uint8_t> m{0, 1, 0, 1};
    CHECK(otp_encrypt(m, std::vector<std::uint8_t>{0, 0, 0, 0}) ==
          std::vector<std::uint8_t>{0, 1, 0, 1});
    CHECK(otp_encrypt(m, std::vector<std::uint8_t>{0, 1, 0, 1}) ==
          std::vector<std::uint8_t>{0, 0, 0, 0});
    CHECK(otp_encrypt(std::vector<std::uint8_t>{1, 1, 0, 0},
                      std::vector<std::uint8_t>{1, 0, 1, 0}) ==
          std::vector<std::uint8_t>{0, 1, 1, 0});
  }
  SUBCASE("round trip on random data") {
    Rng rng(309);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<std::uint8_t> m(64), k(64);
      for (auto& b : m) b = static_cast<std::uint8_t>(rng.coin());
      for (auto& b : k) b = static_cast<std::uint8_t>(rng.coin());
      CHECK(otp_decrypt(otp_encrypt(m, k), k) == m);
    }
  }
  SUBCASE("short key is a hard error") {
    CHECK_THROWS_AS(otp_encrypt(std::vector<std::uint8_t>{1, 1}, std::vector<std::uint8_t>{1}),
                    std::invalid_argument);
  }
}

TEST_CASE("run_secret_conference") {
  Rng rng(311);
  SUBCASE("three parties, eight bits each: exact recovery, 24 bits consumed") {
    std::vector<std::uint8_t> key(100);
    for (auto& b : key) b = static_cast<std::uint8_t>(rng.coin());
    const std::vector<std::vector<std::uint8_t>> keys{key, key, key};
    std::vector<std::vector<std::uint8_t>> messages;
    for (int s = 0; s < 3; ++s) {
      std::vector<std::uint8_t> m(8);
      for (auto& b : m) b = static_cast<std::uint8_t>(rng.coin());
      messages.push_back(m);
    }
    const ConferenceResult result = run_secret_conference(keys, messages);
    CHECK(result.key_bits_consumed == 24);
    for (int s = 0; s < 3; ++s)
      for (int r = 0; r < 3; ++r) CHECK(result.recovered[s][r] == messages[s]);
  }
  SUBCASE("insufficient key fails before any transmission") {
    const std::vector<std::vector<std::uint8_t>> keys{{1, 0}, {1, 0}, {1, 0}};
    const std::vector<std::vector<std::uint8_t>> messages{{1}, {1}, {1}};
    CHECK_THROWS_AS(run_secret_conference(keys, messages), std::invalid_argument);
  }
  SUBCASE("overlapping segments rejected") {
    const std::vector<KeySegment> overlapping{{0, 4}, {2, 4}};
    CHECK_THROWS_AS(assert_disjoint(overlapping), std::invalid_argument);
  }
  SUBCASE("ciphertext leaks nothing about the plaintext") {
    Rng local(313);
    const std::size_t n = 100000;
    std::vector<int> plain(n), cipher(n);
    for (std::size_t i = 0; i < n; ++i) {
      plain[i] = local.coin();
      cipher[i] = plain[i] ^ local.coin();
    }
    CHECK(mutual_information_bits(cipher, plain) <= 0.01);
  }
}
