#include <bit>
#include <cmath>
#include <set>

#include "doctest.h"
#include "oracle_helpers.hpp"
#include "qconf/qcrypt.hpp"

using namespace qconf;

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;

std::vector<LinkConfig> ideal_star(int parties) {
  std::vector<LinkConfig> links;
  for (int l = 1; l < parties; ++l) links.push_back(LinkConfig{0, l, 1.0, 0.0});
  return links;
}

std::vector<LinkConfig> ideal_chain(int parties, int sender) {
  std::vector<LinkConfig> links;
  int prev = sender;
  for (int step = 1; step < parties; ++step) {
    const int next = (sender + step) % parties;
    links.push_back(LinkConfig{prev, next, 1.0, 0.0});
    prev = next;
  }
  return links;
}

std::vector<DetectorConfig> ideal_detectors(int parties) {
  std::vector<DetectorConfig> dets;
  for (int l = 0; l < parties; ++l) dets.push_back(DetectorConfig{l, 1.0});
  return dets;
}

QuantumKeySystem fresh_system(int parties, std::int64_t index = 0) {
  return QuantumKeySystem{index, make_ghz(parties), SystemStatus::Fresh};
}

}  // namespace

TEST_CASE("choose_check_bases") {
  SUBCASE("three-party rule") {
    const CheckRule xx = choose_check_bases(std::vector<Basis>{Basis::X, Basis::X});
    CHECK(xx.preparer_basis == Basis::X);
    CHECK(xx.expected_parity == +1);

    const CheckRule xy = choose_check_bases(std::vector<Basis>{Basis::X, Basis::Y});
    CHECK(xy.preparer_basis == Basis::Y);
    CHECK(xy.expected_parity == -1);

    const CheckRule yy = choose_check_bases(std::vector<Basis>{Basis::Y, Basis::Y});
    CHECK(yy.preparer_basis == Basis::X);
    CHECK(yy.expected_parity == -1);
  }
  SUBCASE("five-party example") {
    const CheckRule rule =
        choose_check_bases(std::vector<Basis>{Basis::Y, Basis::Y, Basis::X, Basis::X});
    CHECK(rule.preparer_basis == Basis::X);
    CHECK(rule.expected_parity == -1);
  }
  SUBCASE("Z announcements rejected") {
    CHECK_THROWS_AS(choose_check_bases(std::vector<Basis>{Basis::Z, Basis::X}),
                    std::invalid_argument);
  }
  SUBCASE("rule is sound against direct stabilizer expectations, up to six parties") {
    for (int m = 3; m <= 6; ++m) {
      const StateVector ghz = make_ghz(m);
      for (std::size_t pattern = 0; pattern < (std::size_t{1} << (m - 1)); ++pattern) {
        std::vector<Basis> others;
        for (int q = 0; q < m - 1; ++q)
          others.push_back((pattern >> q) & 1 ? Basis::Y : Basis::X);
        const CheckRule rule = choose_check_bases(others);

        std::vector<std::pair<QubitLabel, Pauli>> ops;
        ops.emplace_back(conferee_label(0),
                         rule.preparer_basis == Basis::X ? Pauli::X : Pauli::Y);
        for (int q = 1; q < m; ++q)
          ops.emplace_back(conferee_label(q), others[q - 1] == Basis::X ? Pauli::X : Pauli::Y);
        CHECK(std::abs(pauli_string_expectation(ghz, ops) - rule.expected_parity) < 1e-12);
      }
    }
  }
}

TEST_CASE("encrypt_bit produces the expected joint states") {
  for (int message = 0; message < 2; ++message) {
    QuantumKeySystem system = fresh_system(3);
    encrypt_bit(system, message, 0);
    CHECK(system.status == SystemStatus::InUse);
    REQUIRE(system.state.dim() == 16);
    // (|000 m> + |111 (1-m)>)/sqrt2 over A,B,C,T
    const std::size_t lo = static_cast<std::size_t>(message);
    const std::size_t hi = 14 + static_cast<std::size_t>(1 - message);
    CHECK(std::abs(system.state.amplitudes()[lo] - Amplitude{kInvSqrt2, 0}) < 1e-15);
    CHECK(std::abs(system.state.amplitudes()[hi] - Amplitude{kInvSqrt2, 0}) < 1e-15);

    // the traveling qubit alone reveals nothing
    const DensityMatrix2 rho = reduced_density(system.state, kTravelingLabel);
    CHECK(rho.max_abs_diff(DensityMatrix2::maximally_mixed()) < 1e-10);
  }
  SUBCASE("traveling reduced state is independent of the message") {
    QuantumKeySystem a = fresh_system(3), b = fresh_system(3);
    encrypt_bit(a, 0, 0);
    encrypt_bit(b, 1, 0);
    const DensityMatrix2 rho0 = reduced_density(a.state, kTravelingLabel);
    const DensityMatrix2 rho1 = reduced_density(b.state, kTravelingLabel);
    CHECK(rho0.max_abs_diff(rho1) < 1e-10);
  }
  SUBCASE("in-flight systems cannot be reused") {
    QuantumKeySystem system = fresh_system(3);
    encrypt_bit(system, 0, 0);
    CHECK_THROWS_AS(encrypt_bit(system, 1, 0), std::invalid_argument);
  }
}

TEST_CASE("intermediate_decrypt reads the bit without disturbing anything") {
  Rng rng(401);
  for (int message = 0; message < 2; ++message) {
    for (int rep = 0; rep < 20; ++rep) {
      QuantumKeySystem system = fresh_system(3);
      encrypt_bit(system, message, 0);

      // ancilla oracle: rebuild the pre-measurement state by hand and check
      // the ancilla is pure before it is read
      {
        StateVector probe = attach_qubit(system.state, kAncillaLabel, 0);
        probe = apply_cnot(std::move(probe), "B", kAncillaLabel);
        probe = apply_cnot(std::move(probe), kTravelingLabel, kAncillaLabel);
        const DensityMatrix2 rho = reduced_density(probe, kAncillaLabel);
        CHECK(std::abs(rho.purity() - 1.0) < 1e-10);
      }

      const StateVector before = system.state;
      const int bit = intermediate_decrypt(system, 1, rng);
      CHECK(bit == message);
      CHECK(fidelity(system.state, before) == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(system.state.has_qubit(kTravelingLabel));  // still in flight
    }
  }
  SUBCASE("missing traveling qubit") {
    QuantumKeySystem system = fresh_system(3);
    CHECK_THROWS_AS(intermediate_decrypt(system, 1, rng), std::invalid_argument);
  }
}

TEST_CASE("final_decrypt reads the bit and restores the key system") {
  Rng rng(403);
  for (int message = 0; message < 2; ++message) {
    QuantumKeySystem system = fresh_system(3);
    encrypt_bit(system, message, 0);
    const int bit = final_decrypt(system, 2, rng);
    CHECK(bit == message);
    CHECK(system.status == SystemStatus::Fresh);
    CHECK(!system.state.has_qubit(kTravelingLabel));
    CHECK(fidelity(system.state, make_ghz(3)) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("full pipeline delivers every bit to every conferee and restores the key") {
  Rng rng(405);
  for (int parties : {3, 4, 5, 6}) {
    const int sender = 0;
    for (int rep = 0; rep < 50; ++rep) {
      const int message = rng.coin();
      QuantumKeySystem system = fresh_system(parties);
      encrypt_bit(system, message, sender);
      for (int step = 1; step < parties; ++step) {
        const int party = (sender + step) % parties;
        const int bit = step + 1 == parties ? final_decrypt(system, party, rng)
                                            : intermediate_decrypt(system, party, rng);
        REQUIRE(bit == message);
      }
      REQUIRE(fidelity(system.state, make_ghz(parties)) >= 1.0 - 1e-10);
    }
  }
}

TEST_CASE("an in-flight Z measurement is invisible to the conferees but burns the key") {
  Rng rng(407);
  int eve_ones = 0;
  const int reps = 2000;
  for (int rep = 0; rep < reps; ++rep) {
    const int message = rng.coin();
    QuantumKeySystem system = fresh_system(3);
    encrypt_bit(system, message, 0);

    auto [event, post] = attack_traveling_measure(std::move(system.state), 0, rng);
    system.state = std::move(post);
    eve_ones += event.outcome.bit;

    // both remaining conferees still decode correctly
    REQUIRE(intermediate_decrypt(system, 1, rng) == message);
    REQUIRE(final_decrypt(system, 2, rng) == message);

    // but the key system is destroyed: fidelity with GHZ is exactly 1/2
    CHECK(fidelity(system.state, make_ghz(3)) == doctest::Approx(0.5).epsilon(1e-10));
  }
  // Eve's outcomes are uniform
  const double sigma = std::sqrt(0.25 / reps);
  CHECK(std::abs(eve_ones / static_cast<double>(reps) - 0.5) < 3 * sigma + 1e-9);
}

TEST_CASE("establish_quantum_key") {
  Rng rng(409);
  SUBCASE("honest noiseless establishment keeps ~80% with a 20% check rate") {
    const EstablishResult result =
        establish_quantum_key(3, 1000, 0.2, 0.02, ideal_star(3), ideal_detectors(3),
                              AttackStrategy::none(), nullptr, nullptr, rng);
    CHECK(result.accepted);
    CHECK(result.delivered == 1000);
    CHECK(result.report.errors == 0);
    CHECK(result.key.usable_length() + result.report.checks + result.report.voided == 1000);
    // checked count is Binomial(1000, 0.2)
    const double sigma = std::sqrt(1000 * 0.2 * 0.8);
    CHECK(std::abs(result.report.checks - 200.0) < 3 * sigma);
    CHECK(result.key.parties == 3);
  }
  SUBCASE("lossy links exclude systems from both key and checks") {
    std::vector<LinkConfig> links{{0, 1, 0.5, 0.0}, {0, 2, 0.5, 0.0}};
    const EstablishResult result =
        establish_quantum_key(3, 2000, 0.2, 0.02, links, ideal_detectors(3),
                              AttackStrategy::none(), nullptr, nullptr, rng);
    CHECK(result.delivered < 2000);
    CHECK(static_cast<std::int64_t>(result.key.systems.size()) == result.delivered);
    const double expect = 2000 * 0.25;
    const double sigma = std::sqrt(2000 * 0.25 * 0.75);
    CHECK(std::abs(result.delivered - expect) < 3 * sigma);
  }
  SUBCASE("an intercept-resend attack trips the parity checks") {
    const AttackStrategy attack{AttackKind::InterceptResend, AttackBasis::Z, 0, 1};
    const EstablishResult result =
        establish_quantum_key(3, 3000, 0.5, 0.02, ideal_star(3), ideal_detectors(3), attack,
                              nullptr, nullptr, rng);
    CHECK(!result.accepted);
    REQUIRE(result.report.checks > 1000);
    const double rate = *result.report.error_rate();
    const double sigma = std::sqrt(0.25 / static_cast<double>(result.report.checks));
    CHECK(std::abs(rate - 0.5) < 3 * sigma + 0.03);
  }
}

TEST_CASE("run_message_round") {
  SUBCASE("honest rounds deliver everything and keep the key intact") {
    Rng rng(411);
    EstablishResult est =
        establish_quantum_key(3, 64, 0.0, 0.02, ideal_star(3), ideal_detectors(3),
                              AttackStrategy::none(), nullptr, nullptr, rng);
    std::vector<std::uint8_t> message(32);
    for (auto& b : message) b = static_cast<std::uint8_t>(rng.coin());

    const MessageRoundReport report =
        run_message_round(est.key, 0, message, ideal_chain(3, 0), AttackStrategy::none(),
                          nullptr, nullptr, rng);
    CHECK(report.bits_delivered == 32);
    CHECK(!report.key_exhausted);
    CHECK(report.flagged_systems.empty());
    for (int party = 1; party < 3; ++party)
      for (std::size_t i = 0; i < message.size(); ++i)
        REQUIRE(*report.recovered[party][i] == message[i]);
    for (const auto& [index, fid] : report.system_fidelity) {
      (void)index;
      REQUIRE(fid >= 1.0 - 1e-10);
    }
    CHECK(est.key.usable_length() == 64);  // systems restored, none consumed
  }
  SUBCASE("a dead chain link exhausts the key and flags every system") {
    Rng rng(413);
    EstablishResult est =
        establish_quantum_key(3, 16, 0.0, 0.02, ideal_star(3), ideal_detectors(3),
                              AttackStrategy::none(), nullptr, nullptr, rng);
    std::vector<LinkConfig> chain = ideal_chain(3, 0);
    chain[1].p_t = 0.0;  // second hop never delivers
    const std::vector<std::uint8_t> message{1};
    const MessageRoundReport report = run_message_round(
        est.key, 0, message, chain, AttackStrategy::none(), nullptr, nullptr, rng);
    CHECK(report.key_exhausted);
    CHECK(report.bits_delivered == 0);
    CHECK(report.flagged_systems.size() == 16);
    CHECK(est.key.usable_length() == 0);
    CHECK(!report.recovered[2][0].has_value());
  }
  SUBCASE("five parties, any sender") {
    Rng rng(415);
    for (int sender = 0; sender < 5; ++sender) {
      EstablishResult est =
          establish_quantum_key(5, 8, 0.0, 0.02, ideal_star(5), ideal_detectors(5),
                                AttackStrategy::none(), nullptr, nullptr, rng);
      std::vector<std::uint8_t> message(8);
      for (auto& b : message) b = static_cast<std::uint8_t>(rng.coin());
      const MessageRoundReport report =
          run_message_round(est.key, sender, message, ideal_chain(5, sender),
                            AttackStrategy::none(), nullptr, nullptr, rng);
      CHECK(report.bits_delivered == 8);
      for (int party = 0; party < 5; ++party) {
        if (party == sender) continue;
        for (std::size_t i = 0; i < message.size(); ++i)
          REQUIRE(*report.recovered[party][i] == message[i]);
      }
    }
  }
}

TEST_CASE("each message bit rides its own key system within a round") {
  Rng rng(419);
  EstablishResult est =
      establish_quantum_key(3, 32, 0.0, 0.02, ideal_star(3), ideal_detectors(3),
                            AttackStrategy::none(), nullptr, nullptr, rng);
  std::vector<std::uint8_t> message(16);
  for (auto& b : message) b = static_cast<std::uint8_t>(rng.coin());

  const AttackStrategy tap{AttackKind::TravelingMeasureZ, AttackBasis::Z, 0, 1};
  EveRecord eve;
  const MessageRoundReport report = run_message_round(est.key, 0, message, ideal_chain(3, 0),
                                                      tap, &eve, nullptr, rng);
  REQUIRE(report.bits_delivered == 16);

  std::set<std::int64_t> used;
  for (const auto& [index, fid] : report.system_fidelity) {
    used.insert(index);
    CHECK(fid == doctest::Approx(0.5).epsilon(1e-10));  // every carrier got burnt
  }
  CHECK(used.size() == 16);  // no system carried two bits

  // every tap hit a fresh register, so Eve's outcomes pair with the
  // plaintext only through an unbiased coin
  REQUIRE(eve.events.size() == 16);
  for (std::size_t e = 0; e < eve.events.size(); ++e) REQUIRE(eve.truths[e].has_value());
}

TEST_CASE("reuse_check") {
  Rng rng(417);
  SUBCASE("consumes ceil(f * usable) systems and keeps the rest") {
    EstablishResult est =
        establish_quantum_key(3, 100, 0.0, 0.02, ideal_star(3), ideal_detectors(3),
                              AttackStrategy::none(), nullptr, nullptr, rng);
    REQUIRE(est.key.usable_length() == 100);
    const ReuseCheckResult result = reuse_check(est.key, 0.1, 0.02, nullptr, rng);
    CHECK(result.consumed == 10);
    CHECK(result.report.errors == 0);
    CHECK(result.accepted);
    CHECK(est.key.usable_length() == 90);
  }
  SUBCASE("fraction 1 consumes everything") {
    EstablishResult est =
        establish_quantum_key(3, 20, 0.0, 0.02, ideal_star(3), ideal_detectors(3),
                              AttackStrategy::none(), nullptr, nullptr, rng);
    const ReuseCheckResult result = reuse_check(est.key, 1.0, 0.02, nullptr, rng);
    CHECK(result.consumed == 20);
    CHECK(est.key.usable_length() == 0);
  }
  SUBCASE("a collapsed system fails its parity check half the time") {
    const int reps = 1500;
    int failures = 0;
    for (int rep = 0; rep < reps; ++rep) {
      QuantumKey key;
      key.parties = 3;
      key.original_length = 1;
      QuantumKeySystem system = fresh_system(3);

      // run one message bit through with Eve measuring the carrier
      encrypt_bit(system, rng.coin(), 0);
      auto [event, post] = attack_traveling_measure(std::move(system.state), 0, rng);
      (void)event;
      system.state = std::move(post);
      (void)intermediate_decrypt(system, 1, rng);
      (void)final_decrypt(system, 2, rng);
      key.systems.push_back(std::move(system));

      const ReuseCheckResult result = reuse_check(key, 1.0, 0.02, nullptr, rng);
      REQUIRE(result.report.checks == 1);
      if (result.report.errors == 1) ++failures;
    }
    const double rate = failures / static_cast<double>(reps);
    const double sigma = std::sqrt(0.25 / reps);
    CHECK(std::abs(rate - 0.5) < 3 * sigma + 1e-9);
  }
  SUBCASE("fraction must be in (0,1]") {
    QuantumKey key;
    key.parties = 3;
    CHECK_THROWS_AS(reuse_check(key, 0.0, 0.02, nullptr, rng), std::invalid_argument);
    CHECK_THROWS_AS(reuse_check(key, 1.5, 0.02, nullptr, rng), std::invalid_argument);
  }
}
