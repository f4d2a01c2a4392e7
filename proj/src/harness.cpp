#include "qconf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "qconf/keyconf.hpp"
#include "qconf/qcrypt.hpp"

namespace qconf {

namespace {

std::vector<std::uint8_t> random_bits(std::int64_t n, Rng& rng) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.coin());
  return bits;
}

TrialStats run_scheme1_trial(const ScenarioConfig& config, RunKind kind, int trial_index) {
  Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(trial_index)));
  ClassicalBus bus;
  EveRecord eve;

  Scheme1Config protocol;
  protocol.parties = config.parties;
  protocol.rounds = config.rounds;
  protocol.sample_ratio = config.sample_ratio;
  protocol.abort_threshold_z = config.abort_threshold_z;
  protocol.abort_threshold_x = config.abort_threshold_x;
  protocol.validate();

  const std::vector<LinkConfig> links = config.star_links();
  const std::vector<DetectorConfig> detectors = config.all_detectors();

  std::vector<RoundRecord> records;
  records.reserve(static_cast<std::size_t>(config.rounds));
  for (std::int64_t r = 0; r < config.rounds; ++r)
    records.push_back(
        run_distribution_round(r, protocol, links, detectors, config.attack, &eve, &bus, rng));

  auto [keyset, partition] = sift_and_sample(records, rng);
  const ErrorReport errors = estimate_errors(records, partition);
  const Verdict verdict = accept_or_abort(errors, protocol);

  TrialStats t;
  t.trial = trial_index;
  t.scheme = 1;
  t.parties = config.parties;
  t.rounds = config.rounds;
  for (const RoundRecord& rec : records) {
    if (rec.cls == RoundClass::KeptZ || rec.cls == RoundClass::KeptZSample) ++t.kept_z;
    else if (rec.cls == RoundClass::KeptXSample) ++t.kept_x_samples;
  }
  t.z_samples = errors.z_samples;
  t.z_errors = errors.z_errors;
  t.x_errors = errors.x_errors;
  t.raw_key_len = static_cast<std::int64_t>(keyset.key_rounds.size());
  t.empirical_rate =
      config.rounds > 0 ? static_cast<double>(t.kept_z) / static_cast<double>(config.rounds)
                        : kUndefined;

  std::vector<double> p_ts, p_ds;
  for (const LinkConfig& link : links) p_ts.push_back(link.p_t);
  for (const DetectorConfig& det : detectors) p_ds.push_back(det.p_d);
  t.predicted_rate = predicted_raw_key_rate(config.sample_ratio, config.parties, p_ts, p_ds);

  if (auto q = errors.qber_z()) t.qber_z = *q;
  if (auto q = errors.qber_x()) t.qber_x = *q;

  // Eve's information about the raw key: pair each interception with the
  // preparer's bit in the rounds that ended up as key material or Z samples.
  for (std::size_t e = 0; e < eve.events.size(); ++e) {
    const auto round = static_cast<std::size_t>(eve.events[e].event_id);
    if (round >= records.size()) continue;
    const RoundRecord& rec = records[round];
    if ((rec.cls == RoundClass::KeptZ || rec.cls == RoundClass::KeptZSample) &&
        rec.outcomes[0])
      eve.truths[e] = rec.outcomes[0]->bit;
  }
  t.eve_mi = mutual_information(eve);

  if (!verdict.accepted) {
    t.aborted = true;
    t.abort_reason = verdict.reason;
    return t;
  }

  const auto keys = distill_raw_key(keyset);
  if (kind == RunKind::Scheme1Keygen) {
    // Agreement rate across parties over the distilled key.
    if (t.raw_key_len > 0) {
      std::int64_t agree = 0;
      for (std::size_t i = 0; i < keys.front().size(); ++i) {
        bool same = true;
        for (const auto& k : keys)
          if (k[i] != keys.front()[i]) same = false;
        if (same) ++agree;
      }
      t.bit_accuracy = static_cast<double>(agree) / static_cast<double>(t.raw_key_len);
    }
    return t;
  }

  // Conference: every party sends message_bits random bits under one-time pad.
  std::vector<std::vector<std::uint8_t>> messages;
  for (int party = 0; party < config.parties; ++party)
    messages.push_back(random_bits(config.message_bits, rng));
  try {
    const ConferenceResult conf = run_secret_conference(keys, messages);
    std::int64_t correct = 0, total = 0;
    for (int s = 0; s < config.parties; ++s) {
      for (int r = 0; r < config.parties; ++r) {
        if (r == s) continue;
        for (std::size_t i = 0; i < messages[s].size(); ++i) {
          ++total;
          if (conf.recovered[s][r][i] == messages[s][i]) ++correct;
        }
      }
    }
    t.bit_accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total)
                               : kUndefined;
  } catch (const std::invalid_argument& e) {
    t.aborted = true;
    t.abort_reason = e.what();
  }
  return t;
}

TrialStats run_scheme2_trial(const ScenarioConfig& config, int trial_index) {
  Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(trial_index)));
  ClassicalBus bus;
  EveRecord eve;

  TrialStats t;
  t.trial = trial_index;
  t.scheme = 2;
  t.parties = config.parties;
  t.rounds = config.key_length;

  const std::vector<LinkConfig> star = config.star_links();
  double p_deliver = 1.0;
  for (const LinkConfig& link : star) p_deliver *= link.p_t;
  t.predicted_rate = p_deliver;

  EstablishResult est = establish_quantum_key(
      config.parties, config.key_length, config.check_fraction, config.abort_threshold_x, star,
      config.all_detectors(), config.attack, &eve, &bus, rng);
  t.kept_z = est.delivered;
  t.kept_x_samples = est.report.checks;
  t.x_errors = est.report.errors;
  t.empirical_rate = config.key_length > 0
                         ? static_cast<double>(est.delivered) /
                               static_cast<double>(config.key_length)
                         : kUndefined;

  if (!est.accepted) {
    t.aborted = true;
    t.abort_reason = "establishment parity error rate above threshold";
    t.raw_key_len = est.key.usable_length();
    if (auto rate = est.report.error_rate()) t.qber_x = *rate;
    return t;
  }

  if (config.message_bits > 0) {
    const std::vector<std::uint8_t> plaintext = random_bits(config.message_bits, rng);
    const MessageRoundReport round =
        run_message_round(est.key, config.sender, plaintext, config.chain_links(config.sender),
                          config.attack, &eve, &bus, rng);

    std::int64_t correct = 0, total = 0;
    for (int party = 0; party < config.parties; ++party) {
      if (party == config.sender) continue;
      for (std::size_t i = 0; i < plaintext.size(); ++i) {
        ++total;
        const auto& got = round.recovered[party][i];
        if (got && *got == plaintext[i]) ++correct;
      }
    }
    t.bit_accuracy =
        total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : kUndefined;

    if (!round.system_fidelity.empty()) {
      double min_f = 1.0, sum_f = 0.0;
      for (const auto& [index, f] : round.system_fidelity) {
        (void)index;
        min_f = std::min(min_f, f);
        sum_f += f;
      }
      t.min_key_fidelity = min_f;
      t.mean_key_fidelity = sum_f / static_cast<double>(round.system_fidelity.size());
    }
    if (round.key_exhausted) {
      t.aborted = true;
      t.abort_reason = "quantum key exhausted before the conference finished";
    }
  }

  if (!t.aborted && config.reuse_check_fraction > 0.0 && est.key.usable_length() > 0) {
    const ReuseCheckResult reuse = reuse_check(est.key, config.reuse_check_fraction,
                                               config.abort_threshold_x, &bus, rng);
    t.z_samples = reuse.consumed;
    t.x_errors += reuse.report.errors;
    if (!reuse.accepted) {
      t.aborted = true;
      t.abort_reason = "reuse check parity error rate above threshold";
    }
  }

  const std::int64_t total_checks = t.kept_x_samples + t.z_samples;
  if (total_checks > 0)
    t.qber_x = static_cast<double>(t.x_errors) / static_cast<double>(total_checks);
  t.raw_key_len = est.key.usable_length();
  t.eve_mi = mutual_information(eve);
  return t;
}

}  // namespace

TrialStats run_single_trial(const ScenarioConfig& config, RunKind kind, int trial_index) {
  if (kind == RunKind::Scheme2) return run_scheme2_trial(config, trial_index);
  return run_scheme1_trial(config, kind, trial_index);
}

RunStats run_trials(const ScenarioConfig& config, RunKind kind, ExecPolicy policy) {
  const int expected_scheme = kind == RunKind::Scheme2 ? 2 : 1;
  if (config.scheme != expected_scheme)
    throw ConfigError("scenario scheme " + std::to_string(config.scheme) +
                      " does not match the requested command");

  RunStats stats;
  stats.trials.resize(static_cast<std::size_t>(config.trials));

  if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < config.trials; ++i)
      stats.trials[static_cast<std::size_t>(i)] = run_single_trial(config, kind, i);
  } else {
    for (int i = 0; i < config.trials; ++i)
      stats.trials[static_cast<std::size_t>(i)] = run_single_trial(config, kind, i);
  }

  stats.aggregate = aggregate_trials(stats.trials);
  return stats;
}

// --- oracle tables --------------------------------------------------------

namespace {

// Direct Born-rule route, written independently of the engine's sequential
// collapse: the probability of a full outcome string is the squared overlap
// with the tensor product of the chosen eigenvectors.
double direct_outcome_probability(const StateVector& state,
                                  const std::vector<Basis>& pattern, std::size_t outcome_bits) {
  const int n = state.num_qubits();
  Amplitude overlap{0, 0};
  for (std::size_t i = 0; i < state.dim(); ++i) {
    Amplitude weight{1, 0};
    for (int q = 0; q < n; ++q) {
      const int state_bit = (i >> (n - 1 - q)) & 1;
      const int measured_bit = (outcome_bits >> (n - 1 - q)) & 1;
      weight *= std::conj(basis_eigenvectors(pattern[q])[measured_bit][state_bit]);
    }
    overlap += weight * state.amplitudes()[i];
  }
  return std::norm(overlap);
}

std::vector<double> direct_full_distribution(const StateVector& state,
                                             const std::vector<Basis>& pattern) {
  const std::size_t n_outcomes = std::size_t{1} << state.num_qubits();
  std::vector<double> dist(n_outcomes);
  for (std::size_t bits = 0; bits < n_outcomes; ++bits)
    dist[bits] = direct_outcome_probability(state, pattern, bits);
  return dist;
}

// Attack signature via composition of two direct enumerations: the joint
// distribution of (Eve's outcome, conferee outcomes on the untouched qubits)
// and the single-qubit re-measurement statistics of the resent eigenvector.
AttackSignature direct_attack_signature(Basis eve_basis, int parties, int attacked) {
  const StateVector ghz = make_ghz(parties);
  std::vector<Basis> z_pattern(parties, Basis::Z);
  z_pattern[attacked] = eve_basis;
  const std::vector<double> joint_z = direct_full_distribution(ghz, z_pattern);

  std::vector<Basis> x_pattern(parties, Basis::X);
  x_pattern[attacked] = eve_basis;
  const std::vector<double> joint_x = direct_full_distribution(ghz, x_pattern);

  const auto eig = basis_eigenvectors(eve_basis);
  const auto x_eig = basis_eigenvectors(Basis::X);

  double z_agree = 0.0, x_parity_ok = 0.0;
  const int n = parties;
  for (std::size_t bits = 0; bits < joint_z.size(); ++bits) {
    const int eve_bit = (bits >> (n - 1 - attacked)) & 1;

    // All-Z agreement: the resent eigenvector re-measured in Z must match the
    // unanimous bit of the other parties.
    bool others_same = true;
    int common = -1;
    for (int q = 0; q < n; ++q) {
      if (q == attacked) continue;
      const int b = (bits >> (n - 1 - q)) & 1;
      if (common == -1) common = b;
      else if (b != common) others_same = false;
    }
    if (others_same && joint_z[bits] > 0.0)
      z_agree += joint_z[bits] * std::norm(eig[eve_bit][common]);

    // All-X parity: fold the resent qubit's X statistics into the parity of
    // the other parties' X outcomes.
    if (joint_x[bits] > 0.0) {
      int others_parity = 1;
      for (int q = 0; q < n; ++q) {
        if (q == attacked) continue;
        if ((bits >> (n - 1 - q)) & 1) others_parity = -others_parity;
      }
      for (int resent_bit = 0; resent_bit < 2; ++resent_bit) {
        Amplitude amp{0, 0};
        for (int comp = 0; comp < 2; ++comp)
          amp += std::conj(x_eig[resent_bit][comp]) * eig[eve_bit][comp];
        const int parity = others_parity * (resent_bit ? -1 : 1);
        if (parity == +1) x_parity_ok += joint_x[bits] * std::norm(amp);
      }
    }
  }
  return {1.0 - z_agree, 1.0 - x_parity_ok};
}

std::string fmt_dev(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", value);
  return buf;
}

}  // namespace

double OracleReport::worst() const {
  return std::max({max_distribution_deviation, encrypt_state_deviation, signature_deviation});
}

OracleReport oracle_tables(int max_parties) {
  if (max_parties < 2 || max_parties > 4)
    throw std::invalid_argument("oracle_tables: supported for 2..4 parties");

  OracleReport report;
  report.max_parties = max_parties;

  for (int m = 2; m <= max_parties; ++m) {
    const StateVector ghz = make_ghz(m);
    double worst = 0.0;
    std::int64_t patterns = 0;
    std::vector<Basis> pattern(m, Basis::Z);
    const std::int64_t total = static_cast<std::int64_t>(std::pow(3, m));
    for (std::int64_t code = 0; code < total; ++code) {
      std::int64_t rest = code;
      std::vector<std::pair<QubitLabel, Basis>> measurements;
      for (int q = 0; q < m; ++q) {
        pattern[q] = static_cast<Basis>(rest % 3);
        rest /= 3;
        measurements.emplace_back(conferee_label(q), pattern[q]);
      }
      const std::vector<double> engine = joint_outcome_distribution(ghz, measurements);
      const std::vector<double> direct = direct_full_distribution(ghz, pattern);
      double total_p = 0.0;
      for (std::size_t i = 0; i < engine.size(); ++i) {
        worst = std::max(worst, std::abs(engine[i] - direct[i]));
        total_p += engine[i];
      }
      worst = std::max(worst, std::abs(total_p - 1.0));
      ++patterns;
    }
    report.patterns_checked += patterns;
    report.max_distribution_deviation = std::max(report.max_distribution_deviation, worst);
    report.lines.push_back("M=" + std::to_string(m) + ": " + std::to_string(patterns) +
                           " basis patterns, max deviation " + fmt_dev(worst));
  }

  // Traveling-qubit encryption against hand-built amplitude tables.
  {
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    for (int message = 0; message < 2; ++message) {
      QuantumKeySystem system{0, make_ghz(3), SystemStatus::Fresh};
      encrypt_bit(system, message, 0);
      std::vector<Amplitude> expected(16, Amplitude{0, 0});
      expected[static_cast<std::size_t>(message)] = Amplitude{kInvSqrt2, 0};         // |000 m>
      expected[static_cast<std::size_t>(14 + (1 - message))] = Amplitude{kInvSqrt2, 0};  // |111 !m>
      double dev = 0.0;
      for (std::size_t i = 0; i < expected.size(); ++i)
        dev = std::max(dev, std::abs(system.state.amplitudes()[i] - expected[i]));
      report.encrypt_state_deviation = std::max(report.encrypt_state_deviation, dev);
      report.lines.push_back("encrypted traveling state, bit " + std::to_string(message) +
                             ": max amplitude deviation " + fmt_dev(dev));
    }
  }

  for (int m = 2; m <= max_parties; ++m) {
    for (AttackBasis basis :
         {AttackBasis::Z, AttackBasis::X, AttackBasis::Y, AttackBasis::RandomZX}) {
      AttackStrategy strategy{AttackKind::InterceptResend, basis, 0, 1};
      const AttackSignature engine = expected_attack_signature(strategy, m);
      AttackSignature direct;
      if (basis == AttackBasis::RandomZX) {
        const AttackSignature z = direct_attack_signature(Basis::Z, m, 1);
        const AttackSignature x = direct_attack_signature(Basis::X, m, 1);
        direct = {0.5 * (z.qber_z + x.qber_z), 0.5 * (z.qber_x + x.qber_x)};
      } else {
        const Basis b = basis == AttackBasis::Z   ? Basis::Z
                        : basis == AttackBasis::X ? Basis::X
                                                  : Basis::Y;
        direct = direct_attack_signature(b, m, 1);
      }
      const double dev = std::max(std::abs(engine.qber_z - direct.qber_z),
                                  std::abs(engine.qber_x - direct.qber_x));
      report.signature_deviation = std::max(report.signature_deviation, dev);
    }
  }
  report.lines.push_back("attack signature table: max deviation " +
                         fmt_dev(report.signature_deviation));

  return report;
}

void write_oracle_report(const OracleReport& report, std::ostream& out) {
  for (const std::string& line : report.lines) out << line << '\n';
  out << "max deviation overall: " << report.worst() << '\n';
  out << (report.passed() ? "PASS" : "FAIL") << " (tolerance 1e-12)\n";
}

// --- sweep ----------------------------------------------------------------

std::vector<SweepCell> run_sweep(const SweepConfig& sweep, ExecPolicy policy) {
  std::vector<SweepCell> cells;
  std::uint64_t cell_index = 0;
  for (int m : sweep.parties) {
    for (double r : sweep.sample_ratio) {
      for (double pt : sweep.p_t) {
        for (double pd : sweep.p_d) {
          ScenarioConfig config;
          config.scheme = 1;
          config.parties = m;
          config.rounds = sweep.rounds;
          config.sample_ratio = r;
          config.trials = sweep.trials;
          config.seed = derive_seed(sweep.seed, cell_index++);
          for (int l = 1; l < m; ++l) config.links.push_back(LinkConfig{0, l, pt, 0.0});
          for (int l = 0; l < m; ++l) config.detectors.push_back(DetectorConfig{l, pd});

          const RunStats stats = run_trials(config, RunKind::Scheme1Keygen, policy);
          cells.push_back(SweepCell{m, r, pt, pd, stats.aggregate});
        }
      }
    }
  }
  return cells;
}

void write_sweep_csv(const std::vector<SweepCell>& cells, std::ostream& out) {
  out << "M,sample_ratio,p_t,p_d,rounds,trials,empirical_rate,predicted_rate,abs_diff,"
         "sigma3,within_3sigma\n";
  char buf[256];
  for (const SweepCell& cell : cells) {
    const AggregateStats& a = cell.aggregate;
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%lld,%d,%.17g,%.17g,%.17g,%.17g,%d\n",
                  cell.parties, cell.sample_ratio, cell.p_t, cell.p_d,
                  static_cast<long long>(a.rounds), a.trials, a.empirical_rate,
                  a.predicted_rate, std::abs(a.empirical_rate - a.predicted_rate), a.rate_sigma3,
                  a.rate_within_3sigma ? 1 : 0);
    out << buf;
  }
}

}  // namespace qconf
