#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qconf/scenario.hpp"
#include "qconf/stats.hpp"

namespace qconf {

enum class RunKind { Scheme1Keygen, Scheme1Conference, Scheme2 };

// Serial is the reference path; Parallel distributes trials over OpenMP
// threads. Both produce identical RunStats because every trial derives its
// own seed from (master seed, trial index) and aggregation runs in trial
// order.
enum class ExecPolicy { Serial, Parallel };

// The per-trial kernel: one full protocol execution, single-threaded,
// exclusively owning all of its state.
TrialStats run_single_trial(const ScenarioConfig& config, RunKind kind, int trial_index);

RunStats run_trials(const ScenarioConfig& config, RunKind kind,
                    ExecPolicy policy = ExecPolicy::Parallel);

// Exhaustive engine verification for small registers:
//  - sequential-collapse measurement distributions vs direct Born-rule
//    enumeration over every Z/X/Y basis pattern,
//  - CNOT-encrypted traveling-qubit states vs hand-built amplitude tables,
//  - analytic attack signatures vs an independently composed enumeration.
struct OracleReport {
  int max_parties = 0;
  std::int64_t patterns_checked = 0;
  double max_distribution_deviation = 0.0;
  double encrypt_state_deviation = 0.0;
  double signature_deviation = 0.0;
  std::vector<std::string> lines;

  double worst() const;
  bool passed(double tol = 1e-12) const { return worst() < tol; }
};
OracleReport oracle_tables(int max_parties);
void write_oracle_report(const OracleReport& report, std::ostream& out);

struct SweepCell {
  int parties = 3;
  double sample_ratio = 0.0;
  double p_t = 1.0;
  double p_d = 1.0;
  AggregateStats aggregate;
};
std::vector<SweepCell> run_sweep(const SweepConfig& sweep,
                                 ExecPolicy policy = ExecPolicy::Parallel);
void write_sweep_csv(const std::vector<SweepCell>& cells, std::ostream& out);

}  // namespace qconf
