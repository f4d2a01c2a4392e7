#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace qconf {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

// One trial's empirical quantities. Scheme-dependent column meanings:
//   scheme 1: rounds = distribution rounds, kept_z = all-Z rounds (before
//     sample removal), kept_x_samples = all-X rounds, z_samples = sacrificed
//     Z rounds, raw_key_len = key bits per party;
//   scheme 2: rounds = systems distributed, kept_z = systems delivered,
//     kept_x_samples = establishment checks, z_samples = reuse checks,
//     raw_key_len = usable systems at the end.
struct TrialStats {
  int trial = 0;
  int scheme = 1;
  int parties = 3;
  std::int64_t rounds = 0;
  std::int64_t kept_z = 0;
  std::int64_t kept_x_samples = 0;
  std::int64_t z_samples = 0;
  std::int64_t raw_key_len = 0;
  double empirical_rate = kUndefined;
  double predicted_rate = kUndefined;
  double qber_z = kUndefined;
  double qber_x = kUndefined;
  double min_key_fidelity = kUndefined;
  double mean_key_fidelity = kUndefined;
  double bit_accuracy = kUndefined;
  double eve_mi = 0.0;

  // error counts backing the qber columns (exact pooling across trials)
  std::int64_t z_errors = 0;
  std::int64_t x_errors = 0;

  bool aborted = false;
  std::string abort_reason;
};

struct AggregateStats {
  int scheme = 1;
  int parties = 3;
  int trials = 0;
  int aborted_trials = 0;
  std::int64_t rounds = 0;
  std::int64_t kept_z = 0;
  std::int64_t kept_x_samples = 0;
  std::int64_t z_samples = 0;
  std::int64_t raw_key_len = 0;
  double empirical_rate = kUndefined;  // pooled numerator / pooled rounds
  double predicted_rate = kUndefined;
  double qber_z = kUndefined;          // pooled error counts
  double qber_x = kUndefined;
  double min_key_fidelity = kUndefined;  // min over trials
  double mean_key_fidelity = kUndefined;
  double bit_accuracy = kUndefined;      // mean over defined trials
  double eve_mi = kUndefined;

  // 3-sigma binomial half-width of the pooled empirical rate around the
  // prediction, and the resulting consistency flag.
  double rate_sigma3 = kUndefined;
  bool rate_within_3sigma = true;
};

struct RunStats {
  std::vector<TrialStats> trials;
  AggregateStats aggregate;
};

// Deterministic reduction: input order is irrelevant because trials are
// sorted by index before folding.
AggregateStats aggregate_trials(std::vector<TrialStats> trials);

enum class ReportFormat { Csv, Text };
ReportFormat report_format_from_name(const std::string& name);

extern const char* const kCsvHeader;

void write_report(const RunStats& stats, ReportFormat format, std::ostream& out);
void emit_report(const RunStats& stats, ReportFormat format, const std::string& path);

// Reads back a CSV report: data rows become TrialStats (error counts are
// reconstructed from the rate columns), the trailing aggregate row, when
// present, is returned as-is for comparison.
struct CsvRoundTrip {
  std::vector<TrialStats> trials;
  bool has_aggregate_row = false;
  AggregateStats aggregate_row;
};
CsvRoundTrip read_report_csv(const std::string& path);

}  // namespace qconf
