#include "qconf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qconf {

namespace {

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

// Per-scheme sample-count denominators behind the qber columns. Scheme 2 has
// no Z sampling; its parity checks (establishment + reuse) report through
// qber_x.
std::int64_t z_denominator(const TrialStats& t) { return t.scheme == 1 ? t.z_samples : 0; }
std::int64_t x_denominator(const TrialStats& t) {
  return t.scheme == 1 ? t.kept_x_samples : t.kept_x_samples + t.z_samples;
}

}  // namespace

AggregateStats aggregate_trials(std::vector<TrialStats> trials) {
  std::sort(trials.begin(), trials.end(),
            [](const TrialStats& a, const TrialStats& b) { return a.trial < b.trial; });

  AggregateStats agg;
  agg.trials = static_cast<int>(trials.size());
  if (trials.empty()) return agg;
  agg.scheme = trials.front().scheme;
  agg.parties = trials.front().parties;
  agg.predicted_rate = trials.front().predicted_rate;

  std::int64_t rate_numerator = 0;
  std::int64_t z_errors = 0, z_total = 0, x_errors = 0, x_total = 0;
  double fid_min = kUndefined, fid_mean_sum = 0.0, acc_sum = 0.0, mi_sum = 0.0;
  int fid_count = 0, fid_mean_count = 0, acc_count = 0, mi_count = 0;

  for (const TrialStats& t : trials) {
    agg.rounds += t.rounds;
    agg.kept_z += t.kept_z;
    agg.kept_x_samples += t.kept_x_samples;
    agg.z_samples += t.z_samples;
    agg.raw_key_len += t.raw_key_len;
    if (t.aborted) ++agg.aborted_trials;

    rate_numerator += t.kept_z;
    z_errors += t.z_errors;
    z_total += z_denominator(t);
    x_errors += t.x_errors;
    x_total += x_denominator(t);

    if (!std::isnan(t.min_key_fidelity)) {
      fid_min = fid_count == 0 ? t.min_key_fidelity : std::min(fid_min, t.min_key_fidelity);
      ++fid_count;
    }
    if (!std::isnan(t.mean_key_fidelity)) {
      fid_mean_sum += t.mean_key_fidelity;
      ++fid_mean_count;
    }
    if (!std::isnan(t.bit_accuracy)) {
      acc_sum += t.bit_accuracy;
      ++acc_count;
    }
    if (!std::isnan(t.eve_mi)) {
      mi_sum += t.eve_mi;
      ++mi_count;
    }
  }

  if (agg.rounds > 0)
    agg.empirical_rate =
        static_cast<double>(rate_numerator) / static_cast<double>(agg.rounds);
  if (z_total > 0) agg.qber_z = static_cast<double>(z_errors) / static_cast<double>(z_total);
  if (x_total > 0) agg.qber_x = static_cast<double>(x_errors) / static_cast<double>(x_total);
  if (fid_count > 0) agg.min_key_fidelity = fid_min;
  if (fid_mean_count > 0) agg.mean_key_fidelity = fid_mean_sum / fid_mean_count;
  if (acc_count > 0) agg.bit_accuracy = acc_sum / acc_count;
  if (mi_count > 0) agg.eve_mi = mi_sum / mi_count;

  if (!std::isnan(agg.predicted_rate) && agg.rounds > 0) {
    const double p = agg.predicted_rate;
    agg.rate_sigma3 = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(agg.rounds));
    agg.rate_within_3sigma =
        !std::isnan(agg.empirical_rate) &&
        std::abs(agg.empirical_rate - agg.predicted_rate) <= agg.rate_sigma3;
  }
  return agg;
}

ReportFormat report_format_from_name(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "text") return ReportFormat::Text;
  throw std::invalid_argument("unknown report format: " + name);
}

const char* const kCsvHeader =
    "trial,scheme,M,rounds,kept_z,kept_x_samples,z_samples,raw_key_len,empirical_rate,"
    "predicted_rate,qber_z,qber_x,min_key_fidelity,bit_accuracy,eve_mi";

namespace {

void write_csv_row(std::ostream& out, const std::string& trial_field, int scheme, int parties,
                   std::int64_t rounds, std::int64_t kept_z, std::int64_t kept_x,
                   std::int64_t z_samples, std::int64_t raw_key_len, double empirical,
                   double predicted, double qz, double qx, double fid, double acc, double mi) {
  out << trial_field << ',' << scheme << ',' << parties << ',' << rounds << ',' << kept_z << ','
      << kept_x << ',' << z_samples << ',' << raw_key_len << ',' << fmt(empirical) << ','
      << fmt(predicted) << ',' << fmt(qz) << ',' << fmt(qx) << ',' << fmt(fid) << ','
      << fmt(acc) << ',' << fmt(mi) << '\n';
}

void write_csv(const RunStats& stats, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const TrialStats& t : stats.trials) {
    write_csv_row(out, std::to_string(t.trial), t.scheme, t.parties, t.rounds, t.kept_z,
                  t.kept_x_samples, t.z_samples, t.raw_key_len, t.empirical_rate,
                  t.predicted_rate, t.qber_z, t.qber_x, t.min_key_fidelity, t.bit_accuracy,
                  t.eve_mi);
  }
  if (stats.trials.size() > 1) {
    const AggregateStats& a = stats.aggregate;
    write_csv_row(out, "aggregate", a.scheme, a.parties, a.rounds, a.kept_z, a.kept_x_samples,
                  a.z_samples, a.raw_key_len, a.empirical_rate, a.predicted_rate, a.qber_z,
                  a.qber_x, a.min_key_fidelity, a.bit_accuracy, a.eve_mi);
  }
}

void write_text(const RunStats& stats, std::ostream& out) {
  for (const TrialStats& t : stats.trials) {
    out << "trial " << t.trial << '\n'
        << "  scheme: " << t.scheme << '\n'
        << "  M: " << t.parties << '\n'
        << "  rounds: " << t.rounds << '\n'
        << "  kept_z: " << t.kept_z << '\n'
        << "  kept_x_samples: " << t.kept_x_samples << '\n'
        << "  z_samples: " << t.z_samples << '\n'
        << "  raw_key_len: " << t.raw_key_len << '\n'
        << "  empirical_rate: " << fmt(t.empirical_rate) << '\n'
        << "  predicted_rate: " << fmt(t.predicted_rate) << '\n'
        << "  qber_z: " << fmt(t.qber_z) << '\n'
        << "  qber_x: " << fmt(t.qber_x) << '\n'
        << "  min_key_fidelity: " << fmt(t.min_key_fidelity) << '\n'
        << "  mean_key_fidelity: " << fmt(t.mean_key_fidelity) << '\n'
        << "  bit_accuracy: " << fmt(t.bit_accuracy) << '\n'
        << "  eve_mi: " << fmt(t.eve_mi) << '\n';
    if (t.aborted) out << "  aborted: " << t.abort_reason << '\n';
  }
  const AggregateStats& a = stats.aggregate;
  out << "aggregate\n"
      << "  trials: " << a.trials << '\n'
      << "  aborted_trials: " << a.aborted_trials << '\n'
      << "  scheme: " << a.scheme << '\n'
      << "  M: " << a.parties << '\n'
      << "  rounds: " << a.rounds << '\n'
      << "  kept_z: " << a.kept_z << '\n'
      << "  kept_x_samples: " << a.kept_x_samples << '\n'
      << "  z_samples: " << a.z_samples << '\n'
      << "  raw_key_len: " << a.raw_key_len << '\n'
      << "  empirical_rate: " << fmt(a.empirical_rate) << '\n'
      << "  predicted_rate: " << fmt(a.predicted_rate) << '\n'
      << "  rate_sigma3: " << fmt(a.rate_sigma3) << '\n'
      << "  rate_within_3sigma: " << (a.rate_within_3sigma ? "yes" : "no") << '\n'
      << "  qber_z: " << fmt(a.qber_z) << '\n'
      << "  qber_x: " << fmt(a.qber_x) << '\n'
      << "  min_key_fidelity: " << fmt(a.min_key_fidelity) << '\n'
      << "  mean_key_fidelity: " << fmt(a.mean_key_fidelity) << '\n'
      << "  bit_accuracy: " << fmt(a.bit_accuracy) << '\n'
      << "  eve_mi: " << fmt(a.eve_mi) << '\n';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

std::int64_t errors_from_rate(double rate, std::int64_t denominator) {
  if (std::isnan(rate) || denominator <= 0) return 0;
  return std::llround(rate * static_cast<double>(denominator));
}

}  // namespace

void write_report(const RunStats& stats, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::Csv) write_csv(stats, out);
  else write_text(stats, out);
}

void emit_report(const RunStats& stats, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_report: cannot write " + path);
  write_report(stats, format, out);
}

CsvRoundTrip read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_report_csv: cannot open " + path);

  CsvRoundTrip result;
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw std::runtime_error("read_report_csv: unexpected header");

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 15) throw std::runtime_error("read_report_csv: malformed row");

    if (f[0] == "aggregate") {
      result.has_aggregate_row = true;
      AggregateStats& a = result.aggregate_row;
      a.scheme = std::stoi(f[1]);
      a.parties = std::stoi(f[2]);
      a.rounds = std::stoll(f[3]);
      a.kept_z = std::stoll(f[4]);
      a.kept_x_samples = std::stoll(f[5]);
      a.z_samples = std::stoll(f[6]);
      a.raw_key_len = std::stoll(f[7]);
      a.empirical_rate = std::strtod(f[8].c_str(), nullptr);
      a.predicted_rate = std::strtod(f[9].c_str(), nullptr);
      a.qber_z = std::strtod(f[10].c_str(), nullptr);
      a.qber_x = std::strtod(f[11].c_str(), nullptr);
      a.min_key_fidelity = std::strtod(f[12].c_str(), nullptr);
      a.bit_accuracy = std::strtod(f[13].c_str(), nullptr);
      a.eve_mi = std::strtod(f[14].c_str(), nullptr);
      continue;
    }

    TrialStats t;
    t.trial = std::stoi(f[0]);
    t.scheme = std::stoi(f[1]);
    t.parties = std::stoi(f[2]);
    t.rounds = std::stoll(f[3]);
    t.kept_z = std::stoll(f[4]);
    t.kept_x_samples = std::stoll(f[5]);
    t.z_samples = std::stoll(f[6]);
    t.raw_key_len = std::stoll(f[7]);
    t.empirical_rate = std::strtod(f[8].c_str(), nullptr);
    t.predicted_rate = std::strtod(f[9].c_str(), nullptr);
    t.qber_z = std::strtod(f[10].c_str(), nullptr);
    t.qber_x = std::strtod(f[11].c_str(), nullptr);
    t.min_key_fidelity = std::strtod(f[12].c_str(), nullptr);
    t.bit_accuracy = std::strtod(f[13].c_str(), nullptr);
    t.eve_mi = std::strtod(f[14].c_str(), nullptr);
    t.z_errors = errors_from_rate(t.qber_z, z_denominator(t));
    t.x_errors = errors_from_rate(t.qber_x, x_denominator(t));
    result.trials.push_back(std::move(t));
  }
  return result;
}

}  // namespace qconf
