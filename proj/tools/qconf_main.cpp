#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "qconf/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitAllAborted = 2;
constexpr int kExitInternalError = 3;

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  bool serial = false;
};

void add_common_options(CLI::App* sub, CommonOptions& opts) {
  sub->add_option("--config", opts.config_path, "scenario file (JSON)")->required();
  sub->add_option("--seed", opts.seed, "override the scenario's master seed");
  sub->add_option("--trials", opts.trials, "override the scenario's trial count");
  sub->add_option("--out", opts.out_path, "write the report here instead of stdout");
  sub->add_option("--format", opts.format, "report format")
      ->check(CLI::IsMember({"csv", "text"}));
  sub->add_flag("--serial", opts.serial, "run trials on one thread (reference path)");
}

int run_protocol_command(const CommonOptions& opts, qconf::RunKind kind) {
  qconf::ScenarioConfig config = qconf::load_scenario(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  if (opts.trials) config.trials = *opts.trials;

  const qconf::RunStats stats = qconf::run_trials(
      config, kind, opts.serial ? qconf::ExecPolicy::Serial : qconf::ExecPolicy::Parallel);

  const qconf::ReportFormat format = qconf::report_format_from_name(opts.format);
  if (opts.out_path.empty()) {
    qconf::write_report(stats, format, std::cout);
  } else {
    qconf::emit_report(stats, format, opts.out_path);
    std::cout << "wrote " << opts.out_path << " (" << stats.trials.size() << " trials)\n";
  }

  if (stats.aggregate.aborted_trials == stats.aggregate.trials && stats.aggregate.trials > 0) {
    std::cerr << "all trials aborted (protocol thresholds exceeded)\n";
    return kExitAllAborted;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GHZ-state secret-conference simulator"};
  app.require_subcommand(1);

  CommonOptions keygen_opts, conference_opts, qkey_opts;
  CLI::App* keygen = app.add_subcommand(
      "keygen", "scheme 1: biased-basis GHZ key agreement");
  add_common_options(keygen, keygen_opts);
  CLI::App* conference = app.add_subcommand(
      "conference", "scheme 1 plus one-time-pad conferencing");
  add_common_options(conference, conference_opts);
  CLI::App* qkey = app.add_subcommand(
      "qkey", "scheme 2: conferencing over a reusable quantum key");
  add_common_options(qkey, qkey_opts);

  std::string sweep_config, sweep_out;
  bool sweep_serial = false;
  std::optional<std::uint64_t> sweep_seed;
  std::optional<int> sweep_trials;
  CLI::App* sweep = app.add_subcommand("sweep", "grid of scheme-1 runs, rate vs prediction");
  sweep->add_option("--config", sweep_config, "sweep file (JSON)")->required();
  sweep->add_option("--seed", sweep_seed, "override the sweep's master seed");
  sweep->add_option("--trials", sweep_trials, "override the per-cell trial count");
  sweep->add_option("--out", sweep_out, "write the grid CSV here instead of stdout");
  sweep->add_flag("--serial", sweep_serial, "run trials on one thread");

  int oracle_parties = 4;
  std::string oracle_out;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "exhaustive engine verification against direct enumeration");
  oracle->add_option("--max-parties", oracle_parties, "largest register to enumerate (2..4)")
      ->check(CLI::Range(2, 4));
  oracle->add_option("--out", oracle_out, "write the report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*keygen) return run_protocol_command(keygen_opts, qconf::RunKind::Scheme1Keygen);
    if (*conference)
      return run_protocol_command(conference_opts, qconf::RunKind::Scheme1Conference);
    if (*qkey) return run_protocol_command(qkey_opts, qconf::RunKind::Scheme2);

    if (*sweep) {
      qconf::SweepConfig config = qconf::load_sweep(sweep_config);
      if (sweep_seed) config.seed = *sweep_seed;
      if (sweep_trials) config.trials = *sweep_trials;
      const auto cells = qconf::run_sweep(
          config, sweep_serial ? qconf::ExecPolicy::Serial : qconf::ExecPolicy::Parallel);
      if (sweep_out.empty()) {
        qconf::write_sweep_csv(cells, std::cout);
      } else {
        std::ofstream out(sweep_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + sweep_out);
        qconf::write_sweep_csv(cells, out);
        std::cout << "wrote " << sweep_out << " (" << cells.size() << " cells)\n";
      }
      return kExitOk;
    }

    if (*oracle) {
      const qconf::OracleReport report = qconf::oracle_tables(oracle_parties);
      if (oracle_out.empty()) {
        qconf::write_oracle_report(report, std::cout);
      } else {
        std::ofstream out(oracle_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + oracle_out);
        qconf::write_oracle_report(report, out);
        std::cout << "wrote " << oracle_out << '\n';
      }
      return report.passed() ? kExitOk : kExitInternalError;
    }
  } catch (const qconf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::logic_error& e) {
    std::cerr << "internal invariant violation: " << e.what() << '\n';
    return kExitInternalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternalError;
  }
  return kExitOk;
}
