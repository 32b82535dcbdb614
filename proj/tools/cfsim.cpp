// cfsim: command-line front end for the simulators, the exact oracle and the
// acceptance suite.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 a requested check
// failed, 1 anything else.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cfsim/acceptance.hpp"
#include "cfsim/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCheckFailed = 3;

const std::set<std::string> kBooleanKeys{"allow-identity", "allow-subcritical", "check"};

// Options shared by the experiment subcommands. Values stay as strings until
// they are merged over the config file, so both sources share one parser.
struct ExperimentOptions {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
};

void add_experiment_options(CLI::App& cmd, ExperimentOptions& opts, const std::string& modes) {
  cmd.add_option("--config", opts.config_file, "key = value configuration file; flags given here override it")
      ->check(CLI::ExistingFile);
  for (const auto& key : cfsim::config_keys()) {
    if (kBooleanKeys.count(key)) {
      cmd.add_flag("--" + key, opts.flags[key], "set " + key + " = true");
      continue;
    }
    std::string help = key;
    if (key == "mode") help = "one of: " + modes;
    cmd.add_option_function<std::string>(
        "--" + key, [&opts, key](const std::string& v) { opts.values[key] = v; }, help);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cfsim::ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

cfsim::ExperimentConfig build_config(const ExperimentOptions& opts, cfsim::Mode default_mode,
                                     const std::set<cfsim::Mode>& allowed) {
  std::map<std::string, std::string> merged;
  if (!opts.config_file.empty()) merged = cfsim::parse_config_text(read_file(opts.config_file));
  for (const auto& [k, v] : opts.values) merged[k] = v;
  for (const auto& [k, set] : opts.flags)
    if (set) merged[k] = "true";

  cfsim::ExperimentConfig cfg;
  cfg.mode = default_mode;
  for (const auto& [k, v] : merged) cfsim::set_config_key(cfg, k, v);
  if (!allowed.count(cfg.mode))
    throw cfsim::ConfigError("mode '" + std::string(cfsim::mode_name(cfg.mode)) + "' is not handled by this subcommand");
  return cfg;
}

// Output stream that is either stdout or a file opened up front, so an
// unwritable path is reported before any simulation work.
std::unique_ptr<std::ostream, void (*)(std::ostream*)> open_output(const std::string& path) {
  if (path == "-") return {&std::cout, [](std::ostream*) {}};
  auto* f = new std::ofstream(path, std::ios::binary | std::ios::trunc);
  if (!*f) {
    delete f;
    throw cfsim::ConfigError("cannot open '" + path + "' for writing");
  }
  return {f, [](std::ostream* p) { delete p; }};
}

int run_experiment_command(const ExperimentOptions& opts, cfsim::Mode default_mode,
                           const std::set<cfsim::Mode>& allowed) {
  const auto cfg = build_config(opts, default_mode, allowed);
  // Validate before touching any file.
  for (const auto& w : cfsim::plan_experiment(cfg).warnings) std::cerr << "warning: " << w << '\n';

  auto csv = open_output(cfg.output);
  std::unique_ptr<std::ostream, void (*)(std::ostream*)> summary{nullptr, [](std::ostream*) {}};
  if (cfg.summary) summary = open_output(*cfg.summary);

  const auto res = cfsim::run_experiment(cfg, *csv);
  csv->flush();
  if (!*csv) throw std::runtime_error("write to '" + cfg.output + "' failed");

  std::ostream& summary_out = summary ? *summary : (cfg.output == "-" ? std::cerr : std::cout);
  summary_out << res.summary.dump(2) << '\n';

  if (res.check_performed && !res.check_passed) {
    std::cerr << "check failed\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle structure of random transposition products and the coagulation-fragmentation chain"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cfsim 1.0");

  ExperimentOptions simulate_opts;
  auto* simulate = app.add_subcommand("simulate", "discrete or continuous chain (default mode: discrete)");
  add_experiment_options(*simulate, simulate_opts, "discrete, continuous");

  ExperimentOptions couple_opts;
  auto* couple = app.add_subcommand("couple", "coupled continuous or discrete chains (default mode: coupled)");
  add_experiment_options(*couple, couple_opts, "coupled, coupled-discrete");

  ExperimentOptions exact_opts;
  auto* exact = app.add_subcommand("exact", "exact partition-chain law for n <= 40");
  add_experiment_options(*exact, exact_opts, "exact");

  auto* check = app.add_subcommand("check", "run the acceptance suite; one PASS/FAIL line per criterion");
  cfsim::acceptance::Options check_opts;
  std::vector<int> only;
  check->add_option("--only", only, "criterion numbers to run (default: all)")->check(CLI::Range(1, 11));
  check->add_option("--threads", check_opts.threads, "worker threads, 0 for all hardware threads");
  check->add_option("--seed", check_opts.seed, "base seed");

  auto* reference = app.add_subcommand("reference", "reference curves z(s) and ln(1/x) as CSV");
  double s_max = 5.0;
  std::size_t points = 201;
  std::string reference_output = "-";
  reference->add_option("--s-max", s_max, "largest s for z(s)");
  reference->add_option("--points", points, "grid points per curve");
  reference->add_option("--output", reference_output, "CSV path, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  using cfsim::Mode;
  try {
    if (*simulate) return run_experiment_command(simulate_opts, Mode::discrete, {Mode::discrete, Mode::continuous});
    if (*couple) return run_experiment_command(couple_opts, Mode::coupled, {Mode::coupled, Mode::coupled_discrete});
    if (*exact) return run_experiment_command(exact_opts, Mode::exact, {Mode::exact});
    if (*reference) {
      auto out = open_output(reference_output);
      cfsim::emit_reference_csv(*out, s_max, points);
      return kExitOk;
    }
    if (*check) {
      const auto results = cfsim::acceptance::run(check_opts, {only.begin(), only.end()},
                                                  [](const cfsim::acceptance::Result& r) {
                                                    std::cout << cfsim::acceptance::format_line(r) << std::endl;
                                                  });
      for (const auto& r : results)
        if (!r.passed) return kExitCheckFailed;
      return kExitOk;
    }
  } catch (const cfsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
