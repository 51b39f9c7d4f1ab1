// Command-line front end: reads a run configuration, executes one
// experiment and writes its result table as CSV or JSON.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric error or failed
// rows, 4 ambiguous (non-unimodal) optimisation.

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "molrecon/cli/config.hpp"
#include "molrecon/cli/experiments.hpp"
#include "molrecon/cli/result_table.hpp"
#include "molrecon/errors.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericError = 3, kAmbiguity = 4 };

std::map<std::string, std::string> read_config_file(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw molrecon::cli::ConfigError("cannot open config file '" + path + "'");
  return molrecon::cli::read_config_values(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal reconstruction by an absorbing receiver: analytic distortion, optimisation and random-walk "
               "validation"};
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::optional<unsigned> threads;
  std::vector<std::string> sets;

  app.add_option("--config", config_path, "Configuration file (key = value)")->check(CLI::ExistingFile);
  app.add_option("--experiment", experiment, "Override the experiment")
      ->check(CLI::IsMember({"validate", "sweep", "optimize", "distributions", "trace"}));
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out_path, "Output file (stdout when omitted)");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--trials", trials, "Monte Carlo trials per point")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "Worker threads (0 = one per hardware thread)");
  app.add_option("--set", sets, "Extra key=value overrides, applied after the config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  molrecon::cli::RunConfig cfg;
  try {
    auto kv = read_config_file(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw molrecon::cli::ConfigError("--set expects key=value, got '" + s + "'");
      kv[molrecon::cli::detail::trim(s.substr(0, eq))] = s.substr(eq + 1);
    }
    if (!experiment.empty()) kv["experiment"] = experiment;
    if (seed) kv["seed"] = std::to_string(*seed);
    if (trials) kv["trials"] = std::to_string(*trials);
    if (threads) kv["threads"] = std::to_string(*threads);
    cfg = molrecon::cli::resolve_config(kv);
  } catch (const molrecon::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  molrecon::cli::ResultTable table;
  const auto start = std::chrono::steady_clock::now();
  try {
    table = molrecon::cli::run_experiment(cfg);
  } catch (const molrecon::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const molrecon::AmbiguityError& e) {
    std::cerr << "ambiguous optimum: " << e.what() << '\n';
    return kAmbiguity;
  } catch (const molrecon::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumericError;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  table.meta["wall_clock_s"] = elapsed.count();
  table.meta["threads"] = molrecon::resolve_threads(cfg.threads);

  auto write = [&](std::ostream& out) {
    if (format == "json") {
      out << molrecon::cli::to_json(table).dump(2) << '\n';
    } else {
      molrecon::cli::write_csv(out, table);
    }
  };
  if (out_path.empty()) {
    write(std::cout);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write '" << out_path << "'\n";
      return kConfigError;
    }
    write(out);
    if (format == "csv") {
      std::ofstream meta(out_path + ".meta.json");
      meta << table.meta.dump(2) << '\n';
    }
  }
  if (table.meta.contains("summary")) std::cerr << "summary: " << table.meta["summary"].dump() << '\n';
  for (const auto& n : table.meta["notes"]) std::cerr << "note: " << n.get<std::string>() << '\n';

  if (table.any_failed()) {
    for (const auto& r : table.rows) {
      if (!r.ok) {
        const bool ambiguous = r.error.find("not unimodal") != std::string::npos;
        std::cerr << "row failed: " << r.error << '\n';
        if (ambiguous) return kAmbiguity;
      }
    }
    return kNumericError;
  }
  return kOk;
}
