// Command-line driver: one verb per experiment, plus `validate` and `geometry`.
// Exit status: 0 success, 1 configuration or I/O error, 2 numerical-invariant failure.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "blindwit/experiments.hpp"
#include "blindwit/io.hpp"
#include "blindwit/validation.hpp"

namespace fs = std::filesystem;
using namespace blindwit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct RunOptions {
  std::string config;
  std::string out = "results";
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::string propagator;
};

void add_run_flags(CLI::App* sub, RunOptions& o) {
  sub->add_option("--config", o.config, "JSON experiment config (defaults apply to missing keys)")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  sub->add_option("--workers", o.workers, "Worker threads; 0 uses every core")->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", o.seed, "Seed for random initial witness phases");
  sub->add_option("--propagator", o.propagator, "dense, layered or auto")
      ->check(CLI::IsMember({"dense", "layered", "auto"}));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int run_verb(ExperimentKind kind, const RunOptions& o) {
  auto clock = std::chrono::steady_clock::now();
  RunManifest manifest;

  json j = json::object();
  if (!o.config.empty()) {
    const auto text = read_file(o.config);
    manifest.config_file_hash = hex64(fnv1a(text));
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: expected an object");
  }
  if (!j.contains("kind")) j["kind"] = std::string(to_string(kind));
  if (o.workers) j["workers"] = *o.workers;
  if (!o.propagator.empty()) j["propagator"] = o.propagator;
  if (o.seed) {
    if (!j.contains("witness_phases")) j["witness_phases"] = {{"mode", "random"}};
    j["witness_phases"]["seed"] = *o.seed;
  }
  auto config = config_from_json(j);
  if (config.kind != kind)
    throw ConfigError("kind: config describes " + std::string(to_string(config.kind)) + " but the verb runs " +
                      std::string(to_string(kind)));
  manifest.stages.push_back({"configure", seconds_since(clock)});

  clock = std::chrono::steady_clock::now();
  auto table = run_experiment(config);
  stamp_config(table, config);
  manifest.stages.push_back({"compute", seconds_since(clock)});

  clock = std::chrono::steady_clock::now();
  const fs::path dir(o.out);
  const auto stem = std::string(to_string(kind));
  const auto csv = dir / (stem + ".csv");
  write_results(table, csv);
  manifest.stages.push_back({"write", seconds_since(clock)});

  manifest.config = config;
  manifest.timestamp = utc_timestamp();
  manifest.grid_sizes = grid_sizes(config);
  manifest.propagator = table.provenance_value("propagator").value_or("dense");
  manifest.outputs = {csv.filename().string()};
  manifest.summary = table.summary;
  write_manifest(manifest, dir / (stem + ".manifest.json"));

  std::cout << csv.string() << '\n';
  for (const auto& [k, v] : table.summary) std::printf("%s = %.17g\n", k.c_str(), v);
  return kExitOk;
}

int run_validate() {
  const auto checks = run_invariant_suite();
  bool all = true;
  for (const auto& c : checks) {
    std::printf("%s  %-36s  worst %.3e  tol %.0e\n", c.passed() ? "PASS" : "FAIL", c.name.c_str(), c.measured,
                c.tolerance);
    all = all && c.passed();
  }
  std::printf("%s\n", all ? "all invariants hold" : "invariant failures");
  return all ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind-witness Aharonov-Bohm interferometer simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  struct Verb {
    const char* name;
    ExperimentKind kind;
    const char* help;
  };
  const Verb verbs[] = {
      {"snapshot", ExperimentKind::snapshot, "Site probabilities at the configured times"},
      {"flux-sweep", ExperimentKind::flux_sweep, "Output probability over the flux grid"},
      {"visibility-sweep", ExperimentKind::visibility_sweep, "Visibility over witness counts and interaction energies"},
      {"witness-dynamics", ExperimentKind::witness_dynamics, "Coherence angles and entropies over time"},
      {"scatterer-control", ExperimentKind::scatterer_control, "Flux sweep with static scatterers"},
      {"long-run", ExperimentKind::long_run, "Witness dynamics over the long horizon"},
  };
  RunOptions options;
  std::optional<ExperimentKind> chosen;
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v.name, v.help);
    add_run_flags(sub, options);
    sub->callback([&chosen, kind = v.kind] { chosen = kind; });
  }
  bool validate_verb = false;
  app.add_subcommand("validate", "Run the invariant suite and report each check")->callback([&] {
    validate_verb = true;
  });
  std::string geometry_out;
  bool geometry_verb = false;
  auto* geo = app.add_subcommand("geometry", "Print site positions and bonds as JSON");
  geo->add_option("--out", geometry_out, "Write to this file instead of stdout");
  geo->callback([&] { geometry_verb = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (validate_verb) return run_validate();
    if (geometry_verb) {
      const auto text = geometry_to_json(device_geometry()).dump(2) + "\n";
      if (geometry_out.empty())
        std::cout << text;
      else
        write_text(geometry_out, text);
      return kExitOk;
    }
    return run_verb(*chosen, options);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
