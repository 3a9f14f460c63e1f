#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "blindwit/experiments.hpp"
#include "blindwit/units.hpp"

namespace blindwit {

using json = nlohmann::json;

namespace detail {

inline void require_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError(std::string(where) + (where.empty() ? "" : ".") + key + ": unknown key");
  }
}

inline double get_double(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field + ": expected a number");
  return j.get<double>();
}

inline int get_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field + ": expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < -1'000'000 || v > 1'000'000) throw ConfigError(field + ": out of range");
  return static_cast<int>(v);
}

inline std::vector<double> get_doubles(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_double(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

/// An explicit array, or {"min", "max", "points"} expanded inclusively.
inline std::vector<double> get_grid(const json& j, const std::string& field, std::string_view lo, std::string_view hi,
                                    std::string_view count) {
  if (j.is_array()) return get_doubles(j, field);
  require_keys(j, field, {lo, hi, count});
  for (auto k : {lo, hi, count})
    if (!j.contains(k)) throw ConfigError(field + "." + std::string(k) + ": required");
  const int n = get_int(j[std::string(count)], field + "." + std::string(count));
  if (n < 1) throw ConfigError(field + "." + std::string(count) + ": must be positive");
  return linspace(get_double(j[std::string(lo)], field + "." + std::string(lo)),
                  get_double(j[std::string(hi)], field + "." + std::string(hi)), static_cast<std::size_t>(n));
}

inline std::vector<BranchSite> get_sites(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field + ": expected an array of branch labels");
  std::vector<BranchSite> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto where = field + "[" + std::to_string(i) + "]";
    if (!j[i].is_string()) throw ConfigError(where + ": expected a label such as \"3\" or \"3'\"");
    try {
      out.push_back(BranchSite::parse(j[i].get<std::string>()));
    } catch (const std::invalid_argument&) {
      throw ConfigError(where + ": unknown branch label \"" + j[i].get<std::string>() + "\"");
    }
  }
  return out;
}

inline std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field + ": expected a string");
  return j.get<std::string>();
}

inline json site_labels(const std::vector<BranchSite>& sites) {
  json a = json::array();
  for (const auto& s : sites) a.push_back(s.label());
  return a;
}

}  // namespace detail

/// Strict config parse: unknown keys and wrong types raise ConfigError naming the field.
/// Missing keys take the defaults of the chosen kind.
inline ExperimentConfig config_from_json(const json& j) {
  using namespace detail;
  require_keys(j, "", {"kind", "n_wit", "E_int", "gamma_w", "flux", "flux_grid", "E_int_grid", "n_wit_list", "times",
                       "layout", "witness_phases", "scatterers", "V_s", "packet", "propagator", "workers"});
  if (!j.contains("kind")) throw ConfigError("kind: required");
  const auto kind_name = get_string(j["kind"], "kind");
  const auto kind = parse_experiment_kind(kind_name);
  if (!kind) throw ConfigError("kind: unknown experiment \"" + kind_name + "\"");

  auto c = default_config(*kind);
  if (j.contains("n_wit")) c.n_wit = get_int(j["n_wit"], "n_wit");
  if (j.contains("E_int")) c.e_int = get_double(j["E_int"], "E_int");
  if (j.contains("gamma_w")) c.gamma_w = get_double(j["gamma_w"], "gamma_w");
  if (j.contains("flux")) c.flux = get_double(j["flux"], "flux");
  if (j.contains("flux_grid")) c.flux_grid = get_grid(j["flux_grid"], "flux_grid", "min", "max", "points");
  if (j.contains("E_int_grid")) c.e_int_grid = get_doubles(j["E_int_grid"], "E_int_grid");
  if (j.contains("n_wit_list")) {
    const auto& a = j["n_wit_list"];
    if (!a.is_array()) throw ConfigError("n_wit_list: expected an array of integers");
    c.n_wit_list.clear();
    for (std::size_t i = 0; i < a.size(); ++i) c.n_wit_list.push_back(get_int(a[i], "n_wit_list[" + std::to_string(i) + "]"));
  }
  if (j.contains("times")) c.times = get_grid(j["times"], "times", "start", "stop", "samples");
  if (j.contains("layout")) {
    c.layout = get_sites(j["layout"], "layout");
    if (!j.contains("n_wit") && *kind != ExperimentKind::visibility_sweep) c.n_wit = static_cast<int>(c.layout->size());
  }
  if (j.contains("witness_phases")) {
    const auto& p = j["witness_phases"];
    require_keys(p, "witness_phases", {"mode", "values", "seed"});
    const auto mode = p.contains("mode") ? get_string(p["mode"], "witness_phases.mode") : std::string("zero");
    if (mode == "zero")
      c.witness_phases.mode = WitnessPhases::Mode::zero;
    else if (mode == "fixed")
      c.witness_phases.mode = WitnessPhases::Mode::fixed;
    else if (mode == "random")
      c.witness_phases.mode = WitnessPhases::Mode::random;
    else
      throw ConfigError("witness_phases.mode: expected zero, fixed or random");
    if (p.contains("values")) c.witness_phases.values = get_doubles(p["values"], "witness_phases.values");
    if (p.contains("seed")) {
      if (!p["seed"].is_number_unsigned()) throw ConfigError("witness_phases.seed: expected a non-negative integer");
      c.witness_phases.seed = p["seed"].get<std::uint64_t>();
    }
  }
  if (j.contains("scatterers")) c.scatterers = get_sites(j["scatterers"], "scatterers");
  if (j.contains("V_s")) c.v_s = get_double(j["V_s"], "V_s");
  if (j.contains("packet")) {
    const auto& p = j["packet"];
    require_keys(p, "packet", {"x0", "width", "k"});
    if (p.contains("x0")) c.packet.x0 = get_double(p["x0"], "packet.x0");
    if (p.contains("width")) c.packet.width = get_double(p["width"], "packet.width");
    if (p.contains("k")) c.packet.k = get_double(p["k"], "packet.k");
  }
  if (j.contains("propagator")) {
    const auto name = get_string(j["propagator"], "propagator");
    const auto k = parse_propagator_kind(name);
    if (!k) throw ConfigError("propagator: expected dense, layered or auto");
    c.propagator = *k;
  }
  if (j.contains("workers")) c.workers = get_int(j["workers"], "workers");
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) { return parse_config_text(read_file(path)); }

/// Every field written out, so parsing the result reproduces the config exactly.
inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = std::string(to_string(c.kind));
  j["n_wit"] = c.n_wit;
  j["E_int"] = c.e_int;
  j["gamma_w"] = c.gamma_w;
  j["flux"] = c.flux;
  j["flux_grid"] = c.flux_grid;
  j["E_int_grid"] = c.e_int_grid;
  j["n_wit_list"] = c.n_wit_list;
  j["times"] = c.times;
  if (c.layout) j["layout"] = detail::site_labels(*c.layout);
  static constexpr const char* modes[] = {"zero", "fixed", "random"};
  j["witness_phases"] = {{"mode", modes[static_cast<int>(c.witness_phases.mode)]},
                         {"values", c.witness_phases.values},
                         {"seed", c.witness_phases.seed}};
  j["scatterers"] = detail::site_labels(c.scatterers);
  j["V_s"] = c.v_s;
  j["packet"] = {{"x0", c.packet.x0}, {"width", c.packet.width}, {"k", c.packet.k}};
  j["propagator"] = std::string(to_string(c.propagator));
  j["workers"] = c.workers;
  return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of the canonical serialization; independent of key order and whitespace in the input.
/// The worker count is left out because it never changes results.
inline std::string config_hash(const ExperimentConfig& c) {
  auto j = config_to_json(c);
  j.erase("workers");
  return hex64(fnv1a(j.dump()));
}

inline void stamp_config(ResultTable& t, const ExperimentConfig& c) {
  t.provenance.insert(t.provenance.begin() + 1, {"config_hash", config_hash(c)});
}

/// CSV text: '#' provenance lines, a '#' units line, the column header, then rows at 17 significant digits.
inline std::string format_csv(const ResultTable& t) {
  std::string out;
  for (const auto& [k, v] : t.provenance) out += "# " + k + ": " + v + "\n";
  for (const auto& [k, v] : t.summary) out += "# " + k + " = " + detail::format_double(v) + "\n";
  auto join = [](const std::vector<std::string>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + xs[i];
    return s;
  };
  out += "# units: " + join(t.units) + "\n";
  out += join(t.columns) + "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += detail::format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline void write_results(const ResultTable& t, const std::filesystem::path& path) { write_text(path, format_csv(t)); }

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

struct RunManifest {
  ExperimentConfig config;
  std::string config_file_hash;  // hash of the raw input bytes, empty without a file
  std::string timestamp;
  std::vector<std::pair<std::string, std::size_t>> grid_sizes;
  std::string propagator;
  std::vector<StageTiming> stages;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, double>> summary;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json manifest_to_json(const RunManifest& m) {
  json j;
  j["code_version"] = kVersion;
  j["experiment"] = std::string(to_string(m.config.kind));
  j["config"] = config_to_json(m.config);
  j["config_hash"] = config_hash(m.config);
  if (!m.config_file_hash.empty()) j["config_file_hash"] = m.config_file_hash;
  j["timestamp"] = m.timestamp;
  j["units"] = {{"hbar", 1}, {"gamma", 1}, {"a", 1}, {"tau_over_hbar_per_gamma", kTau},
                {"energy", "gamma"}, {"length", "a"}, {"time", "tau"}, {"flux", "phi0"}};
  json grids = json::object();
  for (const auto& [k, v] : m.grid_sizes) grids[k] = v;
  j["grid_sizes"] = grids;
  j["propagator"] = m.propagator;
  json stages = json::array();
  for (const auto& s : m.stages) stages.push_back({{"stage", s.name}, {"wall_clock_s", s.seconds}});
  j["stages"] = stages;
  j["outputs"] = m.outputs;
  json summary = json::object();
  for (const auto& [k, v] : m.summary) summary[k] = v;
  j["summary"] = summary;
  j["grid_choices"] = "default flux and E_int grids are implementation choices";
  return j;
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  write_text(path, manifest_to_json(m).dump(2) + "\n");
}

inline std::vector<std::pair<std::string, std::size_t>> grid_sizes(const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::size_t>> g;
  switch (c.kind) {
    case ExperimentKind::flux_sweep:
    case ExperimentKind::scatterer_control:
      g.emplace_back("flux_points", c.flux_grid.size());
      break;
    case ExperimentKind::visibility_sweep:
      g.emplace_back("flux_points", c.flux_grid.size());
      g.emplace_back("E_int_points", c.e_int_grid.size());
      g.emplace_back("n_wit_values", c.n_wit_list.size());
      break;
    case ExperimentKind::snapshot:
    case ExperimentKind::witness_dynamics:
    case ExperimentKind::long_run:
      g.emplace_back("time_samples", c.times.size());
      break;
  }
  g.emplace_back("hilbert_dimension", (std::size_t{1} << c.n_wit) * kDeviceSites);
  return g;
}

/// Site positions and bonds as JSON.
inline json geometry_to_json(const DeviceGeometry& g) {
  json sites = json::array();
  for (int j = 1; j <= kDeviceSites; ++j) {
    const auto& p = g.position(SiteIndex(j));
    sites.push_back({{"site", j}, {"x", p.x}, {"y", p.y}});
  }
  json edges = json::array();
  for (const auto& [a, b] : g.edges) edges.push_back({a.value(), b.value()});
  return {{"sites", sites}, {"edges", edges}, {"output_site", g.output_site.value()}, {"loop_area", enclosed_area(g)}};
}

}  // namespace blindwit
