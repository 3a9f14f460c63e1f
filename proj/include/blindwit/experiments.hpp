#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blindwit/composite.hpp"
#include "blindwit/device.hpp"
#include "blindwit/evolution.hpp"
#include "blindwit/observables.hpp"
#include "blindwit/parallel.hpp"
#include "blindwit/units.hpp"

namespace blindwit {

enum class ExperimentKind { snapshot, flux_sweep, visibility_sweep, witness_dynamics, scatterer_control, long_run };

inline constexpr std::pair<ExperimentKind, std::string_view> kExperimentNames[] = {
    {ExperimentKind::snapshot, "snapshot"},
    {ExperimentKind::flux_sweep, "flux_sweep"},
    {ExperimentKind::visibility_sweep, "visibility_sweep"},
    {ExperimentKind::witness_dynamics, "witness_dynamics"},
    {ExperimentKind::scatterer_control, "scatterer_control"},
    {ExperimentKind::long_run, "long_run"},
};

inline std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kExperimentNames)
    if (kind == k) return name;
  return "unknown";
}

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view s) {
  for (const auto& [kind, name] : kExperimentNames)
    if (name == s) return kind;
  return std::nullopt;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * double(i) / double(n - 1);
  return out;
}

inline constexpr std::size_t kDefaultFluxPoints = 401;
inline constexpr std::size_t kDynamicsSamples = 200;
inline constexpr double kLongRunHorizon = 50.0;
inline constexpr std::size_t kLongRunSamples = 500;

inline std::vector<double> default_flux_grid() { return linspace(-1.0, 1.0, kDefaultFluxPoints); }

inline std::vector<double> default_e_int_grid() {
  return {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0};
}

struct WitnessPhases {
  enum class Mode { zero, fixed, random };
  Mode mode = Mode::zero;
  std::vector<double> values;  // Mode::fixed
  std::uint64_t seed = 0;      // Mode::random

  friend bool operator==(const WitnessPhases&, const WitnessPhases&) = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::flux_sweep;
  int n_wit = 0;
  double e_int = 5.0;
  double gamma_w = 0.0;
  double flux = 0.0;
  std::vector<double> flux_grid = default_flux_grid();
  std::vector<double> e_int_grid = default_e_int_grid();
  std::vector<int> n_wit_list{2, 4, 6, 8};
  std::vector<double> times;  // tau
  std::optional<std::vector<BranchSite>> layout;
  WitnessPhases witness_phases;
  std::vector<BranchSite> scatterers;
  double v_s = 5.0;
  PacketParams packet;
  PropagatorKind propagator = PropagatorKind::automatic;
  int workers = 0;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline std::vector<BranchSite> default_scatterer_sites() { return standard_witness_layout(6); }

/// Configuration for `kind` with every documented default applied.
inline ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::snapshot:
      c.times = {0.0, 3.0, kFinalTime};
      break;
    case ExperimentKind::flux_sweep:
    case ExperimentKind::visibility_sweep:
      break;
    case ExperimentKind::scatterer_control:
      c.scatterers = default_scatterer_sites();
      break;
    case ExperimentKind::witness_dynamics:
      c.n_wit = 8;
      c.flux = 0.5;
      c.times = linspace(0.0, kFinalTime, kDynamicsSamples);
      break;
    case ExperimentKind::long_run:
      c.n_wit = 8;
      c.flux = 0.5;
      c.times = linspace(0.0, kLongRunHorizon, kLongRunSamples);
      break;
  }
  return c;
}

/// Witness positions for a config: the explicit layout, else the standard one.
inline std::vector<BranchSite> resolve_layout(const ExperimentConfig& c, int n_wit) {
  if (c.layout) {
    if (static_cast<int>(c.layout->size()) != n_wit)
      throw ConfigError("layout has " + std::to_string(c.layout->size()) + " positions but n_wit is " +
                        std::to_string(n_wit));
    return *c.layout;
  }
  try {
    return standard_witness_layout(n_wit);
  } catch (const std::invalid_argument&) {
    throw ConfigError("n_wit = " + std::to_string(n_wit) + ": layout requires explicit positions");
  }
}

inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg); };
  auto finite = [](double v) { return std::isfinite(v); };

  if (c.n_wit < 0 || c.n_wit > kMaxWitnesses) fail("n_wit", "must be in [0, 16]");
  if (!finite(c.e_int)) fail("e_int", "must be finite");
  if (!finite(c.gamma_w)) fail("gamma_w", "must be finite");
  if (!finite(c.flux)) fail("flux", "must be finite");
  if (!finite(c.v_s)) fail("v_s", "must be finite");
  if (!(c.packet.width > 0.0)) fail("packet.width", "must be positive");
  if (c.workers < 0) fail("workers", "must be >= 0");

  const bool sweeps = c.kind == ExperimentKind::flux_sweep || c.kind == ExperimentKind::visibility_sweep ||
                      c.kind == ExperimentKind::scatterer_control;
  if (sweeps && c.flux_grid.empty()) fail("flux_grid", "must not be empty");
  for (double f : c.flux_grid)
    if (!finite(f)) fail("flux_grid", "entries must be finite");

  if (c.kind == ExperimentKind::visibility_sweep) {
    if (c.e_int_grid.empty()) fail("e_int_grid", "must not be empty");
    if (c.n_wit_list.empty()) fail("n_wit_list", "must not be empty");
    if (c.flux_grid.size() < kMinVisibilitySamples) fail("flux_grid", "visibility needs at least 101 points");
    for (int n : c.n_wit_list) {
      if (n < 0 || n > kMaxWitnesses) fail("n_wit_list", "entries must be in [0, 16]");
      resolve_layout(c, n);
    }
  } else {
    resolve_layout(c, c.n_wit);
  }

  const bool timed = c.kind == ExperimentKind::snapshot || c.kind == ExperimentKind::witness_dynamics ||
                     c.kind == ExperimentKind::long_run;
  if (timed && c.times.empty()) fail("times", "must not be empty");
  for (double t : c.times)
    if (!finite(t)) fail("times", "entries must be finite");

  if (c.kind == ExperimentKind::scatterer_control && c.n_wit != 0)
    fail("n_wit", "scatterer control runs without witnesses");
  if ((c.kind == ExperimentKind::witness_dynamics || c.kind == ExperimentKind::long_run) && c.n_wit == 0)
    fail("n_wit", "witness dynamics needs at least one witness");

  if (c.witness_phases.mode == WitnessPhases::Mode::fixed && c.kind != ExperimentKind::visibility_sweep &&
      static_cast<int>(c.witness_phases.values.size()) != c.n_wit)
    fail("witness_phases.values", "need one phase per witness");

  for (std::size_t a = 0; a < c.scatterers.size(); ++a)
    for (std::size_t b = a + 1; b < c.scatterers.size(); ++b)
      if (c.scatterers[a] == c.scatterers[b]) fail("scatterers", "duplicate site " + c.scatterers[a].label());
  if (c.layout)
    for (std::size_t a = 0; a < c.layout->size(); ++a)
      for (std::size_t b = a + 1; b < c.layout->size(); ++b)
        if ((*c.layout)[a] == (*c.layout)[b]) fail("layout", "duplicate position " + (*c.layout)[a].label());

  if (c.propagator == PropagatorKind::layered && c.gamma_w != 0.0)
    fail("propagator", "layered propagation requires gamma_w = 0");
}

/// Initial witness phases: zero, the fixed list, or uniform on (-pi, pi] from the seed.
inline std::vector<double> resolve_phases(const WitnessPhases& p, int n_wit) {
  switch (p.mode) {
    case WitnessPhases::Mode::zero: return {};
    case WitnessPhases::Mode::fixed: return p.values;
    case WitnessPhases::Mode::random: {
      std::mt19937_64 rng(p.seed);
      std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
      std::vector<double> out(static_cast<std::size_t>(n_wit));
      for (auto& v : out) v = -u(rng);  // [-pi, pi) mirrored onto (-pi, pi]
      return out;
    }
  }
  return {};
}

/// Everything needed to build H(flux) and the initial state.
struct Scenario {
  std::vector<WitnessSpec> witnesses;
  std::vector<SiteIndex> scatterers;
  double v_s = 0.0;
  PacketParams packet;
  std::vector<double> phases;
  PropagatorKind propagator = PropagatorKind::automatic;

  int n_wit() const { return static_cast<int>(witnesses.size()); }
};

inline Scenario make_scenario(const ExperimentConfig& c, int n_wit, double e_int) {
  Scenario s;
  s.witnesses = make_witnesses(resolve_layout(c, n_wit), e_int, c.gamma_w);
  for (const auto& b : c.scatterers) s.scatterers.push_back(b.site());
  s.v_s = c.v_s;
  s.packet = c.packet;
  s.phases = resolve_phases(c.witness_phases, n_wit);
  s.propagator = c.propagator;
  return s;
}

inline Scenario make_scenario(const ExperimentConfig& c) { return make_scenario(c, c.n_wit, c.e_int); }

inline const DeviceGeometry& device_geometry() {
  static const DeviceGeometry g = build_geometry();
  return g;
}

inline TotalHamiltonian scenario_hamiltonian(const Scenario& s, FluxRatio flux) {
  auto hd = build_device_hamiltonian(device_geometry(), kGammaUnit, flux);
  if (!s.scatterers.empty()) hd = add_static_scatterers(std::move(hd), s.scatterers, s.v_s);
  return build_total_hamiltonian(std::move(hd), s.witnesses);
}

inline StateVector scenario_initial_state(const Scenario& s) {
  return initial_composite_state(gaussian_packet(device_geometry(), s.packet), s.n_wit(), s.phases);
}

inline constexpr double kNormDriftLimit = 1e-8;

inline void check_norm(const StateVector& psi) {
  const double drift = std::abs(psi.norm() - 1.0);
  if (!(drift <= kNormDriftLimit)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "state norm drifted by %.3g at t = %.6g tau", drift, psi.time);
    throw NumericalError(buf);
  }
}

struct Trajectory {
  std::vector<StateVector> states;
  PropagatorKind used = PropagatorKind::dense;
};

/// States at each requested time (tau) under H(flux), norm-checked.
inline Trajectory evolve_scenario(const Scenario& s, FluxRatio flux, std::span<const double> times, int workers = 1) {
  const auto h = scenario_hamiltonian(s, flux);
  Trajectory out;
  out.used = resolve_propagator(s.propagator, h);
  const auto prop = make_propagator(h, out.used, workers);
  const auto psi0 = scenario_initial_state(s);
  out.states.resize(times.size());
  parallel_for(times.size(), workers, [&](std::size_t i) {
    out.states[i] = evolve(prop, psi0, times[i]);
    check_norm(out.states[i]);
  });
  return out;
}

inline double output_probability(const Scenario& s, FluxRatio flux, PropagatorKind* used = nullptr) {
  const double t = kFinalTime;
  auto traj = evolve_scenario(s, flux, std::span<const double>(&t, 1));
  if (used) *used = traj.used;
  return p_out(traj.states.front(), device_geometry().output_site);
}

/// P_out at T_f for every flux, one worker per flux point, merged in grid order.
inline std::vector<FluxSample> flux_sweep(const Scenario& s, std::span<const double> fluxes, int workers,
                                          PropagatorKind* used = nullptr) {
  std::vector<FluxSample> out(fluxes.size());
  std::vector<PropagatorKind> kinds(fluxes.size());
  parallel_for(fluxes.size(), workers, [&](std::size_t i) {
    out[i] = {fluxes[i], output_probability(s, {fluxes[i]}, &kinds[i])};
  });
  if (used && !kinds.empty()) *used = kinds.front();
  return out;
}

inline std::optional<double> try_visibility(std::span<const FluxSample> sweep) {
  try {
    return visibility(sweep);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::string_view to_string(PropagatorKind k) {
  switch (k) {
    case PropagatorKind::dense: return "dense";
    case PropagatorKind::layered: return "layered";
    case PropagatorKind::automatic: return "auto";
  }
  return "auto";
}

inline std::optional<PropagatorKind> parse_propagator_kind(std::string_view s) {
  if (s == "dense") return PropagatorKind::dense;
  if (s == "layered") return PropagatorKind::layered;
  if (s == "auto") return PropagatorKind::automatic;
  return std::nullopt;
}

/// Columns, units and rows of one experiment, plus ordered provenance and
/// scalar summaries. Byte-stable for a fixed config.
struct ResultTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::string> units;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> provenance;
  std::vector<std::pair<std::string, double>> summary;

  std::optional<double> summary_value(std::string_view key) const {
    for (const auto& [k, v] : summary)
      if (k == key) return v;
    return std::nullopt;
  }
  std::optional<std::string> provenance_value(std::string_view key) const {
    for (const auto& [k, v] : provenance)
      if (k == key) return v;
    return std::nullopt;
  }
  std::size_t column(std::string_view key) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == key) return i;
    throw std::out_of_range("no column " + std::string(key));
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join_labels(std::span<const WitnessSpec> ws) {
  std::string s;
  for (const auto& w : ws) {
    if (!s.empty()) s += ' ';
    s += w.position.label();
  }
  return s.empty() ? "none" : s;
}

inline ResultTable base_table(const ExperimentConfig& c, const Scenario& s) {
  ResultTable t;
  t.name = std::string(to_string(c.kind));
  t.provenance = {
      {"experiment", t.name},
      {"code_version", kVersion},
      {"conventions", "hbar=gamma=a=1; time in tau = pi*hbar/(2*gamma)"},
      {"n_wit", std::to_string(s.n_wit())},
      {"witness_positions", join_labels(s.witnesses)},
      {"E_int_over_gamma", format_double(c.e_int)},
      {"gamma_w_over_gamma", format_double(c.gamma_w)},
      {"T_f_over_tau", format_double(kFinalTime)},
  };
  return t;
}

inline void add_flux_grid_provenance(ResultTable& t, std::span<const double> grid) {
  t.provenance.emplace_back("flux_points", std::to_string(grid.size()));
  if (!grid.empty()) {
    t.provenance.emplace_back("flux_min", format_double(grid.front()));
    t.provenance.emplace_back("flux_max", format_double(grid.back()));
  }
}

inline std::vector<std::vector<double>> sweep_rows(std::span<const FluxSample> sweep) {
  std::vector<std::vector<double>> rows;
  rows.reserve(sweep.size());
  std::vector<NormalizedSample> norm;
  try {
    norm = normalized_output(sweep);
  } catch (const std::domain_error&) {
    norm.assign(sweep.size(), {0.0, std::nan("")});
  }
  for (std::size_t i = 0; i < sweep.size(); ++i) rows.push_back({sweep[i].flux, sweep[i].p_out, norm[i].dp_norm});
  return rows;
}

inline void add_sweep_summary(ResultTable& t, std::span<const FluxSample> sweep) {
  const auto ext = sweep_extrema(sweep);
  t.summary.emplace_back("P_max", ext.p_max);
  t.summary.emplace_back("P_min", ext.p_min);
  if (auto v = try_visibility(sweep)) t.summary.emplace_back("visibility", *v);
}

}  // namespace detail

inline ResultTable run_snapshot(const ExperimentConfig& c) {
  validate(c);
  const auto s = make_scenario(c);
  const auto traj = evolve_scenario(s, {c.flux}, c.times, c.workers);
  auto t = detail::base_table(c, s);
  t.provenance.emplace_back("flux_ratio", detail::format_double(c.flux));
  t.provenance.emplace_back("propagator", std::string(to_string(traj.used)));
  t.columns = {"site", "x_over_a", "y_over_a", "prob", "time_over_tau"};
  t.units = {"1", "a", "a", "1", "tau"};
  for (const auto& psi : traj.states) {
    const auto p = site_probabilities(psi);
    for (int j = 1; j <= kDeviceSites; ++j) {
      const auto& pos = device_geometry().position(SiteIndex(j));
      t.rows.push_back({double(j), pos.x, pos.y, p.p[j - 1], psi.time});
    }
  }
  return t;
}

inline ResultTable run_flux_sweep(const ExperimentConfig& c) {
  validate(c);
  const auto s = make_scenario(c);
  PropagatorKind used = PropagatorKind::dense;
  const auto sweep = flux_sweep(s, c.flux_grid, c.workers, &used);
  auto t = detail::base_table(c, s);
  detail::add_flux_grid_provenance(t, c.flux_grid);
  t.provenance.emplace_back("propagator", std::string(to_string(used)));
  t.columns = {"flux_ratio", "P_out", "dP_norm"};
  t.units = {"phi0", "1", "1"};
  t.rows = detail::sweep_rows(sweep);
  detail::add_sweep_summary(t, sweep);
  return t;
}

/// Visibility for every (n_wit, E_int) pair; rows ordered by n_wit then E_int.
inline ResultTable run_visibility_sweep(const ExperimentConfig& c) {
  validate(c);
  auto t = detail::base_table(c, make_scenario(c, c.n_wit_list.front(), c.e_int));
  t.provenance.erase(t.provenance.begin() + 3, t.provenance.begin() + 6);  // per-row quantities
  detail::add_flux_grid_provenance(t, c.flux_grid);
  std::string grid;
  for (double e : c.e_int_grid) grid += (grid.empty() ? "" : " ") + detail::format_double(e);
  t.provenance.emplace_back("E_int_grid", grid);
  t.columns = {"n_wit", "E_int_over_gamma", "visibility"};
  t.units = {"1", "gamma", "1"};

  std::string kinds;
  for (int n : c.n_wit_list) {
    for (double e : c.e_int_grid) {
      auto cfg = c;
      if (c.witness_phases.mode == WitnessPhases::Mode::fixed &&
          static_cast<int>(c.witness_phases.values.size()) != n)
        cfg.witness_phases = {};
      auto s = make_scenario(cfg, n, e);
      // Blind witnesses: the block path is exact, so auto takes it at every n_wit here.
      if (s.propagator == PropagatorKind::automatic && c.gamma_w == 0.0) s.propagator = PropagatorKind::layered;
      PropagatorKind used = PropagatorKind::dense;
      const auto sweep = flux_sweep(s, c.flux_grid, c.workers, &used);
      t.rows.push_back({double(n), e, visibility(sweep)});
      if (e == c.e_int_grid.front()) kinds += (kinds.empty() ? "" : " ") + std::to_string(n) + ":" + std::string(to_string(used));
    }
  }
  t.provenance.emplace_back("propagator", kinds);
  return t;
}

namespace detail {

inline ResultTable witness_table(const ExperimentConfig& c) {
  validate(c);
  const auto s = make_scenario(c);
  const auto traj = evolve_scenario(s, {c.flux}, c.times, c.workers);
  auto t = base_table(c, s);
  t.provenance.emplace_back("flux_ratio", format_double(c.flux));
  t.provenance.emplace_back("propagator", std::string(to_string(traj.used)));
  t.provenance.emplace_back("time_samples", std::to_string(c.times.size()));

  const int n = s.n_wit();
  t.columns = {"time_over_tau"};
  t.units = {"tau"};
  for (int m = 1; m <= n; ++m) {
    t.columns.push_back("theta_" + std::to_string(m));
    t.units.push_back("rad");
  }
  for (int m = 1; m <= n; ++m) {
    t.columns.push_back("S_" + std::to_string(m));
    t.units.push_back("bit");
  }
  t.columns.push_back("S_dev");
  t.units.push_back("bit");

  std::vector<WitnessReport> reports(traj.states.size());
  parallel_for(reports.size(), c.workers, [&](std::size_t i) { reports[i] = witness_report(traj.states[i]); });

  std::vector<std::vector<double>> theta(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    std::vector<double> raw;
    for (const auto& r : reports) raw.push_back(r.witnesses[m].theta);
    theta[m] = unwrap_angles(raw);
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::vector<double> row{traj.states[i].time};
    for (int m = 0; m < n; ++m) row.push_back(theta[m][i]);
    for (int m = 0; m < n; ++m) row.push_back(reports[i].witnesses[m].entropy);
    row.push_back(reports[i].device_entropy);
    t.rows.push_back(std::move(row));
  }
  if (!reports.empty()) {
    t.summary.emplace_back("S_dev_final", reports.back().device_entropy);
    double worst = 0.0;
    for (const auto& r : reports)
      for (const auto& w : r.witnesses) worst = std::max(worst, std::abs(w.bloch.z));
    t.summary.emplace_back("max_abs_lambda_z", worst);
  }
  return t;
}

}  // namespace detail

inline ResultTable run_witness_dynamics(const ExperimentConfig& c) { return detail::witness_table(c); }

/// Same observables as witness dynamics over the long horizon; the final device
/// entropy is reported, not checked.
inline ResultTable run_long_run(const ExperimentConfig& c) { return detail::witness_table(c); }

/// Flux sweep with static scatterers and no witnesses, alongside the bare device.
inline ResultTable run_scatterer_control(const ExperimentConfig& c) {
  validate(c);
  const auto s = make_scenario(c);
  auto bare = s;
  bare.scatterers.clear();
  const auto sweep = flux_sweep(s, c.flux_grid, c.workers);
  const auto reference = flux_sweep(bare, c.flux_grid, c.workers);

  auto t = detail::base_table(c, s);
  std::string sites;
  for (const auto& b : c.scatterers) sites += (sites.empty() ? "" : " ") + b.label();
  t.provenance.emplace_back("scatterer_sites", sites.empty() ? "none" : sites);
  t.provenance.emplace_back("V_s_over_gamma", detail::format_double(c.v_s));
  detail::add_flux_grid_provenance(t, c.flux_grid);
  t.provenance.emplace_back("propagator", "dense");
  t.columns = {"flux_ratio", "P_out", "dP_norm", "dP_norm_bare"};
  t.units = {"phi0", "1", "1", "1"};
  t.rows = detail::sweep_rows(sweep);
  const auto ref_rows = detail::sweep_rows(reference);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    t.rows[i].push_back(ref_rows[i][2]);
    worst = std::max(worst, std::abs(t.rows[i][2] - ref_rows[i][2]));
  }
  detail::add_sweep_summary(t, sweep);
  if (auto v = try_visibility(reference)) t.summary.emplace_back("visibility_bare", *v);
  t.summary.emplace_back("max_abs_dP_norm_deviation", worst);
  return t;
}

inline ResultTable run_experiment(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::snapshot: return run_snapshot(c);
    case ExperimentKind::flux_sweep: return run_flux_sweep(c);
    case ExperimentKind::visibility_sweep: return run_visibility_sweep(c);
    case ExperimentKind::witness_dynamics: return run_witness_dynamics(c);
    case ExperimentKind::scatterer_control: return run_scatterer_control(c);
    case ExperimentKind::long_run: return run_long_run(c);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace blindwit
