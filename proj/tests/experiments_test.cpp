#include "blindwit/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace blindwit;

namespace {

ExperimentConfig sweep_config(int n_wit, double e_int, std::size_t points = 101) {
  auto c = default_config(ExperimentKind::flux_sweep);
  c.n_wit = n_wit;
  c.e_int = e_int;
  c.flux_grid = linspace(-1.0, 1.0, points);
  c.workers = 2;
  return c;
}

}  // namespace

TEST(Config, kind_names_round_trip) {
  for (const auto& [kind, name] : kExperimentNames) {
    EXPECT_EQ(to_string(kind), name);
    EXPECT_EQ(parse_experiment_kind(name), kind);
  }
  EXPECT_FALSE(parse_experiment_kind("flux-sweep"));
}

TEST(Config, defaults_per_kind) {
  const auto sweep = default_config(ExperimentKind::flux_sweep);
  EXPECT_EQ(sweep.flux_grid.size(), 401u);
  EXPECT_DOUBLE_EQ(sweep.flux_grid.front(), -1.0);
  EXPECT_DOUBLE_EQ(sweep.flux_grid[200], 0.0);
  EXPECT_DOUBLE_EQ(sweep.flux_grid.back(), 1.0);
  EXPECT_EQ(sweep.e_int, 5.0);

  const auto vis = default_config(ExperimentKind::visibility_sweep);
  EXPECT_EQ(vis.e_int_grid.size(), 12u);
  EXPECT_EQ(vis.n_wit_list, (std::vector<int>{2, 4, 6, 8}));

  const auto dyn = default_config(ExperimentKind::witness_dynamics);
  EXPECT_EQ(dyn.n_wit, 8);
  EXPECT_EQ(dyn.flux, 0.5);
  EXPECT_EQ(dyn.times.size(), 200u);
  EXPECT_DOUBLE_EQ(dyn.times.back(), kFinalTime);

  const auto lr = default_config(ExperimentKind::long_run);
  EXPECT_EQ(lr.times.size(), 500u);
  EXPECT_DOUBLE_EQ(lr.times.back(), 50.0);

  EXPECT_EQ(default_config(ExperimentKind::scatterer_control).scatterers.size(), 6u);
  EXPECT_EQ(default_config(ExperimentKind::snapshot).times, (std::vector<double>{0.0, 3.0, kFinalTime}));
  for (const auto& [kind, name] : kExperimentNames) EXPECT_NO_THROW(validate(default_config(kind))) << name;
}

TEST(Config, validation_errors) {
  auto odd = sweep_config(3, 5.0);
  try {
    validate(odd);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("layout requires explicit positions"), std::string::npos);
  }
  odd.layout = std::vector<BranchSite>{BranchSite::top(1), BranchSite::top(3), BranchSite::bottom(5)};
  EXPECT_NO_THROW(validate(odd));
  odd.layout->push_back(BranchSite::top(3));
  EXPECT_THROW(validate(odd), ConfigError);

  auto c = sweep_config(0, 5.0);
  c.flux_grid.clear();
  EXPECT_THROW(validate(c), ConfigError);
  c = sweep_config(0, 5.0);
  c.packet.width = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = sweep_config(2, 5.0);
  c.gamma_w = 0.3;
  c.propagator = PropagatorKind::layered;
  EXPECT_THROW(validate(c), ConfigError);

  auto s = default_config(ExperimentKind::scatterer_control);
  s.n_wit = 2;
  EXPECT_THROW(validate(s), ConfigError);
  auto d = default_config(ExperimentKind::witness_dynamics);
  d.n_wit = 0;
  EXPECT_THROW(validate(d), ConfigError);
  auto v = default_config(ExperimentKind::visibility_sweep);
  v.flux_grid = linspace(-1.0, 1.0, 100);
  EXPECT_THROW(validate(v), ConfigError);
}

TEST(Phases, resolution) {
  EXPECT_TRUE(resolve_phases({}, 4).empty());
  const WitnessPhases fixed{WitnessPhases::Mode::fixed, {0.1, 0.2}, 0};
  EXPECT_EQ(resolve_phases(fixed, 2), (std::vector<double>{0.1, 0.2}));
  const WitnessPhases random{WitnessPhases::Mode::random, {}, 42};
  const auto a = resolve_phases(random, 6);
  EXPECT_EQ(a, resolve_phases(random, 6));
  EXPECT_NE(a, resolve_phases({WitnessPhases::Mode::random, {}, 43}, 6));
  for (double p : a) {
    EXPECT_GT(p, -std::numbers::pi);
    EXPECT_LE(p, std::numbers::pi);
  }
}

TEST(FluxSweep, witness_free_columns_and_visibility) {
  const auto t = run_flux_sweep(sweep_config(0, 0.0));
  EXPECT_EQ(t.columns, (std::vector<std::string>{"flux_ratio", "P_out", "dP_norm"}));
  ASSERT_EQ(t.rows.size(), 101u);
  EXPECT_NEAR(*t.summary_value("visibility"), 1.0, 1e-9);
  EXPECT_NEAR(t.rows[50][1], 0.17610598299905286, 1e-12);
  EXPECT_NEAR(t.rows[50][2], 1.0, 1e-12);
  EXPECT_LT(t.rows[75][1], 1e-10);  // flux 1/2
  EXPECT_EQ(t.provenance_value("propagator"), "dense");
}

TEST(FluxSweep, deterministic_across_workers) {
  auto c = sweep_config(2, 5.0);
  c.workers = 1;
  const auto a = run_flux_sweep(c);
  c.workers = 3;
  const auto b = run_flux_sweep(c);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.summary, b.summary);
}

TEST(FluxSweep, propagators_agree) {
  auto c = sweep_config(6, 5.0, 11);
  c.propagator = PropagatorKind::layered;
  const auto layered = run_flux_sweep(c);
  EXPECT_EQ(layered.provenance_value("propagator"), "layered");
  c.flux_grid = {0.0, 0.5};
  const auto l2 = run_flux_sweep(c);
  c.propagator = PropagatorKind::dense;
  const auto dense = run_flux_sweep(c);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(l2.rows[i][1], dense.rows[i][1], 1e-10);
  EXPECT_NEAR(l2.rows[0][1], 0.042149742649467886, 1e-12);
}

// The initial witness phases move only the coherence angles.
TEST(FluxSweep, witness_phases_leave_output_unchanged) {
  auto c = sweep_config(4, 5.0, 21);
  const auto base = run_flux_sweep(c);
  c.witness_phases = {WitnessPhases::Mode::random, {}, 7};
  const auto shifted = run_flux_sweep(c);
  for (std::size_t i = 0; i < base.rows.size(); ++i) EXPECT_NEAR(base.rows[i][1], shifted.rows[i][1], 1e-10);
}

TEST(WitnessDynamics, phase_offset_is_rigid) {
  auto c = default_config(ExperimentKind::witness_dynamics);
  c.n_wit = 2;
  c.times = linspace(0.0, kFinalTime, 30);
  const auto base = run_witness_dynamics(c);
  c.witness_phases = {WitnessPhases::Mode::fixed, {0.8, -1.1}, 0};
  const auto shifted = run_witness_dynamics(c);
  ASSERT_EQ(base.columns, (std::vector<std::string>{"time_over_tau", "theta_1", "theta_2", "S_1", "S_2", "S_dev"}));
  for (std::size_t i = 0; i < base.rows.size(); ++i) {
    EXPECT_NEAR(shifted.rows[i][1] - base.rows[i][1], 0.8, 1e-9);
    EXPECT_NEAR(shifted.rows[i][2] - base.rows[i][2], -1.1, 1e-9);
    for (std::size_t k = 3; k < 6; ++k) EXPECT_NEAR(shifted.rows[i][k], base.rows[i][k], 1e-9);
  }
}

TEST(WitnessDynamics, eight_witnesses_at_half_flux) {
  auto c = default_config(ExperimentKind::witness_dynamics);
  c.times = {0.0, 2.0, kFinalTime};
  const auto t = run_witness_dynamics(c);
  ASSERT_EQ(t.columns.size(), 1u + 8 + 8 + 1);
  EXPECT_NEAR(t.rows.back().back(), 2.4047696599733825, 1e-9);
  EXPECT_NEAR(*t.summary_value("S_dev_final"), 2.4047696599733825, 1e-9);
  EXPECT_LT(*t.summary_value("max_abs_lambda_z"), 1e-10);
  for (double s : t.rows.front()) EXPECT_NEAR(s, 0.0, 1e-9);
  // Theta is continuous between samples after unwrapping.
  for (std::size_t k = 1; k <= 8; ++k)
    for (std::size_t i = 1; i < t.rows.size(); ++i)
      EXPECT_LE(std::abs(t.rows[i][k] - t.rows[i - 1][k]), std::numbers::pi);
}

TEST(Snapshot, rows_and_normalization) {
  auto c = default_config(ExperimentKind::snapshot);
  const auto t = run_snapshot(c);
  ASSERT_EQ(t.rows.size(), 3u * 35);
  for (std::size_t block = 0; block < 3; ++block) {
    double total = 0.0;
    for (std::size_t j = 0; j < 35; ++j) total += t.rows[block * 35 + j][3];
    EXPECT_NEAR(total, 1.0, 1e-10);
  }
  // Peak on the output site at the final time.
  std::size_t peak = 0;
  for (std::size_t j = 0; j < 35; ++j)
    if (t.rows[70 + j][3] > t.rows[70 + peak][3]) peak = j;
  EXPECT_EQ(peak + 1, 27u);
  EXPECT_EQ(t.rows[70][4], kFinalTime);
}

TEST(ScattererControl, keeps_full_visibility) {
  auto c = default_config(ExperimentKind::scatterer_control);
  c.flux_grid = linspace(-1.0, 1.0, 101);
  const auto t = run_scatterer_control(c);
  EXPECT_NEAR(*t.summary_value("visibility"), 1.0, 1e-9);
  EXPECT_NEAR(*t.summary_value("visibility_bare"), 1.0, 1e-9);
  // Curves agree to plotting accuracy, not pointwise to round-off.
  EXPECT_LT(*t.summary_value("max_abs_dP_norm_deviation"), 1e-2);
  EXPECT_EQ(t.columns.back(), "dP_norm_bare");
}

TEST(VisibilitySweep, orders_with_witness_count) {
  auto c = default_config(ExperimentKind::visibility_sweep);
  c.n_wit_list = {2, 4};
  c.e_int_grid = {0.0, 5.0};
  c.flux_grid = linspace(-1.0, 1.0, 101);
  const auto t = run_visibility_sweep(c);
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_NEAR(t.rows[0][2], 1.0, 1e-9);
  EXPECT_NEAR(t.rows[2][2], 1.0, 1e-9);
  EXPECT_NEAR(t.rows[1][2], 0.512, 5e-3);
  EXPECT_NEAR(t.rows[3][2], 0.169, 5e-3);
  EXPECT_GT(t.rows[1][2], t.rows[3][2]);
}

TEST(Numerics, norm_check) {
  StateVector psi{Eigen::VectorXcd::Zero(35), 0, 1.0};
  psi.amplitudes(0) = 1.0 + 1e-9;
  EXPECT_NO_THROW(check_norm(psi));
  psi.amplitudes(0) = 1.0 + 1e-7;
  EXPECT_THROW(check_norm(psi), NumericalError);
}
