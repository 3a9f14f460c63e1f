#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "blindwit/composite.hpp"
#include "blindwit/device.hpp"
#include "blindwit/evolution.hpp"
#include "blindwit/experiments.hpp"
#include "blindwit/observables.hpp"

namespace blindwit {

struct InvariantCheck {
  std::string name;
  double measured = 0.0;   // worst deviation seen
  double tolerance = 0.0;
  bool passed() const { return measured < tolerance; }
};

namespace detail {

inline TotalHamiltonian validation_hamiltonian(double flux, std::span<const BranchSite> layout, double e_int) {
  return build_total_hamiltonian(build_device_hamiltonian(device_geometry(), kGammaUnit, {flux}),
                                 make_witnesses(layout, e_int));
}

inline StateVector validation_state(int n_wit, std::span<const double> phases = {}) {
  return initial_composite_state(gaussian_packet(device_geometry()), n_wit, phases);
}

inline double wrapped_distance(double a, double b) {
  return std::abs(std::remainder(a - b, 2.0 * std::numbers::pi));
}

}  // namespace detail

/// Property checks over the device, the propagators and the witness observables,
/// each reported with its worst deviation. Deterministic (fixed seed).
inline std::vector<InvariantCheck> run_invariant_suite() {
  using namespace detail;
  std::vector<InvariantCheck> out;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> flux_draw(-1.0, 1.0);
  const auto& g = device_geometry();
  const std::vector<double> times{0.0, 1.0, 3.0, kFinalTime};

  {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i)
      worst = std::max(worst, hermiticity_defect(build_device_hamiltonian(g, kGammaUnit, {flux_draw(rng)}).matrix));
    worst = std::max(worst, hermiticity_defect(validation_hamiltonian(0.3, standard_witness_layout(4), 5.0).dense()));
    out.push_back({"hermiticity", worst, 1e-12});
  }
  {
    const auto h = build_device_hamiltonian(g, kGammaUnit, {0.5});
    out.push_back({"loop phase at half flux", wrapped_distance(loop_phase(h), -std::numbers::pi), 1e-12});
    out.push_back({"enclosed area", std::abs(enclosed_area(g) - 5.0), 1e-12});
  }
  {
    const auto h = build_device_hamiltonian(g, kGammaUnit, {flux_draw(rng)});
    const auto p = build_spectral(h.matrix);
    const auto& v = p.eigenvectors();
    const double recon = (v * p.eigenvalues().cast<cplx>().asDiagonal() * v.adjoint() - h.matrix).cwiseAbs().maxCoeff();
    const double ortho = (v.adjoint() * v - Eigen::MatrixXcd::Identity(35, 35)).cwiseAbs().maxCoeff();
    out.push_back({"spectral reconstruction", std::max(recon, ortho), 1e-10});
  }
  {
    double norm = 0.0, compose = 0.0, energy = 0.0, prob = 0.0;
    for (double flux : {0.0, 0.5, flux_draw(rng)}) {
      const auto h = validation_hamiltonian(flux, standard_witness_layout(6), 5.0);
      const auto prop = build_layered(h);
      const auto psi0 = validation_state(6);
      const double e0 = energy_expectation(h, psi0);
      for (double t : times) {
        const auto psi = evolve(prop, psi0, t);
        norm = std::max(norm, std::abs(psi.norm() - 1.0));
        energy = std::max(energy, std::abs(energy_expectation(h, psi) - e0));
        prob = std::max(prob, std::abs(site_probabilities(psi).total() - 1.0));
        auto restart = evolve(prop, psi0, 1.7);
        restart.time = 0.0;
        const auto chained = evolve(prop, restart, t);
        compose = std::max(compose, (chained.amplitudes - evolve(prop, psi0, t + 1.7).amplitudes).cwiseAbs().maxCoeff());
        compose = std::max(compose, (evolve(prop, psi, 0.0).amplitudes - psi0.amplitudes).cwiseAbs().maxCoeff());
      }
    }
    out.push_back({"unitarity", norm, 1e-10});
    out.push_back({"composition and reversibility", compose, 1e-10});
    out.push_back({"energy conservation", energy, 1e-10});
    out.push_back({"probability conservation", prob, 1e-9});
  }
  {
    std::uniform_real_distribution<double> e_draw(0.1, 50.0);
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
      const auto h = validation_hamiltonian(flux_draw(rng), standard_witness_layout(2), e_draw(rng));
      worst = std::max(worst, layered_evolve_equivalence_check(h, validation_state(2), std::vector<double>{1.0, 3.0, kFinalTime}));
    }
    out.push_back({"layered matches dense", worst, 1e-10});
  }
  {
    const auto layout = standard_witness_layout(8);
    double lz = 0.0, occupancy = 0.0, consistency = 0.0, pairs = 0.0, bounds = 0.0;
    for (double flux : {0.0, 0.5, flux_draw(rng)}) {
      const bool symmetric = flux == 0.0 || flux == 0.5;
      const auto prop = build_layered(validation_hamiltonian(flux, layout, 5.0));
      const auto psi0 = validation_state(8);
      for (double t : times) {
        const auto psi = evolve(prop, psi0, t);
        const auto r = witness_report(psi);
        for (int m = 0; m < 8; ++m) {
          const auto& w = r.witnesses[m];
          lz = std::max(lz, std::abs(w.bloch.z));
          const auto [pa, pb] = witness_site_occupancy(psi, m);
          occupancy = std::max({occupancy, std::abs(pa - 0.5), std::abs(pb - 0.5)});
          consistency = std::max(consistency,
                                 std::abs(w.entropy - binary_entropy_bits(0.5 * (1.0 + w.bloch.length()))));
          consistency = std::max(consistency, std::abs(w.entropy - von_neumann_entropy_bits(witness_density(w.bloch))));
          bounds = std::max({bounds, w.bloch.length() - 1.0, -w.entropy, w.entropy - 1.0});
          if (symmetric && m % 2 == 0) {
            const auto& b = r.witnesses[m + 1];
            pairs = std::max({pairs, std::abs(w.bloch.x - b.bloch.x), std::abs(w.bloch.y - b.bloch.y),
                              std::abs(w.entropy - b.entropy)});
          }
        }
        bounds = std::max({bounds, -r.device_entropy, r.device_entropy - std::log2(35.0)});
      }
    }
    out.push_back({"lambda_z stays zero", lz, 1e-10});
    out.push_back({"witness occupancy one half", occupancy, 1e-10});
    out.push_back({"entropy matches Bloch length", consistency, 1e-9});
    out.push_back({"mirror pairs coincide", pairs, 1e-10});
    out.push_back({"entropy and Bloch bounds", std::max(bounds, 0.0), 1e-9});
  }
  {
    double worst = 0.0;
    for (int n : {0, 2}) {
      const auto layout = standard_witness_layout(n);
      for (int i = 0; i < 5; ++i) {
        const double f = flux_draw(rng);
        auto pout = [&](double flux) {
          return p_out(evolve(make_propagator(validation_hamiltonian(flux, layout, 5.0), PropagatorKind::dense),
                              validation_state(n), kFinalTime));
        };
        worst = std::max({worst, std::abs(pout(f) - pout(f + 1.0)), std::abs(pout(f) - pout(-f))});
      }
    }
    out.push_back({"flux periodicity and reversal", worst, 1e-10});
  }
  {
    const auto h = validation_hamiltonian(0.5, {}, 0.0);
    out.push_back({"destructive zero at half flux", p_out(evolve(build_spectral(h), validation_state(0), kFinalTime)), 1e-10});
  }
  {
    const auto layout = standard_witness_layout(4);
    const auto phases = resolve_phases({WitnessPhases::Mode::random, {}, 99}, 4);
    double worst = 0.0;
    for (double flux : {0.0, 0.25, 0.5}) {
      const auto prop = build_layered(validation_hamiltonian(flux, layout, 5.0));
      const auto a = evolve(prop, validation_state(4), kFinalTime);
      const auto b = evolve(prop, validation_state(4, phases), kFinalTime);
      worst = std::max(worst, std::abs(p_out(a) - p_out(b)));
      const auto ra = witness_report(a), rb = witness_report(b);
      for (int m = 0; m < 4; ++m)
        worst = std::max(worst, wrapped_distance(rb.witnesses[m].theta - ra.witnesses[m].theta, phases[m]));
    }
    out.push_back({"initial phases only offset theta", worst, 1e-10});
  }
  return out;
}

}  // namespace blindwit
