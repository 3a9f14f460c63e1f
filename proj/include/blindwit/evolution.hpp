#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "blindwit/composite.hpp"
#include "blindwit/device.hpp"
#include "blindwit/parallel.hpp"
#include "blindwit/units.hpp"

namespace blindwit {

struct PacketParams {
  double x0 = 5.0;
  double width = 2.0;
  double k = std::numbers::pi / 2.0;

  friend bool operator==(const PacketParams&, const PacketParams&) = default;
};

/// Gaussian wavepacket A exp(-(x-x0)^2 / 2w^2) exp(ikx) on the input lead,
/// zero on every other site.
inline Eigen::VectorXcd gaussian_packet(const DeviceGeometry& g, const PacketParams& p = {}) {
  if (!(p.width > 0.0)) throw std::invalid_argument("packet width must be positive");
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(kDeviceSites);
  for (int j = 1; j <= 15; ++j) {
    const double x = g.position(SiteIndex(j)).x;
    const double d = x - p.x0;
    psi(j - 1) = std::polar(std::exp(-d * d / (2.0 * p.width * p.width)), p.k * x);
  }
  const double n = psi.norm();
  if (!(n > 0.0)) throw std::invalid_argument("packet has no weight on the input lead");
  return psi / n;
}

/// exp(-iHt) through a Hermitian eigendecomposition H = V diag(E) V^dagger.
class SpectralPropagator {
 public:
  explicit SpectralPropagator(const Eigen::MatrixXcd& h) {
    if (h.rows() != h.cols() || h.rows() == 0)
      throw std::invalid_argument("Hamiltonian must be square and non-empty");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if (hermiticity_defect(h) > 1e-12 * scale)
      throw std::invalid_argument("Hamiltonian is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
    energies_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors();
  }

  Eigen::Index dimension() const { return energies_.size(); }
  const Eigen::VectorXd& eigenvalues() const { return energies_; }
  const Eigen::MatrixXcd& eigenvectors() const { return vectors_; }

  /// Applies exp(-iHt) with t in hbar/gamma.
  template <typename In>
  Eigen::VectorXcd apply(const Eigen::MatrixBase<In>& psi, double t) const {
    if (psi.size() != dimension()) throw std::invalid_argument("state dimension mismatch");
    Eigen::VectorXcd c = vectors_.adjoint() * psi;
    for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -energies_(k) * t);
    return vectors_ * c;
  }

 private:
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd vectors_;
};

inline SpectralPropagator build_spectral(const Eigen::MatrixXcd& h) { return SpectralPropagator(h); }
inline SpectralPropagator build_spectral(const TotalHamiltonian& h) {
  return SpectralPropagator(h.dense());
}

/// Independent 35x35 propagators, one per witness configuration. Exact when
/// every witness is blind, because H is then block diagonal.
class LayeredPropagator {
 public:
  explicit LayeredPropagator(const TotalHamiltonian& h, int workers = 1) : n_wit_(h.n_wit()) {
    if (!h.blind()) throw std::invalid_argument("layered propagation requires gamma_w = 0");
    const std::size_t n = h.basis().configurations();
    std::vector<std::optional<SpectralPropagator>> built(n);
    parallel_for(n, workers, [&](std::size_t w) { built[w].emplace(h.block(w)); });
    layers_.reserve(n);
    for (auto& b : built) layers_.push_back(std::move(*b));
  }

  int n_wit() const { return n_wit_; }
  std::size_t configurations() const { return layers_.size(); }
  const SpectralPropagator& layer(std::size_t config) const { return layers_.at(config); }

 private:
  int n_wit_ = 0;
  std::vector<SpectralPropagator> layers_;
};

inline LayeredPropagator build_layered(const TotalHamiltonian& h, int workers = 1) {
  return LayeredPropagator(h, workers);
}

/// psi(t) = exp(-iH(t - t0)) psi(t0); t in tau, exact for any t.
inline StateVector evolve(const SpectralPropagator& prop, const StateVector& psi, double t) {
  return {prop.apply(psi.amplitudes, (t - psi.time) * kTau), psi.n_wit, t};
}

inline StateVector evolve(const LayeredPropagator& prop, const StateVector& psi, double t) {
  if (psi.n_wit != prop.n_wit()) throw std::invalid_argument("state dimension mismatch");
  StateVector out{Eigen::VectorXcd(psi.amplitudes.size()), psi.n_wit, t};
  const double dt = (t - psi.time) * kTau;
  for (std::size_t w = 0; w < prop.configurations(); ++w)
    out.layer(w) = prop.layer(w).apply(psi.layer(w), dt);
  return out;
}

enum class PropagatorKind { dense, layered, automatic };

using Propagator = std::variant<SpectralPropagator, LayeredPropagator>;

inline PropagatorKind resolve_propagator(PropagatorKind kind, const TotalHamiltonian& h) {
  if (kind != PropagatorKind::automatic) return kind;
  return (h.blind() && h.n_wit() >= 5) ? PropagatorKind::layered : PropagatorKind::dense;
}

inline Propagator make_propagator(const TotalHamiltonian& h, PropagatorKind kind, int workers = 1) {
  if (resolve_propagator(kind, h) == PropagatorKind::layered) return LayeredPropagator(h, workers);
  return SpectralPropagator(h.dense());
}

inline StateVector evolve(const Propagator& prop, const StateVector& psi, double t) {
  return std::visit([&](const auto& p) { return evolve(p, psi, t); }, prop);
}

/// Max |psi_dense - psi_layered| over the given times (in tau) and all basis entries.
inline double layered_evolve_equivalence_check(const TotalHamiltonian& h, const StateVector& psi0,
                                               std::span<const double> times) {
  if (!h.blind()) throw std::invalid_argument("equivalence check requires gamma_w = 0");
  const SpectralPropagator full(h.dense());
  const LayeredPropagator layered(h);
  double worst = 0.0;
  for (double t : times) {
    const auto a = evolve(full, psi0, t);
    const auto b = evolve(layered, psi0, t);
    worst = std::max(worst, (a.amplitudes - b.amplitudes).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// <psi|H|psi> for a blind composite Hamiltonian, evaluated block by block.
inline double energy_expectation(const TotalHamiltonian& h, const StateVector& psi) {
  if (!h.blind()) return std::real(psi.amplitudes.dot(h.dense() * psi.amplitudes));
  double e = 0.0;
  for (std::size_t w = 0; w < h.basis().configurations(); ++w)
    e += std::real(psi.layer(w).dot(h.block(w) * psi.layer(w)));
  return e;
}

}  // namespace blindwit
