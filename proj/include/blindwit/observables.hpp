#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "blindwit/composite.hpp"
#include "blindwit/device.hpp"
#include "blindwit/units.hpp"

namespace blindwit {

struct SiteProbabilities {
  std::array<double, kDeviceSites> p{};
  double time = 0.0;

  double operator[](SiteIndex s) const { return p[s.offset()]; }
  double total() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }
};

/// p_j = sum_w |psi(w, j)|^2.
inline SiteProbabilities site_probabilities(const StateVector& psi) {
  SiteProbabilities out;
  out.time = psi.time;
  for (std::size_t w = 0; w < psi.basis().configurations(); ++w) {
    auto layer = psi.layer(w);
    for (int j = 0; j < kDeviceSites; ++j) out.p[j] += std::norm(layer(j));
  }
  return out;
}

inline double p_out(const StateVector& psi, SiteIndex output = SiteIndex(27)) {
  double p = 0.0;
  for (std::size_t w = 0; w < psi.basis().configurations(); ++w) p += std::norm(psi.layer(w)(output.offset()));
  return p;
}

struct FluxSample {
  double flux = 0.0;
  double p_out = 0.0;
};

struct NormalizedSample {
  double flux = 0.0;
  double dp_norm = 0.0;
};

struct SweepExtrema {
  double p_min = 0.0;
  double p_max = 0.0;
  double mid() const { return 0.5 * (p_max + p_min); }
};

inline SweepExtrema sweep_extrema(std::span<const FluxSample> sweep) {
  if (sweep.empty()) throw std::invalid_argument("flux sweep is empty");
  auto [lo, hi] = std::minmax_element(sweep.begin(), sweep.end(),
                                      [](const auto& a, const auto& b) { return a.p_out < b.p_out; });
  return {lo->p_out, hi->p_out};
}

/// (P_out - P_mid) / P_mid with P_mid the midpoint of the sampled extrema.
inline std::vector<NormalizedSample> normalized_output(std::span<const FluxSample> sweep) {
  const auto ext = sweep_extrema(sweep);
  if (!(ext.mid() > 0.0)) throw std::domain_error("degenerate sweep: output is identically zero");
  std::vector<NormalizedSample> out;
  out.reserve(sweep.size());
  for (const auto& s : sweep) out.push_back({s.flux, (s.p_out - ext.mid()) / ext.mid()});
  return out;
}

inline constexpr std::size_t kMinVisibilitySamples = 101;

/// (P_max - P_min) / (P_max + P_min) over a sweep spanning at least one flux period.
inline double visibility(std::span<const FluxSample> sweep) {
  if (sweep.size() < kMinVisibilitySamples)
    throw std::invalid_argument("visibility needs at least 101 flux samples");
  auto [lo, hi] = std::minmax_element(sweep.begin(), sweep.end(),
                                      [](const auto& a, const auto& b) { return a.flux < b.flux; });
  if (hi->flux - lo->flux < 1.0 - 1e-12)
    throw std::invalid_argument("visibility sweep must cover a full flux period");
  const auto ext = sweep_extrema(sweep);
  if (!(ext.p_max + ext.p_min > 0.0)) throw std::domain_error("degenerate sweep: output is identically zero");
  return (ext.p_max - ext.p_min) / (ext.p_max + ext.p_min);
}

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double length() const { return std::sqrt(x * x + y * y + z * z); }
};

/// Expectations of sigma_x, sigma_y, sigma_z for witness m (zero-based),
/// with |alpha> as the first basis state of the witness.
inline BlochVector bloch_vector(const StateVector& psi, int m) {
  if (m < 0 || m >= psi.n_wit) throw std::out_of_range("witness index out of range");
  const std::size_t bit = std::size_t{1} << m;
  std::complex<double> coherence = 0.0;
  double pa = 0.0, pb = 0.0;
  for (std::size_t w = 0; w < psi.basis().configurations(); ++w) {
    if (w & bit) continue;
    auto alpha = psi.layer(w);
    auto beta = psi.layer(w | bit);
    coherence += alpha.dot(beta);  // sum conj(alpha) * beta
    pa += alpha.squaredNorm();
    pb += beta.squaredNorm();
  }
  return {2.0 * coherence.real(), 2.0 * coherence.imag(), pa - pb};
}

/// 2x2 reduced density matrix (1 + lambda . sigma) / 2 in the (alpha, beta) basis.
inline Eigen::Matrix2cd witness_density(const BlochVector& b) {
  using c = std::complex<double>;
  Eigen::Matrix2cd rho;
  rho << c(1.0 + b.z, 0.0), c(b.x, -b.y), c(b.x, b.y), c(1.0 - b.z, 0.0);
  return 0.5 * rho;
}

inline double coherence_angle(const BlochVector& b) { return std::atan2(b.y, b.x); }

inline double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

inline double binary_entropy_bits(double p) { return -xlog2x(p) - xlog2x(1.0 - p); }

/// Entropy of a two-level system from its eigenvalues (1 +- |lambda|)/2.
inline double witness_entropy_bits(const BlochVector& b) {
  const double r = std::min(1.0, b.length());
  return binary_entropy_bits(0.5 * (1.0 + r));
}

/// -Tr(rho log2 rho) from the eigenvalues of a Hermitian density matrix.
inline double von_neumann_entropy_bits(const Eigen::MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("density matrix eigendecomposition failed");
  double s = 0.0;
  for (double p : solver.eigenvalues()) s -= xlog2x(p);
  return s;
}

/// rho(j, j') = sum_w psi(w, j) conj(psi(w, j')).
inline Eigen::MatrixXcd device_density_matrix(const StateVector& psi) {
  const auto n = static_cast<Eigen::Index>(psi.basis().configurations());
  Eigen::Map<const Eigen::MatrixXcd> layers(psi.amplitudes.data(), kDeviceSites, n);
  return layers * layers.adjoint();
}

struct WitnessState {
  BlochVector bloch;
  double theta = 0.0;
  double entropy = 0.0;
};

struct WitnessReport {
  std::vector<WitnessState> witnesses;
  double device_entropy = 0.0;
  double time = 0.0;
};

inline WitnessReport witness_report(const StateVector& psi) {
  WitnessReport r;
  r.time = psi.time;
  r.witnesses.reserve(static_cast<std::size_t>(psi.n_wit));
  for (int m = 0; m < psi.n_wit; ++m) {
    const auto b = bloch_vector(psi, m);
    r.witnesses.push_back({b, coherence_angle(b), witness_entropy_bits(b)});
  }
  r.device_entropy = von_neumann_entropy_bits(device_density_matrix(psi));
  return r;
}

inline WitnessReport witness_report(const StateVector& psi, std::span<const WitnessSpec> witnesses) {
  if (witnesses.size() != static_cast<std::size_t>(psi.n_wit))
    throw std::invalid_argument("witness list does not match the state");
  return witness_report(psi);
}

/// Marginal occupancies (p_alpha, p_beta) of witness m.
inline std::pair<double, double> witness_site_occupancy(const StateVector& psi, int m) {
  if (psi.n_wit == 0) throw std::invalid_argument("state has no witnesses");
  const auto b = bloch_vector(psi, m);
  const double total = psi.amplitudes.squaredNorm();
  return {0.5 * (total + b.z), 0.5 * (total - b.z)};
}

/// Removes 2*pi jumps between consecutive samples.
inline std::vector<double> unwrap_angles(std::span<const double> angles) {
  std::vector<double> out(angles.begin(), angles.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double step = std::remainder(angles[i] - angles[i - 1], 2.0 * std::numbers::pi);
    out[i] = out[i - 1] + step;
  }
  return out;
}

}  // namespace blindwit
