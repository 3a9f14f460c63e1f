#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blindwit/device.hpp"

namespace blindwit {

/// A two-dot witness field-coupled to one branch site. gamma_w == 0 makes it blind.
struct WitnessSpec {
  BranchSite position;
  double e_int = 5.0;
  double gamma_w = 0.0;

  SiteIndex partner() const { return position.site(); }
  bool blind() const { return gamma_w == 0.0; }
};

/// Symmetric layouts used for 0, 2, 4, 6 and 8 witnesses.
inline std::vector<BranchSite> standard_witness_layout(int n_wit) {
  auto pairs = [](std::initializer_list<int> ks) {
    std::vector<BranchSite> out;
    for (int k : ks) {
      out.push_back(BranchSite::top(k));
      out.push_back(BranchSite::bottom(k));
    }
    return out;
  };
  switch (n_wit) {
    case 0: return {};
    case 2: return pairs({3});
    case 4: return pairs({1, 5});
    case 6: return pairs({1, 3, 5});
    case 8: return pairs({1, 2, 4, 5});
    default:
      throw std::invalid_argument("no standard layout for " + std::to_string(n_wit) +
                                  " witnesses; layout requires explicit positions");
  }
}

inline std::vector<WitnessSpec> make_witnesses(std::span<const BranchSite> layout, double e_int,
                                               double gamma_w = 0.0) {
  std::vector<WitnessSpec> out;
  out.reserve(layout.size());
  for (const auto& p : layout) out.push_back({p, e_int, gamma_w});
  return out;
}

/// Global index g = w * 35 + (j - 1). Bit m of the configuration w is 0 when
/// witness m (zero-based) sits on its alpha dot and 1 for beta.
struct CompositeBasis {
  static constexpr std::size_t device_dim = kDeviceSites;
  int n_wit = 0;

  std::size_t configurations() const { return std::size_t{1} << n_wit; }
  std::size_t dimension() const { return configurations() * device_dim; }
  std::size_t index(std::size_t config, SiteIndex site) const {
    return config * device_dim + site.offset();
  }
  static bool alpha_occupied(std::size_t config, int m) { return ((config >> m) & 1u) == 0; }
};

// Caps the composite dimension 2^n * 35 at about 2.3M.
inline constexpr int kMaxWitnesses = 16;

/// Normalized amplitudes under CompositeBasis, tagged with the time in tau.
struct StateVector {
  Eigen::VectorXcd amplitudes;
  int n_wit = 0;
  double time = 0.0;

  CompositeBasis basis() const { return {n_wit}; }
  /// Device-sized slice for one witness configuration.
  auto layer(std::size_t config) const {
    return amplitudes.segment(static_cast<Eigen::Index>(config * kDeviceSites), kDeviceSites);
  }
  auto layer(std::size_t config) {
    return amplitudes.segment(static_cast<Eigen::Index>(config * kDeviceSites), kDeviceSites);
  }
  double norm() const { return amplitudes.norm(); }
};

/// H = sum_m H_w^(m) + H_d + sum_m E_int |alpha_m><alpha_m| (x) |j_m><j_m|,
/// every term embedded in the composite space.
class TotalHamiltonian {
 public:
  TotalHamiltonian(DeviceHamiltonian device, std::vector<WitnessSpec> witnesses)
      : device_(std::move(device)), witnesses_(std::move(witnesses)) {
    if (witnesses_.size() > static_cast<std::size_t>(kMaxWitnesses))
      throw std::invalid_argument("at most " + std::to_string(kMaxWitnesses) + " witnesses");
    for (std::size_t a = 0; a < witnesses_.size(); ++a)
      for (std::size_t b = a + 1; b < witnesses_.size(); ++b)
        if (witnesses_[a].position == witnesses_[b].position)
          throw std::invalid_argument("duplicate witness position " +
                                      witnesses_[a].position.label());
  }

  const DeviceHamiltonian& device() const { return device_; }
  const std::vector<WitnessSpec>& witnesses() const { return witnesses_; }
  int n_wit() const { return static_cast<int>(witnesses_.size()); }
  CompositeBasis basis() const { return {n_wit()}; }
  std::size_t dimension() const { return basis().dimension(); }

  bool blind() const {
    for (const auto& w : witnesses_)
      if (!w.blind()) return false;
    return true;
  }

  /// Diagonal block for one witness configuration: H_d plus E_int on the
  /// partner site of every witness whose alpha dot is occupied.
  Eigen::MatrixXcd block(std::size_t config) const {
    Eigen::MatrixXcd b = device_.matrix;
    for (int m = 0; m < n_wit(); ++m)
      if (CompositeBasis::alpha_occupied(config, m)) {
        auto j = witnesses_[m].partner().offset();
        b(j, j) += witnesses_[m].e_int;
      }
    return b;
  }

  Eigen::MatrixXcd dense() const {
    const auto basis = this->basis();
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t w = 0; w < basis.configurations(); ++w) {
      const auto off = static_cast<Eigen::Index>(w * kDeviceSites);
      h.block(off, off, kDeviceSites, kDeviceSites) = block(w);
      for (int m = 0; m < n_wit(); ++m) {
        if (witnesses_[m].blind()) continue;
        const auto partner = static_cast<Eigen::Index>((w ^ (std::size_t{1} << m)) * kDeviceSites);
        for (Eigen::Index j = 0; j < kDeviceSites; ++j) h(off + j, partner + j) = -witnesses_[m].gamma_w;
      }
    }
    return h;
  }

 private:
  DeviceHamiltonian device_;
  std::vector<WitnessSpec> witnesses_;
};

inline TotalHamiltonian build_total_hamiltonian(DeviceHamiltonian device,
                                                std::vector<WitnessSpec> witnesses) {
  return TotalHamiltonian(std::move(device), std::move(witnesses));
}

/// Product state: each witness in (|alpha> + e^{i theta_m}|beta>)/sqrt(2),
/// device in `packet`. Phases default to zero.
inline StateVector initial_composite_state(const Eigen::VectorXcd& packet, int n_wit,
                                           std::span<const double> witness_phases = {}) {
  if (packet.size() != kDeviceSites)
    throw std::invalid_argument("packet must have 35 device amplitudes");
  if (std::abs(packet.norm() - 1.0) > 1e-9) throw std::invalid_argument("packet is not normalized");
  if (n_wit < 0 || n_wit > kMaxWitnesses) throw std::invalid_argument("invalid witness count");
  if (!witness_phases.empty() && witness_phases.size() != static_cast<std::size_t>(n_wit))
    throw std::invalid_argument("need one initial phase per witness");

  CompositeBasis basis{n_wit};
  StateVector psi{Eigen::VectorXcd(static_cast<Eigen::Index>(basis.dimension())), n_wit, 0.0};
  const double amp = std::pow(std::numbers::sqrt2, -n_wit);
  for (std::size_t w = 0; w < basis.configurations(); ++w) {
    double phase = 0.0;
    if (!witness_phases.empty())
      for (int m = 0; m < n_wit; ++m)
        if (!CompositeBasis::alpha_occupied(w, m)) phase += witness_phases[m];
    psi.layer(w) = packet * std::polar(amp, phase);
  }
  return psi;
}

inline StateVector initial_composite_state(const Eigen::VectorXcd& packet,
                                           std::span<const WitnessSpec> witnesses,
                                           std::span<const double> witness_phases = {}) {
  return initial_composite_state(packet, static_cast<int>(witnesses.size()), witness_phases);
}

}  // namespace blindwit
