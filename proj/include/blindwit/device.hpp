#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "blindwit/units.hpp"

namespace blindwit {

using cplx = std::complex<double>;

/// 1-based device site label. 1-15 input lead, 16-20 top branch,
/// 21-25 bottom branch, 26-35 output lead.
class SiteIndex {
 public:
  constexpr SiteIndex() = default;
  constexpr explicit SiteIndex(int value) : value_(value) {
    if (value < 1 || value > kDeviceSites)
      throw std::out_of_range("site index " + std::to_string(value) + " outside [1, 35]");
  }

  constexpr int value() const { return value_; }
  /// Zero-based offset into device vectors.
  constexpr std::size_t offset() const { return static_cast<std::size_t>(value_ - 1); }

  friend constexpr bool operator==(SiteIndex, SiteIndex) = default;
  friend constexpr auto operator<=>(SiteIndex, SiteIndex) = default;

 private:
  int value_ = 1;
};

inline constexpr int kTopBranchFirst = 16;
inline constexpr int kBottomBranchFirst = 21;
inline constexpr int kBranchLength = 5;

/// Branch alias: top positions 1..5 and bottom positions 1'..5'.
struct BranchSite {
  enum class Arm { top, bottom };

  Arm arm = Arm::top;
  int position = 1;

  static BranchSite top(int k) { return checked(Arm::top, k); }
  static BranchSite bottom(int k) { return checked(Arm::bottom, k); }

  /// Parses "3" (top) or "3'" (bottom).
  static BranchSite parse(std::string_view label) {
    bool primed = !label.empty() && label.back() == '\'';
    if (primed) label.remove_suffix(1);
    if (label.size() != 1 || label[0] < '1' || label[0] > '5')
      throw std::invalid_argument("branch label must be one of 1..5 or 1'..5'");
    int k = label[0] - '0';
    return primed ? bottom(k) : top(k);
  }

  SiteIndex site() const {
    return SiteIndex((arm == Arm::top ? kTopBranchFirst : kBottomBranchFirst) + position - 1);
  }

  /// The same position on the opposite branch.
  BranchSite mirror() const { return {arm == Arm::top ? Arm::bottom : Arm::top, position}; }

  std::string label() const {
    std::string s = std::to_string(position);
    if (arm == Arm::bottom) s += '\'';
    return s;
  }

  friend bool operator==(const BranchSite&, const BranchSite&) = default;

 private:
  static BranchSite checked(Arm arm, int k) {
    if (k < 1 || k > kBranchLength)
      throw std::invalid_argument("branch position " + std::to_string(k) + " outside [1, 5]");
    return {arm, k};
  }
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

struct DeviceGeometry {
  std::array<Position, kDeviceSites> positions{};
  std::vector<std::pair<SiteIndex, SiteIndex>> edges;
  SiteIndex output_site{27};

  const Position& position(SiteIndex s) const { return positions[s.offset()]; }

  int degree(SiteIndex s) const {
    int d = 0;
    for (const auto& [a, b] : edges) d += (a == s) + (b == s);
    return d;
  }
};

/// Magnetic flux through the loop in units of the flux quantum 2*pi*hbar/e.
struct FluxRatio {
  double value = 0.0;
};

/// Closed loop through the branches in traversal order: left fork, along the
/// top branch, right fork, back along the bottom branch.
inline std::vector<SiteIndex> loop_sites() {
  std::vector<SiteIndex> loop{SiteIndex(15)};
  for (int s = 16; s <= 20; ++s) loop.emplace_back(s);
  loop.emplace_back(26);
  for (int s = 25; s >= 21; --s) loop.emplace_back(s);
  return loop;
}

inline DeviceGeometry build_geometry() {
  DeviceGeometry g;
  for (int j = 1; j <= 15; ++j) g.positions[j - 1] = {double(j - 1), 0.0};
  for (int k = 0; k < kBranchLength; ++k) {
    g.positions[kTopBranchFirst - 1 + k] = {15.0 + k, 0.5};
    g.positions[kBottomBranchFirst - 1 + k] = {15.0 + k, -0.5};
  }
  for (int j = 26; j <= 35; ++j) g.positions[j - 1] = {double(j - 6), 0.0};

  auto link = [&](int a, int b) { g.edges.emplace_back(SiteIndex(a), SiteIndex(b)); };
  for (int j = 1; j < 15; ++j) link(j, j + 1);
  link(15, 16);
  link(15, 21);
  for (int k = 0; k < kBranchLength - 1; ++k) {
    link(kTopBranchFirst + k, kTopBranchFirst + k + 1);
    link(kBottomBranchFirst + k, kBottomBranchFirst + k + 1);
  }
  link(20, 26);
  link(25, 26);
  for (int j = 26; j < 35; ++j) link(j, j + 1);
  return g;
}

/// Shoelace area of the polygon through the loop site centres.
inline double enclosed_area(const DeviceGeometry& g) {
  auto loop = loop_sites();
  double twice = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const auto& p = g.position(loop[i]);
    const auto& q = g.position(loop[(i + 1) % loop.size()]);
    twice += p.x * q.y - q.x * p.y;
  }
  return std::abs(twice) / 2.0;
}

/// Line integral of A = -B y x-hat along the straight bond from `from` to `to`.
inline double peierls_phase(const DeviceGeometry& g, double field, SiteIndex to, SiteIndex from) {
  const auto& ri = g.position(to);
  const auto& rj = g.position(from);
  return -field * 0.5 * (ri.y + rj.y) * (ri.x - rj.x);
}

struct DeviceHamiltonian {
  Eigen::MatrixXcd matrix;
  double gamma = 1.0;
  FluxRatio flux;
};

inline DeviceHamiltonian build_device_hamiltonian(const DeviceGeometry& g, double gamma,
                                                  FluxRatio flux) {
  if (!(gamma > 0.0)) throw std::invalid_argument("hopping energy gamma must be positive");

  const double field = 2.0 * std::numbers::pi * flux.value / enclosed_area(g);
  DeviceHamiltonian h{Eigen::MatrixXcd::Zero(kDeviceSites, kDeviceSites), gamma, flux};
  for (const auto& [a, b] : g.edges) {
    // t_ab couples |a><b|: the hop from b to a.
    const cplx t = -gamma * std::polar(1.0, -peierls_phase(g, field, a, b));
    h.matrix(a.offset(), b.offset()) = t;
    h.matrix(b.offset(), a.offset()) = std::conj(t);
  }
  return h;
}

/// Sum of the Peierls phases read back from the matrix along loop_sites(),
/// wrapped to (-pi, pi]. Equals -2*pi*phi/phi0 mod 2*pi.
inline double loop_phase(const DeviceHamiltonian& h) {
  auto loop = loop_sites();
  double sum = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    SiteIndex from = loop[i];
    SiteIndex to = loop[(i + 1) % loop.size()];
    sum += -std::arg(-h.matrix(to.offset(), from.offset()) / h.gamma);
  }
  double wrapped = std::remainder(sum, 2.0 * std::numbers::pi);
  return wrapped <= -std::numbers::pi ? wrapped + 2.0 * std::numbers::pi : wrapped;
}

inline DeviceHamiltonian add_static_scatterers(DeviceHamiltonian h, std::span<const SiteIndex> sites,
                                               double potential) {
  for (SiteIndex s : sites) h.matrix(s.offset(), s.offset()) += potential;
  return h;
}

/// Overload for raw 1-based labels; range-checked.
inline DeviceHamiltonian add_static_scatterers(DeviceHamiltonian h, std::span<const int> sites,
                                               double potential) {
  std::vector<SiteIndex> checked;
  checked.reserve(sites.size());
  for (int s : sites) checked.emplace_back(s);
  return add_static_scatterers(std::move(h), std::span<const SiteIndex>(checked), potential);
}

inline double hermiticity_defect(const Eigen::MatrixXcd& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace blindwit
