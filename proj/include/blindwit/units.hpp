#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

// Working units: hbar = gamma = a = e = 1. Energies are in gamma, lengths in a,
// and every time that crosses the public API is expressed in units of tau.

namespace blindwit {

inline constexpr int kDeviceSites = 35;

/// Device hopping energy; every energy is measured in it.
inline constexpr double kGammaUnit = 1.0;

/// tau in units of hbar/gamma. With this value the packet peak sits on the
/// output site at kFinalTime.
inline constexpr double kTau = std::numbers::pi / 2.0;

/// End of the interference experiment, in tau.
inline constexpr double kFinalTime = 5.27;

inline constexpr const char* kVersion = "0.1.0";

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical invariant (norm, Hermiticity, decomposition) failed at run time.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace blindwit
