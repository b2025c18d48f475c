// units.hpp — frequency conventions shared by every module
//
// Configuration, spectra and reports use cyclic frequencies in GHz (the "/2π"
// values quoted for devices). Time is in ns. Dynamics run on angular
// frequencies in rad/ns; conversions go through the two helpers below only.

#pragma once

#include <numbers>

namespace ionize {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double to_angular(double cyclic_ghz) noexcept { return two_pi * cyclic_ghz; }
constexpr double to_cyclic(double rad_per_ns) noexcept { return rad_per_ns / two_pi; }

// Lifetime 1/κ in ns for a loss rate κ/2π given in GHz.
constexpr double inverse_rate_ns(double kappa_ghz) noexcept { return 1.0 / to_angular(kappa_ghz); }

inline constexpr const char* version = "0.1.0";

}  // namespace ionize
