#pragma once

#include <numbers>

namespace tcopt::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double deg_per_rad = 180.0 / pi;
inline constexpr double rad_per_deg = pi / 180.0;

[[nodiscard]] constexpr double deg_to_rad(double deg) { return deg * rad_per_deg; }
[[nodiscard]] constexpr double rad_to_deg(double rad) { return rad * deg_per_rad; }

[[nodiscard]] constexpr double hz_to_rad_s(double hz) { return hz * two_pi; }
[[nodiscard]] constexpr double rad_s_to_hz(double w) { return w / two_pi; }

/// Coupling constants are quoted per square degree; internally they are per square radian.
[[nodiscard]] constexpr double per_deg2_to_per_rad2(double v) { return v * deg_per_rad * deg_per_rad; }
[[nodiscard]] constexpr double per_rad2_to_per_deg2(double v) { return v * rad_per_deg * rad_per_deg; }

inline constexpr double micro = 1e-6;
inline constexpr double pico = 1e-12;

// CGS helpers for the texture-energy module.
inline constexpr double gauss_per_tesla = 1e4;
inline constexpr double cm_per_m = 100.0;
inline constexpr double erg_per_joule = 1e7;
inline constexpr double hbar_cgs = 1.054571817e-27; // erg s
inline constexpr double boltzmann = 1.380649e-23;   // J/K

} // namespace tcopt::units
