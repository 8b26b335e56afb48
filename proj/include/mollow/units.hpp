#ifndef MOLLOW_UNITS_HPP
#define MOLLOW_UNITS_HPP

#include <numbers>

// Internal unit system: durations in ns, angular frequencies in rad/ns,
// photon rates in 1/ns (= GHz). Conversions happen at the I/O boundary.
namespace mollow::units {

inline constexpr double ns = 1.0;
inline constexpr double ps = 1e-3;
inline constexpr double us = 1e3;
inline constexpr double ms = 1e6;
inline constexpr double s = 1e9;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Cyclic frequency in GHz to angular frequency in rad/ns.
constexpr double angular(double ghz) { return two_pi * ghz; }
/// Angular frequency in rad/ns to cyclic GHz.
constexpr double cyclic(double rad_per_ns) { return rad_per_ns / two_pi; }

constexpr double to_ps(double t_ns) { return t_ns / ps; }
constexpr double from_ps(double t_ps) { return t_ps * ps; }

inline constexpr double planck = 6.62607015e-34;  // J s
inline constexpr double speed_of_light = 299792458.0;  // m/s

// Gaussian FWHM = 2 sqrt(2 ln 2) sigma
inline constexpr double fwhm_per_sigma = 2.3548200450309493;

} // namespace mollow::units

#endif // MOLLOW_UNITS_HPP
