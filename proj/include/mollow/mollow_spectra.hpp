#ifndef MOLLOW_MOLLOW_SPECTRA_HPP
#define MOLLOW_MOLLOW_SPECTRA_HPP

#include <cmath>
#include <numbers>
#include <span>

#include "errors.hpp"
#include "params.hpp"
#include "traces.hpp"

namespace mollow {

/// Coefficients of the closed-form triplet. Units: a_coef rad^2/ns^2,
/// b_coef rad^3/ns^3, eta 1/ns, mu rad/ns.
template <typename Scalar>
struct MollowCoefficients {
    Scalar a_coef{};
    Scalar b_coef{};
    Scalar eta{};
    Scalar mu{};
    Scalar n_inf{};  // steady-state population at zero offset
};

/// Steady-state excited population with `offset` in the detuning slot:
/// (Omega^2 T1/T2) / [2 (offset^2 + T2^-2 + Omega^2 T1/T2)].
template <typename Scalar>
Scalar steady_population(Scalar gamma1, Scalar gamma2, Scalar rabi, Scalar offset)
{
    const Scalar drive = rabi * rabi * gamma2 / gamma1;
    const Scalar denom = Scalar(2) * (offset * offset + gamma2 * gamma2 + drive);
    return drive / denom;
}

/// mu^2 = Omega^2 - (Gamma1 - Gamma2)^2 / 4; negative on the over-damped branch.
template <typename Scalar>
Scalar mu_squared(Scalar gamma1, Scalar gamma2, Scalar rabi)
{
    const Scalar half_diff = Scalar(0.5) * (gamma1 - gamma2);
    return rabi * rabi - half_diff * half_diff;
}

/// Coefficient algebra. Standard mode uses A = Omega^2 - (G1 - G2) G1, the sign
/// that makes the formula consistent with its B coefficient and with the
/// regression-theorem spectrum; Literal mode keeps A = Omega^2 + (G1 - G2) G1.
template <typename Scalar>
MollowCoefficients<Scalar> mollow_coefficients(Scalar gamma1, Scalar gamma2, Scalar rabi,
                                               Scalar laser_detuning, SpectrumMode mode)
{
    using std::sqrt;
    const Scalar m2 = mu_squared(gamma1, gamma2, rabi);
    if (!(m2 > Scalar(0)))
        throw UnderdampedDomain("mu^2 <= 0: drive below the oscillatory threshold |1/T1-1/T2|/2");
    const Scalar diff = gamma1 - gamma2;
    const Scalar r2 = rabi * rabi;
    MollowCoefficients<Scalar> c;
    c.a_coef = mode == SpectrumMode::Standard ? r2 - diff * gamma1 : r2 + diff * gamma1;
    c.b_coef = Scalar(2) * r2 * (Scalar(3) * gamma1 - gamma2) - Scalar(2) * diff * diff * gamma1;
    c.eta = Scalar(0.5) * (gamma1 + gamma2);
    c.mu = sqrt(m2);
    c.n_inf = steady_population(gamma1, gamma2, rabi,
                                mode == SpectrumMode::Standard ? laser_detuning : Scalar(0));
    return c;
}

/// Spectral density at `offset` (rad/ns) given coefficients and the population
/// entering the prefactor.
template <typename Scalar>
Scalar mollow_density(const MollowCoefficients<Scalar>& c, Scalar gamma2, Scalar rabi,
                      Scalar offset, Scalar n_inf)
{
    const Scalar pi = Scalar(std::numbers::pi);
    const Scalar eta2 = c.eta * c.eta;
    const Scalar center = Scalar(0.5) * gamma2 / (offset * offset + gamma2 * gamma2);
    const Scalar lo = offset - c.mu;
    const Scalar hi = offset + c.mu;
    const Scalar disp = c.b_coef / (Scalar(8) * c.mu);
    const Scalar side = (c.a_coef * c.eta / Scalar(2) - disp * lo) / (lo * lo + eta2)
        + (c.a_coef * c.eta / Scalar(2) + disp * hi) / (hi * hi + eta2);
    return n_inf / pi * (center + n_inf / (rabi * rabi) * side);
}

MollowCoefficients<double> coefficients(const EmitterParams& emitter, const DriveParams& drive,
                                        SpectrumMode mode = SpectrumMode::Standard);

/// Closed-form triplet on `freq_grid` (rad/ns). Literal mode evaluates the
/// population with the spectral offset in the detuning slot.
SpectrumTrace spectrum_closed(const EmitterParams& emitter, const DriveParams& drive,
                              std::span<const double> freq_grid,
                              SpectrumMode mode = SpectrumMode::Standard);

/// Line offsets from the bare emitter resonance, GHz.
struct SidebandPositions {
    double lower = 0.0;
    double upper = 0.0;
    double rayleigh = 0.0;
};

/// sqrt(Omega^2 + Delta^2), rad/ns.
inline double generalized_rabi(const DriveParams& drive)
{
    return std::hypot(drive.rabi, drive.detuning);
}

SidebandPositions sideband_positions(const DriveParams& drive);

/// Omega/2pi = k sqrt(n_bar), GHz.
double rabi_from_flux(double k_ghz, double n_bar);

struct TripletAreas {
    double lower = 0.0;
    double center = 0.0;
    double upper = 0.0;
};

/// Trapezoid areas of the three lines, split at +-split (rad/ns).
TripletAreas triplet_areas(const SpectrumTrace& trace, double split);

} // namespace mollow

#endif // MOLLOW_MOLLOW_SPECTRA_HPP
