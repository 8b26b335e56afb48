#ifndef MOLLOW_PARAMS_HPP
#define MOLLOW_PARAMS_HPP

#include <cmath>
#include <stdexcept>

#include "units.hpp"

namespace mollow {

/// Radiative lifetime and coherence time of the two-level emitter (ns).
struct EmitterParams {
    double t1 = 0.0;
    double t2 = 0.0;

    double gamma1() const { return 1.0 / t1; }
    double gamma2() const { return 1.0 / t2; }
    /// gamma_phi = 1/T2 - 1/(2 T1)
    double pure_dephasing() const { return gamma2() - 0.5 * gamma1(); }

    static EmitterParams from_ps(double t1_ps, double t2_ps)
    {
        return {units::from_ps(t1_ps), units::from_ps(t2_ps)};
    }
};

/// Rabi frequency and laser detuning Delta = omega_L - omega_0, both rad/ns.
struct DriveParams {
    double rabi = 0.0;
    double detuning = 0.0;

    static DriveParams from_ghz(double rabi_ghz, double detuning_ghz = 0.0)
    {
        return {units::angular(rabi_ghz), units::angular(detuning_ghz)};
    }
};

// Relative slack on t2 <= 2 t1 so that radiatively limited inputs given in ps
// round-trip through the unit conversion.
inline constexpr double kDephasingSlack = 1e-12;

inline void validate(const EmitterParams& e)
{
    if (!(e.t1 > 0.0) || !std::isfinite(e.t1))
        throw std::invalid_argument("emitter.t1 must be > 0");
    if (!(e.t2 > 0.0) || !std::isfinite(e.t2))
        throw std::invalid_argument("emitter.t2 must be > 0");
    if (e.t2 > 2.0 * e.t1 * (1.0 + kDephasingSlack))
        throw std::invalid_argument("emitter.t2 must not exceed 2*t1 (negative pure dephasing)");
}

inline void validate(const DriveParams& d)
{
    if (!(d.rabi >= 0.0) || !std::isfinite(d.rabi))
        throw std::invalid_argument("drive.rabi must be >= 0");
    if (!std::isfinite(d.detuning))
        throw std::invalid_argument("drive.detuning must be finite");
}

} // namespace mollow

#endif // MOLLOW_PARAMS_HPP
