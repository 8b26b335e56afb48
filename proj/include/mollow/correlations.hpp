#ifndef MOLLOW_CORRELATIONS_HPP
#define MOLLOW_CORRELATIONS_HPP

#include <cmath>
#include <span>

#include "errors.hpp"
#include "mollow_spectra.hpp"
#include "params.hpp"
#include "traces.hpp"

namespace mollow {

namespace detail {

// cos(mu t) and sin(mu t)/mu continued through mu^2 <= 0.
template <typename Scalar>
void oscillation(Scalar m2, Scalar t, Scalar& cos_part, Scalar& sinc_part)
{
    using std::cos; using std::sin; using std::cosh; using std::sinh; using std::sqrt;
    if (m2 > Scalar(0)) {
        const Scalar mu = sqrt(m2);
        cos_part = cos(mu * t);
        sinc_part = sin(mu * t) / mu;
    } else if (m2 < Scalar(0)) {
        const Scalar kappa = sqrt(-m2);
        cos_part = cosh(kappa * t);
        sinc_part = sinh(kappa * t) / kappa;
    } else {
        cos_part = Scalar(1);
        sinc_part = t;
    }
}

} // namespace detail

/// g2(tau) = 1 - exp(-eta|tau|) [cos(mu|tau|) + eta/mu sin(mu|tau|)], analytically
/// continued to the over-damped and critical branches.
template <typename Scalar>
Scalar g2_value(Scalar gamma1, Scalar gamma2, Scalar rabi, Scalar tau)
{
    using std::abs; using std::exp;
    const Scalar t = abs(tau);
    const Scalar eta = Scalar(0.5) * (gamma1 + gamma2);
    Scalar c, s;
    detail::oscillation(mu_squared(gamma1, gamma2, rabi), t, c, s);
    return Scalar(1) - exp(-eta * t) * (c + eta * s);
}

/// Unnormalized incoherent first-order coherence (three-term closed form).
template <typename Scalar>
Scalar g1_incoh_value(Scalar gamma1, Scalar gamma2, Scalar rabi, Scalar tau)
{
    using std::abs; using std::exp;
    const Scalar t = abs(tau);
    const Scalar r2 = rabi * rabi;
    const Scalar d = r2 + gamma1 * gamma2;
    const Scalar eta = Scalar(0.5) * (gamma1 + gamma2);
    Scalar c, s;
    detail::oscillation(mu_squared(gamma1, gamma2, rabi), t, c, s);
    const Scalar diff = gamma2 - gamma1;
    const Scalar cos_coef = Scalar(0.5) * (d - gamma1 * gamma1) / d;
    const Scalar sin_coef = Scalar(0.25) * (r2 * (gamma2 - Scalar(3) * gamma1) + gamma1 * diff * diff) / d;
    const Scalar pref = r2 / (Scalar(2) * d);
    return pref * (Scalar(0.5) * exp(-gamma2 * t) + exp(-eta * t) * (cos_coef * c - sin_coef * s));
}

/// Closed-form g2 on the oscillatory branch; throws UnderdampedDomain otherwise.
CorrelationTrace g2_closed(const EmitterParams& emitter, const DriveParams& drive,
                           std::span<const double> taus);

/// Same expression on every branch (cosh/sinh below threshold).
CorrelationTrace g2_continued(const EmitterParams& emitter, const DriveParams& drive,
                              std::span<const double> taus);

/// Closed-form incoherent g1 normalized to its tau = 0 value.
CorrelationTrace g1_incoh_closed(const EmitterParams& emitter, const DriveParams& drive,
                                 std::span<const double> taus);

struct VisibilityModel {
    double coherent_fraction = 0.0;
    double laser_coherence_time = 0.0;  // ns
    EmitterParams emitter;
    DriveParams drive;
};

/// V(tau) = c exp(-|tau|/tau_laser) + (1 - c) g1_incoh(tau).
CorrelationTrace visibility(const VisibilityModel& model, std::span<const double> delays);

enum class CascadeOrder { THeraldsF, FHeraldsT };

/// Phenomenological cross-correlation of opposite sidebands.
struct CascadeModel {
    double tau_rise = 0.0;  // ns
    double tau_fall = 0.0;  // ns
    double amplitude = 0.0;
    double baseline = 1.0;
    CascadeOrder order = CascadeOrder::THeraldsF;
};

template <typename Scalar>
Scalar cascade_value(Scalar tau_rise, Scalar tau_fall, Scalar amplitude, Scalar baseline,
                     bool heralded_positive, Scalar tau)
{
    using std::exp;
    // heralded side: rise with tau_rise, fall with tau_fall; other side: roles exchanged
    const bool heralded = heralded_positive ? tau >= Scalar(0) : tau <= Scalar(0);
    const Scalar t = tau >= Scalar(0) ? tau : -tau;
    const Scalar rise = heralded ? tau_rise : tau_fall;
    const Scalar fall = heralded ? tau_fall : tau_rise;
    return baseline + amplitude * (Scalar(1) - exp(-t / rise)) * exp(-t / fall);
}

CorrelationTrace cascade_cross_correlation(const CascadeModel& model, std::span<const double> taus);

void validate(const CascadeModel& model);

} // namespace mollow

#endif // MOLLOW_CORRELATIONS_HPP
