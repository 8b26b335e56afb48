#include "mollow/correlations.hpp"

#include <stdexcept>

namespace mollow {

namespace {

void require_oscillatory(const EmitterParams& e, const DriveParams& d)
{
    if (!(mu_squared(e.gamma1(), e.gamma2(), d.rabi) > 0.0))
        throw UnderdampedDomain("mu^2 <= 0: closed form needs Omega > |1/T1-1/T2|/2");
}

} // namespace

CorrelationTrace g2_continued(const EmitterParams& emitter, const DriveParams& drive,
                              std::span<const double> taus)
{
    validate(emitter);
    validate(drive);
    CorrelationTrace trace;
    trace.kind = CorrelationKind::G2;
    trace.taus.assign(taus.begin(), taus.end());
    trace.values.reserve(taus.size());
    for (const double t : taus)
        trace.values.push_back(g2_value(emitter.gamma1(), emitter.gamma2(), drive.rabi, t));
    return trace;
}

CorrelationTrace g2_closed(const EmitterParams& emitter, const DriveParams& drive,
                           std::span<const double> taus)
{
    require_oscillatory(emitter, drive);
    return g2_continued(emitter, drive, taus);
}

CorrelationTrace g1_incoh_closed(const EmitterParams& emitter, const DriveParams& drive,
                                 std::span<const double> taus)
{
    validate(emitter);
    validate(drive);
    require_oscillatory(emitter, drive);
    const double g1 = emitter.gamma1(), g2 = emitter.gamma2();
    const double norm = g1_incoh_value(g1, g2, drive.rabi, 0.0);
    CorrelationTrace trace;
    trace.kind = CorrelationKind::G1Incoh;
    trace.taus.assign(taus.begin(), taus.end());
    trace.values.reserve(taus.size());
    for (const double t : taus)
        trace.values.push_back(g1_incoh_value(g1, g2, drive.rabi, t) / norm);
    return trace;
}

CorrelationTrace visibility(const VisibilityModel& model, std::span<const double> delays)
{
    if (model.coherent_fraction < 0.0 || model.coherent_fraction > 1.0)
        throw std::invalid_argument("coherent_fraction must lie in [0, 1]");
    if (model.coherent_fraction > 0.0 && !(model.laser_coherence_time > 0.0))
        throw std::invalid_argument("laser_coherence_time must be > 0");
    auto trace = g1_incoh_closed(model.emitter, model.drive, delays);
    const double c = model.coherent_fraction;
    for (std::size_t i = 0; i < delays.size(); ++i) {
        const double coh = c > 0.0 ? std::exp(-std::abs(delays[i]) / model.laser_coherence_time) : 0.0;
        trace.values[i] = c * coh + (1.0 - c) * trace.values[i];
    }
    trace.kind = CorrelationKind::G1Incoh;
    return trace;
}

void validate(const CascadeModel& model)
{
    if (!(model.tau_rise > 0.0) || !(model.tau_fall > 0.0))
        throw std::invalid_argument("cascade time constants must be > 0");
    if (!(model.amplitude > 0.0))
        throw std::invalid_argument("cascade amplitude must be > 0");
}

CorrelationTrace cascade_cross_correlation(const CascadeModel& model, std::span<const double> taus)
{
    validate(model);
    CorrelationTrace trace;
    trace.kind = CorrelationKind::Cross;
    trace.taus.assign(taus.begin(), taus.end());
    trace.values.reserve(taus.size());
    const bool positive = model.order == CascadeOrder::THeraldsF;
    for (const double t : taus)
        trace.values.push_back(cascade_value(model.tau_rise, model.tau_fall, model.amplitude,
                                             model.baseline, positive, t));
    return trace;
}

} // namespace mollow
