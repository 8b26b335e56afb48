#include "mollow/mollow_spectra.hpp"

#include <stdexcept>

#include "mollow/units.hpp"

namespace mollow {

MollowCoefficients<double> coefficients(const EmitterParams& emitter, const DriveParams& drive,
                                        SpectrumMode mode)
{
    validate(emitter);
    validate(drive);
    return mollow_coefficients<double>(emitter.gamma1(), emitter.gamma2(), drive.rabi,
                                       drive.detuning, mode);
}

SpectrumTrace spectrum_closed(const EmitterParams& emitter, const DriveParams& drive,
                              std::span<const double> freq_grid, SpectrumMode mode)
{
    const auto c = coefficients(emitter, drive, mode);
    SpectrumTrace trace;
    trace.mode = mode;
    trace.offsets.assign(freq_grid.begin(), freq_grid.end());
    trace.intensities.reserve(freq_grid.size());
    for (std::size_t k = 1; k < freq_grid.size(); ++k)
        if (freq_grid[k] - freq_grid[k - 1] > 0.5 * emitter.gamma2())
            trace.coarse_grid_warning = true;
    for (const double x : freq_grid) {
        const double n_inf = mode == SpectrumMode::Literal
            ? steady_population(emitter.gamma1(), emitter.gamma2(), drive.rabi, x)
            : c.n_inf;
        trace.intensities.push_back(mollow_density(c, emitter.gamma2(), drive.rabi, x, n_inf));
    }
    return trace;
}

SidebandPositions sideband_positions(const DriveParams& drive)
{
    const double g = units::cyclic(generalized_rabi(drive));
    const double det = units::cyclic(drive.detuning);
    return {det - g, det + g, det};
}

double rabi_from_flux(double k_ghz, double n_bar)
{
    if (k_ghz < 0.0 || n_bar < 0.0)
        throw std::invalid_argument("rabi_from_flux needs k >= 0 and n_bar >= 0");
    return k_ghz * std::sqrt(n_bar);
}

TripletAreas triplet_areas(const SpectrumTrace& trace, double split)
{
    TripletAreas a;
    const auto& x = trace.offsets;
    const auto& y = trace.intensities;
    for (std::size_t k = 1; k < x.size(); ++k) {
        const double mid = 0.5 * (x[k] + x[k - 1]);
        const double area = 0.5 * (y[k] + y[k - 1]) * (x[k] - x[k - 1]);
        if (mid < -split)
            a.lower += area;
        else if (mid > split)
            a.upper += area;
        else
            a.center += area;
    }
    return a;
}

} // namespace mollow
