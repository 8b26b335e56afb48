#ifndef MOLLOW_INSTRUMENT_HPP
#define MOLLOW_INSTRUMENT_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "bloch.hpp"
#include "params.hpp"
#include "traces.hpp"

namespace mollow {

/// Converts incident power to photons per radiative lifetime.
struct FluxCalibration {
    double wavelength_nm = 0.0;
    double t1 = 0.0;  // ns
};

/// Detection chain between emitter and counters. Linewidths are angular FWHM
/// in rad/ns; irf_fwhm in ns.
struct InstrumentModel {
    double irf_fwhm = 0.040;
    double fp_linewidth = 0.0;
    double grating_bandwidth = 0.0;
    double background_reflectivity = 0.0;
    double detection_efficiency = 1.0;
    /// Laser background counts per unit flux (1/ns); overrides the calibration.
    std::optional<double> background_slope;
};

/// Two-state telegraph; rates in 1/ms, bright_rate in counts per bin.
struct BlinkingModel {
    double rate_on_to_off = 1.0;
    double rate_off_to_on = 1.0;
    double bright_rate = 0.0;

    double duty_bright() const { return rate_off_to_on / (rate_on_to_off + rate_off_to_on); }
};

/// C = eta_sys s_sat n / (n + n0); s_sat in 1/ns.
struct SaturationParams {
    double s_sat = 0.0;
    double n0 = 0.0;
    double eta_sys = 1.0;
};

void validate(const FluxCalibration& cal);
void validate(const InstrumentModel& instr);
void validate(const BlinkingModel& model);
void validate(const SaturationParams& p);

/// n_bar = P T1 / (h c / lambda), power in nW.
double flux_from_power(const FluxCalibration& cal, double power_nw);
/// Inverse of flux_from_power, nW.
double power_from_flux(const FluxCalibration& cal, double n_bar);

/// Detected emitter count rate (1/ns).
double saturation_counts(const SaturationParams& p, double n_bar);

struct CountRates {
    double total = 0.0;
    double background = 0.0;
    double qd = 0.0;
};

/// Laser background slope beta (counts/ns per unit flux):
/// R_min * detection_efficiency * (incident photons per ns per unit flux = 1/T1).
double background_slope(const InstrumentModel& instr, const FluxCalibration& cal);

CountRates detected_counts(const SaturationParams& p, const InstrumentModel& instr,
                           const FluxCalibration& cal, double n_bar);

/// Flux at which background and emitter counts are equal.
double background_crossing_flux(const SaturationParams& p, const InstrumentModel& instr,
                                const FluxCalibration& cal);

/// Convolution with a unit-area Gaussian of the given FWHM (ns) on a uniform
/// grid; the trace is extended with its edge values.
CorrelationTrace convolve_irf(const CorrelationTrace& trace, double irf_fwhm);

/// Tikhonov-regularized frequency-domain inverse of convolve_irf.
/// epsilon is relative to the peak kernel response.
CorrelationTrace deconvolve_irf(const CorrelationTrace& trace, double irf_fwhm,
                                double epsilon = 1e-3);

/// g2_meas = 1 + rho^2 (g2 - 1) for a Poissonian background.
CorrelationTrace add_background_g2(const CorrelationTrace& trace, double signal_fraction);
CorrelationTrace remove_background_g2(const CorrelationTrace& trace, double signal_fraction);

/// rho from a signal:background ratio.
inline double signal_fraction_from_ratio(double signal_to_background)
{
    return signal_to_background / (1.0 + signal_to_background);
}

/// Power of the coherent (elastic) component, |<sigma->|^2.
double coherent_power(const EmitterParams& emitter, const DriveParams& drive);

/// Scanning Fabry-Perot: unit-area Lorentzian of FWHM instr.fp_linewidth.
/// Total power on the grid is conserved. A coherent delta of weight
/// `coherent` is added at offset 0 as a Lorentzian of the same width.
SpectrumTrace fp_filter_spectrum(const SpectrumTrace& spectrum, const InstrumentModel& instr,
                                 double coherent = 0.0);

/// Telegraph-modulated counts per bin; duration in s, bin in ms.
std::vector<std::int64_t> blinking_trace(const BlinkingModel& model, double duration_s,
                                         double bin_ms, std::uint64_t seed);

/// measured * blinking_ratio / path_transmission
double efficiency_budget(double measured_responsivity, double path_transmission,
                         double blinking_ratio);

/// tau_off / tau_on - 1
double purcell_factor(double tau_on, double tau_off);

} // namespace mollow

#endif // MOLLOW_INSTRUMENT_HPP
