#include "mollow/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "mollow/errors.hpp"
#include "mollow/rng.hpp"
#include "mollow/units.hpp"

namespace mollow {

namespace {

double uniform_step(std::span<const double> x)
{
    if (x.size() < 2)
        throw GridError("trace needs at least two samples");
    const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i)
        if (std::abs((x[i] - x[i - 1]) - h) > 1e-6 * h)
            throw GridError("trace grid is not uniform");
    return h;
}

std::vector<double> gaussian_kernel(double fwhm, double h)
{
    const double sigma = fwhm / units::fwhm_per_sigma;
    const auto half = static_cast<std::size_t>(std::ceil(8.0 * sigma / h));
    std::vector<double> k(2 * half + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double x = (static_cast<double>(i) - static_cast<double>(half)) * h;
        k[i] = std::exp(-0.5 * x * x / (sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k)
        v /= sum;
    return k;
}

} // namespace

void validate(const FluxCalibration& cal)
{
    if (!(cal.wavelength_nm > 0.0))
        throw std::invalid_argument("calibration.wavelength must be > 0");
    if (!(cal.t1 > 0.0))
        throw std::invalid_argument("calibration.t1 must be > 0");
}

void validate(const InstrumentModel& instr)
{
    if (instr.irf_fwhm < 0.0 || instr.fp_linewidth < 0.0 || instr.grating_bandwidth < 0.0)
        throw std::invalid_argument("instrument widths must be >= 0");
    if (instr.background_reflectivity < 0.0 || instr.background_reflectivity > 1.0)
        throw std::invalid_argument("instrument.background_reflectivity must lie in [0, 1]");
    if (instr.detection_efficiency < 0.0 || instr.detection_efficiency > 1.0)
        throw std::invalid_argument("instrument.detection_efficiency must lie in [0, 1]");
    if (instr.background_slope && *instr.background_slope < 0.0)
        throw std::invalid_argument("instrument.background_slope must be >= 0");
}

void validate(const BlinkingModel& model)
{
    // rate_on_to_off == 0 is the always-bright limit
    if (!(model.rate_on_to_off >= 0.0) || !(model.rate_off_to_on > 0.0))
        throw std::invalid_argument("blinking rates: on->off must be >= 0, off->on > 0");
    if (model.bright_rate < 0.0)
        throw std::invalid_argument("blinking.bright_rate must be >= 0");
}

void validate(const SaturationParams& p)
{
    if (!(p.s_sat > 0.0) || !(p.n0 > 0.0))
        throw std::invalid_argument("saturation s_sat and n0 must be > 0");
    if (!(p.eta_sys > 0.0) || p.eta_sys > 1.0)
        throw std::invalid_argument("saturation eta_sys must lie in (0, 1]");
}

double flux_from_power(const FluxCalibration& cal, double power_nw)
{
    validate(cal);
    if (power_nw < 0.0)
        throw std::invalid_argument("power must be >= 0");
    const double photon_energy = units::planck * units::speed_of_light / (cal.wavelength_nm * 1e-9);
    return power_nw * 1e-9 * cal.t1 * 1e-9 / photon_energy;
}

double power_from_flux(const FluxCalibration& cal, double n_bar)
{
    return n_bar / flux_from_power(cal, 1.0);
}

double saturation_counts(const SaturationParams& p, double n_bar)
{
    validate(p);
    if (n_bar < 0.0)
        throw std::invalid_argument("n_bar must be >= 0");
    return p.eta_sys * p.s_sat * n_bar / (n_bar + p.n0);
}

double background_slope(const InstrumentModel& instr, const FluxCalibration& cal)
{
    validate(instr);
    validate(cal);
    if (instr.background_slope)
        return *instr.background_slope;
    return instr.background_reflectivity * instr.detection_efficiency / cal.t1;
}

CountRates detected_counts(const SaturationParams& p, const InstrumentModel& instr,
                           const FluxCalibration& cal, double n_bar)
{
    CountRates r;
    r.qd = saturation_counts(p, n_bar);
    r.background = background_slope(instr, cal) * n_bar;
    r.total = r.qd + r.background;
    return r;
}

double background_crossing_flux(const SaturationParams& p, const InstrumentModel& instr,
                                const FluxCalibration& cal)
{
    // beta n = eta s n / (n + n0)  =>  n = eta s / beta - n0
    const double beta = background_slope(instr, cal);
    validate(p);
    if (!(beta > 0.0))
        throw std::invalid_argument("background slope is zero; no crossing");
    return std::max(0.0, p.eta_sys * p.s_sat / beta - p.n0);
}

CorrelationTrace convolve_irf(const CorrelationTrace& trace, double irf_fwhm)
{
    if (irf_fwhm < 0.0)
        throw std::invalid_argument("irf_fwhm must be >= 0");
    const double h = uniform_step(trace.taus);
    if (irf_fwhm == 0.0)
        return trace;
    const auto kernel = gaussian_kernel(irf_fwhm, h);
    const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(trace.values.size());

    CorrelationTrace out = trace;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -half; k <= half; ++k) {
            const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(i - k, 0, n - 1);
            acc += kernel[static_cast<std::size_t>(k + half)] * trace.values[static_cast<std::size_t>(j)];
        }
        out.values[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

CorrelationTrace deconvolve_irf(const CorrelationTrace& trace, double irf_fwhm, double epsilon)
{
    if (irf_fwhm < 0.0 || epsilon < 0.0)
        throw std::invalid_argument("irf_fwhm and epsilon must be >= 0");
    const double h = uniform_step(trace.taus);
    if (irf_fwhm == 0.0)
        return trace;
    const auto kernel = gaussian_kernel(irf_fwhm, h);
    const std::size_t half = kernel.size() / 2;
    const std::size_t n = trace.values.size();

    // edge-extended signal so that circular convolution matches convolve_irf
    const std::size_t pad = 2 * half;
    std::size_t len = 1;
    while (len < n + 2 * pad)
        len <<= 1;
    std::vector<double> signal(len);
    for (std::size_t i = 0; i < len; ++i) {
        const auto j = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad);
        const auto idx = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(n) - 1);
        signal[i] = trace.values[static_cast<std::size_t>(idx)];
    }
    std::vector<double> ker(len, 0.0);
    for (std::size_t k = 0; k < kernel.size(); ++k)
        ker[(k + len - half) % len] = kernel[k];

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> s_hat, k_hat;
    fft.fwd(s_hat, signal);
    fft.fwd(k_hat, ker);
    double peak = 0.0;
    for (const auto& z : k_hat)
        peak = std::max(peak, std::norm(z));
    const double reg = epsilon * peak;
    for (std::size_t i = 0; i < s_hat.size(); ++i)
        s_hat[i] = s_hat[i] * std::conj(k_hat[i]) / (std::norm(k_hat[i]) + reg);
    std::vector<double> restored;
    fft.inv(restored, s_hat);

    CorrelationTrace out = trace;
    for (std::size_t i = 0; i < n; ++i)
        out.values[i] = restored[i + pad];
    return out;
}

CorrelationTrace add_background_g2(const CorrelationTrace& trace, double signal_fraction)
{
    if (signal_fraction < 0.0 || signal_fraction > 1.0)
        throw std::invalid_argument("signal_fraction must lie in [0, 1]");
    const double r2 = signal_fraction * signal_fraction;
    CorrelationTrace out = trace;
    for (auto& v : out.values)
        v = 1.0 + r2 * (v - 1.0);
    return out;
}

CorrelationTrace remove_background_g2(const CorrelationTrace& trace, double signal_fraction)
{
    if (!(signal_fraction > 0.0) || signal_fraction > 1.0)
        throw std::invalid_argument("background removal needs signal_fraction in (0, 1]");
    const double r2 = signal_fraction * signal_fraction;
    CorrelationTrace out = trace;
    for (auto& v : out.values)
        v = 1.0 + (v - 1.0) / r2;
    return out;
}

double coherent_power(const EmitterParams& emitter, const DriveParams& drive)
{
    const auto ss = steady_state(emitter, drive).state;
    return 0.25 * (ss.u * ss.u + ss.v * ss.v);
}

SpectrumTrace fp_filter_spectrum(const SpectrumTrace& spectrum, const InstrumentModel& instr,
                                 double coherent)
{
    validate(instr);
    const double gamma = instr.fp_linewidth;
    SpectrumTrace out = spectrum;
    if (gamma == 0.0 && coherent == 0.0)
        return out;
    const double h = uniform_step(spectrum.offsets);
    if (gamma == 0.0)
        throw GridError("a coherent component needs a finite Fabry-Perot linewidth");
    if (h > 0.5 * gamma)
        throw GridError("spectrum grid is coarser than half the Fabry-Perot linewidth");

    const std::size_t n = spectrum.offsets.size();
    const double hw = 0.5 * gamma;
    std::vector<double> lorentz(n);  // kernel by index distance
    for (std::size_t d = 0; d < n; ++d) {
        const double x = static_cast<double>(d) * h;
        lorentz[d] = hw / (std::numbers::pi * (x * x + hw * hw));
    }
    // Scatter form: each input sample spreads its power over the grid with a
    // kernel renormalized to the grid, so total power is conserved.
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t d = 0; d < n; ++d)
        prefix[d + 1] = prefix[d] + lorentz[d];
    auto mass = [&](std::size_t i) {
        // sum_j lorentz(|i - j|) for j in [0, n)
        return prefix[i + 1] + prefix[n - i] - lorentz[0];
    };

    std::fill(out.intensities.begin(), out.intensities.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = spectrum.intensities[i] / mass(i);
        if (w == 0.0)
            continue;
        for (std::size_t j = 0; j < n; ++j)
            out.intensities[j] += w * lorentz[i > j ? i - j : j - i];
    }
    if (coherent != 0.0) {
        // nearest grid point to zero offset
        std::size_t i0 = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(spectrum.offsets[i]) < std::abs(spectrum.offsets[i0]))
                i0 = i;
        const double w = coherent / (h * mass(i0));
        for (std::size_t j = 0; j < n; ++j)
            out.intensities[j] += w * lorentz[i0 > j ? i0 - j : j - i0];
    }
    return out;
}

std::vector<std::int64_t> blinking_trace(const BlinkingModel& model, double duration_s,
                                         double bin_ms, std::uint64_t seed)
{
    validate(model);
    if (!(bin_ms > 0.0) || !(duration_s > 0.0))
        throw std::invalid_argument("duration and bin must be > 0");
    const double duration_ms = duration_s * 1e3;
    if (duration_ms < bin_ms)
        throw std::invalid_argument("duration must exceed one bin");
    const auto n_bins = static_cast<std::size_t>(duration_ms / bin_ms);

    CounterRng rng(seed);
    CounterRng poisson_rng = rng.split(1);
    bool bright = rng.uniform() < model.duty_bright();
    double next_switch = rng.exponential(bright ? model.rate_on_to_off : model.rate_off_to_on);

    std::vector<std::int64_t> counts(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        const double start = static_cast<double>(b) * bin_ms;
        const double end = start + bin_ms;
        double t = start;
        double bright_time = 0.0;
        while (next_switch < end) {
            if (bright)
                bright_time += next_switch - t;
            t = next_switch;
            bright = !bright;
            next_switch = t + rng.exponential(bright ? model.rate_on_to_off : model.rate_off_to_on);
        }
        if (bright)
            bright_time += end - t;
        const double mean = model.bright_rate * bright_time / bin_ms;
        if (mean > 0.0) {
            std::poisson_distribution<std::int64_t> dist(mean);
            counts[b] = dist(poisson_rng);
        }
    }
    return counts;
}

double efficiency_budget(double measured_responsivity, double path_transmission,
                         double blinking_ratio)
{
    if (!(measured_responsivity > 0.0) || measured_responsivity > 1.0)
        throw std::invalid_argument("measured responsivity must lie in (0, 1]");
    if (!(path_transmission > 0.0) || path_transmission > 1.0)
        throw std::invalid_argument("path transmission must lie in (0, 1]");
    if (blinking_ratio < 1.0)
        throw std::invalid_argument("blinking ratio must be >= 1");
    return measured_responsivity * blinking_ratio / path_transmission;
}

double purcell_factor(double tau_on, double tau_off)
{
    if (!(tau_on > 0.0) || tau_off < tau_on)
        throw std::invalid_argument("purcell_factor needs tau_off >= tau_on > 0");
    return tau_off / tau_on - 1.0;
}

} // namespace mollow
