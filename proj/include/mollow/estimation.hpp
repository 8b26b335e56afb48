#ifndef MOLLOW_ESTIMATION_HPP
#define MOLLOW_ESTIMATION_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "correlations.hpp"
#include "levenberg_marquardt.hpp"
#include "params.hpp"
#include "traces.hpp"

// Least-squares recovery of model parameters. All quantities are in the
// internal unit system (ns, rad/ns, 1/ns); see units.hpp.
namespace mollow {

struct DataSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::optional<std::vector<double>> y_err;

    std::size_t size() const { return x.size(); }
};

void validate(const DataSeries& data);

/// sigma_i = sqrt(max(y_i, 1)) for count data.
std::vector<double> poisson_errors(const std::vector<double>& counts);

struct FitResult {
    std::map<std::string, double> params;
    std::map<std::string, double> std_errors;  // empty when the Jacobian is rank-deficient
    double residual_norm = 0.0;
    int n_iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
    std::vector<double> residual_history;
};

/// Gaussian: least squares weighted by y_err (unit weights without errors).
/// Poisson: y holds counts, or counts times a per-point scale y_err^2 / y;
/// the fit maximizes the Poisson likelihood through signed deviance
/// residuals, which avoids the low bias of sqrt(counts) weights.
enum class Likelihood { Gaussian, Poisson };

struct FitOptions {
    LmOptions lm{};
    Likelihood likelihood = Likelihood::Gaussian;
};

/// Saturation law with eta_sys known. data: (n_bar, detected rate 1/ns).
/// Params: s_sat, n0, saturation_rate (= eta_sys s_sat).
FitResult fit_saturation(const DataSeries& data, double eta_sys, const FitOptions& opt = {});

/// IRF-convolved single exponential. data: (t ns, counts). Params: t1,
/// amplitude, t0. With irf_fwhm == 0 the onset t0 is held at the first sample
/// above half maximum. Without y_err the counts are fitted by Poisson likelihood.
FitResult fit_lifetime(const DataSeries& data, double irf_fwhm, const FitOptions& opt = {});

/// Rabi frequency from a spectrum with T1, T2 held fixed. Params: rabi, scale.
FitResult fit_spectrum_rabi(const SpectrumTrace& spectrum, const EmitterParams& emitter,
                            const std::optional<std::vector<double>>& errors = std::nullopt,
                            const FitOptions& opt = {});

struct G2FitConfig {
    double irf_fwhm = 0.040;
    bool fit_irf = false;
};

/// Closed-form g2 through IRF convolution and background dilution.
/// data: (tau ns on a uniform grid, g2). Params: rabi, signal_fraction
/// [, irf_fwhm], plus g2_at_zero (model value, no error).
FitResult fit_g2(const DataSeries& data, const EmitterParams& emitter, const G2FitConfig& cfg = {},
                 const FitOptions& opt = {});

/// T2 and coherent fraction from interference visibility; T1, Omega and the
/// laser coherence time come from `model_template`.
FitResult fit_visibility(const DataSeries& data, const VisibilityModel& model_template,
                         const FitOptions& opt = {});

/// Two-time-constant cascade model. Params: tau_rise, tau_fall, amplitude,
/// order (+1 T heralds F, -1 F heralds T).
FitResult fit_cascade(const DataSeries& data, const FitOptions& opt = {});

/// Exponentially modified Gaussian: A exp(-(t-t0)/tau) convolved with a
/// unit-area Gaussian of width sigma.
double exp_gauss(double t, double amplitude, double tau, double t0, double sigma);

/// erfc(x) exp(x^2), stable for large x.
double erfcx(double x);

} // namespace mollow

#endif // MOLLOW_ESTIMATION_HPP
