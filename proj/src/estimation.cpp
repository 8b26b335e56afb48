#include "mollow/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "mollow/instrument.hpp"
#include "mollow/mollow_spectra.hpp"
#include "mollow/peaks.hpp"
#include "mollow/units.hpp"

namespace mollow {

namespace {

// Residuals of the data against a model: (y - m)/sigma for a Gaussian
// likelihood, signed deviance residuals for a Poisson one.
class Residuals {
public:
    Residuals(const DataSeries& data, Likelihood likelihood) : data_(data), poisson_(likelihood == Likelihood::Poisson)
    {
        if (!poisson_)
            return;
        std::vector<double> scales;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data.y[i] < 0.0)
                throw std::invalid_argument("Poisson likelihood needs non-negative data");
            if (data.y_err && data.y[i] > 0.0)
                scales.push_back((*data.y_err)[i] * (*data.y_err)[i] / data.y[i]);
        }
        double fallback = 1.0;
        if (!scales.empty()) {
            auto mid = scales.begin() + static_cast<std::ptrdiff_t>(scales.size() / 2);
            std::nth_element(scales.begin(), mid, scales.end());
            fallback = *mid;
        }
        scale_.resize(data.size(), fallback);
        if (data.y_err)
            for (std::size_t i = 0; i < data.size(); ++i)
                if (data.y[i] > 0.0)
                    scale_[i] = (*data.y_err)[i] * (*data.y_err)[i] / data.y[i];
    }

    Eigen::VectorXd operator()(const std::vector<double>& model) const
    {
        Eigen::VectorXd r(static_cast<Eigen::Index>(data_.size()));
        for (std::size_t i = 0; i < data_.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            if (!poisson_) {
                const double s = data_.y_err ? (*data_.y_err)[i] : 1.0;
                r[k] = (data_.y[i] - model[i]) / s;
                continue;
            }
            const double n = data_.y[i] / scale_[i];
            const double mu = model[i] / scale_[i];
            if (!(mu > 0.0)) {
                r[k] = n > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
                continue;
            }
            // deviance 2 mu h(x), x = n/mu - 1, h(x) = (1 + x) ln(1 + x) - x,
            // with a series where the closed form cancels
            const double x = (n - mu) / mu;
            double h;
            if (n == 0.0)
                h = 1.0;
            else if (std::abs(x) < 1e-3)
                h = x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 12.0 - x / 20.0)));
            else
                h = (1.0 + x) * std::log1p(x) - x;
            r[k] = std::copysign(std::sqrt(2.0 * mu * std::max(h, 0.0)), n - mu);
        }
        return r;
    }

    /// Residuals are normalized by absolute errors (no chi^2 rescaling).
    bool absolute() const { return poisson_ || data_.y_err.has_value(); }

private:
    const DataSeries& data_;
    bool poisson_;
    std::vector<double> scale_;
};

FitResult finish(const LmResult& lm, const std::vector<std::string>& names, bool absolute_sigma)
{
    FitResult out;
    for (std::size_t k = 0; k < names.size(); ++k)
        out.params[names[k]] = lm.params[static_cast<Eigen::Index>(k)];
    const auto cov = covariance(lm.jacobian, lm.residuals, absolute_sigma);
    if (cov.full_rank)
        for (std::size_t k = 0; k < names.size(); ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            out.std_errors[names[k]] = std::sqrt(std::max(0.0, cov.matrix(i, i)));
        }
    else
        out.warnings.push_back("rank-deficient Jacobian; standard errors omitted");
    out.residual_norm = lm.residual_norm;
    out.n_iterations = lm.iterations;
    out.converged = lm.converged;
    out.residual_history = lm.history;
    return out;
}

Eigen::VectorXd to_vector(std::initializer_list<double> v)
{
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v)
        x[i++] = d;
    return x;
}

std::size_t argmax(const std::vector<double>& y)
{
    return static_cast<std::size_t>(std::distance(y.begin(), std::max_element(y.begin(), y.end())));
}

double uniform_step(const std::vector<double>& x)
{
    if (x.size() < 3)
        throw DegenerateData("trace needs at least three samples");
    const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i)
        if (std::abs((x[i] - x[i - 1]) - h) > 1e-6 * h)
            throw GridError("data grid is not uniform");
    return h;
}

// Robust noise level from successive differences.
double noise_from_differences(const std::vector<double>& y)
{
    std::vector<double> d;
    d.reserve(y.size());
    for (std::size_t i = 1; i < y.size(); ++i)
        d.push_back(std::abs(y[i] - y[i - 1]));
    if (d.empty())
        return 0.0;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
    return d[d.size() / 2] / 0.6745 / std::numbers::sqrt2;
}

std::vector<double> gaussian_smooth(const std::vector<double>& y, double sigma_samples)
{
    if (sigma_samples < 0.5)
        return y;
    const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_samples));
    std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
    for (std::ptrdiff_t k = -half; k <= half; ++k)
        w[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * static_cast<double>(k * k) / (sigma_samples * sigma_samples));
    const auto n = static_cast<std::ptrdiff_t>(y.size());
    std::vector<double> out(y.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0, norm = 0.0;
        for (std::ptrdiff_t k = -half; k <= half; ++k) {
            const std::ptrdiff_t j = i + k;
            if (j < 0 || j >= n)
                continue;
            acc += w[static_cast<std::size_t>(k + half)] * y[static_cast<std::size_t>(j)];
            norm += w[static_cast<std::size_t>(k + half)];
        }
        out[static_cast<std::size_t>(i)] = acc / norm;
    }
    return out;
}

} // namespace

void validate(const DataSeries& data)
{
    if (data.x.size() != data.y.size())
        throw std::invalid_argument("data x and y differ in length");
    if (data.y_err) {
        if (data.y_err->size() != data.y.size())
            throw std::invalid_argument("data y_err length differs from y");
        for (double e : *data.y_err)
            if (!(e > 0.0))
                throw std::invalid_argument("data y_err must be > 0");
    }
    for (std::size_t i = 0; i < data.size(); ++i)
        if (!std::isfinite(data.x[i]) || !std::isfinite(data.y[i]))
            throw std::invalid_argument("data contains non-finite values");
}

std::vector<double> poisson_errors(const std::vector<double>& counts)
{
    std::vector<double> e(counts.size());
    std::transform(counts.begin(), counts.end(), e.begin(),
                   [](double c) { return std::sqrt(std::max(c, 1.0)); });
    return e;
}

// ---------------------------------------------------------------------------
// saturation

FitResult fit_saturation(const DataSeries& data, double eta_sys, const FitOptions& opt)
{
    validate(data);
    if (data.size() < 5)
        throw DegenerateData("saturation fit needs at least 5 points");
    if (!(eta_sys > 0.0) || eta_sys > 1.0)
        throw std::invalid_argument("eta_sys must lie in (0, 1]");

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return data.x[a] < data.x[b]; });
    const auto lo = order.front(), hi = order.back();
    if (!(data.x[lo] > 0.0))
        throw DegenerateData("saturation fit needs n_bar > 0 for every point");
    const double slope_lo = data.y[lo] / data.x[lo];
    const double slope_hi = data.y[hi] / data.x[hi];
    if (!(slope_hi < 0.5 * slope_lo))
        throw DegenerateData("no saturation visible: all points lie in the linear region");

    const double plateau = *std::max_element(data.y.begin(), data.y.end());
    double n_half = data.x[lo];
    for (auto i : order)
        if (data.y[i] >= 0.5 * plateau) {
            n_half = data.x[i];
            break;
        }

    const Residuals weigh(data, opt.likelihood);
    auto residual = [&](const Eigen::VectorXd& p) {
        if (!(p[0] > 0.0) || !(p[1] > 0.0))
            throw DomainError("Domain", "saturation parameters must stay positive");
        std::vector<double> m(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            m[i] = eta_sys * p[0] * data.x[i] / (data.x[i] + p[1]);
        return weigh(m);
    };
    const auto lm = levenberg_marquardt(residual, to_vector({1.05 * plateau / eta_sys, n_half}), opt.lm);
    auto out = finish(lm, {"s_sat", "n0"}, weigh.absolute());
    out.params["saturation_rate"] = eta_sys * out.params["s_sat"];
    if (out.std_errors.contains("s_sat"))
        out.std_errors["saturation_rate"] = eta_sys * out.std_errors["s_sat"];
    return out;
}

// ---------------------------------------------------------------------------
// lifetime

double erfcx(double x)
{
    if (x < 25.0)
        return std::exp(x * x) * std::erfc(x);
    const double inv2 = 1.0 / (x * x);
    const double series = 1.0 - 0.5 * inv2 + 0.75 * inv2 * inv2 - 1.875 * inv2 * inv2 * inv2;
    return series / (x * std::sqrt(std::numbers::pi));
}

double exp_gauss(double t, double amplitude, double tau, double t0, double sigma)
{
    const double x = t - t0;
    if (sigma <= 0.0)
        return x >= 0.0 ? amplitude * std::exp(-x / tau) : 0.0;
    const double z = (sigma / tau - x / sigma) / std::numbers::sqrt2;
    if (z < 0.0) {
        // exp(s^2/2tau^2 - x/tau) erfc(z) with erfc(z) ~ 2 for z << 0
        const double e = 0.5 * sigma * sigma / (tau * tau) - x / tau;
        return 0.5 * amplitude * std::exp(e) * std::erfc(z);
    }
    return 0.5 * amplitude * erfcx(z) * std::exp(-0.5 * x * x / (sigma * sigma));
}

FitResult fit_lifetime(const DataSeries& data_in, double irf_fwhm, const FitOptions& opt)
{
    validate(data_in);
    if (data_in.size() < 5)
        throw DegenerateData("lifetime fit needs at least 5 points");
    if (irf_fwhm < 0.0)
        throw std::invalid_argument("irf_fwhm must be >= 0");
    const DataSeries& data = data_in;
    const Residuals weigh(data, data.y_err ? opt.likelihood : Likelihood::Poisson);

    const double sigma = irf_fwhm / units::fwhm_per_sigma;
    const std::size_t i_max = argmax(data.y);
    const double y_max = data.y[i_max];
    std::size_t i_half = i_max;
    for (std::size_t i = 0; i <= i_max; ++i)
        if (data.y[i] >= 0.5 * y_max) {
            i_half = i;
            break;
        }
    const double t_onset = data.x[i_half];

    // log-linear tail slope
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = i_max; i < data.size(); ++i) {
        if (data.y[i] < std::max(0.02 * y_max, 5.0))
            continue;
        const double w = data.y[i];
        const double ly = std::log(data.y[i]);
        sw += w; sx += w * data.x[i]; sy += w * ly; sxx += w * data.x[i] * data.x[i]; sxy += w * data.x[i] * ly;
    }
    const double denom = sw * sxx - sx * sx;
    double tau0 = 0.2 * (data.x.back() - data.x[i_max]);
    if (denom > 0.0) {
        const double slope = (sw * sxy - sx * sy) / denom;
        if (slope < 0.0)
            tau0 = -1.0 / slope;
    }

    FitResult out;
    if (sigma == 0.0) {
        auto residual = [&](const Eigen::VectorXd& p) {
            if (!(p[0] > 0.0))
                throw DomainError("Domain", "lifetime must stay positive");
            std::vector<double> m(data.size());
            for (std::size_t i = 0; i < data.size(); ++i)
                m[i] = exp_gauss(data.x[i], p[1], p[0], t_onset, 0.0);
            return weigh(m);
        };
        const auto lm = levenberg_marquardt(residual, to_vector({tau0, y_max}), opt.lm);
        out = finish(lm, {"t1", "amplitude"}, true);
        out.params["t0"] = t_onset;
    } else {
        auto residual = [&](const Eigen::VectorXd& p) {
            if (!(p[0] > 0.0))
                throw DomainError("Domain", "lifetime must stay positive");
            std::vector<double> m(data.size());
            for (std::size_t i = 0; i < data.size(); ++i)
                m[i] = exp_gauss(data.x[i], p[1], p[0], p[2], sigma);
            return weigh(m);
        };
        const double amp0 = y_max / std::max(1e-3, exp_gauss(data.x[i_max], 1.0, tau0, t_onset, sigma));
        Eigen::VectorXd scale(3);
        scale << tau0, y_max, std::max(sigma, tau0);
        const auto lm = levenberg_marquardt(residual, to_vector({tau0, amp0, t_onset}), opt.lm, scale);
        out = finish(lm, {"t1", "amplitude", "t0"}, true);
    }
    if (data.x.back() - data.x[i_max] < 3.0 * out.params["t1"])
        out.warnings.push_back("decay tail shorter than 3 lifetimes");
    return out;
}

// ---------------------------------------------------------------------------
// spectrum

FitResult fit_spectrum_rabi(const SpectrumTrace& spectrum, const EmitterParams& emitter,
                            const std::optional<std::vector<double>>& errors, const FitOptions& opt)
{
    validate(emitter);
    DataSeries data{spectrum.offsets, spectrum.intensities, errors};
    validate(data);
    const double h = uniform_step(data.x);

    // features on a copy smoothed well below the 1/T2 linewidth
    const auto smooth = gaussian_smooth(data.y, 0.25 * emitter.gamma2() / h);
    auto features = find_peaks(data.x, smooth);
    bool shoulders = false;
    if (features.size() < 3) {
        features = find_shoulders(data.x, smooth);
        shoulders = true;
    }
    if (features.size() < 3)
        throw NoSidebands("spectrum shows fewer than three resolvable lines");
    // central line nearest the global maximum; the strongest feature on each
    // side of it is the sideband (weaker ones are wing noise)
    const double x_peak = data.x[argmax(smooth)];
    const auto centre = std::min_element(features.begin(), features.end(), [&](const Peak& a, const Peak& b) {
        return std::abs(a.position - x_peak) < std::abs(b.position - x_peak);
    });
    auto by_height = [](const Peak& a, const Peak& b) { return a.height < b.height; };
    if (centre == features.begin() || centre + 1 == features.end())
        throw NoSidebands("no line on one side of the central peak");
    const auto lower = std::max_element(features.begin(), centre, by_height);
    const auto upper = std::max_element(centre + 1, features.end(), by_height);
    const double half_split = 0.5 * (upper->position - lower->position);
    const double half_diff = 0.5 * (emitter.gamma1() - emitter.gamma2());
    const double rabi0 = std::sqrt(half_split * half_split + half_diff * half_diff);

    auto model_at = [&](double rabi) {
        const auto c = mollow_coefficients<double>(emitter.gamma1(), emitter.gamma2(), rabi, 0.0,
                                                   SpectrumMode::Standard);
        std::vector<double> m(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            m[i] = mollow_density(c, emitter.gamma2(), rabi, data.x[i], c.n_inf);
        return m;
    };
    const auto m0 = model_at(rabi0);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double w = data.y_err ? 1.0 / ((*data.y_err)[i] * (*data.y_err)[i]) : 1.0;
        num += w * data.y[i] * m0[i];
        den += w * m0[i] * m0[i];
    }
    const double scale0 = den > 0.0 ? num / den : 1.0;

    const Residuals weigh(data, opt.likelihood);
    auto residual = [&](const Eigen::VectorXd& p) {
        // the measured line splitting pins the Rabi frequency to within a factor of a few
        if (!(p[0] > 0.25 * rabi0 && p[0] < 4.0 * rabi0))
            throw DomainError("Domain", "Rabi frequency left the range set by the line splitting");
        auto m = model_at(p[0]);
        for (auto& v : m)
            v *= p[1];
        return weigh(m);
    };
    const auto lm = levenberg_marquardt(residual, to_vector({rabi0, scale0}), opt.lm);
    auto out = finish(lm, {"rabi", "scale"}, weigh.absolute());
    if (shoulders)
        out.warnings.push_back("sidebands located from curvature shoulders, not separate maxima");
    return out;
}

// ---------------------------------------------------------------------------
// g2

FitResult fit_g2(const DataSeries& data, const EmitterParams& emitter, const G2FitConfig& cfg,
                 const FitOptions& opt)
{
    validate(data);
    validate(emitter);
    const double h = uniform_step(data.x);
    const double gamma1 = emitter.gamma1(), gamma2 = emitter.gamma2();
    const double eta = 0.5 * (gamma1 + gamma2);
    const double half_diff = 0.5 * std::abs(gamma1 - gamma2);

    double extent = 0.0;
    for (double t : data.x)
        extent = std::max(extent, std::abs(t));
    if (extent < 3.0 / eta)
        throw DegenerateData("g2 trace must span at least 3/eta");

    // symmetric model lattice aligned with the data samples
    const double phase = data.x.front() - h * std::floor(data.x.front() / h);
    const double reach = extent + 6.0 * std::max(cfg.irf_fwhm, h) + h;
    const auto n_half = static_cast<std::ptrdiff_t>(std::ceil(reach / h));
    std::vector<double> lattice;
    for (std::ptrdiff_t k = -n_half; k <= n_half; ++k)
        lattice.push_back(phase + static_cast<double>(k) * h);
    std::vector<std::size_t> index(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        index[i] = static_cast<std::size_t>(std::llround((data.x[i] - lattice.front()) / h));
    std::size_t zero_index = 0;
    for (std::size_t k = 1; k < lattice.size(); ++k)
        if (std::abs(lattice[k]) < std::abs(lattice[zero_index]))
            zero_index = k;

    auto evaluate = [&](double rabi, double rho, double irf) {
        if (!(rabi > 0.0) || !(rho > 0.0) || rho > 1.5 || irf < 0.0)
            throw DomainError("Domain", "g2 parameters left the physical range");
        CorrelationTrace t;
        t.taus = lattice;
        t.values.resize(lattice.size());
        for (std::size_t k = 0; k < lattice.size(); ++k)
            t.values[k] = g2_value(gamma1, gamma2, rabi, lattice[k]);
        auto conv = convolve_irf(t, irf);
        const double r2 = rho * rho;
        for (auto& v : conv.values)
            v = 1.0 + r2 * (v - 1.0);
        return conv.values;
    };

    // initial guesses: dip depth for rho, first bunching maximum for mu
    double g_min = 1.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (std::abs(data.x[i]) < 0.5 / eta)
            g_min = std::min(g_min, data.y[i]);
    const double rho0 = std::sqrt(std::clamp(1.0 - g_min, 0.05, 1.0));

    std::vector<double> xp, yp;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.x[i] > 0.0) {
            xp.push_back(data.x[i]);
            yp.push_back(data.y[i]);
        }
    const double noise = data.y_err
        ? std::accumulate(data.y_err->begin(), data.y_err->end(), 0.0) / static_cast<double>(data.size())
        : noise_from_differences(data.y);
    const auto ys = gaussian_smooth(yp, 0.1 / eta / h);
    bool oscillation = false;
    double rabi0 = 1.2 * half_diff + 0.5 * eta;
    for (const auto& p : find_peaks(xp, ys, 0.0)) {
        if (p.height > 1.0 + 3.0 * noise && p.position > 0.2 / eta) {
            const double mu = std::numbers::pi / p.position;
            rabi0 = std::sqrt(mu * mu + half_diff * half_diff);
            oscillation = true;
            break;
        }
    }

    const bool fit_irf = cfg.fit_irf;
    const Residuals weigh(data, opt.likelihood);
    auto residual = [&](const Eigen::VectorXd& p) {
        const auto m = evaluate(p[0], p[1], fit_irf ? p[2] : cfg.irf_fwhm);
        std::vector<double> sampled(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            sampled[i] = m[index[i]];
        return weigh(sampled);
    };

    Eigen::VectorXd x0 = fit_irf ? to_vector({rabi0, rho0, std::max(cfg.irf_fwhm, 2.0 * h)})
                                 : to_vector({rabi0, rho0});
    Eigen::VectorXd scale = fit_irf ? to_vector({eta, 1.0, 0.01}) : to_vector({eta, 1.0});
    const auto lm = levenberg_marquardt(residual, x0, opt.lm, scale);
    std::vector<std::string> names{"rabi", "signal_fraction"};
    if (fit_irf)
        names.push_back("irf_fwhm");
    auto out = finish(lm, names, weigh.absolute());
    const auto best = evaluate(lm.params[0], lm.params[1], fit_irf ? lm.params[2] : cfg.irf_fwhm);
    out.params["g2_at_zero"] = best[zero_index];

    const bool rabi_loose = !out.std_errors.contains("rabi")
        || out.std_errors["rabi"] > 0.3 * std::abs(out.params["rabi"]);
    if (!oscillation || rabi_loose)
        out.warnings.push_back("rabi under-constrained: no resolved oscillation in g2");
    return out;
}

// ---------------------------------------------------------------------------
// visibility

FitResult fit_visibility(const DataSeries& data, const VisibilityModel& tmpl, const FitOptions& opt)
{
    validate(data);
    validate(tmpl.emitter);
    validate(tmpl.drive);
    if (data.size() < 4)
        throw DegenerateData("visibility fit needs at least 4 points");
    if (!(tmpl.laser_coherence_time > 0.0))
        throw std::invalid_argument("visibility template needs a laser coherence time");
    const double gamma1 = tmpl.emitter.gamma1();
    const double rabi = tmpl.drive.rabi;

    auto shapes = [&](double t2, std::vector<double>& incoh, std::vector<double>& coh) {
        if (!(t2 > 0.0))
            throw DomainError("Domain", "t2 must stay positive");
        const double g2r = 1.0 / t2;
        const double norm = g1_incoh_value(gamma1, g2r, rabi, 0.0);
        if (!(norm > 0.0))
            throw DomainError("Domain", "incoherent g1 vanishes");
        incoh.resize(data.size());
        coh.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            incoh[i] = g1_incoh_value(gamma1, g2r, rabi, data.x[i]) / norm;
            coh[i] = std::exp(-std::abs(data.x[i]) / tmpl.laser_coherence_time);
        }
    };

    // coarse scan in t2; the coherent fraction enters linearly
    double best_cost = std::numeric_limits<double>::infinity();
    double t2_0 = tmpl.emitter.t2, c0 = tmpl.coherent_fraction;
    std::vector<double> incoh, coh;
    for (int k = 0; k <= 36; ++k) {
        const double t2 = tmpl.emitter.t1 * (0.2 + 0.05 * k);
        shapes(t2, incoh, coh);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double s = data.y_err ? (*data.y_err)[i] : 1.0;
            const double d = (coh[i] - incoh[i]) / s;
            num += d * (data.y[i] - incoh[i]) / s;
            den += d * d;
        }
        const double c = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
        double cost = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double s = data.y_err ? (*data.y_err)[i] : 1.0;
            const double r = (data.y[i] - (c * coh[i] + (1.0 - c) * incoh[i])) / s;
            cost += r * r;
        }
        if (cost < best_cost) {
            best_cost = cost;
            t2_0 = t2;
            c0 = c;
        }
    }

    const Residuals weigh(data, opt.likelihood);
    auto residual = [&](const Eigen::VectorXd& p) {
        std::vector<double> a, b;
        shapes(p[0], a, b);
        std::vector<double> m(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            m[i] = p[1] * b[i] + (1.0 - p[1]) * a[i];
        return weigh(m);
    };
    Eigen::VectorXd scale(2);
    scale << tmpl.emitter.t1, 0.1;
    const auto lm = levenberg_marquardt(residual, to_vector({t2_0, c0}), opt.lm, scale);
    auto out = finish(lm, {"t2", "coherent_fraction"}, weigh.absolute());
    if (out.params["t2"] > 2.0 * tmpl.emitter.t1)
        out.warnings.push_back("fitted t2 exceeds 2*t1 (negative pure dephasing)");
    return out;
}

// ---------------------------------------------------------------------------
// cascade

FitResult fit_cascade(const DataSeries& data, const FitOptions& opt)
{
    validate(data);
    if (data.size() < 6)
        throw DegenerateData("cascade fit needs at least 6 points");

    double sum_pos = 0.0, sum_neg = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    double var_sum = 0.0;
    const double noise = data.y_err ? 0.0 : noise_from_differences(data.y);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double s = data.y_err ? (*data.y_err)[i] : noise;
        var_sum += s * s;
        if (data.x[i] > 0.0) {
            sum_pos += data.y[i] - 1.0;
            ++n_pos;
        } else if (data.x[i] < 0.0) {
            sum_neg += data.y[i] - 1.0;
            ++n_neg;
        }
    }
    if (n_pos == 0 || n_neg == 0)
        throw AmbiguousData("cascade data must cover both signs of tau");
    const double asym = sum_pos - sum_neg;
    if (!(std::abs(asym) > 3.0 * std::sqrt(var_sum) + 1e-12 * static_cast<double>(data.size())))
        throw AmbiguousData("trace is symmetric about tau = 0 within noise; order undetermined");
    const bool positive = asym > 0.0;

    // peak on the heralded side
    double peak_t = 0.0, peak_v = -1.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool heralded = positive ? data.x[i] > 0.0 : data.x[i] < 0.0;
        if (heralded && data.y[i] - 1.0 > peak_v) {
            peak_v = data.y[i] - 1.0;
            peak_t = std::abs(data.x[i]);
        }
    }
    const double base = std::max(peak_t, 1e-6) / std::numbers::ln2;

    const Residuals weigh(data, opt.likelihood);
    auto residual = [&](const Eigen::VectorXd& p) {
        if (!(p[0] > 0.0) || !(p[1] > 0.0))
            throw DomainError("Domain", "cascade time constants must stay positive");
        std::vector<double> m(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            m[i] = cascade_value(p[0], p[1], p[2], 1.0, positive, data.x[i]);
        return weigh(m);
    };
    Eigen::VectorXd scale(3);
    scale << base, base, 1.0;
    std::optional<LmResult> best;
    for (const auto& [r, f] : {std::pair{0.8, 1.2}, std::pair{1.2, 0.8}}) {
        const double amp0 = std::max(peak_v, 1e-3) / 0.25;
        auto lm = levenberg_marquardt(residual, to_vector({r * base, f * base, amp0}), opt.lm, scale);
        if (!best || lm.residual_norm < best->residual_norm)
            best = std::move(lm);
    }
    auto out = finish(*best, {"tau_rise", "tau_fall", "amplitude"}, weigh.absolute());
    out.params["order"] = positive ? 1.0 : -1.0;
    return out;
}

} // namespace mollow
