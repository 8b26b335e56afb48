#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mollow/estimation.hpp"
#include "mollow/instrument.hpp"
#include "synthetic.hpp"

using namespace mollow;
using namespace mollow::test;

namespace {

bool within(const FitResult& r, const std::string& name, double truth, double n_sigma)
{
    return std::abs(r.params.at(name) - truth) <= n_sigma * r.std_errors.at(name);
}

bool monotone(const std::vector<double>& history)
{
    for (std::size_t i = 1; i < history.size(); ++i)
        if (history[i] > history[i - 1] * (1.0 + 1e-12))
            return false;
    return true;
}

} // namespace

TEST_CASE("erfcx and the exponentially modified Gaussian")
{
    CHECK(erfcx(0.0) == doctest::Approx(1.0));
    CHECK(erfcx(1.0) == doctest::Approx(std::exp(1.0) * std::erfc(1.0)).epsilon(1e-14));
    CHECK(erfcx(30.0) == doctest::Approx(0.018795888861416751).epsilon(1e-9));
    // sigma -> 0 limit is the bare exponential
    CHECK(exp_gauss(0.1, 2.0, 0.05, 0.0, 1e-6) == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-5));
    CHECK(exp_gauss(-0.1, 2.0, 0.05, 0.0, 0.0) == 0.0);
    // unit-area kernel: total area equals amplitude * tau
    double area = 0.0;
    for (double t = -1.0; t < 2.0; t += 1e-4)
        area += exp_gauss(t, 1.0, 0.0568, 0.0, 0.017) * 1e-4;
    CHECK(area == doctest::Approx(0.0568).epsilon(1e-6));
    // far tail stays finite
    CHECK(std::isfinite(exp_gauss(-5.0, 1.0, 0.0568, 0.0, 0.001)));
}

TEST_CASE("data validation")
{
    CHECK_THROWS_AS(validate(DataSeries{{1.0, 2.0}, {1.0}, std::nullopt}), std::invalid_argument);
    CHECK_THROWS_AS(validate(DataSeries{{1.0}, {1.0}, std::vector<double>{0.0}}), std::invalid_argument);
    CHECK(poisson_errors({0.0, 4.0})[0] == 1.0);
    CHECK(poisson_errors({0.0, 4.0})[1] == 2.0);
}

TEST_CASE("saturation fit: noiseless data recovered exactly")
{
    const auto d = saturation_data({}, 25, 0.0, 0);
    const auto r = fit_saturation(d, 0.03);
    CHECK(r.converged);
    CHECK(r.params.at("s_sat") == doctest::Approx(2.716).epsilon(1e-8));
    CHECK(r.params.at("n0") == doctest::Approx(0.125).epsilon(1e-8));
    CHECK(r.params.at("saturation_rate") == doctest::Approx(0.08148).epsilon(1e-8));
    CHECK(monotone(r.residual_history));
}

TEST_CASE("saturation fit: 1% noise recovers the generator constants within 2 sigma")
{
    CounterRng rng(11);
    auto d = saturation_data({}, 25, 0.0, 0);
    std::vector<double> err(d.size());
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < d.size(); ++i) {
        err[i] = 0.01 * d.y[i];
        d.y[i] += err[i] * normal(rng);
    }
    d.y_err = err;
    const auto r = fit_saturation(d, 0.03);
    CHECK(r.converged);
    CHECK(within(r, "s_sat", 2.716, 2.0));
    CHECK(within(r, "n0", 0.125, 2.0));
}

TEST_CASE("saturation fit: degenerate inputs")
{
    const DataSeries two{{0.1, 1.0}, {0.01, 0.02}, std::nullopt};
    CHECK_THROWS_AS(fit_saturation(two, 0.03), DegenerateData);
    DataSeries linear;
    for (int i = 1; i <= 8; ++i) {
        linear.x.push_back(0.001 * i);
        linear.y.push_back(0.03 * 2.716 * linear.x.back() / 0.125);
    }
    CHECK_THROWS_AS(fit_saturation(linear, 0.03), DegenerateData);
}

TEST_CASE("saturation fit: standard errors scale as 1/sqrt(N)")
{
    const auto small = fit_saturation(saturation_data({}, 20, 1e4, 3), 0.03);
    const auto large = fit_saturation(saturation_data({}, 80, 1e4, 3), 0.03);
    for (const char* p : {"s_sat", "n0"}) {
        const double ratio = small.std_errors.at(p) / large.std_errors.at(p);
        CHECK(ratio == doctest::Approx(2.0).epsilon(0.25));
    }
}

TEST_CASE("lifetime fit: noiseless delta IRF is exact")
{
    const auto d = lifetime_data({0.0568, 0.0, 0.0}, 0.0, 0);
    const auto r = fit_lifetime(d, 0.0);
    CHECK(r.converged);
    CHECK(r.params.at("t1") == doctest::Approx(0.0568).epsilon(1e-8));
    CHECK(r.params.at("t0") == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("lifetime fit: 40 ps IRF with Poisson noise")
{
    const auto r = fit_lifetime(lifetime_data({0.0568, 0.040, 0.0}, 1e4, 21), 0.040);
    CHECK(r.converged);
    CHECK(r.params.at("t1") == doctest::Approx(0.0568).epsilon(0.03));
    CHECK(monotone(r.residual_history));
}

TEST_CASE("lifetime fit: detuned lifetime and the Purcell factor")
{
    const auto on = fit_lifetime(lifetime_data({0.0568, 0.040, 0.0}, 1e4, 5), 0.040);
    const auto off = fit_lifetime(lifetime_data({0.6744, 0.040, 0.0}, 1e4, 6), 0.040);
    CHECK(off.params.at("t1") == doctest::Approx(0.6744).epsilon(0.03));
    const double f = purcell_factor(units::to_ps(on.params.at("t1")), units::to_ps(off.params.at("t1")));
    CHECK(f == doctest::Approx(10.87).epsilon(0.06));
    CHECK(purcell_factor(56.8, 674.4) == doctest::Approx(10.87).epsilon(1e-3));
}

TEST_CASE("lifetime fit warns on a short tail")
{
    auto d = lifetime_data({0.0568, 0.0, 0.0}, 0.0, 0);
    const auto cut = static_cast<std::size_t>(std::find_if(d.x.begin(), d.x.end(), [](double t) { return t > 0.1; }) - d.x.begin());
    d.x.resize(cut);
    d.y.resize(cut);
    const auto r = fit_lifetime(d, 0.0);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("spectrum fit: 4 GHz Rabi frequency within 2%")
{
    const auto clean = spectrum_data(4.0, 0.0, 0);
    auto r = fit_spectrum_rabi(clean.trace, device_emitter());
    CHECK(r.converged);
    CHECK(units::cyclic(r.params.at("rabi")) == doctest::Approx(4.0).epsilon(1e-6));
    const auto noisy_spec = spectrum_data(4.0, 1e4, 9);
    r = fit_spectrum_rabi(noisy_spec.trace, device_emitter(), noisy_spec.errors);
    CHECK(r.converged);
    CHECK(units::cyclic(r.params.at("rabi")) == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("spectrum fit: weak drive has no sidebands")
{
    const auto weak = spectrum_data(1.0, 0.0, 0);
    CHECK_THROWS_AS(fit_spectrum_rabi(weak.trace, device_emitter()), NoSidebands);
}

TEST_CASE("spectrum fit: Rabi frequency is linear in sqrt(n_bar)")
{
    std::vector<double> x, y;
    for (double n : {2.4, 4.8, 9.6}) {
        const auto s = spectrum_data(2.582 * std::sqrt(n), 1e4, 100 + static_cast<std::uint64_t>(n * 10));
        const auto r = fit_spectrum_rabi(s.trace, device_emitter(), s.errors);
        x.push_back(std::sqrt(n));
        y.push_back(units::cyclic(r.params.at("rabi")));
    }
    const double mx = (x[0] + x[1] + x[2]) / 3.0, my = (y[0] + y[1] + y[2]) / 3.0;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 3; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxy / sxx;
    CHECK(slope == doctest::Approx(2.582).epsilon(0.03));
    CHECK(std::abs(my - slope * mx) < 0.1);
}

TEST_CASE("g2 fit: ideal data recovered exactly")
{
    const auto d = g2_data({4.0, 1.0, 0.0}, 0.0, 0);
    const auto r = fit_g2(d, device_emitter(), {0.0, false});
    CHECK(r.converged);
    CHECK(units::cyclic(r.params.at("rabi")) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(r.params.at("signal_fraction") == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.params.at("g2_at_zero") == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("g2 fit: background, IRF and 2% noise")
{
    // 2500 coincidences per bin at the baseline: 2% relative noise
    const auto d = g2_data({4.0, 0.9, 0.040}, 2500.0, 17);
    const auto r = fit_g2(d, device_emitter(), {0.040, false});
    CHECK(r.converged);
    CHECK(units::cyclic(r.params.at("rabi")) == doctest::Approx(4.0).epsilon(0.05));
    CHECK(r.params.at("signal_fraction") == doctest::Approx(0.9).epsilon(0.05));
    const auto free_irf = fit_g2(d, device_emitter(), {0.030, true});
    CHECK(free_irf.params.at("irf_fwhm") == doctest::Approx(0.040).epsilon(0.2));
}

TEST_CASE("g2 fit: weak drive flags an under-constrained Rabi frequency")
{
    const double rabi_ghz = 2.582 * std::sqrt(0.02);
    const auto d = g2_data({rabi_ghz, signal_fraction_from_ratio(50.0), 0.040}, 2500.0, 4, 1.5);
    const auto r = fit_g2(d, device_emitter(), {0.040, false});
    bool flagged = false;
    for (const auto& w : r.warnings)
        flagged = flagged || w.find("under-constrained") != std::string::npos;
    CHECK(flagged);
    CHECK(r.params.at("g2_at_zero") > 0.02);
    CHECK(r.params.at("g2_at_zero") < 0.12);
}

TEST_CASE("g2 fit needs a trace longer than 3/eta")
{
    const auto d = g2_data({4.0, 1.0, 0.0}, 0.0, 0, 0.1);
    CHECK_THROWS_AS(fit_g2(d, device_emitter(), {0.0, false}), DegenerateData);
}

TEST_CASE("visibility fit: noiseless pure g1 decay")
{
    const VisibilityTruth t{0.1035, 0.0, 0.5, 4.0};
    const auto d = visibility_data(t, 0.0, 0);
    auto model = visibility_model(t);
    model.emitter.t2 = 0.08;
    const auto r = fit_visibility(d, model);
    CHECK(r.converged);
    CHECK(r.params.at("t2") == doctest::Approx(0.1035).epsilon(1e-7));
    CHECK(r.params.at("coherent_fraction") == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("visibility fit: T2 within 2% with noise")
{
    const VisibilityTruth t;
    const auto r = fit_visibility(visibility_data(t, 1e4, 8), visibility_model(t));
    CHECK(r.converged);
    CHECK(r.params.at("t2") == doctest::Approx(0.1035).epsilon(0.02));
    CHECK(r.params.at("coherent_fraction") == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("visibility fit: 79.1 ps is distinguishable from 103.5 ps at SNR 50")
{
    const VisibilityTruth t;
    const auto r = fit_visibility(visibility_data(t, 2500.0, 12), visibility_model(t));
    const double sigma = r.std_errors.at("t2");
    CHECK((r.params.at("t2") - 0.0791) / sigma > 5.0);
}

TEST_CASE("cascade fit: blue-detuned time constants within 3%")
{
    const CascadeModel truth{0.0578, 0.0918, 1.0, 1.0, CascadeOrder::THeraldsF};
    const auto r = fit_cascade(cascade_data(truth, 1e4, 31));
    CHECK(r.converged);
    CHECK(r.params.at("order") == 1.0);
    CHECK(r.params.at("tau_rise") == doctest::Approx(0.0578).epsilon(0.03));
    CHECK(r.params.at("tau_fall") == doctest::Approx(0.0918).epsilon(0.03));
}

TEST_CASE("cascade fit: red-detuned order is detected")
{
    const CascadeModel truth{0.0429, 0.0951, 1.0, 1.0, CascadeOrder::FHeraldsT};
    const auto r = fit_cascade(cascade_data(truth, 1e4, 32));
    CHECK(r.params.at("order") == -1.0);
    CHECK(r.params.at("tau_rise") == doctest::Approx(0.0429).epsilon(0.03));
    CHECK(r.params.at("tau_fall") == doctest::Approx(0.0951).epsilon(0.03));
}

TEST_CASE("cascade fit: flat trace is ambiguous")
{
    const auto taus = symmetric_grid(0.6, 0.004);
    DataSeries flat{taus, std::vector<double>(taus.size(), 1.0), std::nullopt};
    CHECK_THROWS_AS(fit_cascade(flat), AmbiguousData);
    const auto noisy_flat = noisy(taus, std::vector<double>(taus.size(), 1.0), 1e4, 3, 1.0);
    CHECK_THROWS_AS(fit_cascade(noisy_flat), AmbiguousData);
}

TEST_CASE("Poisson likelihood removes the low bias of sqrt(counts) weights")
{
    FitOptions poisson;
    poisson.likelihood = Likelihood::Poisson;
    double pull_gauss = 0.0, pull_poisson = 0.0;
    constexpr int seeds = 30;
    for (int s = 1; s <= seeds; ++s) {
        const auto d = lifetime_data({0.0568, 0.040, 0.0}, 1e4, 700 + static_cast<std::uint64_t>(s));
        const auto g = fit_lifetime(d, 0.040);
        const auto p = fit_lifetime(d, 0.040, poisson);
        pull_gauss += (g.params.at("t1") - 0.0568) / g.std_errors.at("t1") / seeds;
        pull_poisson += (p.params.at("t1") - 0.0568) / p.std_errors.at("t1") / seeds;
    }
    CHECK(pull_gauss < -0.5);
    CHECK(std::abs(pull_poisson) < 0.4);
}

TEST_CASE("Poisson likelihood: raw counts without errors and invalid data")
{
    auto d = lifetime_data({0.0568, 0.040, 0.0}, 1e4, 9);
    d.y_err.reset();
    const auto r = fit_lifetime(d, 0.040);
    CHECK(r.converged);
    CHECK(r.params.at("t1") == doctest::Approx(0.0568).epsilon(0.03));
    FitOptions poisson;
    poisson.likelihood = Likelihood::Poisson;
    d.y[3] = -1.0;
    CHECK_THROWS_AS(fit_lifetime(d, 0.040, poisson), std::invalid_argument);
}
