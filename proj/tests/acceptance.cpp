// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "mollow/bloch.hpp"
#include "mollow/correlations.hpp"
#include "mollow/estimation.hpp"
#include "mollow/instrument.hpp"
#include "mollow/mollow_spectra.hpp"
#include "mollow/quantum_jump.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace mollow;
using namespace mollow::test;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start)
{
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1. closed-form g2 against the regression-theorem ODE oracle
Outcome closed_g2_matches_oracle()
{
    const auto start = clock_type::now();
    CounterRng rng(20240101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    int sets = 0;
    while (sets < 200) {
        const double t1 = 0.02 + 0.98 * u(rng);          // 20 ps .. 1 ns
        const double t2 = t1 * (0.1 + 1.9 * u(rng));     // T2 <= 2 T1
        const EmitterParams e{t1, t2};
        const double threshold = 0.5 * std::abs(e.gamma1() - e.gamma2());
        const double rabi = threshold + (0.05 + 30.0 * u(rng)) / t1;
        const DriveParams d{rabi, 0.0};
        if (!(mu_squared(e.gamma1(), e.gamma2(), rabi) > 0.0))
            continue;
        const double eta = 0.5 * (e.gamma1() + e.gamma2());
        const auto grid = linspace(0.0, 10.0 / eta, 401);
        const auto closed = g2_closed(e, d, grid);
        const auto oracle = oracle_g2(e, d, grid);
        worst = std::max(worst, max_abs_diff(closed.values, oracle.values));
        ++sets;
    }
    const double t = seconds_since(start);
    return {worst <= 1e-5 && t < 60.0, fmt("200 parameter sets, max |diff| = %.2e (limit 1e-5), %.1f s", worst, t)};
}

// 2. closed-form spectrum against the Fourier-transformed regression oracle
Outcome spectrum_matches_oracle()
{
    const auto start = clock_type::now();
    auto grid = linspace(-30.0, 30.0, 1201);
    for (auto& g : grid)
        g = units::angular(g);
    std::string detail;
    bool ok = true;
    for (double f : {2.0, 4.0, 8.0}) {
        const auto d = DriveParams::from_ghz(f);
        const auto closed = spectrum_closed(device_emitter(), d, grid);
        const auto oracle = oracle_spectrum(device_emitter(), d, grid);
        const double l2 = relative_l2(closed.intensities, oracle.intensities);
        ok = ok && l2 <= 0.02;
        detail += fmt("%g GHz: %.2e  ", f, l2);
    }
    const double t = seconds_since(start);
    return {ok && t < 60.0, detail + fmt("(limit 2e-2), %.1f s", t)};
}

// 3. strong-drive line areas 1:2:1
Outcome mollow_limit_areas()
{
    const auto e = device_emitter();
    const DriveParams d{50.0 / e.t1, 0.0};
    const auto c = coefficients(e, d);
    const double span = 40.0 * c.mu;
    const auto grid = linspace(-span, span, 200001);
    const auto a = triplet_areas(spectrum_closed(e, d, grid), 0.5 * c.mu);
    const double lo = a.lower / a.center * 2.0, hi = a.upper / a.center * 2.0;
    const bool ok = std::abs(lo - 1.0) <= 0.05 && std::abs(hi - 1.0) <= 0.05;
    return {ok, fmt("Omega*T1 = 50: areas %.4f : 2 : %.4f (tolerance 5%%)", lo, hi)};
}

// 4. Rabi frequency proportional to sqrt(n_bar)
Outcome rabi_scaling()
{
    const double k = 2.582;
    std::vector<double> x, y, w;
    for (double n : {2.4, 4.8, 9.6}) {
        const auto s = spectrum_data(k * std::sqrt(n), 1e4, 4000 + static_cast<std::uint64_t>(n * 10));
        const auto r = fit_spectrum_rabi(s.trace, device_emitter(), s.errors);
        x.push_back(std::sqrt(n));
        y.push_back(units::cyclic(r.params.at("rabi")));
        const double se = units::cyclic(r.std_errors.at("rabi"));
        w.push_back(1.0 / (se * se));
    }
    // weighted straight line y = a + b x
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    const double b = (sw * sxy - sx * sy) / det;
    const double a = (sxx * sy - sx * sxy) / det;
    const double sa = std::sqrt(sxx / det);
    const bool ok = std::abs(b / k - 1.0) <= 0.03 && std::abs(a) <= 2.0 * sa;
    return {ok, fmt("slope %.4f GHz (generator %.3f, %+.2f%%), intercept %.4f +- %.4f GHz", b, k,
                    100.0 * (b / k - 1.0), a, sa)};
}

// 5. calibration arithmetic
Outcome calibration_numerics()
{
    const double flux = flux_from_power({911.55, 0.0568}, 3.84);
    const double purcell = purcell_factor(56.8, 674.4);
    const double budget = efficiency_budget(0.03, 0.28, 1.34);
    const double plateau = 1e3 * saturation_counts({2.716, 0.125, 0.03}, 1e12);
    const bool ok = std::abs(flux - 1.0) <= 0.01 && std::abs(purcell - 10.87) <= 0.01
                    && std::abs(budget - 0.1436) <= 0.0005 && std::abs(plateau - 81.49) <= 0.015;
    return {ok, fmt("flux %.4f, Purcell %.4f, efficiency %.5f, plateau %.3f MHz", flux, purcell, budget, plateau)};
}

// 6. fit round-trips: coverage of the 2-sigma interval over 50 seeds
Outcome fit_round_trips()
{
    const auto start = clock_type::now();
    constexpr int seeds = 50;
    struct Tally {
        std::string name;
        int hits = 0;
        int runs = 0;
    };
    std::vector<Tally> tallies;
    auto record = [&](const std::string& name, const FitResult& r, const std::string& param, double truth) {
        auto it = std::find_if(tallies.begin(), tallies.end(), [&](const Tally& t) { return t.name == name; });
        if (it == tallies.end()) {
            tallies.push_back({name});
            it = tallies.end() - 1;
        }
        ++it->runs;
        if (r.converged && r.std_errors.contains(param)
            && std::abs(r.params.at(param) - truth) <= 2.0 * r.std_errors.at(param))
            ++it->hits;
    };
    auto guarded = [&](const std::string& name, const std::vector<std::pair<std::string, double>>& truths,
                       const std::function<FitResult()>& fit) {
        try {
            const auto r = fit();
            for (const auto& [p, v] : truths)
                record(name + "." + p, r, p, v);
        } catch (const std::exception&) {
            for (const auto& [p, v] : truths)
                record(name + "." + p, FitResult{}, p, v);
        }
    };
    // counting data: Poisson likelihood
    FitOptions opt;
    opt.likelihood = Likelihood::Poisson;
    const auto e = device_emitter();
    const VisibilityTruth vt;
    const CascadeModel casc{0.0578, 0.0918, 1.0, 1.0, CascadeOrder::THeraldsF};
    for (std::uint64_t s = 1; s <= seeds; ++s) {
        guarded("saturation", {{"s_sat", 2.716}, {"n0", 0.125}},
                [&] { return fit_saturation(saturation_data({}, 25, 1e4, 100 + s), 0.03, opt); });
        guarded("lifetime", {{"t1", 0.0568}},
                [&] { return fit_lifetime(lifetime_data({0.0568, 0.040, 0.0}, 1e4, 200 + s), 0.040, opt); });
        guarded("spectrum", {{"rabi", units::angular(4.0)}}, [&] {
            const auto d = spectrum_data(4.0, 1e4, 300 + s);
            return fit_spectrum_rabi(d.trace, e, d.errors, opt);
        });
        guarded("g2", {{"rabi", units::angular(4.0)}, {"signal_fraction", 0.9}},
                [&] { return fit_g2(g2_data({4.0, 0.9, 0.040}, 1e4, 400 + s), e, {0.040, false}, opt); });
        guarded("visibility", {{"t2", vt.t2}, {"coherent_fraction", vt.coherent_fraction}},
                [&] { return fit_visibility(visibility_data(vt, 1e4, 500 + s), visibility_model(vt), opt); });
        guarded("cascade", {{"tau_rise", casc.tau_rise}, {"tau_fall", casc.tau_fall}},
                [&] { return fit_cascade(cascade_data(casc, 1e4, 600 + s), opt); });
    }
    bool ok = true;
    std::string detail;
    for (const auto& t : tallies) {
        ok = ok && t.hits * 10 >= t.runs * 9;
        detail += fmt("%s %d/%d  ", t.name.c_str(), t.hits, t.runs);
    }
    const double t = seconds_since(start);
    return {ok && t < 300.0, detail + fmt("(need >= 45/50), %.1f s", t)};
}

// 7. sideband table emitted by the command-line tool
Outcome sideband_table_via_cli()
{
    const char* cli = std::getenv("MOLLOW_CLI");
    if (cli == nullptr)
        return {false, "MOLLOW_CLI is not set"};
    const fs::path dir = fs::temp_directory_path() / "mollow_acceptance_fig4a";
    fs::remove_all(dir);
    const std::string cmd = std::string("\"") + cli + "\" reproduce fig4a --out " + dir.string() + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        return {false, "reproduce fig4a failed"};
    std::ifstream is(dir / "fig4a_sidebands.csv");
    std::string line;
    bool header = true, blue = false, red = false;
    double worst = 0.0, blue_lo = 0.0, blue_hi = 0.0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (header) {
            header = false;
            continue;
        }
        double det, lo, hi, ray;
        char c;
        std::stringstream ss(line);
        ss >> det >> c >> lo >> c >> hi >> c >> ray;
        const double g = std::hypot(4.0, det);
        worst = std::max({worst, std::abs(lo - (det - g)), std::abs(hi - (det + g)), std::abs(ray - det)});
        if (det == 5.3) {
            blue = true;
            blue_lo = lo;
            blue_hi = hi;
        }
        red = red || det == -6.6;
    }
    const bool ok = blue && red && worst <= 1e-8 && std::abs(blue_lo + 1.34) <= 0.005
                    && std::abs(blue_hi - 11.94) <= 0.005;
    return {ok, fmt("max deviation %.1e GHz; 5.3 GHz row (%.4f, %.4f); -6.6 GHz row %s", worst, blue_lo, blue_hi,
                    red ? "present" : "missing")};
}

/// Two-sided one-sample Kolmogorov-Smirnov p-value against N(0, 1).
double ks_normal_p(std::vector<double> z)
{
    std::sort(z.begin(), z.end());
    const double n = static_cast<double>(z.size());
    double d = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j)
        p += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

// 8. Monte Carlo photon statistics against the closed form
Outcome monte_carlo_statistics()
{
    const auto start = clock_type::now();
    const auto e = device_emitter();
    const auto d = DriveParams::from_ghz(4.0);
    CorrelogramConfig cfg;  // 10 ps bins, +-500 ps
    // 10 ms as ten 1 ms trajectories; histograms merged with the junction pairs
    constexpr int chunks = 10;
    Correlogram hist;
    PhotonStream previous;
    for (int i = 0; i < chunks; ++i) {
        auto s = simulate_stream(e, d, 1.0e6, 1.0, 8000 + static_cast<std::uint64_t>(i));
        auto part = correlate_counts(s, cfg);
        if (i == 0)
            hist = part;
        else
            hist.merge(part).merge(boundary_counts(previous, s, cfg));
        previous = std::move(s);
    }
    const double baseline = static_cast<double>(hist.n_a) * static_cast<double>(hist.n_b) * cfg.bin_width
                            / hist.duration;
    // Ordered pairs make the auto-correlogram exactly symmetric, so only the
    // bins at tau >= 0 are independent. Bin 0 holds every pair twice
    // (variance 2E); the others are Poisson.
    const auto taus = hist.taus();
    std::vector<double> z;
    for (auto k = static_cast<std::size_t>(hist.half_bins); k < taus.size(); ++k) {
        constexpr int sub = 101;
        double avg = 0.0;
        for (int j = 0; j < sub; ++j) {
            const double t = taus[k] + cfg.bin_width * ((j + 0.5) / sub - 0.5);
            avg += g2_value(e.gamma1(), e.gamma2(), d.rabi, t);
        }
        const double expect = baseline * avg / sub;
        const double var = k == static_cast<std::size_t>(hist.half_bins) ? 2.0 * expect : expect;
        z.push_back((static_cast<double>(hist.counts[k]) - expect) / std::sqrt(var));
    }
    const double p = ks_normal_p(z);
    const double g0 = static_cast<double>(hist.counts[static_cast<std::size_t>(hist.half_bins)]) / baseline;
    double mean = 0.0, var = 0.0;
    for (double v : z)
        mean += v / static_cast<double>(z.size());
    for (double v : z)
        var += (v - mean) * (v - mean) / static_cast<double>(z.size() - 1);
    const bool ok = p > 0.01 && g0 < 0.1;
    return {ok, fmt("%zu tags, %zu independent bins: KS p = %.3f, z mean %.3f sd %.3f; g2(0) bin = %.4f; %.0f s", hist.n_a,
                    z.size(), p, mean, std::sqrt(var), g0, seconds_since(start))};
}

// 9. instrumented g2(0) bracket
Outcome instrumented_g2_bracket()
{
    const double rho = signal_fraction_from_ratio(50.0);
    const auto lattice = symmetric_grid(1.0, 0.001);
    bool ok = true;
    std::string detail;
    for (double n : {0.02, 1.2}) {
        const auto d = DriveParams{units::angular(rabi_from_flux(2.582, n)), 0.0};
        const auto ideal = g2_continued(device_emitter(), d, lattice);
        detail += fmt("n=%g:", n);
        for (double irf_ps : {30.0, 40.0, 50.0, 60.0}) {
            const auto g = add_background_g2(convolve_irf(ideal, units::from_ps(irf_ps)), rho);
            const double g0 = g.values[lattice.size() / 2];
            ok = ok && g0 >= 0.02 && g0 <= 0.12;
            detail += fmt(" %gps %.4f", irf_ps, g0);
        }
        detail += "; ";
    }
    return {ok, detail + "bracket [0.02, 0.12]"};
}

// 10. items outside quantitative scope are documented
Outcome documented_exclusions()
{
    std::ifstream is(fs::path(MOLLOW_SOURCE_DIR) / "README.md");
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string text = ss.str();
    const bool ok = text.find("reflectivity") != std::string::npos && text.find("1/(2T1)") != std::string::npos
                    && text.find("high-flux") != std::string::npos;
    return {ok, ok ? "README lists the unmodelled observations" : "README section on exclusions missing"};
}

} // namespace

int main()
{
    struct Criterion {
        int id;
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {1, "closed-form g2 equals the ODE oracle", closed_g2_matches_oracle},
        {2, "closed-form spectrum equals the Fourier oracle", spectrum_matches_oracle},
        {3, "strong-drive triplet areas 1:2:1", mollow_limit_areas},
        {4, "Rabi frequency scales as sqrt(n_bar)", rabi_scaling},
        {5, "calibration numerics", calibration_numerics},
        {6, "fit round-trips cover truth within 2 sigma", fit_round_trips},
        {7, "sideband geometry from the command-line tool", sideband_table_via_cli},
        {8, "Monte Carlo correlogram statistics", monte_carlo_statistics},
        {9, "instrumented g2(0) within [0.02, 0.12]", instrumented_g2_bracket},
        {10, "unmodelled observations documented", documented_exclusions},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s  [%2d] %s -- %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures,
                std::size(criteria));
    return failures == 0 ? 0 : 1;
}
