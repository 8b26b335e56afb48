// Command-line front end: scenario files in, CSV / JSON / tag files out.
// Exit codes: 0 ok, 1 usage or configuration, 2 model domain, 3 non-convergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mollow/bloch.hpp"
#include "mollow/correlations.hpp"
#include "mollow/errors.hpp"
#include "mollow/estimation.hpp"
#include "mollow/instrument.hpp"
#include "mollow/mollow_spectra.hpp"
#include "mollow/quantum_jump.hpp"
#include "mollow/scenario.hpp"
#include "mollow/units.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mollow;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kDomain = 2, kNonConvergence = 3 };

/// Usage / input-format failure (exit 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fit finished without meeting the convergence test (exit 3).
struct NotConverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

struct Table {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data; // one vector per column
};

void write_table(const fs::path& path, const Table& t)
{
    std::ofstream os(path);
    if (!os)
        throw ConfigError("cannot open " + path.string() + " for writing");
    for (const auto& c : t.comments)
        os << "# " << c << '\n';
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        os << (c ? "," : "") << t.columns[c];
    os << '\n';
    const std::size_t rows = t.data.empty() ? 0 : t.data.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < t.data.size(); ++c)
            os << (c ? "," : "") << fmt(t.data[c][r]);
        os << '\n';
    }
    if (!os)
        throw ConfigError("write failed: " + path.string());
}

/// Numeric CSV with an optional header row and '#' comments.
Table read_table(const fs::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open data file " + path.string());
    Table t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        std::vector<double> values;
        bool numeric = true;
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                const double v = std::stod(c, &used);
                if (c.find_first_not_of(" \t", used) != std::string::npos)
                    numeric = false;
                values.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (t.columns.empty() && t.data.empty()) {
                t.columns = cells;
                continue;
            }
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": non-numeric row");
        }
        if (t.data.empty())
            t.data.resize(values.size());
        if (values.size() != t.data.size())
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected "
                              + std::to_string(t.data.size()) + " columns, found "
                              + std::to_string(values.size()));
        for (std::size_t c = 0; c < values.size(); ++c)
            t.data[c].push_back(values[c]);
    }
    if (t.data.size() < 2 || t.data.front().empty())
        throw ConfigError(path.string() + ": need at least two numeric columns and one row");
    return t;
}

std::vector<double> symmetric_taus(double max_ps, double step_ps)
{
    const auto n = static_cast<long>(std::floor(max_ps / step_ps + 1e-9));
    std::vector<double> taus;
    for (long k = -n; k <= n; ++k)
        taus.push_back(units::from_ps(static_cast<double>(k) * step_ps));
    return taus;
}

std::vector<double> to_ps(const std::vector<double>& ns)
{
    std::vector<double> out(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i)
        out[i] = units::to_ps(ns[i]);
    return out;
}

std::vector<double> linspace(double a, double b, std::size_t n)
{
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

std::vector<double> angular_grid(const SpectrumGrid& g)
{
    auto v = linspace(g.min_ghz, g.max_ghz, g.points);
    for (auto& x : v)
        x = units::angular(x);
    return v;
}

std::string scenario_comment(const Scenario& s)
{
    std::ostringstream os;
    os << "t1_ps=" << fmt(units::to_ps(s.emitter.t1)) << " t2_ps=" << fmt(units::to_ps(s.emitter.t2))
       << " rabi_ghz=" << fmt(units::cyclic(s.drive.rabi))
       << " detuning_ghz=" << fmt(units::cyclic(s.drive.detuning));
    if (s.n_bar)
        os << " n_bar=" << fmt(*s.n_bar);
    return os.str();
}

SpectrumGrid parse_grid(const std::string& spec, SpectrumGrid grid)
{
    if (spec.empty())
        return grid;
    double lo = 0, hi = 0;
    unsigned long n = 0;
    char tail = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lu%c", &lo, &hi, &n, &tail) != 3 || !(hi > lo) || n < 3)
        throw ConfigError("--grid expects min_ghz:max_ghz:points with max > min and points >= 3");
    return {lo, hi, n};
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const Scenario& s, const std::string& mode_name, const std::string& grid_spec,
                 const fs::path& out)
{
    const SpectrumMode mode = mode_name == "literal" ? SpectrumMode::Literal : SpectrumMode::Standard;
    const SpectrumGrid grid = parse_grid(grid_spec, s.spectrum_grid);
    const auto freqs = angular_grid(grid);
    const auto spec = spectrum_closed(s.emitter, s.drive, freqs, mode);
    const auto c = coefficients(s.emitter, s.drive, mode);

    Table t;
    t.comments = {"Mollow triplet spectrum, mode=" + std::string(to_string(mode)),
                  scenario_comment(s),
                  "offset_ghz: cyclic frequency offset from the laser (GHz); intensity: "
                  "spectral density per rad/ns"};
    t.columns = {"offset_ghz", "intensity"};
    std::vector<double> ghz(freqs.size());
    for (std::size_t i = 0; i < freqs.size(); ++i)
        ghz[i] = units::cyclic(freqs[i]);
    t.data = {ghz, spec.intensities};
    write_table(out, t);

    fs::path side = out;
    side.replace_extension(".coeffs.jsonl");
    std::ofstream js(side);
    const auto sb = sideband_positions(s.drive);
    js << json{{"record", "coefficients"}, {"mode", to_string(mode)},
               {"a_coef_rad2_per_ns2", c.a_coef}, {"b_coef_rad2_per_ns2", c.b_coef},
               {"eta_per_ns", c.eta}, {"mu_rad_per_ns", c.mu}, {"mu_ghz", units::cyclic(c.mu)},
               {"n_inf", c.n_inf}}
              .dump()
       << '\n';
    js << json{{"record", "sidebands"}, {"lower_ghz", sb.lower}, {"upper_ghz", sb.upper},
               {"rayleigh_ghz", sb.rayleigh},
               {"generalized_rabi_ghz", units::cyclic(generalized_rabi(s.drive))}}
              .dump()
       << '\n';
    js << json{{"record", "grid"}, {"min_ghz", grid.min_ghz}, {"max_ghz", grid.max_ghz},
               {"points", grid.points}, {"coarse_grid_warning", spec.coarse_grid_warning}}
              .dump()
       << '\n';
    return kOk;
}

int cmd_correlation(const std::string& which, const Scenario& s, bool instrumented, const fs::path& out)
{
    const auto taus = symmetric_taus(s.tau_grid.max_ps, s.tau_grid.step_ps);
    CorrelationTrace trace;
    std::string label;
    if (which == "g2") {
        trace = g2_continued(s.emitter, s.drive, taus);
        if (instrumented)
            trace = add_background_g2(convolve_irf(trace, s.instrument.irf_fwhm),
                                      signal_fraction_from_ratio(s.signal_to_background));
        label = "g2";
    } else if (which == "g1") {
        if (instrumented)
            trace = visibility({s.coherent_fraction, s.laser_coherence_time, s.emitter, s.drive}, taus);
        else
            trace = g1_incoh_closed(s.emitter, s.drive, taus);
        label = instrumented ? "visibility" : "g1_incoh";
    } else {
        if (!s.cascade)
            throw ScenarioError(0, "cascade.tau_rise_ps", "required field is missing");
        trace = cascade_cross_correlation(*s.cascade, taus);
        if (instrumented)
            trace = convolve_irf(trace, s.instrument.irf_fwhm);
        label = "g2_cross";
    }
    Table t;
    t.comments = {which + (instrumented ? " (instrumented: IRF fwhm_ps=" + fmt(units::to_ps(s.instrument.irf_fwhm))
                                              + ", signal_to_background=" + fmt(s.signal_to_background) + ")"
                                        : " (raw)"),
                  scenario_comment(s), "tau_ps: delay in picoseconds"};
    t.columns = {"tau_ps", label};
    t.data = {to_ps(trace.taus), trace.values};
    write_table(out, t);
    return kOk;
}

struct FitArgs {
    std::string kind;
    fs::path data;
    fs::path out;
    std::string scenario;
    double eta_sys = 0.03;
    double irf_ps = -1.0;
    bool fit_irf = false;
    int max_iterations = 300;
    std::string likelihood = "gaussian";
};

json fit_to_json(const std::string& kind, const FitResult& r,
                 const std::map<std::string, std::pair<std::string, double>>& units_map)
{
    json params = json::object(), errors = json::object();
    for (const auto& [name, v] : r.params) {
        const auto it = units_map.find(name);
        const std::string key = it == units_map.end() ? name : it->second.first;
        const double scale = it == units_map.end() ? 1.0 : it->second.second;
        params[key] = v * scale;
        if (r.std_errors.contains(name))
            errors[key] = r.std_errors.at(name) * std::abs(scale);
    }
    return json{{"kind", kind},           {"params", params},
                {"std_errors", errors},   {"residual_norm", r.residual_norm},
                {"converged", r.converged}, {"n_iterations", r.n_iterations},
                {"warnings", r.warnings}};
}

int cmd_fit(const FitArgs& a)
{
    const Table t = read_table(a.data);
    DataSeries d{t.data[0], t.data[1], std::nullopt};
    if (t.data.size() >= 3)
        d.y_err = t.data[2];
    try {
        validate(d);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(a.data.string() + ": " + e.what());
    }
    auto need_scenario = [&]() {
        if (a.scenario.empty())
            throw ConfigError("fit " + a.kind + " needs --scenario for the emitter parameters");
        return load_scenario(a.scenario);
    };
    auto ps_to_ns = [](std::vector<double>& v) {
        for (auto& x : v)
            x = units::from_ps(x);
    };
    const double ghz = 1.0 / units::two_pi; // rad/ns -> GHz
    const double ps = 1.0 / units::ps;      // ns -> ps

    FitOptions opt;
    opt.lm.max_iterations = a.max_iterations;
    opt.likelihood = a.likelihood == "poisson" ? Likelihood::Poisson : Likelihood::Gaussian;
    FitResult r;
    std::map<std::string, std::pair<std::string, double>> u;
    if (a.kind == "saturation") {
        for (auto& y : d.y)
            y *= 1e-3;
        if (d.y_err)
            for (auto& e : *d.y_err)
                e *= 1e-3;
        r = fit_saturation(d, a.eta_sys, opt);
        u = {{"s_sat", {"s_sat_ghz", 1.0}}, {"saturation_rate", {"saturation_rate_mhz", 1e3}}};
    } else if (a.kind == "lifetime") {
        ps_to_ns(d.x);
        r = fit_lifetime(d, a.irf_ps > 0.0 ? units::from_ps(a.irf_ps) : 0.0, opt);
        u = {{"t1", {"t1_ps", ps}}, {"t0", {"t0_ps", ps}}};
    } else if (a.kind == "spectrum") {
        const Scenario s = need_scenario();
        SpectrumTrace spec;
        for (double x : d.x)
            spec.offsets.push_back(units::angular(x));
        spec.intensities = d.y;
        r = fit_spectrum_rabi(spec, s.emitter, d.y_err, opt);
        u = {{"rabi", {"rabi_ghz", ghz}}};
    } else if (a.kind == "g2") {
        const Scenario s = need_scenario();
        ps_to_ns(d.x);
        G2FitConfig cfg{a.irf_ps >= 0.0 ? units::from_ps(a.irf_ps) : s.instrument.irf_fwhm, a.fit_irf};
        r = fit_g2(d, s.emitter, cfg, opt);
        u = {{"rabi", {"rabi_ghz", ghz}}, {"irf_fwhm", {"irf_fwhm_ps", ps}}};
    } else if (a.kind == "visibility") {
        const Scenario s = need_scenario();
        ps_to_ns(d.x);
        r = fit_visibility(d, {s.coherent_fraction, s.laser_coherence_time, s.emitter, s.drive}, opt);
        u = {{"t2", {"t2_ps", ps}}};
    } else if (a.kind == "cascade") {
        ps_to_ns(d.x);
        r = fit_cascade(d, opt);
        u = {{"tau_rise", {"tau_rise_ps", ps}}, {"tau_fall", {"tau_fall_ps", ps}}};
    } else {
        throw ConfigError("unknown fit kind '" + a.kind + "'");
    }

    const std::string text = fit_to_json(a.kind, r, u).dump(2);
    if (a.out.empty()) {
        std::cout << text << '\n';
    } else {
        std::ofstream os(a.out);
        if (!os)
            throw ConfigError("cannot open " + a.out.string() + " for writing");
        os << text << '\n';
    }
    if (!r.converged)
        throw NotConverged("fit did not converge");
    return kOk;
}

int cmd_mc(const Scenario& s, double duration_us, std::uint64_t seed, const fs::path& out,
           double efficiency, unsigned segments)
{
    if (!(duration_us > 0.0))
        throw ConfigError("--duration-us must be > 0");
    const double eff = efficiency > 0.0 ? efficiency : s.efficiency;
    const auto stream = simulate_stream(s.emitter, s.drive, duration_us * units::us, eff, seed,
                                        {segments, 10.0});
    if (out.extension() == ".csv")
        write_tags_csv(out, stream);
    else
        write_tags_binary(out, stream);
    std::cout << json{{"tags", stream.tags.size()},
                      {"duration_ps", units::to_ps(stream.total_duration)},
                      {"rate_mhz", 1e3 * static_cast<double>(stream.tags.size()) / stream.total_duration},
                      {"seed", seed}}
                     .dump()
              << '\n';
    return kOk;
}

PhotonStream load_stream(const fs::path& p)
{
    try {
        return read_tags(p);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
}

int cmd_correlate(const fs::path& tags, const fs::path& tags_b, double bin_ps, double max_tau_ps,
                  const std::string& norm, const fs::path& out)
{
    CorrelogramConfig cfg;
    cfg.bin_width = units::from_ps(bin_ps);
    cfg.max_tau = units::from_ps(max_tau_ps);
    cfg.normalization = norm == "raw" ? Normalization::Raw : Normalization::Baseline;
    try {
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const PhotonStream a = load_stream(tags);
    CorrelationTrace trace;
    std::size_t n_b = a.tags.size();
    if (tags_b.empty()) {
        trace = correlate(a, cfg);
    } else {
        const PhotonStream b = load_stream(tags_b);
        n_b = b.tags.size();
        trace = correlate(a, b, cfg);
    }
    Table t;
    t.comments = {std::string(tags_b.empty() ? "auto" : "cross") + "-correlation, normalization=" + norm,
                  "tags_a=" + std::to_string(a.tags.size()) + " tags_b=" + std::to_string(n_b)
                      + " duration_ps=" + fmt(units::to_ps(a.total_duration)),
                  "tau_ps: bin centre in picoseconds"};
    t.columns = {"tau_ps", norm == "raw" ? "pairs" : "g2"};
    t.data = {to_ps(trace.taus), trace.values};
    write_table(out, t);
    return kOk;
}

// ---------------------------------------------------------------------------
// figure data

struct Curve {
    std::string file;
    std::vector<std::string> columns;
    json parameters;
    std::string provenance;
};

std::string timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

int cmd_reproduce(const std::string& figure, const fs::path& dir)
{
    static const std::vector<std::string> figures{"fig2", "fig3a", "fig3d", "fig4a", "fig4b", "figS2"};
    if (std::find(figures.begin(), figures.end(), figure) == figures.end())
        throw ConfigError("unknown figure '" + figure + "' (expected fig2, fig3a, fig3d, fig4a, fig4b, figS2)");
    fs::create_directories(dir);
    const EmitterParams emitter = EmitterParams::from_ps(56.8, 103.5);
    const double k_ghz = 2.582;
    std::vector<Curve> curves;
    auto emit = [&](const std::string& file, Table t, json params, const std::string& prov) {
        write_table(dir / file, t);
        curves.push_back({file, t.columns, std::move(params), prov});
    };
    const json emitter_json{{"t1_ps", 56.8}, {"t2_ps", 103.5}};

    if (figure == "fig2") {
        const SaturationParams sat{2.716, 0.125, 0.03};
        InstrumentModel instr;
        instr.background_reflectivity = 0.0089;
        instr.detection_efficiency = 0.03;
        const FluxCalibration cal{911.55, emitter.t1};
        Table t;
        t.comments = {"count rate versus incident flux; rates in MHz"};
        t.columns = {"n_bar", "total_mhz", "qd_mhz"};
        t.data.resize(3);
        for (int i = 0; i <= 60; ++i) {
            const double n = std::pow(10.0, -2.0 + 4.0 * i / 60.0);
            const auto c = detected_counts(sat, instr, cal, n);
            t.data[0].push_back(n);
            t.data[1].push_back(1e3 * c.total);
            t.data[2].push_back(1e3 * c.qd);
        }
        emit("fig2_count_rate.csv", t,
             {{"s_sat_ghz", 2.716}, {"n0", 0.125}, {"eta_sys", 0.03}, {"r_min", 0.0089},
              {"wavelength_nm", 911.55}, {"t1_ps", 56.8},
              {"plateau_mhz", 1e3 * sat.eta_sys * sat.s_sat}},
             "published fit constants; background slope R_min * eta_sys / T1");
    } else if (figure == "fig3a") {
        const std::vector<double> nbars{2.4, 4.8, 9.6};
        const auto ghz = linspace(-20.0, 20.0, 4001);
        std::vector<double> w(ghz.size());
        for (std::size_t i = 0; i < ghz.size(); ++i)
            w[i] = units::angular(ghz[i]);
        Table t;
        t.comments = {"Mollow triplets (standard mode); offset from the laser in GHz"};
        t.columns = {"offset_ghz"};
        t.data = {ghz};
        Table r;
        r.comments = {"Rabi frequency versus sqrt(n_bar)"};
        r.columns = {"n_bar", "sqrt_n_bar", "rabi_ghz"};
        r.data.resize(3);
        for (double n : nbars) {
            const DriveParams d{units::angular(rabi_from_flux(k_ghz, n)), 0.0};
            t.columns.push_back("s_nbar_" + fmt(n));
            t.data.push_back(spectrum_closed(emitter, d, w).intensities);
            r.data[0].push_back(n);
            r.data[1].push_back(std::sqrt(n));
            r.data[2].push_back(rabi_from_flux(k_ghz, n));
        }
        emit("fig3a_spectra.csv", t, {{"emitter", emitter_json}, {"k_ghz_per_sqrt_nbar", k_ghz}, {"n_bar", nbars}},
             "closed-form triplet at the reference T1, T2; Rabi frequency from the 4 GHz at n_bar=2.4 anchor");
        emit("fig3b_rabi_scaling.csv", r, {{"k_ghz_per_sqrt_nbar", k_ghz}}, "published sqrt(n_bar) scaling");
    } else if (figure == "fig3d") {
        const double n = 1.2;
        const DriveParams d{units::angular(rabi_from_flux(k_ghz, n)), 0.0};
        const auto taus = symmetric_taus(1000.0, 1.0);
        const auto ideal = g2_continued(emitter, d, taus);
        const double irf = units::from_ps(40.0);
        const auto inst = add_background_g2(convolve_irf(ideal, irf), signal_fraction_from_ratio(50.0));
        Table t;
        t.comments = {"g2 at n_bar=1.2: ideal and after 40 ps IRF and 50:1 signal:background"};
        t.columns = {"tau_ps", "g2_ideal", "g2_instrumented"};
        t.data = {to_ps(ideal.taus), ideal.values, inst.values};
        emit("fig3d_g2.csv", t,
             {{"emitter", emitter_json}, {"n_bar", n}, {"rabi_ghz", rabi_from_flux(k_ghz, n)},
              {"irf_fwhm_ps", 40.0}, {"signal_to_background", 50.0}},
             "closed-form g2; IRF width is an assumption (detector jitter not reported)");
    } else if (figure == "fig4a") {
        const std::vector<double> detunings{-6.6, -4.0, -2.0, 0.0, 2.0, 4.0, 5.3};
        Table t;
        t.comments = {"Mollow line positions relative to the bare resonance, GHz; Omega/2pi = 4 GHz"};
        t.columns = {"detuning_ghz", "lower_ghz", "upper_ghz", "rayleigh_ghz"};
        t.data.resize(4);
        for (double det : detunings) {
            const auto p = sideband_positions(DriveParams::from_ghz(4.0, det));
            t.data[0].push_back(det);
            t.data[1].push_back(p.lower);
            t.data[2].push_back(p.upper);
            t.data[3].push_back(p.rayleigh);
        }
        emit("fig4a_sidebands.csv", t, {{"rabi_ghz", 4.0}, {"detunings_ghz", detunings}},
             "delta = Delta +- sqrt(Omega^2 + Delta^2)");
    } else if (figure == "fig4b") {
        const auto taus = symmetric_taus(600.0, 1.0);
        const CascadeModel blue{units::from_ps(57.8), units::from_ps(91.8), 1.0, 1.0, CascadeOrder::THeraldsF};
        const CascadeModel red{units::from_ps(42.9), units::from_ps(95.1), 1.0, 1.0, CascadeOrder::FHeraldsT};
        Table t;
        t.comments = {"T-start / F-stop cross-correlation; amplitude 1 is illustrative"};
        t.columns = {"tau_ps", "blue_detuned_5p3ghz", "red_detuned_m6p6ghz"};
        t.data = {to_ps(taus), cascade_cross_correlation(blue, taus).values,
                  cascade_cross_correlation(red, taus).values};
        emit("fig4b_cascade.csv", t,
             {{"blue", {{"tau_rise_ps", 57.8}, {"tau_fall_ps", 91.8}, {"order", "t_heralds_f"}}},
              {"red", {{"tau_rise_ps", 42.9}, {"tau_fall_ps", 95.1}, {"order", "f_heralds_t"}}},
              {"amplitude", 1.0}},
             "published fitted time constants; amplitude assumed");
    } else {
        const DriveParams d{units::angular(rabi_from_flux(k_ghz, 2.4)), 0.0};
        const VisibilityModel m{0.3, units::from_ps(500.0), emitter, d};
        std::vector<double> delays;
        for (int i = 0; i <= 400; ++i)
            delays.push_back(units::from_ps(2.5 * i));
        const auto v = visibility(m, delays);
        Table t;
        t.comments = {"first-order visibility versus interferometer delay at n_bar=2.4"};
        t.columns = {"delay_ps", "visibility"};
        t.data = {to_ps(v.taus), v.values};
        emit("figS2_visibility.csv", t,
             {{"emitter", emitter_json}, {"n_bar", 2.4}, {"coherent_fraction", 0.3},
              {"laser_coherence_time_ps", 500.0}},
             "reference T1, T2; coherent fraction and laser coherence time assumed");
    }

    json manifest{{"figure", figure}, {"generated_at", timestamp()}, {"curves", json::array()}};
    for (const auto& c : curves)
        manifest["curves"].push_back(
            {{"file", c.file}, {"columns", c.columns}, {"parameters", c.parameters}, {"provenance", c.provenance}});
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
    return kOk;
}

void report_error(const std::string& kind, const std::string& message)
{
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Resonance-fluorescence simulation and fitting toolkit. Frequencies are cyclic GHz, "
                 "times ps."};
    app.require_subcommand(1);

    std::string scenario_path, mode = "standard", grid, out;
    bool raw = false, instrumented = false;

    auto* spectrum = app.add_subcommand("spectrum", "closed-form Mollow spectrum to CSV (+ .coeffs.jsonl)");
    spectrum->add_option("--scenario", scenario_path, "scenario file")->required();
    spectrum->add_option("--mode", mode, "literal | standard")->check(CLI::IsMember({"literal", "standard"}));
    spectrum->add_option("--grid", grid, "min_ghz:max_ghz:points");
    spectrum->add_option("--out", out, "output CSV")->required();

    std::vector<CLI::App*> corr_cmds;
    for (const char* name : {"g2", "g1", "cascade"}) {
        auto* c = app.add_subcommand(name, std::string(name) + " correlation trace to CSV");
        c->add_option("--scenario", scenario_path, "scenario file")->required();
        auto* r = c->add_flag("--raw", raw, "model without instrument (default)");
        c->add_flag("--instrumented", instrumented, "apply IRF and background")->excludes(r);
        c->add_option("--out", out, "output CSV")->required();
        corr_cmds.push_back(c);
    }

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "least-squares fit of a CSV data set; FitResult as JSON");
    fit->add_option("kind", fa.kind, "saturation|lifetime|spectrum|g2|visibility|cascade")
        ->required()
        ->check(CLI::IsMember({"saturation", "lifetime", "spectrum", "g2", "visibility", "cascade"}));
    fit->add_option("--data", fa.data, "CSV: x,y[,y_err]")->required();
    fit->add_option("--out", fa.out, "output JSON (default stdout)");
    fit->add_option("--scenario", fa.scenario, "scenario with emitter (spectrum, g2, visibility)");
    fit->add_option("--eta-sys", fa.eta_sys, "system efficiency for the saturation fit");
    fit->add_option("--irf-ps", fa.irf_ps, "IRF FWHM (lifetime: default 0; g2: default scenario)");
    fit->add_flag("--fit-irf", fa.fit_irf, "free IRF width in the g2 fit");
    fit->add_option("--max-iterations", fa.max_iterations, "Levenberg-Marquardt iteration limit")
        ->check(CLI::PositiveNumber);
    fit->add_option("--likelihood", fa.likelihood, "gaussian | poisson (y = counts, or counts scaled by y_err^2/y)")
        ->check(CLI::IsMember({"gaussian", "poisson"}));

    double duration_us = 100.0, efficiency = 0.0;
    std::uint64_t seed = 1;
    unsigned segments = 1;
    std::string tags, tags_b;
    auto* mc = app.add_subcommand("mc", "quantum-jump photon stream to a tag file");
    mc->add_option("--scenario", scenario_path, "scenario file")->required();
    mc->add_option("--duration-us", duration_us, "stream duration in microseconds");
    mc->add_option("--seed", seed, "random seed");
    mc->add_option("--efficiency", efficiency, "detection efficiency (default: scenario)");
    mc->add_option("--segments", segments, "independent trajectory segments")->check(CLI::PositiveNumber);
    mc->add_option("--tags", tags, "output tag file (.csv for text, binary otherwise)")->required();

    double bin_ps = 10.0, max_tau_ps = 500.0;
    std::string norm = "baseline";
    auto* corr = app.add_subcommand("correlate", "histogram photon-pair delays from tag files");
    corr->add_option("--tags", tags, "tag file (binary or CSV)")->required();
    corr->add_option("--tags-b", tags_b, "second tag file for a cross-correlation");
    corr->add_option("--bin", bin_ps, "bin width in ps");
    corr->add_option("--max-tau", max_tau_ps, "maximum |tau| in ps");
    corr->add_option("--normalization", norm, "raw | baseline")->check(CLI::IsMember({"raw", "baseline"}));
    corr->add_option("--out", out, "output CSV")->required();

    std::string figure;
    auto* repro = app.add_subcommand("reproduce", "figure data sets with manifest");
    repro->add_option("figure", figure, "fig2|fig3a|fig3d|fig4a|fig4b|figS2")->required();
    repro->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (spectrum->parsed())
            return cmd_spectrum(load_scenario(scenario_path), mode, grid, out);
        for (auto* c : corr_cmds)
            if (c->parsed())
                return cmd_correlation(c->get_name(), load_scenario(scenario_path), instrumented, out);
        if (fit->parsed())
            return cmd_fit(fa);
        if (mc->parsed())
            return cmd_mc(load_scenario(scenario_path), duration_us, seed, tags, efficiency, segments);
        if (corr->parsed())
            return cmd_correlate(tags, tags_b, bin_ps, max_tau_ps, norm, out);
        if (repro->parsed())
            return cmd_reproduce(figure, out);
    } catch (const ScenarioError& e) {
        report_error("ConfigError", e.what());
        return kConfig;
    } catch (const ConfigError& e) {
        report_error("ConfigError", e.what());
        return kConfig;
    } catch (const NotConverged& e) {
        report_error("NonConvergence", e.what());
        return kNonConvergence;
    } catch (const DomainError& e) {
        report_error(e.kind(), e.what());
        return e.kind() == "NonConvergence" ? kNonConvergence : kDomain;
    } catch (const std::invalid_argument& e) {
        report_error("ConfigError", e.what());
        return kConfig;
    } catch (const std::exception& e) {
        report_error("Error", e.what());
        return kConfig;
    }
    return kConfig;
}
