#include "mollow/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mollow/units.hpp"

namespace mollow {

namespace {

// Accepted keys per section.
const std::map<std::string, std::set<std::string>>& schema()
{
    static const std::map<std::string, std::set<std::string>> s{
        {"emitter", {"t1_ps", "t2_ps"}},
        {"drive", {"rabi_ghz", "detuning_ghz", "n_bar", "power_nw", "rabi_per_sqrt_nbar_ghz"}},
        {"calibration", {"wavelength_nm"}},
        {"instrument",
         {"irf_fwhm_ps", "fp_linewidth_ghz", "grating_bandwidth_ghz", "background_reflectivity",
          "detection_efficiency", "background_slope_mhz", "signal_to_background", "efficiency"}},
        {"saturation", {"s_sat_ghz", "n0", "eta_sys"}},
        {"blinking", {"rate_on_to_off_per_ms", "rate_off_to_on_per_ms", "bright_rate"}},
        {"cascade", {"tau_rise_ps", "tau_fall_ps", "amplitude", "baseline", "order"}},
        {"visibility", {"coherent_fraction", "laser_coherence_time_ps"}},
        {"grid", {"spectrum_min_ghz", "spectrum_max_ghz", "spectrum_points", "tau_max_ps",
                  "tau_step_ps"}},
    };
    return s;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

class Reader {
public:
    explicit Reader(const ScenarioTable& table) : table_(table) {}

    bool has(const std::string& key) const { return table_.contains(key); }

    std::optional<double> number(const std::string& key) const
    {
        const auto it = table_.find(key);
        if (it == table_.end())
            return std::nullopt;
        const std::string& v = it->second.value;
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
            throw ScenarioError(it->second.line, key, "expected a number, got '" + v + "'");
        return out;
    }

    double required(const std::string& key) const
    {
        const auto v = number(key);
        if (!v)
            throw ScenarioError(0, key, "required field is missing");
        return *v;
    }

    std::optional<std::string> text(const std::string& key) const
    {
        const auto it = table_.find(key);
        if (it == table_.end())
            return std::nullopt;
        return it->second.value;
    }

    std::size_t line(const std::string& key) const
    {
        const auto it = table_.find(key);
        return it == table_.end() ? 0 : it->second.line;
    }

    // Re-raise a module validation failure against the field that caused it.
    template <class F>
    void check(const std::string& key, F&& f) const
    {
        try {
            f();
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(line(key), key, e.what());
        }
    }

private:
    const ScenarioTable& table_;
};

} // namespace

ScenarioError::ScenarioError(std::size_t line, std::string field, const std::string& message)
    : std::runtime_error((line ? "line " + std::to_string(line) + ": " : std::string()) + field
                         + ": " + message),
      line_(line), field_(std::move(field))
{}

ScenarioTable parse_scenario_table(const std::string& text)
{
    ScenarioTable table;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ScenarioError(line_no, std::string(line), "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!schema().contains(section))
                throw ScenarioError(line_no, section, "unknown section");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ScenarioError(line_no, std::string(line), "expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (section.empty())
            throw ScenarioError(line_no, key, "key outside of a [section]");
        const std::string full = section + "." + key;
        if (!schema().at(section).contains(key))
            throw ScenarioError(line_no, full, "unknown key");
        if (value.empty())
            throw ScenarioError(line_no, full, "empty value");
        if (table.contains(full))
            throw ScenarioError(line_no, full, "duplicate key");
        table[full] = {value, line_no};
    }
    return table;
}

Scenario parse_scenario(const std::string& text)
{
    const ScenarioTable table = parse_scenario_table(text);
    const Reader r(table);
    Scenario s;

    s.emitter = EmitterParams::from_ps(r.required("emitter.t1_ps"), r.required("emitter.t2_ps"));
    r.check("emitter.t2_ps", [&] { validate(s.emitter); });

    if (const auto w = r.number("calibration.wavelength_nm")) {
        s.calibration = FluxCalibration{*w, s.emitter.t1};
        r.check("calibration.wavelength_nm", [&] { validate(*s.calibration); });
    }
    if (const auto k = r.number("drive.rabi_per_sqrt_nbar_ghz"))
        s.rabi_per_sqrt_nbar = units::angular(*k);

    const bool has_rabi = r.has("drive.rabi_ghz");
    const bool has_flux = r.has("drive.n_bar") || r.has("drive.power_nw");
    if (r.has("drive.n_bar") && r.has("drive.power_nw"))
        throw ScenarioError(r.line("drive.power_nw"), "drive.power_nw",
                            "give either n_bar or power_nw, not both");
    if (r.has("drive.power_nw")) {
        if (!s.calibration)
            throw ScenarioError(r.line("drive.power_nw"), "calibration.wavelength_nm",
                                "power_nw needs a flux calibration");
        s.n_bar = flux_from_power(*s.calibration, *r.number("drive.power_nw"));
    } else if (const auto n = r.number("drive.n_bar")) {
        if (*n < 0.0)
            throw ScenarioError(r.line("drive.n_bar"), "drive.n_bar", "must be >= 0");
        s.n_bar = *n;
    }
    const double detuning = units::angular(r.number("drive.detuning_ghz").value_or(0.0));
    if (has_rabi)
        s.drive = DriveParams{units::angular(*r.number("drive.rabi_ghz")), detuning};
    else if (has_flux)
        s.drive = DriveParams{s.rabi_per_sqrt_nbar * std::sqrt(*s.n_bar), detuning};
    else
        throw ScenarioError(0, "drive.rabi_ghz", "required field is missing (or give n_bar / power_nw)");
    r.check(has_rabi ? "drive.rabi_ghz" : "drive.n_bar", [&] { validate(s.drive); });

    auto& in = s.instrument;
    if (const auto v = r.number("instrument.irf_fwhm_ps"))
        in.irf_fwhm = units::from_ps(*v);
    if (const auto v = r.number("instrument.fp_linewidth_ghz"))
        in.fp_linewidth = units::angular(*v);
    if (const auto v = r.number("instrument.grating_bandwidth_ghz"))
        in.grating_bandwidth = units::angular(*v);
    if (const auto v = r.number("instrument.background_reflectivity"))
        in.background_reflectivity = *v;
    if (const auto v = r.number("instrument.detection_efficiency"))
        in.detection_efficiency = *v;
    if (const auto v = r.number("instrument.background_slope_mhz"))
        in.background_slope = *v * 1e-3;
    r.check("instrument", [&] { validate(in); });
    if (const auto v = r.number("instrument.signal_to_background")) {
        if (!(*v > 0.0))
            throw ScenarioError(r.line("instrument.signal_to_background"),
                                "instrument.signal_to_background", "must be > 0");
        s.signal_to_background = *v;
    }
    if (const auto v = r.number("instrument.efficiency")) {
        if (!(*v > 0.0) || *v > 1.0)
            throw ScenarioError(r.line("instrument.efficiency"), "instrument.efficiency",
                                "must lie in (0, 1]");
        s.efficiency = *v;
    }

    if (r.has("saturation.s_sat_ghz") || r.has("saturation.n0")) {
        SaturationParams p;
        p.s_sat = r.required("saturation.s_sat_ghz");
        p.n0 = r.required("saturation.n0");
        p.eta_sys = r.number("saturation.eta_sys").value_or(1.0);
        r.check("saturation.s_sat_ghz", [&] { validate(p); });
        s.saturation = p;
    }
    if (r.has("blinking.rate_on_to_off_per_ms") || r.has("blinking.rate_off_to_on_per_ms")) {
        BlinkingModel b;
        b.rate_on_to_off = r.required("blinking.rate_on_to_off_per_ms");
        b.rate_off_to_on = r.required("blinking.rate_off_to_on_per_ms");
        b.bright_rate = r.number("blinking.bright_rate").value_or(0.0);
        r.check("blinking.rate_on_to_off_per_ms", [&] { validate(b); });
        s.blinking = b;
    }
    if (r.has("cascade.tau_rise_ps") || r.has("cascade.tau_fall_ps")) {
        CascadeModel c;
        c.tau_rise = units::from_ps(r.required("cascade.tau_rise_ps"));
        c.tau_fall = units::from_ps(r.required("cascade.tau_fall_ps"));
        c.amplitude = r.number("cascade.amplitude").value_or(1.0);
        c.baseline = r.number("cascade.baseline").value_or(1.0);
        if (const auto o = r.text("cascade.order")) {
            if (*o == "t_heralds_f")
                c.order = CascadeOrder::THeraldsF;
            else if (*o == "f_heralds_t")
                c.order = CascadeOrder::FHeraldsT;
            else
                throw ScenarioError(r.line("cascade.order"), "cascade.order",
                                    "expected t_heralds_f or f_heralds_t");
        }
        r.check("cascade.tau_rise_ps", [&] { validate(c); });
        s.cascade = c;
    }
    if (const auto v = r.number("visibility.coherent_fraction")) {
        if (*v < 0.0 || *v > 1.0)
            throw ScenarioError(r.line("visibility.coherent_fraction"), "visibility.coherent_fraction",
                                "must lie in [0, 1]");
        s.coherent_fraction = *v;
    }
    if (const auto v = r.number("visibility.laser_coherence_time_ps")) {
        if (!(*v > 0.0))
            throw ScenarioError(r.line("visibility.laser_coherence_time_ps"),
                                "visibility.laser_coherence_time_ps", "must be > 0");
        s.laser_coherence_time = units::from_ps(*v);
    }

    if (const auto v = r.number("grid.spectrum_min_ghz"))
        s.spectrum_grid.min_ghz = *v;
    if (const auto v = r.number("grid.spectrum_max_ghz"))
        s.spectrum_grid.max_ghz = *v;
    if (const auto v = r.number("grid.spectrum_points")) {
        if (*v < 3 || *v != std::floor(*v))
            throw ScenarioError(r.line("grid.spectrum_points"), "grid.spectrum_points",
                                "must be an integer >= 3");
        s.spectrum_grid.points = static_cast<std::size_t>(*v);
    }
    if (!(s.spectrum_grid.max_ghz > s.spectrum_grid.min_ghz))
        throw ScenarioError(r.line("grid.spectrum_max_ghz"), "grid.spectrum_max_ghz",
                            "must exceed spectrum_min_ghz");
    if (const auto v = r.number("grid.tau_max_ps"))
        s.tau_grid.max_ps = *v;
    if (const auto v = r.number("grid.tau_step_ps"))
        s.tau_grid.step_ps = *v;
    if (!(s.tau_grid.step_ps > 0.0) || !(s.tau_grid.max_ps >= s.tau_grid.step_ps))
        throw ScenarioError(r.line("grid.tau_step_ps"), "grid.tau_step_ps",
                            "need 0 < tau_step_ps <= tau_max_ps");
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ScenarioError(0, path.string(), "cannot open scenario file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

Scenario device_scenario(double n_bar)
{
    Scenario s;
    s.emitter = EmitterParams::from_ps(56.8, 103.5);
    s.n_bar = n_bar;
    s.drive = DriveParams{s.rabi_per_sqrt_nbar * std::sqrt(n_bar), 0.0};
    s.calibration = FluxCalibration{911.55, s.emitter.t1};
    return s;
}

} // namespace mollow
