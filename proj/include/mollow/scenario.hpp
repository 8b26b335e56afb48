#ifndef MOLLOW_SCENARIO_HPP
#define MOLLOW_SCENARIO_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "correlations.hpp"
#include "instrument.hpp"
#include "params.hpp"

// Scenario files: flat key = value lines grouped in [sections], '#' starts a
// comment. Frequencies are cyclic (GHz), times in ps; conversion to internal
// units happens here. Unknown sections and keys are rejected.
namespace mollow {

/// Configuration error with the offending line (0 when not line-bound) and field.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::size_t line, std::string field, const std::string& message);
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

struct SpectrumGrid {
    double min_ghz = -20.0;
    double max_ghz = 20.0;
    std::size_t points = 4001;
};

struct TauGrid {
    double max_ps = 1000.0;
    double step_ps = 1.0;
};

struct Scenario {
    EmitterParams emitter;
    DriveParams drive;
    std::optional<double> n_bar;
    double rabi_per_sqrt_nbar = units::angular(2.582); // rad/ns per sqrt(n_bar)
    std::optional<FluxCalibration> calibration;
    InstrumentModel instrument;
    double signal_to_background = 50.0;
    std::optional<SaturationParams> saturation;
    std::optional<BlinkingModel> blinking;
    std::optional<CascadeModel> cascade;
    double coherent_fraction = 0.0;
    double laser_coherence_time = 100.0; // ns
    SpectrumGrid spectrum_grid;
    TauGrid tau_grid;
    double efficiency = 1.0;
};

/// Raw key/value pairs with their source line, keyed by "section.key".
struct ScenarioEntry {
    std::string value;
    std::size_t line = 0;
};
using ScenarioTable = std::map<std::string, ScenarioEntry>;

ScenarioTable parse_scenario_table(const std::string& text);
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Reference device (T1 = 56.8 ps, T2 = 103.5 ps) driven at the given n_bar (Omega/2pi = 2.582 sqrt(n_bar) GHz).
Scenario device_scenario(double n_bar = 2.4);

} // namespace mollow

#endif // MOLLOW_SCENARIO_HPP
