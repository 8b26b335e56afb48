#ifndef MOLLOW_TRACES_HPP
#define MOLLOW_TRACES_HPP

#include <string_view>
#include <vector>

namespace mollow {

enum class CorrelationKind { G1Incoh, G2, Cross };

/// Sampled correlation function; taus in ns, strictly increasing.
struct CorrelationTrace {
    std::vector<double> taus;
    std::vector<double> values;
    CorrelationKind kind = CorrelationKind::G2;
};

enum class SpectrumMode { Literal, Standard };

/// Sampled emission spectrum; offsets in rad/ns relative to the laser.
struct SpectrumTrace {
    std::vector<double> offsets;
    std::vector<double> intensities;
    SpectrumMode mode = SpectrumMode::Standard;
    /// Set when the grid step does not resolve the 1/T2 linewidth.
    bool coarse_grid_warning = false;
};

constexpr std::string_view to_string(SpectrumMode m)
{
    return m == SpectrumMode::Literal ? "literal" : "standard";
}

constexpr std::string_view to_string(CorrelationKind k)
{
    switch (k) {
    case CorrelationKind::G1Incoh: return "g1_incoh";
    case CorrelationKind::G2: return "g2";
    case CorrelationKind::Cross: return "cross";
    }
    return "unknown";
}

} // namespace mollow

#endif // MOLLOW_TRACES_HPP
