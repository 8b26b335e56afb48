#ifndef MOLLOW_QUANTUM_JUMP_HPP
#define MOLLOW_QUANTUM_JUMP_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "instrument.hpp"
#include "params.hpp"
#include "traces.hpp"

// Quantum-jump trajectories of the driven two-level emitter and a time-tag
// correlator. Times are in ns internally; tag files store integer ps.
namespace mollow {

struct PhotonStream {
    std::vector<double> tags;    // ns, ascending, within [0, total_duration]
    double total_duration = 0.0; // ns
    std::uint64_t seed = 0;
};

void validate(const PhotonStream& stream);

struct TrajectoryOptions {
    /// Independent trajectory segments (sub-seeds split from the seed),
    /// concatenated in order. Each segment starts in the ground state
    /// burn_in_t1 * T1 before its window; photons in the burn-in are dropped.
    unsigned segments = 1;
    double burn_in_t1 = 10.0;
};

/// Waiting-time unraveling: the unnormalized state evolves under the
/// non-Hermitian Hamiltonian until its norm falls to a uniform draw, then a
/// photon is emitted and the emitter resets to the ground state. Pure
/// dephasing is a separate no-photon channel (sigma_z jumps at rate
/// gamma_phi/2). Detected tags are thinned with `efficiency`.
PhotonStream simulate_stream(const EmitterParams& emitter, const DriveParams& drive,
                             double duration, double efficiency, std::uint64_t seed,
                             const TrajectoryOptions& opt = {});

enum class Normalization { Raw, Baseline };

struct CorrelogramConfig {
    double bin_width = 0.010; // ns
    double max_tau = 0.500;   // ns
    Normalization normalization = Normalization::Baseline;
    /// Worker threads for partial histograms; 0 = hardware concurrency.
    unsigned threads = 0;
};

void validate(const CorrelogramConfig& cfg);

/// Raw pair histogram. Bin k (k = -K..K, K = round(max_tau/bin_width)) holds
/// delays t_b - t_a in [(k - 1/2) w, (k + 1/2) w). Histograms over disjoint
/// sets of start tags add.
struct Correlogram {
    double bin_width = 0.0;
    int half_bins = 0;
    std::vector<std::int64_t> counts;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    double duration = 0.0;

    std::vector<double> taus() const;
    Correlogram& merge(const Correlogram& other);
};

/// Auto-correlation histogram (ordered pairs, self-pairs excluded).
Correlogram correlate_counts(const PhotonStream& stream, const CorrelogramConfig& cfg);
/// Cross-correlation histogram of delays t_b - t_a.
Correlogram correlate_counts(const PhotonStream& a, const PhotonStream& b,
                             const CorrelogramConfig& cfg);

/// Auto-correlation pairs that straddle the junction when `later` is
/// appended after `earlier` (its tags shifted by earlier.total_duration).
/// correlate(concat) == correlate(earlier) + correlate(later) + boundary.
Correlogram boundary_counts(const PhotonStream& earlier, const PhotonStream& later,
                            const CorrelogramConfig& cfg);

PhotonStream concatenate(const PhotonStream& earlier, const PhotonStream& later);

/// RAW: pair counts. BASELINE: counts / (N_a N_b bin_width / duration).
CorrelationTrace normalize(const Correlogram& hist, Normalization normalization);

CorrelationTrace correlate(const PhotonStream& stream, const CorrelogramConfig& cfg);
CorrelationTrace correlate(const PhotonStream& a, const PhotonStream& b,
                           const CorrelogramConfig& cfg);

/// Gates the stream with a two-state telegraph (rates in 1/ms, taken from
/// `blinking`; bright_rate is ignored). The initial state is drawn from the
/// stationary distribution.
PhotonStream blinking_modulated_stream(const PhotonStream& stream, const BlinkingModel& blinking,
                                       std::uint64_t seed);

/// Homogeneous Poisson process of the given rate (1/ns).
PhotonStream poisson_stream(double rate, double duration, std::uint64_t seed);

// Tag files: binary little-endian {"QJMC", u32 version, u64 duration_ps,
// u64 count, u64 tags_ps[count]} or text with one integer ps tag per line
// ('#' comments; "# duration_ps=<n>" sets the duration).
void write_tags_binary(const std::filesystem::path& path, const PhotonStream& stream);
void write_tags_csv(const std::filesystem::path& path, const PhotonStream& stream);
/// Detects the format from the magic bytes.
PhotonStream read_tags(const std::filesystem::path& path);

} // namespace mollow

#endif // MOLLOW_QUANTUM_JUMP_HPP
