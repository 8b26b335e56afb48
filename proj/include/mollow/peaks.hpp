#ifndef MOLLOW_PEAKS_HPP
#define MOLLOW_PEAKS_HPP

#include <span>
#include <vector>

namespace mollow {

struct Peak {
    double position = 0.0;  // quadratic-interpolated
    double height = 0.0;
    double prominence = 0.0;
};

/// Local maxima with prominence >= min_prominence * global max, ordered by
/// position. Positions and heights are refined by a parabola through the
/// three samples around each maximum.
std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y,
                             double min_prominence = 0.01);

/// Shoulders: maxima of the negative second derivative (uniform grid).
/// Resolves sidebands that overlap the central line without a dip.
std::vector<Peak> find_shoulders(std::span<const double> x, std::span<const double> y,
                                 double min_prominence = 0.01);

} // namespace mollow

#endif // MOLLOW_PEAKS_HPP
