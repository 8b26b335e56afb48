#include "mollow/peaks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mollow {

namespace {

// Topographic prominence of the maximum at index i.
double prominence_at(std::span<const double> y, std::size_t i)
{
    const double h = y[i];
    double left_min = h;
    std::size_t j = i;
    while (j > 0) {
        --j;
        if (y[j] > h)
            break;
        left_min = std::min(left_min, y[j]);
    }
    const bool left_open = (j == 0 && y[0] <= h);
    double right_min = h;
    std::size_t k = i;
    while (k + 1 < y.size()) {
        ++k;
        if (y[k] > h)
            break;
        right_min = std::min(right_min, y[k]);
    }
    const bool right_open = (k + 1 == y.size() && y[k] <= h);
    // Edges without a higher neighbour count as the global reference.
    double base;
    if (left_open && right_open)
        base = std::min(left_min, right_min);
    else if (left_open)
        base = right_min;
    else if (right_open)
        base = left_min;
    else
        base = std::max(left_min, right_min);
    return h - base;
}

} // namespace

std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y,
                             double min_prominence)
{
    if (x.size() != y.size())
        throw std::invalid_argument("find_peaks: x and y differ in length");
    std::vector<Peak> peaks;
    if (y.size() < 3)
        return peaks;
    const double global = *std::max_element(y.begin(), y.end());
    const double threshold = min_prominence * std::abs(global);
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1]))
            continue;
        const double prom = prominence_at(y, i);
        if (prom < threshold)
            continue;
        // parabola through (i-1, i, i+1) on a locally uniform grid
        const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
        const double curv = y0 - 2.0 * y1 + y2;
        double shift = 0.0;
        if (curv < 0.0)
            shift = 0.5 * (y0 - y2) / curv;
        const double step = shift >= 0.0 ? x[i + 1] - x[i] : x[i] - x[i - 1];
        Peak p;
        p.position = x[i] + shift * step;
        p.height = y1 - 0.25 * (y0 - y2) * shift;
        p.prominence = prom;
        peaks.push_back(p);
    }
    return peaks;
}

std::vector<Peak> find_shoulders(std::span<const double> x, std::span<const double> y,
                                 double min_prominence)
{
    if (x.size() != y.size())
        throw std::invalid_argument("find_shoulders: x and y differ in length");
    if (y.size() < 5)
        return {};
    std::vector<double> xc(x.size() - 2), curv(x.size() - 2);
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        const double h = 0.5 * (x[i + 1] - x[i - 1]);
        xc[i - 1] = x[i];
        curv[i - 1] = -(y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
    }
    auto peaks = find_peaks(xc, curv, min_prominence);
    std::erase_if(peaks, [](const Peak& p) { return p.height <= 0.0; });
    return peaks;
}

} // namespace mollow
