#ifndef MOLLOW_ODE_HPP
#define MOLLOW_ODE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace mollow {

struct OdeTolerance {
    double absolute = 1e-10;
    double relative = 1e-8;
};

/// Dormand-Prince 5(4) with PI-free step control. `Vec` is any fixed-size Eigen
/// column vector (real or complex scalar); `rhs(t, y)` returns dy/dt.
/// Returns the state at every grid point; grid[0] is the initial time.
template <typename Vec, typename Rhs>
std::vector<Vec> integrate(Rhs&& rhs, const Vec& y0, std::span<const double> grid,
                           const OdeTolerance& tol = {})
{
    if (grid.empty())
        return {};
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("time grid must be strictly increasing");

    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    // b - b* (embedded 4th order)
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    std::vector<Vec> out;
    out.reserve(grid.size());
    out.push_back(y0);

    Vec y = y0;
    double t = grid.front();
    double h = grid.size() > 1 ? (grid[1] - grid[0]) : 0.0;
    Vec k1 = rhs(t, y);

    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double target = grid[i];
        while (t < target) {
            bool last = false;
            const double h_free = h;
            if (t + h >= target) {
                h = target - t;
                last = true;
            }
            const Vec k2 = rhs(t + c2 * h, Vec(y + h * a21 * k1));
            const Vec k3 = rhs(t + c3 * h, Vec(y + h * (a31 * k1 + a32 * k2)));
            const Vec k4 = rhs(t + c4 * h, Vec(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
            const Vec k5 =
                rhs(t + c5 * h, Vec(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
            const Vec k6 =
                rhs(t + h, Vec(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
            const Vec y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const Vec k7 = rhs(t + h, y_new);
            const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double err_norm = 0.0;
            for (Eigen::Index j = 0; j < y.size(); ++j) {
                const double scale = tol.absolute
                    + tol.relative * std::max(std::abs(y[j]), std::abs(y_new[j]));
                err_norm = std::max(err_norm, std::abs(err[j]) / scale);
            }

            if (err_norm <= 1.0) {
                t = last ? target : t + h;
                y = y_new;
                k1 = k7;
            }
            const double factor = err_norm == 0.0
                ? 5.0
                : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
            if (err_norm <= 1.0 && last) {
                // a step clipped at the grid point does not shrink the next one
                h = std::max(h_free, h * factor);
                break;
            }
            h *= factor;
            if (err_norm > 1.0 && h < 1e-14 * std::max(1.0, std::abs(t)))
                throw std::runtime_error("ODE step size underflow");
        }
        out.push_back(y);
    }
    return out;
}

} // namespace mollow

#endif // MOLLOW_ODE_HPP
