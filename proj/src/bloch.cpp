#include "mollow/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/LU>

namespace mollow {

namespace {

void require_grid_from_zero(std::span<const double> t_grid)
{
    if (t_grid.empty())
        throw std::invalid_argument("time grid is empty");
    if (t_grid.front() != 0.0)
        throw std::invalid_argument("time grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("time grid must be strictly increasing");
}

} // namespace

SteadyState steady_state(const EmitterParams& emitter, const DriveParams& drive)
{
    validate(emitter);
    validate(drive);
    const Matrix3<double> m = bloch_matrix(emitter, drive);
    const Vector3<double> x = m.partialPivLu().solve(-bloch_source(emitter.gamma1()));
    const auto state = BlochState::from(x);
    return {state, state.excited_population()};
}

std::vector<BlochState> evolve(const EmitterParams& emitter, const DriveParams& drive,
                               const BlochState& initial, std::span<const double> t_grid,
                               const OdeTolerance& tol)
{
    validate(emitter);
    validate(drive);
    require_grid_from_zero(t_grid);
    const Matrix3<double> m = bloch_matrix(emitter, drive);
    const Vector3<double> b = bloch_source(emitter.gamma1());
    auto rhs = [&](double, const Vector3<double>& y) -> Vector3<double> { return m * y + b; };
    const auto states = integrate(rhs, initial.vector(), t_grid, tol);

    std::vector<BlochState> out;
    out.reserve(states.size());
    for (const auto& x : states)
        out.push_back(BlochState::from(x));
    return out;
}

CorrelationTrace oracle_g2(const EmitterParams& emitter, const DriveParams& drive,
                           std::span<const double> t_grid, const OdeTolerance& tol)
{
    const double p_inf = steady_state(emitter, drive).excited_population;
    const auto traj = evolve(emitter, drive, BlochState::ground(), t_grid, tol);

    CorrelationTrace trace;
    trace.kind = CorrelationKind::G2;
    trace.taus.assign(t_grid.begin(), t_grid.end());
    trace.values.reserve(traj.size());
    for (const auto& s : traj)
        trace.values.push_back(p_inf > 0.0 ? s.excited_population() / p_inf : 1.0);
    return trace;
}

std::vector<std::complex<double>> g1_incoh_regression(const EmitterParams& emitter,
                                                      const DriveParams& drive,
                                                      std::span<const double> t_grid,
                                                      const OdeTolerance& tol)
{
    using C = std::complex<double>;
    const auto ss = steady_state(emitter, drive).state;
    require_grid_from_zero(t_grid);

    // c_k(0) = <sigma_k sigma-> - <sigma_k><sigma->, using
    // sigma_x sigma- = (1+sigma_z)/2, sigma_y sigma- = -i(1+sigma_z)/2, sigma_z sigma- = -sigma-.
    const C s_minus{0.5 * ss.u, -0.5 * ss.v};
    const double p = ss.excited_population();
    Vector3<C> c0;
    c0 << C(p) - ss.u * s_minus, C(0.0, -p) - ss.v * s_minus, -s_minus - ss.w * s_minus;

    const Matrix3<C> m = bloch_matrix(emitter, drive).cast<C>();
    auto rhs = [&](double, const Vector3<C>& y) -> Vector3<C> { return m * y; };
    const auto states = integrate(rhs, c0, t_grid, tol);

    std::vector<C> out;
    out.reserve(states.size());
    const C i{0.0, 1.0};
    for (const auto& c : states)
        out.push_back(0.5 * (c[0] + i * c[1]));
    return out;
}

CorrelationTrace oracle_g1_incoh(const EmitterParams& emitter, const DriveParams& drive,
                                 std::span<const double> t_grid, const OdeTolerance& tol)
{
    CorrelationTrace trace;
    trace.kind = CorrelationKind::G1Incoh;
    trace.taus.assign(t_grid.begin(), t_grid.end());
    const auto raw = g1_incoh_regression(emitter, drive, t_grid, tol);
    const double norm = raw.front().real();
    trace.values.reserve(raw.size());
    for (const auto& z : raw)
        trace.values.push_back(norm > 0.0 ? z.real() / norm : 0.0);
    return trace;
}

SpectrumTrace oracle_spectrum(const EmitterParams& emitter, const DriveParams& drive,
                              std::span<const double> freq_grid,
                              const SpectrumOracleOptions& options)
{
    validate(emitter);
    validate(drive);
    if (freq_grid.empty())
        throw std::invalid_argument("frequency grid is empty");
    const std::size_t n = freq_grid.size();
    double extent = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double a = freq_grid[k], b = freq_grid[n - 1 - k];
        extent = std::max(extent, std::abs(a));
        if (std::abs(a + b) > 1e-9 * std::max(1.0, std::abs(a)))
            throw std::invalid_argument("frequency grid must be symmetric about 0");
    }

    SpectrumTrace trace;
    trace.mode = SpectrumMode::Standard;
    trace.offsets.assign(freq_grid.begin(), freq_grid.end());
    for (std::size_t k = 1; k < n; ++k)
        if (freq_grid[k] - freq_grid[k - 1] > 0.5 * emitter.gamma2())
            trace.coarse_grid_warning = true;

    const double eta = 0.5 * (emitter.gamma1() + emitter.gamma2());
    const double span = options.span_in_decay_times / eta;
    const double omega_g = std::hypot(drive.rabi, drive.detuning);
    const double max_freq = extent + omega_g;
    const auto samples = std::max<std::size_t>(
        options.min_samples,
        static_cast<std::size_t>(std::ceil(span * max_freq / options.max_phase_step)) + 1);

    std::vector<double> taus(samples);
    const double dt = span / static_cast<double>(samples - 1);
    for (std::size_t k = 0; k < samples; ++k)
        taus[k] = dt * static_cast<double>(k);
    const auto g1 = g1_incoh_regression(emitter, drive, taus, options.tol);

    trace.intensities.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double nu = freq_grid[j];
        std::complex<double> acc = 0.5 * g1.front();
        for (std::size_t k = 1; k + 1 < samples; ++k)
            acc += g1[k] * std::polar(1.0, -nu * taus[k]);
        acc += 0.5 * g1.back() * std::polar(1.0, -nu * taus.back());
        trace.intensities[j] = std::max(0.0, (acc * dt).real() / std::numbers::pi);
    }
    return trace;
}

} // namespace mollow
