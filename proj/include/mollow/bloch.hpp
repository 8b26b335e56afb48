#ifndef MOLLOW_BLOCH_HPP
#define MOLLOW_BLOCH_HPP

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ode.hpp"
#include "params.hpp"
#include "traces.hpp"

// Optical Bloch equations of the driven, damped two-level emitter and the
// quantum-regression oracles built on them. Rotating frame of the laser with
// H = -Delta/2 sigma_z + Omega/2 sigma_x; (u, v, w) = <sigma_x, sigma_y, sigma_z>.
namespace mollow {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Homogeneous part M of d(u,v,w)/dt = M (u,v,w) + b.
template <typename Scalar>
Matrix3<Scalar> bloch_matrix(Scalar gamma1, Scalar gamma2, Scalar rabi, Scalar detuning)
{
    Matrix3<Scalar> m;
    m << -gamma2, detuning, Scalar(0),
         -detuning, -gamma2, -rabi,
         Scalar(0), rabi, -gamma1;
    return m;
}

/// Inhomogeneous part b (relaxation towards w = -1).
template <typename Scalar>
Vector3<Scalar> bloch_source(Scalar gamma1)
{
    return Vector3<Scalar>(Scalar(0), Scalar(0), -gamma1);
}

inline Matrix3<double> bloch_matrix(const EmitterParams& e, const DriveParams& d)
{
    return bloch_matrix<double>(e.gamma1(), e.gamma2(), d.rabi, d.detuning);
}

struct BlochState {
    double u = 0.0;
    double v = 0.0;
    double w = -1.0;

    Vector3<double> vector() const { return {u, v, w}; }
    static BlochState from(const Vector3<double>& x) { return {x[0], x[1], x[2]}; }
    double excited_population() const { return 0.5 * (1.0 + w); }
    double length_squared() const { return u * u + v * v + w * w; }

    static constexpr BlochState ground() { return {0.0, 0.0, -1.0}; }
};

struct SteadyState {
    BlochState state;
    double excited_population = 0.0;
};

SteadyState steady_state(const EmitterParams& emitter, const DriveParams& drive);

/// Trajectory of the Bloch vector sampled on `t_grid` (ns, starts at 0).
std::vector<BlochState> evolve(const EmitterParams& emitter, const DriveParams& drive,
                               const BlochState& initial, std::span<const double> t_grid,
                               const OdeTolerance& tol = {});

/// g2(tau) = p(tau)/p(inf) with p evolved from the post-emission ground state.
CorrelationTrace oracle_g2(const EmitterParams& emitter, const DriveParams& drive,
                           std::span<const double> t_grid, const OdeTolerance& tol = {});

/// Unnormalized <d sigma+(tau) d sigma-(0)> in steady state (regression theorem).
std::vector<std::complex<double>> g1_incoh_regression(const EmitterParams& emitter,
                                                      const DriveParams& drive,
                                                      std::span<const double> t_grid,
                                                      const OdeTolerance& tol = {});

/// Incoherent first-order coherence normalized to tau = 0 (real part).
/// Identically zero without drive.
CorrelationTrace oracle_g1_incoh(const EmitterParams& emitter, const DriveParams& drive,
                                 std::span<const double> t_grid, const OdeTolerance& tol = {});

struct SpectrumOracleOptions {
    double span_in_decay_times = 20.0;  // tau span in units of 1/eta
    std::size_t min_samples = 4096;
    double max_phase_step = 0.05;       // rad per tau sample at the highest frequency
    OdeTolerance tol{};
};

/// Incoherent spectrum from a discretized Fourier transform of g1:
/// S(nu) = (1/pi) Re int_0^inf g1(tau) exp(-i nu tau) dtau, nu in rad/ns
/// relative to the laser. `freq_grid` must be symmetric about 0.
SpectrumTrace oracle_spectrum(const EmitterParams& emitter, const DriveParams& drive,
                              std::span<const double> freq_grid,
                              const SpectrumOracleOptions& options = {});

} // namespace mollow

#endif // MOLLOW_BLOCH_HPP
