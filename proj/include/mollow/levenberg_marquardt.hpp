#ifndef MOLLOW_LEVENBERG_MARQUARDT_HPP
#define MOLLOW_LEVENBERG_MARQUARDT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/QR>

#include "errors.hpp"

namespace mollow {

struct LmOptions {
    int max_iterations = 300;
    double gradient_tolerance = 1e-10;  // max cosine between residual and Jacobian columns
    double step_tolerance = 1e-12;      // relative parameter change
    double reduction_tolerance = 1e-15; // relative cost reduction
    double initial_damping = 1e-3;
    double fd_step = 1e-7;              // relative forward-difference step
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double residual_norm = 0.0;
    double gradient_cosine = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;  // residual norm after each accepted step
};

namespace detail {

template <typename Residual>
std::optional<Eigen::VectorXd> try_eval(Residual& f, const Eigen::VectorXd& x)
{
    try {
        Eigen::VectorXd r = f(x);
        if (!r.allFinite())
            return std::nullopt;
        return r;
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

template <typename Residual>
Eigen::MatrixXd forward_jacobian(Residual& f, const Eigen::VectorXd& x, const Eigen::VectorXd& r,
                                 const Eigen::VectorXd& scale, double rel_step)
{
    Eigen::MatrixXd j(r.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        double h = rel_step * std::max(std::abs(x[k]), scale[k]);
        Eigen::VectorXd xp = x;
        xp[k] += h;
        auto rp = try_eval(f, xp);
        if (!rp) {
            // step back across a domain boundary
            h = -h;
            xp[k] = x[k] + h;
            rp = try_eval(f, xp);
            if (!rp)
                throw DomainError("NonConvergence", "Jacobian evaluation left the model domain");
        }
        j.col(k) = (*rp - r) / h;
    }
    return j;
}

inline double gradient_cosine(const Eigen::MatrixXd& j, const Eigen::VectorXd& r)
{
    const double rn = r.norm();
    if (rn == 0.0)
        return 0.0;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < j.cols(); ++k) {
        const double cn = j.col(k).norm();
        if (cn > 0.0)
            worst = std::max(worst, std::abs(j.col(k).dot(r)) / (cn * rn));
    }
    return worst;
}

} // namespace detail

/// Damped Gauss-Newton minimization of |f(x)|^2 with forward-difference
/// Jacobians. Marquardt scaling (diag of J^T J) for the damping term. A
/// residual evaluation that throws DomainError or returns non-finite values
/// rejects the step. `scale` gives a typical magnitude per parameter for the
/// finite-difference step when a parameter is near zero.
template <typename Residual>
LmResult levenberg_marquardt(Residual&& f, Eigen::VectorXd x0, const LmOptions& opt = {},
                             std::optional<Eigen::VectorXd> scale = std::nullopt)
{
    const Eigen::VectorXd typical = scale ? *scale : Eigen::VectorXd::Constant(x0.size(), 1e-6);
    LmResult res;
    auto r0 = detail::try_eval(f, x0);
    if (!r0)
        throw DomainError("NonConvergence", "initial guess lies outside the model domain");
    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd r = *r0;
    double cost = r.squaredNorm();
    Eigen::MatrixXd j = detail::forward_jacobian(f, x, r, typical, opt.fd_step);
    double lambda = opt.initial_damping;
    res.history.push_back(std::sqrt(cost));

    int it = 0;
    bool converged = false;
    for (; it < opt.max_iterations; ++it) {
        const double cosine = detail::gradient_cosine(j, r);
        if (cosine <= opt.gradient_tolerance || cost == 0.0) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-300);

        bool accepted = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * diag;
            const Eigen::VectorXd step = a.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd x_new = x + step;
            const auto r_new = detail::try_eval(f, x_new);
            const double cost_new = r_new ? r_new->squaredNorm() : std::numeric_limits<double>::infinity();
            if (cost_new < cost) {
                const double reduction = (cost - cost_new) / cost;
                const double rel_step = step.norm() / (x.norm() + opt.step_tolerance);
                x = x_new;
                r = *r_new;
                cost = cost_new;
                lambda = std::max(lambda * 0.3, 1e-12);
                res.history.push_back(std::sqrt(cost));
                accepted = true;
                j = detail::forward_jacobian(f, x, r, typical, opt.fd_step);
                if (rel_step <= opt.step_tolerance || reduction <= opt.reduction_tolerance)
                    converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // no downhill step at any damping: stationary to working precision
            converged = detail::gradient_cosine(j, r) <= 1e-4;
            break;
        }
        if (converged) {
            ++it;
            break;
        }
    }
    res.params = x;
    res.residuals = r;
    res.jacobian = j;
    res.residual_norm = std::sqrt(cost);
    res.gradient_cosine = detail::gradient_cosine(j, r);
    // a step-size stop is only convergence when the gradient is also small;
    // residuals driven down to rounding level carry no gradient direction
    const bool exact = res.residual_norm <= 1e-9 * res.history.front() || res.residual_norm <= 1e-10;
    res.converged = converged && (res.gradient_cosine <= 1e-4 || exact);
    res.iterations = it;
    return res;
}

struct Covariance {
    Eigen::MatrixXd matrix;
    bool full_rank = false;
};

/// (J^T J)^-1, scaled by the reduced chi^2 unless the residuals are already
/// normalized by absolute errors.
inline Covariance covariance(const Eigen::MatrixXd& j, const Eigen::VectorXd& r, bool absolute_sigma)
{
    Covariance c;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(j);
    qr.setThreshold(1e-12);
    if (qr.rank() < j.cols())
        return c;
    const Eigen::MatrixXd jtj = j.transpose() * j;
    c.matrix = jtj.inverse();
    if (!absolute_sigma) {
        const auto dof = static_cast<double>(j.rows() - j.cols());
        c.matrix *= dof > 0 ? r.squaredNorm() / dof : 0.0;
    }
    c.full_rank = c.matrix.allFinite();
    return c;
}

} // namespace mollow

#endif // MOLLOW_LEVENBERG_MARQUARDT_HPP
