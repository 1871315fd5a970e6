#ifndef PIMD_POTENTIALS_HPP
#define PIMD_POTENTIALS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "pimd/modes.hpp"

namespace pimd {

// A potential V(q) on R^d with its gradient and the preconditioning shift a.
// m1/m2 are the optional convexity-decomposition and Hessian bounds; they are
// metadata for the rate bounds, never fabricated.
struct PotentialSpec {
    int dim = 1;
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    double a = 1.0;
    std::optional<double> m1;
    std::optional<double> m2;

    // V^a(q) = V(q) - a|q|^2/2
    double shifted_value(const Eigen::VectorXd& q) const {
        return value(q) - 0.5 * a * q.squaredNorm();
    }
    Eigen::VectorXd shifted_gradient(const Eigen::VectorXd& q) const {
        return gradient(q) - a * q;
    }
};

inline PotentialSpec builtin_potential(const std::string& name, double a) {
    if (!(a > 0.0)) throw std::invalid_argument("builtin_potential: a must be positive");
    PotentialSpec p;
    p.a = a;
    if (name == "harmonic") {
        p.dim = 1;
        p.value = [](const Eigen::VectorXd& q) { return 0.5 * q.squaredNorm(); };
        p.gradient = [](const Eigen::VectorXd& q) { return q; };
        if (a <= 1.0) {
            // V^a = (1-a)|q|^2/2 is convex with bounded Hessian; V^b = 0
            p.m1 = 0.0;
            p.m2 = 1.0 - a;
        }
    } else if (name == "model1d") {
        p.dim = 1;
        p.value = [](const Eigen::VectorXd& q) {
            const double x = q(0);
            return 0.5 * x * x + x * std::cos(x);
        };
        p.gradient = [](const Eigen::VectorXd& q) {
            const double x = q(0);
            Eigen::VectorXd g(1);
            g(0) = x + std::cos(x) - x * std::sin(x);
            return g;
        };
        // q cos q is not globally bounded, so m1 stays unset.
        // |d^2/dq^2 (q cos q)| = |2 sin q + q cos q| is unbounded too.
    } else if (name == "spherical3d") {
        p.dim = 3;
        p.value = [](const Eigen::VectorXd& q) {
            return 0.5 * q.squaredNorm() + 1.0 / std::sqrt(q.squaredNorm() + 0.04);
        };
        p.gradient = [](const Eigen::VectorXd& q) {
            const double s = q.squaredNorm() + 0.04;
            return Eigen::VectorXd(q * (1.0 - std::pow(s, -1.5)));
        };
    } else {
        throw std::invalid_argument("builtin_potential: unknown name '" + name + "'");
    }
    return p;
}

// Discretized loop potential and its mode-space gradient for fixed (N, D, beta).
struct LoopPotentialContext {
    PotentialSpec potential;
    ModeTransform transform;

    LoopPotentialContext(PotentialSpec pot, int n_modes, int d_grid, double beta)
        : potential(std::move(pot)), transform(n_modes, d_grid, beta) {}
};

// beta_D sum_j V^a(x_N(j beta_D))
inline double loop_potential(const LoopPotentialContext& ctx, const Eigen::MatrixXd& xi) {
    const Eigen::MatrixXd grid = ctx.transform.to_grid(xi);
    double acc = 0.0;
    for (int j = 0; j < grid.rows(); ++j)
        acc += ctx.potential.shifted_value(grid.row(j).transpose());
    return ctx.transform.beta_d() * acc;
}

// k-th row: beta_D sum_j grad V^a(x_N(j beta_D)) c_k(j beta_D)
inline Eigen::MatrixXd loop_force(const LoopPotentialContext& ctx, const Eigen::MatrixXd& xi) {
    const Eigen::MatrixXd grid = ctx.transform.to_grid(xi);
    Eigen::MatrixXd grad(grid.rows(), grid.cols());
    for (int j = 0; j < grid.rows(); ++j)
        grad.row(j) = ctx.potential.shifted_gradient(grid.row(j).transpose()).transpose();
    return ctx.transform.to_modes(grad);
}

} // namespace pimd

#endif
