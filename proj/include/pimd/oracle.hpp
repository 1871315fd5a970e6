#ifndef PIMD_ORACLE_HPP
#define PIMD_ORACLE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pimd/potentials.hpp"

namespace pimd {

struct SpectralConfig {
    int basis_size = 64;   // number of Hermite functions
    int quad_points = 0;   // Gauss-Hermite nodes; 0 means 2 * basis_size
    double scale = 1.0;    // basis length-scale
    int max_doublings = 6;
    double tol = 1e-8;
};

namespace detail {

struct GaussHermite {
    std::vector<double> nodes;
    // modified weights w_i e^{u_i^2}, paired with the bounded Hermite
    // functions below; avoids over/underflow at extreme nodes
    std::vector<double> weights;
};

// Orthonormal Hermite functions h_n(u) = Hbar_n(u) e^{-u^2/2}. The values are
// bounded, but a naive recurrence underflows at extreme nodes (e^{-u^2/2} is 0
// in double precision for |u| > 38 while h_n recovers to O(1) near n ~ u^2/2),
// so run the polynomial recurrence with a running exponent and fold the
// Gaussian in at the end of each step.
inline Eigen::MatrixXd hermite_table(const std::vector<double>& nodes, int n_basis) {
    const int q = static_cast<int>(nodes.size());
    Eigen::MatrixXd h(q, n_basis);
    for (int i = 0; i < q; ++i) {
        const double u = nodes[i];
        double log_scale = -0.5 * u * u; // h_n = p_n * e^{log_scale}
        double pm1 = 0.0, p = std::pow(kPi, -0.25);
        h(i, 0) = p * std::exp(log_scale);
        for (int n = 0; n + 1 < n_basis; ++n) {
            const double pnext = std::sqrt(2.0 / (n + 1)) * u * p -
                                 std::sqrt(n / (n + 1.0)) * pm1;
            pm1 = p;
            p = pnext;
            const double mag = std::max(std::abs(p), std::abs(pm1));
            if (mag > 1e100) {
                pm1 *= 1e-100;
                p *= 1e-100;
                log_scale += 100.0 * std::log(10.0);
            }
            h(i, n + 1) = p * std::exp(log_scale);
        }
    }
    return h;
}

// Nodes from the Jacobi-matrix eigenvalues; modified weights from the
// Christoffel function, 1 / sum_k h_k(u_i)^2. The eigenvector route loses
// all precision in the exponentially small extreme-node weights.
inline GaussHermite gauss_hermite(int n) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    GaussHermite gh;
    gh.nodes.resize(n);
    for (int i = 0; i < n; ++i) gh.nodes[i] = es.eigenvalues()(i);
    const Eigen::MatrixXd h = hermite_table(gh.nodes, n);
    gh.weights.resize(n);
    for (int i = 0; i < n; ++i) gh.weights[i] = 1.0 / h.row(i).squaredNorm();
    return gh;
}

// Matrix of a multiplicative operator f(x) in the scaled Hermite basis.
inline Eigen::MatrixXd multiplicative_matrix(const GaussHermite& gh,
                                             const Eigen::MatrixXd& hermite,
                                             const std::function<double(double)>& f,
                                             double scale) {
    const int q = static_cast<int>(gh.nodes.size());
    Eigen::VectorXd fw(q);
    for (int i = 0; i < q; ++i) fw(i) = gh.weights[i] * f(scale * gh.nodes[i]);
    Eigen::MatrixXd m = hermite.transpose() * fw.asDiagonal() * hermite;
    return 0.5 * (m + m.transpose()); // symmetrize away rounding noise
}

inline double thermal_ratio(const PotentialSpec& potential,
                            const std::function<double(double)>& obs, double beta,
                            int n_basis, int quad, double scale) {
    const GaussHermite gh = gauss_hermite(quad);
    const Eigen::MatrixXd hermite = hermite_table(gh.nodes, n_basis);
    // kinetic part: (1/s^2) [(n + 1/2) delta - <m|u^2|n>/2]
    Eigen::MatrixXd kinetic = Eigen::MatrixXd::Zero(n_basis, n_basis);
    for (int n = 0; n < n_basis; ++n) {
        kinetic(n, n) = (n + 0.5) - 0.5 * (n + 0.5);
        if (n + 2 < n_basis) {
            const double off = -0.25 * std::sqrt((n + 1.0) * (n + 2.0));
            kinetic(n, n + 2) = off;
            kinetic(n + 2, n) = off;
        }
    }
    kinetic /= scale * scale;
    const Eigen::MatrixXd vmat = multiplicative_matrix(
        gh, hermite,
        [&](double x) {
            Eigen::VectorXd q(1);
            q(0) = x;
            return potential.value(q);
        },
        scale);
    const Eigen::MatrixXd omat = multiplicative_matrix(gh, hermite, obs, scale);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kinetic + vmat);
    const Eigen::VectorXd energies = es.eigenvalues();
    const double e0 = energies(0);
    double num = 0.0, den = 0.0;
    for (int n = 0; n < n_basis; ++n) {
        const double w = std::exp(-beta * (energies(n) - e0));
        const Eigen::VectorXd v = es.eigenvectors().col(n);
        num += w * v.dot(omat * v);
        den += w;
    }
    return num / den;
}

} // namespace detail

// Quantum thermal average <O(q)>_beta of a confining 1D potential via
// Hermite-basis diagonalization; converged when doubling the basis changes
// the result by less than cfg.tol.
inline double quantum_average_1d(const PotentialSpec& potential,
                                 const std::function<double(double)>& obs, double beta,
                                 SpectralConfig cfg = {}) {
    if (potential.dim != 1)
        throw std::invalid_argument("quantum_average_1d: potential must be 1D");
    if (cfg.basis_size < 2)
        throw std::invalid_argument("quantum_average_1d: basis_size must be >= 2");
    int n = cfg.basis_size;
    int quad = cfg.quad_points > 0 ? cfg.quad_points : 2 * n;
    double prev = detail::thermal_ratio(potential, obs, beta, n, quad, cfg.scale);
    for (int i = 0; i < cfg.max_doublings; ++i) {
        n *= 2;
        quad = std::max(cfg.quad_points, 2 * n);
        const double cur = detail::thermal_ratio(potential, obs, beta, n, quad, cfg.scale);
        if (std::abs(cur - prev) < cfg.tol) return cur;
        prev = cur;
    }
    throw std::runtime_error(
        "quantum_average_1d: not converged after doubling cap (basis " +
        std::to_string(n) + ", last delta above tolerance)");
}

namespace detail {

// composite Simpson with interval doubling
inline double simpson(const std::function<double(double)>& f, double lo, double hi,
                      double tol = 1e-12) {
    int n = 128;
    auto eval = [&](int m) {
        const double h = (hi - lo) / m;
        double acc = f(lo) + f(hi);
        for (int i = 1; i < m; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
        return acc * h / 3.0;
    };
    double prev = eval(n);
    for (int it = 0; it < 14; ++it) {
        n *= 2;
        const double cur = eval(n);
        if (std::abs(cur - prev) <= tol * (1.0 + std::abs(cur))) return cur;
        prev = cur;
    }
    return prev;
}

// symmetric cutoff where the Boltzmann factor is negligible
inline double boltzmann_cutoff(const std::function<double(double)>& v, double beta) {
    double vmin = v(0.0);
    for (double x = -8.0; x <= 8.0; x += 0.125) vmin = std::min(vmin, v(x));
    double l = 1.0;
    while (l < 1e4 && (beta * (v(l) - vmin) < 45.0 || beta * (v(-l) - vmin) < 45.0))
        l *= 1.5;
    return l;
}

} // namespace detail

// Classical average <O>_cl = int O e^{-beta V} / int e^{-beta V} in 1D.
inline double classical_average_1d(const std::function<double(double)>& v,
                                   const std::function<double(double)>& obs, double beta) {
    const double l = detail::boltzmann_cutoff(v, beta);
    double vmin = v(0.0);
    for (double x = -l; x <= l; x += l / 256) vmin = std::min(vmin, v(x));
    const auto weight = [&](double x) { return std::exp(-beta * (v(x) - vmin)); };
    const double den = detail::simpson(weight, -l, l);
    if (!(den > 0.0) || !std::isfinite(den))
        throw std::invalid_argument("classical_average_1d: divergent normalizer");
    const double num =
        detail::simpson([&](double x) { return obs(x) * weight(x); }, -l, l);
    return num / den;
}

// Classical radial average in 3D for a spherically symmetric potential:
// weight r^2 e^{-beta V(r)} on [0, infinity).
inline double classical_radial_average(const std::function<double(double)>& v_of_r,
                                       const std::function<double(double)>& obs_of_r,
                                       double beta) {
    const double l = detail::boltzmann_cutoff([&](double x) { return v_of_r(std::abs(x)); }, beta);
    double vmin = v_of_r(0.0);
    for (double r = 0.0; r <= l; r += l / 256) vmin = std::min(vmin, v_of_r(r));
    const auto weight = [&](double r) { return r * r * std::exp(-beta * (v_of_r(r) - vmin)); };
    const double den = detail::simpson(weight, 0.0, l);
    if (!(den > 0.0) || !std::isfinite(den))
        throw std::invalid_argument("classical_radial_average: divergent normalizer");
    const double num =
        detail::simpson([&](double r) { return obs_of_r(r) * weight(r); }, 0.0, l);
    return num / den;
}

// Normalized classical radial density averaged over each histogram bin.
inline std::vector<double> classical_radial_density(
    const std::function<double(double)>& v_of_r, double beta, int bins, double r_max) {
    double vmin = v_of_r(0.0);
    for (double r = 0.0; r <= r_max; r += r_max / 512) vmin = std::min(vmin, v_of_r(r));
    const auto weight = [&](double r) { return r * r * std::exp(-beta * (v_of_r(r) - vmin)); };
    // normalize over the full half-line, consistent with the histogram counting
    // out-of-range samples toward the total
    const double l = std::max(
        r_max, detail::boltzmann_cutoff([&](double x) { return v_of_r(std::abs(x)); }, beta));
    const double norm = detail::simpson(weight, 0.0, l);
    const double dr = r_max / bins;
    std::vector<double> rho(bins);
    for (int i = 0; i < bins; ++i) {
        rho[i] = detail::simpson(weight, i * dr, (i + 1) * dr, 1e-13) / (norm * dr);
    }
    return rho;
}

} // namespace pimd

#endif
