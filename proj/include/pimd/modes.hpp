#ifndef PIMD_MODES_HPP
#define PIMD_MODES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pimd/fft.hpp"

namespace pimd {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

enum class FrequencyFamily { matsubara, normal_mode };

// Per-mode angular frequencies. Index 0 is the centroid, then (sin, cos)
// pairs sharing the same frequency.
struct FrequencySpectrum {
    FrequencyFamily family;
    double beta;
    int n_modes;
    std::vector<double> omegas;
};

// Mode coordinates xi, an N x d matrix (row k = mode k).
struct ModeCoordinates {
    Eigen::MatrixXd xi;
    double beta;
    int n_modes() const { return static_cast<int>(xi.rows()); }
    int dim() const { return static_cast<int>(xi.cols()); }
};

// Bead positions x_j = x_N(j beta_D), a D x d matrix.
struct GridLoop {
    Eigen::MatrixXd x;
    double beta;
    int d_grid() const { return static_cast<int>(x.rows()); }
    int dim() const { return static_cast<int>(x.cols()); }
};

inline FrequencySpectrum matsubara_frequencies(int n_modes, double beta) {
    if (n_modes < 1) throw std::invalid_argument("matsubara_frequencies: n_modes must be >= 1");
    if (!(beta > 0.0)) throw std::invalid_argument("matsubara_frequencies: beta must be positive");
    FrequencySpectrum s{FrequencyFamily::matsubara, beta, n_modes, {}};
    s.omegas.resize(n_modes);
    for (int k = 0; k < n_modes; ++k)
        s.omegas[k] = 2.0 * kPi * std::ceil(k / 2.0) / beta;
    return s;
}

inline FrequencySpectrum normal_mode_frequencies(int n_modes, double beta) {
    if (n_modes < 1) throw std::invalid_argument("normal_mode_frequencies: n_modes must be >= 1");
    if (n_modes % 2 == 0)
        throw std::invalid_argument("normal_mode_frequencies: even n_modes unsupported");
    if (!(beta > 0.0)) throw std::invalid_argument("normal_mode_frequencies: beta must be positive");
    FrequencySpectrum s{FrequencyFamily::normal_mode, beta, n_modes, {}};
    s.omegas.resize(n_modes);
    const double beta_n = beta / n_modes;
    for (int k = 0; k < n_modes; ++k)
        s.omegas[k] = (2.0 / beta_n) * std::sin(std::ceil(k / 2.0) * kPi / n_modes);
    return s;
}

// Fourier basis c_k(tau) on [0, beta]: c_0 = sqrt(1/beta),
// c_{2k-1} = sqrt(2/beta) sin(2k pi tau / beta),
// c_{2k}   = sqrt(2/beta) cos(2k pi tau / beta).
inline double basis_value(int k, double tau, double beta) {
    if (k < 0) throw std::invalid_argument("basis_value: negative mode index");
    if (tau < 0.0 || tau > beta)
        throw std::invalid_argument("basis_value: tau outside [0, beta]");
    if (k == 0) return std::sqrt(1.0 / beta);
    const double m = std::ceil(k / 2.0);
    const double arg = 2.0 * m * kPi * tau / beta;
    const double amp = std::sqrt(2.0 / beta);
    return (k % 2 == 1) ? amp * std::sin(arg) : amp * std::cos(arg);
}

// Mode <-> grid transforms for a fixed (N, D, beta). The direct matrix path
// is the correctness oracle; the fast path uses a radix-2 FFT when D is a
// power of two and large enough to pay off.
class ModeTransform {
public:
    ModeTransform(int n_modes, int d_grid, double beta)
        : n_(n_modes), d_(d_grid), beta_(beta), beta_d_(beta / d_grid) {
        if (n_modes < 1 || d_grid < 1)
            throw std::invalid_argument("ModeTransform: n_modes and d_grid must be >= 1");
        basis_.resize(d_, n_);
        for (int j = 0; j < d_; ++j)
            for (int k = 0; k < n_; ++k)
                basis_(j, k) = basis_value(k, j * beta_d_, beta_);
        // aliasing-free fast path requires all pair indices below D/2
        fast_ok_ = detail::is_power_of_two(static_cast<std::size_t>(d_)) &&
                   n_ > 8 && d_ >= 16 && (n_ - 1) / 2 < d_ / 2;
    }

    int n_modes() const { return n_; }
    int d_grid() const { return d_; }
    double beta() const { return beta_; }
    double beta_d() const { return beta_d_; }
    const Eigen::MatrixXd& basis() const { return basis_; }

    // x_j = sum_k xi_k c_k(j beta_D)
    Eigen::MatrixXd to_grid(const Eigen::MatrixXd& xi) const {
        check_modes(xi);
        return fast_ok_ ? to_grid_fast(xi) : to_grid_direct(xi);
    }

    // beta_D sum_j g_j c_k(j beta_D); inverse of to_grid on its range when N <= D
    Eigen::MatrixXd to_modes(const Eigen::MatrixXd& grid) const {
        check_grid(grid);
        return fast_ok_ ? to_modes_fast(grid) : to_modes_direct(grid);
    }

    Eigen::MatrixXd to_grid_direct(const Eigen::MatrixXd& xi) const {
        return basis_ * xi;
    }

    Eigen::MatrixXd to_modes_direct(const Eigen::MatrixXd& grid) const {
        return beta_d_ * (basis_.transpose() * grid);
    }

    Eigen::MatrixXd to_grid_fast(const Eigen::MatrixXd& xi) const {
        const int dim = static_cast<int>(xi.cols());
        const double amp0 = std::sqrt(1.0 / beta_);
        const double amp = std::sqrt(2.0 / beta_);
        Eigen::MatrixXd out(d_, dim);
        std::vector<std::complex<double>> spec(d_);
        for (int c = 0; c < dim; ++c) {
            std::fill(spec.begin(), spec.end(), std::complex<double>(0.0, 0.0));
            spec[0] = amp0 * xi(0, c);
            for (int k = 1; k < n_; ++k) {
                const int m = (k + 1) / 2;
                // c_{2m-1} sin + c_{2m} cos as one complex coefficient
                const std::complex<double> half =
                    (k % 2 == 1) ? std::complex<double>(0.0, -0.5 * amp * xi(k, c))
                                 : std::complex<double>(0.5 * amp * xi(k, c), 0.0);
                spec[m] += half;
                spec[d_ - m] += std::conj(half);
            }
            detail::fft_radix2(spec, +1);
            for (int j = 0; j < d_; ++j) out(j, c) = spec[j].real();
        }
        return out;
    }

    Eigen::MatrixXd to_modes_fast(const Eigen::MatrixXd& grid) const {
        const int dim = static_cast<int>(grid.cols());
        const double amp0 = std::sqrt(1.0 / beta_);
        const double amp = std::sqrt(2.0 / beta_);
        Eigen::MatrixXd out(n_, dim);
        std::vector<std::complex<double>> spec(d_);
        for (int c = 0; c < dim; ++c) {
            for (int j = 0; j < d_; ++j) spec[j] = grid(j, c);
            detail::fft_radix2(spec, -1);
            out(0, c) = beta_d_ * amp0 * spec[0].real();
            for (int k = 1; k < n_; ++k) {
                const int m = (k + 1) / 2;
                out(k, c) = (k % 2 == 1) ? -beta_d_ * amp * spec[m].imag()
                                         : beta_d_ * amp * spec[m].real();
            }
        }
        return out;
    }

private:
    void check_modes(const Eigen::MatrixXd& xi) const {
        if (static_cast<int>(xi.rows()) != n_)
            throw std::invalid_argument("ModeTransform: mode array has wrong row count");
    }
    void check_grid(const Eigen::MatrixXd& grid) const {
        if (static_cast<int>(grid.rows()) != d_)
            throw std::invalid_argument("ModeTransform: grid array has wrong row count");
    }

    int n_, d_;
    double beta_, beta_d_;
    Eigen::MatrixXd basis_;
    bool fast_ok_;
};

inline GridLoop mode_to_grid(const ModeCoordinates& xi, int d_grid) {
    ModeTransform t(xi.n_modes(), d_grid, xi.beta);
    return GridLoop{t.to_grid(xi.xi), xi.beta};
}

inline ModeCoordinates grid_to_modes(const GridLoop& grid, int n_modes) {
    if (n_modes > grid.d_grid())
        throw std::invalid_argument("grid_to_modes: requires n_modes <= d_grid");
    ModeTransform t(n_modes, grid.d_grid(), grid.beta);
    return ModeCoordinates{t.to_modes(grid.x), grid.beta};
}

// Projection of a grid force onto the first n_modes basis functions.
inline Eigen::MatrixXd project_force(const Eigen::MatrixXd& grid_force,
                                     int n_modes, double beta) {
    ModeTransform t(n_modes, static_cast<int>(grid_force.rows()), beta);
    return t.to_modes(grid_force);
}

} // namespace pimd

#endif
