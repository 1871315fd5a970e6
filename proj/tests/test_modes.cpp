#include <doctest.h>

#include <random>

#include "pimd/modes.hpp"

using namespace pimd;

namespace {
Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937& gen) {
    std::normal_distribution<double> dist;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = dist(gen);
    return m;
}
} // namespace

TEST_CASE("matsubara frequencies") {
    CHECK(matsubara_frequencies(1, 2.0).omegas == std::vector<double>{0.0});

    const auto s = matsubara_frequencies(5, 2.0);
    CHECK(s.omegas[0] == 0.0);
    CHECK(s.omegas[1] == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(s.omegas[2] == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(s.omegas[3] == doctest::Approx(2 * kPi).epsilon(1e-15));
    CHECK(s.omegas[4] == doctest::Approx(2 * kPi).epsilon(1e-15));

    const auto t = matsubara_frequencies(3, 1.0);
    CHECK(t.omegas[1] == doctest::Approx(2 * kPi).epsilon(1e-15));
    CHECK(t.omegas[2] == doctest::Approx(2 * kPi).epsilon(1e-15));

    CHECK_THROWS_AS(matsubara_frequencies(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(matsubara_frequencies(3, -1.0), std::invalid_argument);
}

TEST_CASE("normal mode frequencies") {
    CHECK(normal_mode_frequencies(1, 7.0).omegas == std::vector<double>{0.0});

    // beta_N = 1, 2 sin(pi/3) = sqrt(3); cross-check vs the 3-bead ring
    // Laplacian eigenvalues {0, 3, 3} scaled by 1/beta_N^2
    const auto s = normal_mode_frequencies(3, 3.0);
    CHECK(s.omegas[0] == 0.0);
    CHECK(s.omegas[1] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
    CHECK(s.omegas[2] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
    Eigen::Matrix3d lap;
    lap << 2, -1, -1, -1, 2, -1, -1, -1, 2;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(lap);
    for (int k = 0; k < 3; ++k) {
        const double from_laplacian = std::sqrt(std::max(0.0, es.eigenvalues()(k)));
        std::vector<double> sorted = s.omegas;
        std::sort(sorted.begin(), sorted.end());
        CHECK(std::abs(sorted[k] - from_laplacian) < 1e-7);
    }

    const auto big = normal_mode_frequencies(129, 2.0);
    CHECK(std::abs(big.omegas[1] - kPi) <= 5e-4);

    CHECK_THROWS_AS(normal_mode_frequencies(4, 1.0), std::invalid_argument);
}

TEST_CASE("frequency convergence is O(1/N^2) and monotone") {
    for (int pair : {1, 2, 3}) {
        const double target = 2.0 * pair * kPi / 2.0; // beta = 2
        double prev_err = 1e300;
        for (int n : {9, 33, 129}) {
            const auto s = normal_mode_frequencies(n, 2.0);
            const double err = std::abs(s.omegas[2 * pair] - target);
            CHECK(err < prev_err);
            prev_err = err;
        }
        // O(1/N^2): error at N=129 below the Taylor bound
        const auto s = normal_mode_frequencies(129, 2.0);
        const double bound = std::pow(pair * kPi, 3) / (3.0 * 129.0 * 129.0);
        CHECK(std::abs(s.omegas[2 * pair] - target) <= bound);
    }
}

TEST_CASE("basis values") {
    CHECK(basis_value(0, 1.3, 4.0) == doctest::Approx(0.5).epsilon(1e-15));
    const double beta = 3.7;
    CHECK(basis_value(1, beta / 4, beta) ==
          doctest::Approx(std::sqrt(2.0 / beta)).epsilon(1e-14));
    CHECK(basis_value(2, 0.0, beta) ==
          doctest::Approx(std::sqrt(2.0 / beta)).epsilon(1e-14));
    CHECK_THROWS_AS(basis_value(1, -0.1, beta), std::invalid_argument);
    CHECK_THROWS_AS(basis_value(1, beta + 0.1, beta), std::invalid_argument);
}

TEST_CASE("continuous orthonormality via quadrature") {
    const double beta = 2.3;
    const int q = 1 << 14;
    const double h = beta / q;
    for (int k = 0; k < 16; ++k)
        for (int l = k; l < 16; ++l) {
            double acc = 0.0;
            for (int i = 0; i < q; ++i) {
                const double tau = (i + 0.5) * h;
                acc += basis_value(k, tau, beta) * basis_value(l, tau, beta);
            }
            acc *= h;
            CHECK(std::abs(acc - (k == l ? 1.0 : 0.0)) < 1e-10);
        }
}

TEST_CASE("discrete orthogonality (Gram identity)") {
    for (int n : {3, 5, 9, 17}) {
        for (int d : {n, n + 8, 64}) {
            ModeTransform t(n, d, 1.7);
            const Eigen::MatrixXd gram =
                t.beta_d() * (t.basis().transpose() * t.basis());
            const Eigen::MatrixXd err =
                gram - Eigen::MatrixXd::Identity(n, n);
            CHECK(err.cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("mode_to_grid basics") {
    // constant loop
    ModeCoordinates xi{Eigen::MatrixXd::Zero(3, 1), 4.0};
    xi.xi(0, 0) = 2.0;
    const GridLoop g = mode_to_grid(xi, 5);
    for (int j = 0; j < 5; ++j)
        CHECK(g.x(j, 0) == doctest::Approx(2.0 / std::sqrt(4.0)).epsilon(1e-15));

    // beta = 2 pi, D = 4, xi_1 = 1: c_1(tau_j) = sqrt(1/pi) sin(j pi / 2)
    ModeCoordinates xi2{Eigen::MatrixXd::Zero(2, 1), 2 * kPi};
    xi2.xi(1, 0) = 1.0;
    const GridLoop g2 = mode_to_grid(xi2, 4);
    const double amp = 1.0 / std::sqrt(kPi);
    CHECK(g2.x(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(g2.x(1, 0) == doctest::Approx(amp).epsilon(1e-14));
    CHECK(std::abs(g2.x(2, 0)) < 1e-14);
    CHECK(g2.x(3, 0) == doctest::Approx(-amp).epsilon(1e-14));
}

TEST_CASE("grid_to_modes inverts mode_to_grid and validates N <= D") {
    std::mt19937 gen(7);
    const double beta = 2.0;
    for (int trial = 0; trial < 20; ++trial) {
        ModeCoordinates xi{random_matrix(9, 2, gen), beta};
        const GridLoop g = mode_to_grid(xi, 9);
        const ModeCoordinates back = grid_to_modes(g, 9);
        CHECK((back.xi - xi.xi).cwiseAbs().maxCoeff() < 1e-12);

        // Parseval at N = D
        const double grid_norm = (beta / 9) * g.x.squaredNorm();
        CHECK(grid_norm == doctest::Approx(xi.xi.squaredNorm()).epsilon(1e-12));
    }

    GridLoop g{Eigen::MatrixXd::Zero(4, 1), 1.0};
    CHECK_THROWS_AS(grid_to_modes(g, 5), std::invalid_argument);

    // constant grid maps to centroid only
    GridLoop gc{Eigen::MatrixXd::Constant(6, 1, 3.0 / std::sqrt(2.0)), 2.0};
    const ModeCoordinates m = grid_to_modes(gc, 3);
    CHECK(m.xi(0, 0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(std::abs(m.xi(1, 0)) < 1e-13);
    CHECK(std::abs(m.xi(2, 0)) < 1e-13);
}

TEST_CASE("fast and direct transforms agree") {
    std::mt19937 gen(11);
    for (int n : {9, 17, 33}) {
        for (int dim : {1, 3}) {
            ModeTransform t(n, 64, 1.3);
            const Eigen::MatrixXd xi = random_matrix(n, dim, gen);
            const Eigen::MatrixXd direct = t.to_grid_direct(xi);
            const Eigen::MatrixXd fast = t.to_grid_fast(xi);
            CHECK((direct - fast).cwiseAbs().maxCoeff() <
                  1e-12 * direct.cwiseAbs().maxCoeff());

            const Eigen::MatrixXd grid = random_matrix(64, dim, gen);
            const Eigen::MatrixXd md = t.to_modes_direct(grid);
            const Eigen::MatrixXd mf = t.to_modes_fast(grid);
            CHECK((md - mf).cwiseAbs().maxCoeff() < 1e-12 * md.cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("project_force") {
    // zero force projects to zero
    const Eigen::MatrixXd zero =
        project_force(Eigen::MatrixXd::Zero(9, 2), 5, 2.0);
    CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

    // linear force g_j = x_j with N = D returns xi by orthogonality
    std::mt19937 gen(3);
    ModeCoordinates xi{random_matrix(9, 1, gen), 2.0};
    const GridLoop g = mode_to_grid(xi, 9);
    const Eigen::MatrixXd proj = project_force(g.x, 9, 2.0);
    CHECK((proj - xi.xi).cwiseAbs().maxCoeff() < 1e-12);
}
