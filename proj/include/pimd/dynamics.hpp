#ifndef PIMD_DYNAMICS_HPP
#define PIMD_DYNAMICS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimd/modes.hpp"
#include "pimd/potentials.hpp"
#include "pimd/rng.hpp"

namespace pimd {

enum class SamplerVariant { matsubara_underdamped, matsubara_overdamped, standard_underdamped };

inline std::string variant_name(SamplerVariant v) {
    switch (v) {
        case SamplerVariant::matsubara_underdamped: return "matsubara_underdamped";
        case SamplerVariant::matsubara_overdamped: return "matsubara_overdamped";
        case SamplerVariant::standard_underdamped: return "standard_underdamped";
    }
    return "?";
}

struct PhaseState {
    Eigen::MatrixXd xi;  // N x d
    Eigen::MatrixXd eta; // N x d
    double time = 0.0;
    std::uint64_t step = 0;
};

struct SamplerConfig {
    SamplerVariant variant = SamplerVariant::matsubara_underdamped;
    int n_modes = 9;
    int d_grid = 9;
    double beta = 1.0;
    double a = 1.0;
    double gamma = 1.0;
    double dt = 1.0 / 16.0;
    std::uint64_t seed = 0;
    PotentialSpec potential;
    double noise_scale = 1.0; // test hook: 0 disables thermal noise
};

struct RateBounds {
    std::optional<double> lambda1;
    std::optional<double> lambda2;
    bool assumption_i = false;
    bool assumption_ii = false;
    bool assumption_iii = false;
    std::string reason;
};

// lambda1 = exp(-4 beta M1); lambda2 = a^2/(3 M2^2 + 5 a^2) * exp(-4 beta M1)
inline RateBounds rate_bounds(std::optional<double> m1, std::optional<double> m2,
                              double a, double beta, bool assumption_iii) {
    if (!(a > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("rate_bounds: a and beta must be positive");
    if ((m1 && *m1 < 0.0) || (m2 && *m2 < 0.0))
        throw std::invalid_argument("rate_bounds: m1 and m2 must be nonnegative");
    RateBounds r;
    r.assumption_i = m1.has_value();
    r.assumption_ii = m2.has_value();
    r.assumption_iii = assumption_iii;
    if (m1) {
        r.lambda1 = std::exp(-4.0 * beta * *m1);
        if (m2 && assumption_iii)
            r.lambda2 = a * a / (3.0 * *m2 * *m2 + 5.0 * a * a) * *r.lambda1;
        else
            r.reason = m2 ? "assumption (iii) N <= D not satisfied"
                          : "assumption (ii) Hessian bound M2 unverified";
    } else {
        r.reason = "assumption (i) bounded-perturbation constant M1 unverified";
    }
    return r;
}

// Precomputed per-trajectory data: variant spectrum, preconditioner weights
// and the loop potential context.
class SamplerContext {
public:
    explicit SamplerContext(SamplerConfig cfg)
        : config(std::move(cfg)),
          spectrum(make_spectrum(config)),
          loop(config.potential, config.n_modes, config.d_grid, config.beta),
          rng(config.seed) {
        if (config.variant == SamplerVariant::standard_underdamped &&
            config.d_grid != config.n_modes)
            throw std::invalid_argument("standard_underdamped requires D = N");
        if (config.n_modes > config.d_grid)
            std::cerr << "warning: N > D, uniform ergodicity is conjectural in this regime\n";
        rebuild_weights();
    }

    SamplerConfig config;
    FrequencySpectrum spectrum;
    LoopPotentialContext loop;
    CounterRng rng;
    Eigen::VectorXd inv_stiffness; // 1/(omega_k^2 + a)

    // test hook: replace the mode frequencies (e.g. to equalize variants)
    void override_spectrum(FrequencySpectrum s) {
        spectrum = std::move(s);
        rebuild_weights();
    }

private:
    static FrequencySpectrum make_spectrum(const SamplerConfig& c) {
        return c.variant == SamplerVariant::standard_underdamped
                   ? normal_mode_frequencies(c.n_modes, c.beta)
                   : matsubara_frequencies(c.n_modes, c.beta);
    }
    void rebuild_weights() {
        inv_stiffness.resize(config.n_modes);
        for (int k = 0; k < config.n_modes; ++k)
            inv_stiffness(k) = 1.0 / (spectrum.omegas[k] * spectrum.omegas[k] + config.a);
    }
};

namespace detail {
// salts for the counter RNG streams
inline constexpr std::uint32_t kSaltInitXi = 0;
inline constexpr std::uint32_t kSaltInitEta = 1;
inline constexpr std::uint32_t kSaltOStep = 2;
inline constexpr std::uint32_t kSaltOverPre = 3;
inline constexpr std::uint32_t kSaltOverPost = 4;

inline Eigen::MatrixXd gaussian_matrix(const SamplerContext& ctx, std::uint64_t step,
                                       std::uint32_t salt) {
    const int n = ctx.config.n_modes;
    const int d = ctx.config.potential.dim;
    Eigen::MatrixXd g(n, d);
    for (int k = 0; k < n; ++k)
        for (int c = 0; c < d; ++c)
            g(k, c) = ctx.rng.normal(step, static_cast<std::uint32_t>(k),
                                     static_cast<std::uint32_t>(c), salt);
    return g;
}

// preconditioned force F_k = -xi_k - loop_force_k / (omega_k^2 + a)
inline Eigen::MatrixXd drift_force(const SamplerContext& ctx, const Eigen::MatrixXd& xi) {
    Eigen::MatrixXd f = loop_force(ctx.loop, xi);
    f = ctx.inv_stiffness.asDiagonal() * f;
    return -xi - f;
}
} // namespace detail

// Draw (xi, eta) from the preconditioner Gaussian, per-coordinate variance
// 1/(omega_k^2 + a).
inline PhaseState initial_state(const SamplerContext& ctx) {
    PhaseState s;
    const Eigen::VectorXd sigma = ctx.inv_stiffness.cwiseSqrt();
    s.xi = sigma.asDiagonal() * detail::gaussian_matrix(ctx, 0, detail::kSaltInitXi);
    s.eta = sigma.asDiagonal() * detail::gaussian_matrix(ctx, 0, detail::kSaltInitEta);
    return s;
}

inline void baoab_step(PhaseState& s, const SamplerContext& ctx) {
    if (ctx.config.variant == SamplerVariant::matsubara_overdamped)
        throw std::logic_error("baoab_step: config selects the overdamped variant");
    const double dt = ctx.config.dt;
    const double gamma = ctx.config.gamma;
    const double damp = std::exp(-gamma * dt);
    const Eigen::VectorXd noise_sigma =
        ctx.config.noise_scale * ((1.0 - damp * damp) * ctx.inv_stiffness).cwiseSqrt();

    s.eta += 0.5 * dt * detail::drift_force(ctx, s.xi);            // B
    s.xi += 0.5 * dt * s.eta;                                      // A
    s.eta = damp * s.eta +                                         // O
            noise_sigma.asDiagonal() *
                detail::gaussian_matrix(ctx, s.step + 1, detail::kSaltOStep);
    s.xi += 0.5 * dt * s.eta;                                      // A
    s.eta += 0.5 * dt * detail::drift_force(ctx, s.xi);            // B
    s.time += dt;
    s.step += 1;
}

// OU-exact half steps on the linear part around an explicit Euler kick with
// the nonlinear force.
inline void overdamped_step(PhaseState& s, const SamplerContext& ctx) {
    if (ctx.config.variant != SamplerVariant::matsubara_overdamped)
        throw std::logic_error("overdamped_step: config selects an underdamped variant");
    const double dt = ctx.config.dt;
    const double damp = std::exp(-0.5 * dt);
    const Eigen::VectorXd noise_sigma =
        ctx.config.noise_scale * ((1.0 - damp * damp) * ctx.inv_stiffness).cwiseSqrt();

    s.xi = damp * s.xi + noise_sigma.asDiagonal() *
               detail::gaussian_matrix(ctx, s.step + 1, detail::kSaltOverPre);
    Eigen::MatrixXd f = ctx.inv_stiffness.asDiagonal() * loop_force(ctx.loop, s.xi);
    s.xi -= dt * f;
    s.xi = damp * s.xi + noise_sigma.asDiagonal() *
               detail::gaussian_matrix(ctx, s.step + 1, detail::kSaltOverPost);
    s.time += dt;
    s.step += 1;
}

inline void advance(PhaseState& s, const SamplerContext& ctx) {
    if (ctx.config.variant == SamplerVariant::matsubara_overdamped)
        overdamped_step(s, ctx);
    else
        baoab_step(s, ctx);
}

struct TrajectoryObserver {
    virtual ~TrajectoryObserver() = default;
    virtual void observe(const PhaseState& state, const SamplerContext& ctx) = 0;
};

// Advance n_steps from initial_state; after burn_in steps feed every state
// (including the initial one when burn_in = 0) to all observers.
inline void run_trajectory(const SamplerContext& ctx, std::uint64_t n_steps,
                           std::uint64_t burn_in,
                           const std::vector<TrajectoryObserver*>& observers) {
    if (burn_in >= n_steps && n_steps > 0)
        throw std::invalid_argument("run_trajectory: burn_in must be < n_steps");
    PhaseState s = initial_state(ctx);
    for (std::uint64_t i = 0; i < n_steps; ++i) {
        if (i >= burn_in)
            for (auto* obs : observers) obs->observe(s, ctx);
        advance(s, ctx);
    }
    if (n_steps >= burn_in)
        for (auto* obs : observers) obs->observe(s, ctx);
}

} // namespace pimd

#endif
