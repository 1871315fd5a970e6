// Command-line front end: experiment presets, the spectral reference and the
// theoretical rate bounds, all driven by a JSON config plus flag overrides.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "pimd/experiments.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Path integral molecular dynamics sampling toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    pimd::ExperimentConfig cfg;
    if (const char* env = std::getenv("PIMD_OUTPUT_DIR")) cfg.output_dir = env;

    std::string variant = "matsubara_underdamped";
    bool assumption_iii = true;
    double m1 = -1.0, m2 = -1.0;
    int basis_size = 64;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--output-dir", cfg.output_dir, "output directory");
        sub->add_option("--seed", cfg.sampler.seed, "RNG seed");
        sub->add_option("--beta", cfg.sampler.beta, "inverse temperature");
        sub->add_option("--n-modes", cfg.sampler.n_modes, "number of modes N");
        sub->add_option("--d-grid", cfg.sampler.d_grid, "discretization size D");
        sub->add_option("--a", cfg.sampler.a, "preconditioning constant");
        sub->add_option("--gamma", cfg.sampler.gamma, "damping rate");
        sub->add_option("--dt", cfg.sampler.dt, "time step");
        sub->add_option("--variant", variant, "sampler variant");
        sub->add_option("--potential", cfg.potential_name, "builtin potential name");
        sub->add_option("--observable", cfg.observable, "observable name");
        sub->add_option("--steps", cfg.n_steps, "number of time steps");
        sub->add_option("--burn-in", cfg.burn_in, "burn-in steps");
        sub->add_option("--stride", cfg.record_stride, "recording stride");
        sub->add_option("--replicas", cfg.replicas, "independent replicas");
        sub->add_flag("--full-scale", cfg.full_scale, "use the full-size parameter sweep");
    };

    auto* sample = app.add_subcommand("sample", "run one trajectory, record the observable");
    auto* timeavg = app.add_subcommand("timeavg-error", "time-average error sweep vs the exact reference");
    auto* corr = app.add_subcommand("correlation", "mode-coordinate correlation functions");
    auto* radial = app.add_subcommand("radial-density", "3D radial density histograms");
    auto* reference = app.add_subcommand("reference", "exact 1D quantum thermal average");
    auto* rates = app.add_subcommand("rates", "theoretical convergence rate bounds");
    for (auto* sub : {sample, timeavg, corr, radial, reference})
        add_common(sub);
    corr->add_option("--max-modes", cfg.max_modes, "number of mode curves");
    corr->add_option("--max-lag", cfg.max_lag_time, "maximum lag time");
    radial->add_option("--bins", cfg.bins, "histogram bins");
    radial->add_option("--r-max", cfg.r_max, "histogram range");
    reference->add_option("--basis", basis_size, "initial Hermite basis size");
    rates->add_option("--m1", m1, "bounded perturbation constant M1");
    rates->add_option("--m2", m2, "Hessian bound M2");
    rates->add_option("--a", cfg.sampler.a, "preconditioning constant");
    rates->add_option("--beta", cfg.sampler.beta, "inverse temperature");
    rates->add_flag("!--no-assumption-iii", assumption_iii, "N <= D does not hold");

    // Precedence: defaults < config file < explicit flags. The file is loaded
    // before CLI11 parses, so flag values land on top.
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            config_path = argv[i + 1];
            break;
        }
        if (arg.rfind("--config=", 0) == 0) {
            config_path = arg.substr(9);
            break;
        }
    }
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot open config file " << config_path << "\n";
            return 2;
        }
        nlohmann::json j;
        in >> j;
        pimd::apply_json(cfg, j);
        variant = pimd::variant_name(cfg.sampler.variant);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the usage message
        return 2;
    }
    cfg.sampler.variant = pimd::parse_variant(variant);

    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::path out;
    if (app.got_subcommand(sample)) {
        cfg.experiment = pimd::ExperimentKind::sample;
        out = pimd::experiment_sample(cfg);
    } else if (app.got_subcommand(timeavg)) {
        cfg.experiment = pimd::ExperimentKind::timeavg_error;
        out = pimd::experiment_timeavg_error(cfg);
    } else if (app.got_subcommand(corr)) {
        cfg.experiment = pimd::ExperimentKind::correlation;
        out = pimd::experiment_correlation(cfg);
    } else if (app.got_subcommand(radial)) {
        cfg.experiment = pimd::ExperimentKind::radial_density;
        out = pimd::experiment_radial_density(cfg);
    } else if (app.got_subcommand(reference)) {
        pimd::PotentialSpec pot = pimd::builtin_potential(cfg.potential_name, cfg.sampler.a);
        pimd::SpectralConfig sc;
        sc.basis_size = basis_size;
        const double value = pimd::quantum_average_1d(
            pot, pimd::make_observable_1d(cfg.observable), cfg.sampler.beta, sc);
        std::printf("reference potential=%s observable=%s beta=%.17g value=%.12g\n",
                    cfg.potential_name.c_str(), cfg.observable.c_str(), cfg.sampler.beta,
                    value);
        return 0;
    } else if (app.got_subcommand(rates)) {
        const pimd::RateBounds rb = pimd::rate_bounds(
            m1 >= 0.0 ? std::optional<double>(m1) : std::nullopt,
            m2 >= 0.0 ? std::optional<double>(m2) : std::nullopt, cfg.sampler.a,
            cfg.sampler.beta, assumption_iii);
        if (rb.lambda1)
            std::printf("lambda1=%.12g\n", *rb.lambda1);
        else
            std::printf("lambda1=unset\n");
        if (rb.lambda2)
            std::printf("lambda2=%.12g\n", *rb.lambda2);
        else
            std::printf("lambda2=unset (%s)\n", rb.reason.c_str());
        return 0;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s wrote %s (config %s, %.1f s)\n",
                pimd::experiment_name(cfg.experiment).c_str(), out.string().c_str(),
                pimd::config_hash(cfg).c_str(), secs);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
