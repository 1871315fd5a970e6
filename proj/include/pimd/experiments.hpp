#ifndef PIMD_EXPERIMENTS_HPP
#define PIMD_EXPERIMENTS_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimd/dynamics.hpp"
#include "pimd/estimators.hpp"
#include "pimd/oracle.hpp"

namespace pimd {

enum class ExperimentKind { sample, timeavg_error, correlation, radial_density, reference, rates };

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::sample;
    SamplerConfig sampler;
    std::string potential_name = "model1d";
    std::string observable = "sinhalfpi";
    std::uint64_t n_steps = 1u << 20;
    std::uint64_t burn_in = 0;
    std::uint64_t record_stride = 1;
    int replicas = 1;
    bool full_scale = false;
    std::string output_dir = ".";
    // correlation experiment
    int max_modes = 5;
    double max_lag_time = 10.0;
    // radial density experiment
    int bins = 100;
    double r_max = 4.0;
    // rates subcommand inputs
    std::optional<double> m1;
    std::optional<double> m2;
};

inline ScalarObservable make_observable(const std::string& name) {
    if (name == "one") return [](const Eigen::VectorXd&) { return 1.0; };
    if (name == "identity") return [](const Eigen::VectorXd& q) { return q(0); };
    if (name == "q2") return [](const Eigen::VectorXd& q) { return q.squaredNorm(); };
    if (name == "sinhalfpi")
        return [](const Eigen::VectorXd& q) { return std::sin(0.5 * kPi * q(0)); };
    throw std::invalid_argument("unknown observable '" + name + "'");
}

inline std::function<double(double)> make_observable_1d(const std::string& name) {
    auto obs = make_observable(name);
    return [obs](double x) {
        Eigen::VectorXd q(1);
        q(0) = x;
        return obs(q);
    };
}

// --- config (de)serialization --------------------------------------------

inline SamplerVariant parse_variant(const std::string& s) {
    if (s == "matsubara_underdamped") return SamplerVariant::matsubara_underdamped;
    if (s == "matsubara_overdamped") return SamplerVariant::matsubara_overdamped;
    if (s == "standard_underdamped") return SamplerVariant::standard_underdamped;
    throw std::invalid_argument("unknown sampler variant '" + s + "'");
}

inline ExperimentKind parse_experiment(const std::string& s) {
    if (s == "sample") return ExperimentKind::sample;
    if (s == "timeavg_error" || s == "timeavg-error") return ExperimentKind::timeavg_error;
    if (s == "correlation") return ExperimentKind::correlation;
    if (s == "radial_density" || s == "radial-density") return ExperimentKind::radial_density;
    if (s == "reference") return ExperimentKind::reference;
    if (s == "rates") return ExperimentKind::rates;
    throw std::invalid_argument("unknown experiment '" + s + "'");
}

inline std::string experiment_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::sample: return "sample";
        case ExperimentKind::timeavg_error: return "timeavg_error";
        case ExperimentKind::correlation: return "correlation";
        case ExperimentKind::radial_density: return "radial_density";
        case ExperimentKind::reference: return "reference";
        case ExperimentKind::rates: return "rates";
    }
    return "?";
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"]["type"] = experiment_name(cfg.experiment);
    j["experiment"]["n_steps"] = cfg.n_steps;
    j["experiment"]["burn_in"] = cfg.burn_in;
    j["experiment"]["record_stride"] = cfg.record_stride;
    j["experiment"]["observable"] = cfg.observable;
    j["experiment"]["replicas"] = cfg.replicas;
    j["experiment"]["full_scale"] = cfg.full_scale;
    j["experiment"]["max_modes"] = cfg.max_modes;
    j["experiment"]["max_lag_time"] = cfg.max_lag_time;
    j["experiment"]["bins"] = cfg.bins;
    j["experiment"]["r_max"] = cfg.r_max;
    if (cfg.m1) j["experiment"]["m1"] = *cfg.m1;
    if (cfg.m2) j["experiment"]["m2"] = *cfg.m2;
    j["sampler"]["variant"] = variant_name(cfg.sampler.variant);
    j["sampler"]["n_modes"] = cfg.sampler.n_modes;
    j["sampler"]["d_grid"] = cfg.sampler.d_grid;
    j["sampler"]["beta"] = cfg.sampler.beta;
    j["sampler"]["a"] = cfg.sampler.a;
    j["sampler"]["gamma"] = cfg.sampler.gamma;
    j["sampler"]["dt"] = cfg.sampler.dt;
    j["sampler"]["seed"] = cfg.sampler.seed;
    j["sampler"]["potential"] = cfg.potential_name;
    j["output"]["dir"] = cfg.output_dir;
    return j;
}

inline void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
    if (j.contains("experiment")) {
        const auto& e = j.at("experiment");
        if (e.contains("type")) cfg.experiment = parse_experiment(e.at("type"));
        if (e.contains("n_steps")) cfg.n_steps = e.at("n_steps");
        if (e.contains("burn_in")) cfg.burn_in = e.at("burn_in");
        if (e.contains("record_stride")) cfg.record_stride = e.at("record_stride");
        if (e.contains("observable")) cfg.observable = e.at("observable");
        if (e.contains("replicas")) cfg.replicas = e.at("replicas");
        if (e.contains("full_scale")) cfg.full_scale = e.at("full_scale");
        if (e.contains("max_modes")) cfg.max_modes = e.at("max_modes");
        if (e.contains("max_lag_time")) cfg.max_lag_time = e.at("max_lag_time");
        if (e.contains("bins")) cfg.bins = e.at("bins");
        if (e.contains("r_max")) cfg.r_max = e.at("r_max");
        if (e.contains("m1")) cfg.m1 = e.at("m1").get<double>();
        if (e.contains("m2")) cfg.m2 = e.at("m2").get<double>();
    }
    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        if (s.contains("variant")) cfg.sampler.variant = parse_variant(s.at("variant"));
        if (s.contains("n_modes")) cfg.sampler.n_modes = s.at("n_modes");
        if (s.contains("d_grid")) cfg.sampler.d_grid = s.at("d_grid");
        if (s.contains("beta")) cfg.sampler.beta = s.at("beta");
        if (s.contains("a")) cfg.sampler.a = s.at("a");
        if (s.contains("gamma")) cfg.sampler.gamma = s.at("gamma");
        if (s.contains("dt")) cfg.sampler.dt = s.at("dt");
        if (s.contains("seed")) cfg.sampler.seed = s.at("seed");
        if (s.contains("potential")) cfg.potential_name = s.at("potential");
    }
    if (j.contains("output") && j.at("output").contains("dir"))
        cfg.output_dir = j.at("output").at("dir");
}

// FNV-1a of the canonical (key-sorted) JSON dump; stable under key reordering.
inline std::string config_hash(const ExperimentConfig& cfg) {
    const std::string dump = to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --- CSV writing ----------------------------------------------------------

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& hash,
              const std::vector<std::string>& columns) {
        std::filesystem::create_directories(path.parent_path());
        out_.open(path);
        if (!out_) throw std::runtime_error("cannot open output file " + path.string());
        out_ << "# config_hash=" << hash << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
    }

    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
    }

private:
    std::ofstream out_;
};

// --- individual experiments ----------------------------------------------

struct TimeAverageRun {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline TimeAverageRun run_time_average(SamplerConfig cfg, std::uint64_t n_steps,
                                       std::uint64_t burn_in, const ScalarObservable& obs,
                                       int replicas = 1) {
    std::vector<std::future<TimeAverageRun>> futs;
    for (int r = 0; r < replicas; ++r) {
        SamplerConfig c = cfg;
        c.seed = cfg.seed + 0x9e37u * static_cast<std::uint64_t>(r);
        futs.push_back(std::async(std::launch::async, [c, n_steps, burn_in, obs]() {
            SamplerContext ctx(c);
            TimeAverageObserver avg(obs);
            run_trajectory(ctx, n_steps, burn_in, {&avg});
            return TimeAverageRun{avg.mean(), avg.standard_error()};
        }));
    }
    double mean = 0.0, var = 0.0;
    for (auto& f : futs) {
        const TimeAverageRun r = f.get();
        mean += r.mean / replicas;
        var += r.stderr_ * r.stderr_ / (replicas * replicas);
    }
    return TimeAverageRun{mean, std::sqrt(var)};
}

inline std::filesystem::path experiment_timeavg_error(const ExperimentConfig& cfg) {
    const PotentialSpec pot = builtin_potential(cfg.potential_name, cfg.sampler.a);
    if (pot.dim != 1)
        throw std::invalid_argument("timeavg_error requires a 1D potential");
    const std::vector<double> betas =
        cfg.full_scale ? std::vector<double>{1, 2, 4, 8} : std::vector<double>{1, 2};
    const std::vector<int> modes =
        cfg.full_scale ? std::vector<int>{9, 17, 33, 65, 129} : std::vector<int>{9, 17, 33};
    const auto obs = make_observable(cfg.observable);
    const auto obs1d = make_observable_1d(cfg.observable);

    const std::filesystem::path path =
        std::filesystem::path(cfg.output_dir) / "timeavg_error.csv";
    CsvWriter csv(path, config_hash(cfg),
                  {"variant", "beta", "N", "T", "A", "reference", "error"});
    for (double beta : betas) {
        PotentialSpec pb = pot;
        const double reference = quantum_average_1d(pb, obs1d, beta);
        for (SamplerVariant variant :
             {SamplerVariant::matsubara_underdamped, SamplerVariant::standard_underdamped}) {
            for (int n : modes) {
                SamplerConfig sc = cfg.sampler;
                sc.variant = variant;
                sc.n_modes = n;
                sc.d_grid = n;
                sc.beta = beta;
                sc.potential = pot;
                const TimeAverageRun run =
                    run_time_average(sc, cfg.n_steps, cfg.burn_in, obs, cfg.replicas);
                const double t_total = cfg.n_steps * sc.dt;
                csv.row({variant_name(variant), CsvWriter::fmt(beta), std::to_string(n),
                         CsvWriter::fmt(t_total), CsvWriter::fmt(run.mean),
                         CsvWriter::fmt(reference), CsvWriter::fmt(run.mean - reference)});
            }
        }
    }
    return path;
}

inline std::filesystem::path experiment_correlation(const ExperimentConfig& cfg) {
    const PotentialSpec pot = builtin_potential(cfg.potential_name, cfg.sampler.a);
    const std::vector<int> modes_sweep =
        cfg.full_scale ? std::vector<int>{9, 17, 33, 65, 129} : std::vector<int>{9, 17, 33};
    const std::filesystem::path path =
        std::filesystem::path(cfg.output_dir) / "correlation.csv";
    CsvWriter csv(path, config_hash(cfg), {"variant", "beta", "N", "mode", "lag", "C"});
    for (SamplerVariant variant :
         {SamplerVariant::matsubara_underdamped, SamplerVariant::standard_underdamped}) {
        for (int n : modes_sweep) {
            SamplerConfig sc = cfg.sampler;
            sc.variant = variant;
            sc.n_modes = n;
            sc.d_grid = n;
            sc.potential = pot;
            SamplerContext ctx(sc);
            std::vector<int> which;
            for (int k = 0; k < std::min(cfg.max_modes, n); ++k) which.push_back(k);
            ModeRecorder rec(which, cfg.record_stride);
            run_trajectory(ctx, cfg.n_steps, cfg.burn_in, {&rec});
            const double sample_dt = sc.dt * cfg.record_stride;
            const int max_lag = static_cast<int>(cfg.max_lag_time / sample_dt);
            for (std::size_t i = 0; i < which.size(); ++i) {
                const CorrelationCurve curve =
                    autocorrelation(rec.series(i), max_lag, sample_dt, false, which[i]);
                for (std::size_t l = 0; l < curve.lags.size(); ++l)
                    csv.row({variant_name(variant), CsvWriter::fmt(sc.beta),
                             std::to_string(n), std::to_string(which[i]),
                             CsvWriter::fmt(curve.lags[l]), CsvWriter::fmt(curve.c[l])});
            }
        }
    }
    return path;
}

inline std::filesystem::path experiment_radial_density(const ExperimentConfig& cfg) {
    const PotentialSpec pot = builtin_potential("spherical3d", cfg.sampler.a);
    const std::vector<int> modes_sweep =
        cfg.full_scale ? std::vector<int>{3, 5, 9, 17, 33} : std::vector<int>{3, 5, 9, 17};
    const auto v_of_r = [&](double r) {
        Eigen::VectorXd q = Eigen::VectorXd::Zero(3);
        q(0) = r;
        return pot.value(q);
    };
    const std::vector<double> classical =
        classical_radial_density(v_of_r, cfg.sampler.beta, cfg.bins, cfg.r_max);

    const std::filesystem::path path =
        std::filesystem::path(cfg.output_dir) / "radial_density.csv";
    CsvWriter csv(path, config_hash(cfg), {"variant", "N", "r", "density", "classical"});
    for (SamplerVariant variant :
         {SamplerVariant::matsubara_underdamped, SamplerVariant::standard_underdamped}) {
        for (int n : modes_sweep) {
            SamplerConfig sc = cfg.sampler;
            sc.variant = variant;
            sc.n_modes = n;
            sc.d_grid = n;
            sc.potential = pot;
            SamplerContext ctx(sc);
            RadialHistogramObserver hist(cfg.bins, cfg.r_max, cfg.record_stride);
            run_trajectory(ctx, cfg.n_steps, cfg.burn_in, {&hist});
            const std::vector<double> rho = hist.histogram().density();
            for (int i = 0; i < cfg.bins; ++i)
                csv.row({variant_name(variant), std::to_string(n),
                         CsvWriter::fmt(hist.histogram().bin_center(i)),
                         CsvWriter::fmt(rho[i]), CsvWriter::fmt(classical[i])});
        }
    }
    return path;
}

inline std::filesystem::path experiment_sample(const ExperimentConfig& cfg) {
    SamplerConfig sc = cfg.sampler;
    sc.potential = builtin_potential(cfg.potential_name, cfg.sampler.a);
    SamplerContext ctx(sc);
    const auto obs = make_observable(cfg.observable);

    const std::filesystem::path path = std::filesystem::path(cfg.output_dir) / "sample.csv";
    CsvWriter csv(path, config_hash(cfg), {"step", "time", "observable"});

    struct Recorder : TrajectoryObserver {
        CsvWriter& csv;
        const ScalarObservable& obs;
        std::uint64_t stride;
        std::uint64_t tick = 0;
        Recorder(CsvWriter& c, const ScalarObservable& o, std::uint64_t s)
            : csv(c), obs(o), stride(s) {}
        void observe(const PhaseState& s, const SamplerContext& ctx) override {
            if (tick++ % stride != 0) return;
            const Eigen::MatrixXd grid = ctx.loop.transform.to_grid(s.xi);
            csv.row({std::to_string(s.step), CsvWriter::fmt(s.time),
                     CsvWriter::fmt(loop_observable(grid, obs))});
        }
    } rec(csv, obs, cfg.record_stride);
    run_trajectory(ctx, cfg.n_steps, cfg.burn_in, {&rec});
    return path;
}

} // namespace pimd

#endif
