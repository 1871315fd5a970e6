#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "pimd/experiments.hpp"

using namespace pimd;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("pimd_harness_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_config(const std::string& tag) {
    ExperimentConfig cfg;
    cfg.sampler.n_modes = 5;
    cfg.sampler.d_grid = 5;
    cfg.sampler.beta = 1.0;
    cfg.sampler.seed = 11;
    cfg.n_steps = 2000;
    cfg.burn_in = 100;
    cfg.record_stride = 4;
    cfg.output_dir = temp_dir(tag).string();
    return cfg;
}

#ifdef PIMD_CLI_PATH
int run_cli(const std::string& args) {
    const std::string cmd = std::string(PIMD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string run_cli_capture(const std::string& args) {
    const auto tmp = std::filesystem::temp_directory_path() / "pimd_cli_out.txt";
    const std::string cmd =
        std::string(PIMD_CLI_PATH) + " " + args + " > " + tmp.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    CHECK(WIFEXITED(rc));
    return slurp(tmp);
}
#endif

} // namespace

TEST_CASE("experiment config JSON round trip") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::correlation;
    cfg.sampler.variant = SamplerVariant::standard_underdamped;
    cfg.sampler.n_modes = 17;
    cfg.sampler.d_grid = 17;
    cfg.sampler.beta = 4.0;
    cfg.sampler.a = 0.5;
    cfg.sampler.gamma = 2.0;
    cfg.sampler.dt = 1.0 / 32.0;
    cfg.sampler.seed = 99;
    cfg.potential_name = "harmonic";
    cfg.observable = "q2";
    cfg.n_steps = 12345;
    cfg.burn_in = 67;
    cfg.record_stride = 8;
    cfg.replicas = 3;
    cfg.max_modes = 4;
    cfg.max_lag_time = 7.5;
    cfg.bins = 50;
    cfg.r_max = 3.0;
    cfg.output_dir = "/tmp/somewhere";

    ExperimentConfig back;
    apply_json(back, to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("config hash is stable under key reordering and sensitive to values") {
    const char* order_a = R"({"sampler": {"beta": 2.0, "n_modes": 9}, "experiment": {"type": "sample"}})";
    const char* order_b = R"({"experiment": {"type": "sample"}, "sampler": {"n_modes": 9, "beta": 2.0}})";
    ExperimentConfig a, b;
    apply_json(a, nlohmann::json::parse(order_a));
    apply_json(b, nlohmann::json::parse(order_b));
    CHECK(config_hash(a) == config_hash(b));

    ExperimentConfig c = a;
    c.sampler.seed += 1;
    CHECK(config_hash(c) != config_hash(a));
}

TEST_CASE("name parsing") {
    for (SamplerVariant v :
         {SamplerVariant::matsubara_underdamped, SamplerVariant::matsubara_overdamped,
          SamplerVariant::standard_underdamped})
        CHECK(parse_variant(variant_name(v)) == v);
    CHECK_THROWS_AS(parse_variant("nope"), std::invalid_argument);

    for (ExperimentKind k :
         {ExperimentKind::sample, ExperimentKind::timeavg_error, ExperimentKind::correlation,
          ExperimentKind::radial_density, ExperimentKind::reference, ExperimentKind::rates})
        CHECK(parse_experiment(experiment_name(k)) == k);
    CHECK(parse_experiment("timeavg-error") == ExperimentKind::timeavg_error);
    CHECK_THROWS_AS(parse_experiment("nope"), std::invalid_argument);

    Eigen::VectorXd q(2);
    q << 0.6, 0.8;
    CHECK(make_observable("one")(q) == 1.0);
    CHECK(make_observable("identity")(q) == 0.6);
    CHECK(make_observable("q2")(q) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(make_observable_1d("sinhalfpi")(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(make_observable("nope"), std::invalid_argument);
}

TEST_CASE("CSV writer header, hash line and full-precision formatting") {
    const auto dir = temp_dir("csv");
    const auto path = dir / "out.csv";
    {
        CsvWriter csv(path, "deadbeefdeadbeef", {"x", "y"});
        csv.row({CsvWriter::fmt(1.0 / 3.0), CsvWriter::fmt(-0.1)});
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "# config_hash=deadbeefdeadbeef");
    std::getline(in, line);
    CHECK(line == "x,y");
    std::getline(in, line);
    const auto comma = line.find(',');
    CHECK(std::stod(line.substr(0, comma)) == 1.0 / 3.0); // %.17g round-trips exactly
    CHECK(std::stod(line.substr(comma + 1)) == -0.1);
}

TEST_CASE("replicated time averages are deterministic and seed-split") {
    SamplerConfig sc;
    sc.variant = SamplerVariant::matsubara_underdamped;
    sc.n_modes = 5;
    sc.d_grid = 5;
    sc.beta = 1.0;
    sc.seed = 3;
    sc.potential = builtin_potential("harmonic", 1.0);
    const auto obs = make_observable("q2");

    const TimeAverageRun once = run_time_average(sc, 5000, 100, obs, 1);
    const TimeAverageRun again = run_time_average(sc, 5000, 100, obs, 1);
    CHECK(once.mean == again.mean);
    CHECK(once.stderr_ == again.stderr_);

    const TimeAverageRun multi = run_time_average(sc, 5000, 100, obs, 4);
    CHECK(multi.mean != once.mean); // replicas use distinct seeds
    CHECK(multi.stderr_ < once.stderr_);
    CHECK(std::isfinite(multi.mean));
}

TEST_CASE("sample experiment writes a deterministic CSV") {
    ExperimentConfig cfg = small_config("sample_a");
    const auto path = experiment_sample(cfg);
    CHECK(path.filename() == "sample.csv");
    const std::string a = slurp(path);
    CHECK(a.rfind("# config_hash=" + config_hash(cfg), 0) == 0);

    ExperimentConfig cfg2 = small_config("sample_b");
    const std::string b = slurp(experiment_sample(cfg2));
    // identical apart from the output directory baked into the hash line
    CHECK(a.substr(a.find('\n')) == b.substr(b.find('\n')));

    // rows: header + (n_steps - burn_in + 1 observations) / stride rounded up
    const std::size_t rows = std::count(a.begin(), a.end(), '\n') - 2;
    CHECK(rows == (cfg.n_steps - cfg.burn_in + 1 + cfg.record_stride - 1) / cfg.record_stride);
}

TEST_CASE("correlation experiment output is well formed") {
    ExperimentConfig cfg = small_config("corr");
    cfg.n_steps = 4000;
    cfg.max_modes = 2;
    cfg.max_lag_time = 1.0;
    const auto path = experiment_correlation(cfg);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line); // hash
    std::getline(in, line);
    CHECK(line == "variant,beta,N,mode,lag,C");
    int rows = 0;
    bool saw_standard = false, saw_matsubara = false;
    while (std::getline(in, line)) {
        ++rows;
        if (line.rfind("standard_underdamped", 0) == 0) saw_standard = true;
        if (line.rfind("matsubara_underdamped", 0) == 0) saw_matsubara = true;
        // lag-zero rows carry C = 1 exactly
        if (line.find(",0,1") != std::string::npos) {
            std::istringstream ss(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            REQUIRE(cells.size() == 6);
            if (cells[4] == "0") CHECK(cells[5] == "1");
        }
    }
    CHECK(saw_standard);
    CHECK(saw_matsubara);
    // 2 variants x 3 mode counts x 2 recorded modes x (lags 0..16)
    const int lags = static_cast<int>(cfg.max_lag_time / (cfg.sampler.dt * cfg.record_stride));
    CHECK(rows == 2 * 3 * 2 * (lags + 1));
}

TEST_CASE("radial density experiment normalizes each histogram") {
    ExperimentConfig cfg = small_config("radial");
    cfg.sampler.beta = 2.0;
    cfg.n_steps = 20000;
    cfg.bins = 20;
    cfg.r_max = 4.0;
    const auto path = experiment_radial_density(cfg);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    CHECK(line == "variant,N,r,density,classical");
    std::map<std::string, double> mass;
    double classical_mass = 0.0;
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::istringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 5);
        mass[cells[0] + cells[1]] += std::stod(cells[3]) * (cfg.r_max / cfg.bins);
        if (cells[0] == "matsubara_underdamped" && cells[1] == "3")
            classical_mass += std::stod(cells[4]) * (cfg.r_max / cfg.bins);
    }
    CHECK(rows == 2 * 4 * cfg.bins);
    CHECK(classical_mass == doctest::Approx(1.0).epsilon(1e-6));
    for (const auto& [key, m] : mass) {
        INFO(key);
        CHECK(m <= 1.0 + 1e-12); // out-of-range samples count toward the total
        CHECK(m > 0.9);
    }
}

#ifdef PIMD_CLI_PATH

TEST_CASE("CLI exit codes") {
    CHECK(run_cli("") == 2);                       // a subcommand is required
    CHECK(run_cli("sample --config /no/such.json") == 2);
    CHECK(run_cli("sample --variant nope --steps 10") == 2);
    CHECK(run_cli("rates --a 1 --beta 1 --m1 0 --m2 0") == 0);
    CHECK(run_cli("reference --potential harmonic --observable q2 --beta 2") == 0);
    CHECK(run_cli("timeavg-error --potential spherical3d --steps 10") != 0); // needs 1D
}

TEST_CASE("CLI rates output matches the closed forms") {
    const std::string out = run_cli_capture("rates --a 1 --beta 1 --m1 0 --m2 0");
    CHECK(out.find("lambda1=1\n") != std::string::npos);
    CHECK(out.find("lambda2=0.2\n") != std::string::npos);

    const std::string partial = run_cli_capture("rates --a 1 --beta 1 --m1 0");
    CHECK(partial.find("lambda1=1\n") != std::string::npos);
    CHECK(partial.find("lambda2=unset") != std::string::npos);
}

TEST_CASE("CLI reference agrees with the library oracle") {
    const std::string out =
        run_cli_capture("reference --potential harmonic --observable q2 --beta 2");
    const auto pos = out.find("value=");
    REQUIRE(pos != std::string::npos);
    const double printed = std::stod(out.substr(pos + 6));
    const double exact = 0.5 / std::tanh(1.0);
    CHECK(printed == doctest::Approx(exact).epsilon(1e-9));
}

TEST_CASE("CLI config file with flag overrides") {
    const auto dir = temp_dir("cli_cfg");
    ExperimentConfig cfg = small_config("cli_cfg_ref");
    cfg.n_steps = 500;
    const auto cfg_path = dir / "cfg.json";
    {
        std::ofstream out(cfg_path);
        out << to_json(cfg).dump(2);
    }
    const auto out_dir = dir / "run";
    CHECK(run_cli("sample --config " + cfg_path.string() + " --output-dir " +
                  out_dir.string() + " --steps 200") == 0);
    const std::string text = slurp(out_dir / "sample.csv");
    // flag wins over the file: 200 steps, stride 4 -> 26 data rows
    const std::size_t rows = std::count(text.begin(), text.end(), '\n') - 2;
    CHECK(rows == (200 - cfg.burn_in + 1 + cfg.record_stride - 1) / cfg.record_stride);
}

#endif
