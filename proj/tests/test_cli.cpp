// CLI: exit codes, reproducibility, config echo and end-to-end runs on bundled data.

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "sfd/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
    json summary() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = sfd::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("sfd_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string prefix(const std::string& name) { return "output=" + (scratch() / name).string(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), {}};
}

// Column name -> values.
std::map<std::string, std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) names.push_back(cell);
    }
    std::map<std::string, std::vector<double>> cols;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t i = 0; std::getline(ss, cell, ','); ++i) cols[names.at(i)].push_back(std::stod(cell));
    }
    return cols;
}

fs::path data_file(const std::string& name) {
    const char* dir = std::getenv("SFD_DATA_DIR");
    REQUIRE(dir != nullptr);
    return fs::path(dir) / name;
}

// omega = 1 rad/s, so rates and times in SI equal their dimensionless values.
const std::string kUnitOmega = [] {
    std::ostringstream s;
    s << std::setprecision(17) << "f_hz=" << 0.5 / std::numbers::pi;
    return s.str();
}();

} // namespace

TEST_CASE("cli: help and argument errors") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"simulate", "--help"}).code == 0);
    CHECK(run({}).code == sfd::kExitConfig);
    CHECK(run({"frobnicate"}).code == sfd::kExitConfig);

    const Run unknown = run({"simulate", "no_such_key=1", prefix("unknown")});
    CHECK(unknown.code == sfd::kExitConfig);
    CHECK(unknown.err.find("no_such_key") != std::string::npos);

    CHECK(run({"simulate", "dim=abc", prefix("bad")}).code == sfd::kExitConfig);
    CHECK(run({"simulate", "model=quantum-foam", prefix("bad")}).code == sfd::kExitConfig);
    CHECK(run({"simulate", "-c", (scratch() / "missing.cfg").string()}).code == sfd::kExitConfig);
    CHECK(run({"ensemble", "gamma=1", prefix("bad")}).code == sfd::kExitConfig);
}

TEST_CASE("cli: bounds with 2/T2 < 1/T1 is a model inconsistency") {
    const Run r = run({"bounds", "t1_us=100", "t2_us=250", prefix("inconsistent")});
    CHECK(r.code == sfd::kExitModel);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("cli: bounds chain from the measured coherence times") {
    const Run r = run({"bounds", prefix("bounds")});
    REQUIRE(r.code == 0);
    const json rep = r.summary()["report"];
    CHECK(rep["gamma_inv"]["value"].get<double>() * 1e6 == doctest::Approx(169.9).scale(0).epsilon(1e-3));
    CHECK(rep["tau_g"]["value"].get<double>() * 1e6 == doctest::Approx(975.2).scale(0).epsilon(1e-3));
    CHECK(rep["tau_d"]["value"].get<double>() * 1e6 == doctest::Approx(195.0).scale(0).epsilon(1e-3));
    CHECK(rep["kappa"]["value"].get<double>() == doctest::Approx(4.0e46).scale(0).epsilon(0.05));
    CHECK(rep["tau_c"]["value"].get<double>() == doctest::Approx(3.7e-18).scale(0).epsilon(0.05));
    CHECK(rep["beta_bar"]["value"].get<double>() == doctest::Approx(2.2e30).scale(0).epsilon(0.05));
    CHECK(rep["l_k"]["value"].get<double>() == doctest::Approx(4.1e-20).scale(0).epsilon(0.02));
    CHECK(rep["l_k"]["reported_value"].get<double>() == doctest::Approx(5.9e-20).scale(0));

    // Same numbers through the bundled config file and the JSON written to disk.
    const Run f = run({"bounds", "-c", data_file("bounds.cfg").string(), prefix("bounds_cfg")});
    REQUIRE(f.code == 0);
    const json disk = json::parse(slurp(scratch() / "bounds_cfg.json"));
    CHECK(disk["report"]["kappa"]["value"] == rep["kappa"]["value"]);
}

TEST_CASE("cli: T2 = 2 T1 leaves the decoherence bounds absent") {
    const Run r = run({"bounds", "t1_us=100", "t2_us=200", prefix("pure_damping")});
    REQUIRE(r.code == 0);
    const json rep = r.summary()["report"];
    for (const char* key : {"tau_g", "tau_d", "kappa", "tau_c"}) {
        CAPTURE(key);
        CHECK(rep[key]["absent"].get<bool>());
        CHECK(rep[key]["value"].is_null());
    }
    CHECK(rep["gamma_inv"]["value"].get<double>() == doctest::Approx(100e-6).scale(0));
}

TEST_CASE("cli: every summary echoes the resolved configuration") {
    const Run r = run({"analytic", "omega_tau_g=1000", "t_end=10", prefix("echo")});
    REQUIRE(r.code == 0);
    const json cfg = r.summary()["config"];
    // Defaults are materialized, explicit values are kept.
    CHECK(cfg.contains("dim"));
    CHECK(cfg.contains("seed"));
    CHECK(cfg.contains("propagation"));
    CHECK(cfg.dump().find("1000") != std::string::npos);
    CHECK(json::parse(slurp(scratch() / "echo.json"))["config"] == cfg);
}

TEST_CASE("cli: reruns are byte-identical") {
    const std::vector<std::string> sim = {"simulate", "dim=8", "omega_tau_g=500", "t_end=5", "dt=0.01",
                                          "convergence_check=false"};
    auto a = sim, b = sim;
    a.push_back(prefix("rerun_a"));
    b.push_back(prefix("rerun_a"));
    REQUIRE(run(a).code == 0);
    const std::string csv1 = slurp(scratch() / "rerun_a.csv");
    const std::string json1 = slurp(scratch() / "rerun_a.json");
    REQUIRE(run(b).code == 0);
    CHECK(slurp(scratch() / "rerun_a.csv") == csv1);
    CHECK(slurp(scratch() / "rerun_a.json") == json1);

    const std::vector<std::string> ens = {"ensemble", "dim=6", "omega_tau_g=200", "t_end=1", "dt=0.01",
                                          "n_traj=200", "seed=9", "threads=3", "compare=false", prefix("rerun_e")};
    REQUIRE(run(ens).code == 0);
    const std::string e1 = slurp(scratch() / "rerun_e.csv");
    auto ens1 = ens;
    ens1[7] = "threads=1";
    REQUIRE(run(ens1).code == 0);
    CHECK(slurp(scratch() / "rerun_e.csv") == e1);
}

TEST_CASE("cli: damping-only run follows exp(-gamma t)") {
    const Run r = run({"simulate", "model=damping-only", kUnitOmega, "gamma=0.1", "initial_state=fock(1)", "dim=6",
                       "t_end=20", "dt=0.01", "observables=rho_11,rho_00", "convergence_check=false",
                       prefix("damping")});
    REQUIRE(r.code == 0);
    const auto cols = read_csv(scratch() / "damping.csv");
    REQUIRE(cols.at("t_omega").size() > 10);
    double worst = 0.0;
    for (std::size_t k = 0; k < cols.at("t_omega").size(); ++k) {
        const double expected = std::exp(-0.1 * cols.at("t_omega")[k]);
        worst = std::max(worst, std::abs(cols.at("rho_11")[k] - expected));
        worst = std::max(worst, std::abs(cols.at("rho_00")[k] - (1.0 - expected)));
    }
    CHECK(worst < 1e-8);
    CHECK(cols.at("t_omega").back() == doctest::Approx(20.0).scale(0));
}

TEST_CASE("cli: fit on the bundled datasets") {
    SUBCASE("zero-noise T1") {
        const Run r = run({"fit", "data=" + data_file("t1_zero_noise.csv").string(), "fit_model=exp", prefix("fit0")});
        REQUIRE(r.code == 0);
        CHECK(r.summary()["summary"]["T1_us"].get<double>() == doctest::Approx(85.8).scale(0).epsilon(1e-6));
    }
    SUBCASE("noisy T1") {
        const Run r = run({"fit", "data=" + data_file("t1_synthetic.csv").string(), "fit_model=exp", prefix("fit1")});
        REQUIRE(r.code == 0);
        const json s = r.summary()["summary"];
        CHECK(s["sigma_T1_us"].get<double>() > 0.0);
        CHECK(std::abs(s["T1_us"].get<double>() - 85.8) < 3.0 * s["sigma_T1_us"].get<double>());
    }
    SUBCASE("zero-noise Ramsey") {
        const Run r = run({"fit", "data=" + data_file("ramsey_zero_noise.csv").string(), "fit_model=ramsey",
                           prefix("fit2")});
        REQUIRE(r.code == 0);
        CHECK(r.summary()["summary"]["T2_us"].get<double>() == doctest::Approx(147.3).scale(0).epsilon(1e-6));
        CHECK(r.summary()["summary"]["f_hz"].get<double>() == doctest::Approx(5e4).scale(0).epsilon(1e-6));
    }
    SUBCASE("noisy Ramsey") {
        const Run r = run({"fit", "data=" + data_file("ramsey_synthetic.csv").string(), "fit_model=ramsey",
                           prefix("fit3")});
        REQUIRE(r.code == 0);
        const json s = r.summary()["summary"];
        CHECK(std::abs(s["T2_us"].get<double>() - 147.3) < 3.0 * s["sigma_T2_us"].get<double>());
    }
    SUBCASE("missing data") {
        CHECK(run({"fit", prefix("fit4")}).code == sfd::kExitConfig);
    }
}

TEST_CASE("cli: synthetic data round trip through fit") {
    REQUIRE(run({"synth", "synth_decay_us=50", "synth_points=30", prefix("synth")}).code == 0);
    const Run r = run({"fit", "data=" + (scratch() / "synth.csv").string(), prefix("synth_fit")});
    REQUIRE(r.code == 0);
    CHECK(r.summary()["summary"]["T1_us"].get<double>() == doctest::Approx(50.0).scale(0).epsilon(1e-6));
}

TEST_CASE("cli: kappa = 0 ensemble equals the unitary simulation") {
    const std::vector<std::string> common = {kUnitOmega, "kappa=0", "dim=6", "t_end=5", "dt=0.005",
                                             "sample_every=100", "initial_state=superposition01"};
    auto sim = common;
    sim.insert(sim.begin(), "simulate");
    sim.push_back("convergence_check=false");
    sim.push_back(prefix("k0_sim"));
    auto ens = common;
    ens.insert(ens.begin(), "ensemble");
    ens.push_back("n_traj=100");
    ens.push_back("compare=false");
    ens.push_back(prefix("k0_ens"));
    REQUIRE(run(sim).code == 0);
    REQUIRE(run(ens).code == 0);
    const auto a = read_csv(scratch() / "k0_sim.csv");
    const auto b = read_csv(scratch() / "k0_ens.csv");
    for (const char* col : {"rho_00", "rho_11", "re_rho_01", "im_rho_01"}) {
        CAPTURE(col);
        REQUIRE(a.at(col).size() == b.at(col).size());
        for (std::size_t k = 0; k < a.at(col).size(); ++k) CHECK(std::abs(a.at(col)[k] - b.at(col)[k]) < 1e-9);
    }
    // Identical trajectories: the spread is rounding only.
    for (double se : b.at("stderr_rho_00")) CHECK(se < 1e-8);
}

TEST_CASE("cli: white-noise ensemble reproduces simulate") {
    const Run r = run({"ensemble", kUnitOmega, "omega_tau_g=50", "dim=8", "t_end=2", "dt=0.01", "sample_every=20",
                       "n_traj=400", "seed=3", prefix("ens_white")});
    REQUIRE(r.code == 0);
    const json cmp = r.summary()["comparison"];
    CHECK(cmp["max_trace_distance"].get<double>() < cmp["threshold_3_over_sqrt_n"].get<double>());
    for (const auto& [name, z] : cmp["max_abs_difference_over_stderr"].items()) {
        CAPTURE(name);
        CHECK(z.get<double>() < 4.0);
    }
}

TEST_CASE("cli: non-Markov runs approach the Markov run as the kernel shrinks") {
    const std::vector<std::string> common = {kUnitOmega, "omega_tau_g=200", "dim=8", "t_end=2",
                                             "sample_every=100", "convergence_check=false",
                                             "observables=rho_00,rho_11,abs_rho_01"};
    auto markov = common;
    markov.insert(markov.begin(), "simulate");
    markov.push_back("dt=0.001");
    markov.push_back(prefix("nm_markov"));
    REQUIRE(run(markov).code == 0);
    const auto ref = read_csv(scratch() / "nm_markov.csv");

    std::vector<double> gaps;
    for (double tau : {1.0, 0.1, 0.01}) {
        auto nm = common;
        nm.insert(nm.begin(), "simulate");
        nm.push_back("model=gup-nonmarkov");
        nm.push_back("kernel=exponential");
        nm.push_back("omega_kernel_tau=" + std::to_string(tau));
        nm.push_back("dt=0.001");
        nm.push_back(prefix("nm_" + std::to_string(gaps.size())));
        const Run r = run(nm);
        REQUIRE(r.code == 0);
        const auto cols = read_csv(scratch() / ("nm_" + std::to_string(gaps.size()) + ".csv"));
        double gap = 0.0;
        for (const char* col : {"rho_00", "rho_11", "abs_rho_01"}) {
            gap = std::max(gap, std::abs(cols.at(col).back() - ref.at(col).back()));
        }
        gaps.push_back(gap);
    }
    CAPTURE(gaps[0]);
    CAPTURE(gaps[1]);
    CAPTURE(gaps[2]);
    CHECK(gaps[0] > gaps[1]);
    CHECK(gaps[1] > gaps[2]);
    CHECK(gaps[2] < 1e-4);
}

TEST_CASE("cli: wigner of the deformed ground state recovers epsilon") {
    const Run r = run({"wigner", "-c", data_file("ground_wigner.cfg").string(), prefix("ground")});
    REQUIRE(r.code == 0);
    const json j = r.summary();
    CHECK(j["captured_mass"].get<double>() == doctest::Approx(1.0).scale(0).epsilon(0.02));
    REQUIRE(j["ellipticity"].contains("epsilon"));
    CHECK(j["ellipticity"]["epsilon"].get<double>() == doctest::Approx(0.02).scale(0).epsilon(0.1));
    CHECK(fs::exists(scratch() / "ground_wigner.csv"));
}

TEST_CASE("cli: analytic command writes slopes and curves") {
    const Run r = run({"analytic", "omega_tau_g=1000", "t_end=10", prefix("analytic")});
    REQUIRE(r.code == 0);
    const json j = r.summary();
    CHECK(j["slopes"]["p11"].get<double>() == doctest::Approx(45.0 / 8.0).scale(0));
    CHECK(j["c_correlator_zero_lag"].get<double>() == doctest::Approx(15.0 / 8.0).scale(0));
    const auto cols = read_csv(scratch() / "analytic.csv");
    CHECK(cols.at("p00").size() > 2);
    CHECK(run({"analytic", "model=damping-only", prefix("analytic_bad")}).code == sfd::kExitConfig);
}
