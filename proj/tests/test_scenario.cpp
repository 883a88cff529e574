#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "viscosim/runner.hpp"
#include "viscosim/scenario.hpp"

using namespace viscosim;
namespace fs = std::filesystem;

namespace {

json minimal_identify() {
    return json::parse(R"({
        "name": "quick",
        "mode": "identify",
        "duration": 0.2,
        "grid": {"nx": 5, "ny": 3, "nz": 3, "delta": 1.0, "ly": 1.0, "lz": 1.0},
        "material": {"k1": 2.0, "k2": 2.0, "b": 1.0, "eps": 1.0},
        "force": {"terms": [{"kind": "sine", "amplitude": 1.0, "freq_hz": 2.0}]}
    })");
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& stem)
        : path(fs::temp_directory_path() / ("viscosim_" + stem)) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string first_line(const fs::path& p) {
    std::ifstream is(p);
    std::string line;
    std::getline(is, line);
    return line;
}

} // namespace

TEST_CASE("strict parsing rejects malformed configs") {
    SECTION("unknown top-level key") {
        auto j = minimal_identify();
        j["turbo"] = true;
        CHECK_THROWS_WITH(parse_scenario(j),
                          Catch::Matchers::ContainsSubstring("unknown key 'turbo'"));
    }
    SECTION("unknown key inside a section") {
        auto j = minimal_identify();
        j["grid"]["nw"] = 4;
        CHECK_THROWS_WITH(parse_scenario(j), Catch::Matchers::ContainsSubstring("'grid'"));
    }
    SECTION("mode is required and restricted") {
        auto j = minimal_identify();
        j.erase("mode");
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
        j["mode"] = "frobnicate";
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
    }
    SECTION("duration must be present and positive") {
        auto j = minimal_identify();
        j.erase("duration");
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
        j["duration"] = 0.0;
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
    }
    SECTION("material takes network coefficients or theta, never both") {
        auto j = minimal_identify();
        j["material"]["theta"] = {{"eps", 1.0}};
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
    }
    SECTION("identify needs excitation and rejects control sections") {
        auto j = minimal_identify();
        j["force"].erase("terms");
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
        auto k = minimal_identify();
        k["gains"] = {{"lambda1", 1.0}, {"lambda2", 0.5}};
        CHECK_THROWS_AS(parse_scenario(k), ConfigError);
    }
    SECTION("probe count is bounded by the interior") {
        auto j = minimal_identify();
        j["identification"] = {{"probes", 46}}; // grid has 5*3*3 = 45 nodes
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
        j["identification"]["probes"] = 45;
        CHECK_NOTHROW(parse_scenario(j));
    }
    SECTION("replay window ordering is validated") {
        auto j = minimal_identify();
        j["identification"] = {
            {"replay",
             {{"record_start", 1.0}, {"record_duration", 2.0}, {"replay_at", 2.5}}}};
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
    }
    SECTION("cfl factor stays in (0, 1]") {
        auto j = minimal_identify();
        j["time"] = {{"cfl_factor", 1.5}};
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
        j["time"]["cfl_factor"] = 0.0;
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
    }
    SECTION("oracle mode wants an unforced material and an initial condition") {
        auto j = json::parse(R"({
            "mode": "oracle_check", "duration": 0.1,
            "grid": {"nx": 5, "ny": 5, "nz": 5},
            "material": {"theta": {"eps": 1.0, "lambda": 1.0}},
            "initial": {"modes": [{"n": 1, "m": 1, "p": 1, "coeff": 1.0}]}
        })");
        CHECK_NOTHROW(parse_scenario(j));
        auto bad = j;
        bad["material"]["theta"]["a1"] = 0.5;
        CHECK_THROWS_AS(parse_scenario(bad), ConfigError);
        bad = j;
        bad.erase("initial");
        CHECK_THROWS_AS(parse_scenario(bad), ConfigError);
    }
    SECTION("dual_loop requires gains and a dissipative material") {
        auto j = json::parse(R"({
            "mode": "dual_loop", "duration": 0.1,
            "grid": {"nx": 5, "ny": 3, "nz": 3},
            "material": {"k1": 2.0, "k2": 2.0, "b": 1.0, "eps": 1.0}
        })");
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
        j["gains"] = {{"lambda1", 1.0}, {"lambda2", 1.5}}; // lambda2 must stay below 1
        CHECK_THROWS_AS(parse_scenario(j), ConfigError);
        j["gains"]["lambda2"] = 0.5;
        CHECK_NOTHROW(parse_scenario(j));
    }
}

TEST_CASE("defaults fill what the config leaves out") {
    const Scenario sc = parse_scenario(minimal_identify());
    CHECK(sc.name == "quick");
    CHECK(sc.mode == RunMode::identify);
    CHECK(sc.seed == 0);
    CHECK(sc.cfl_factor == 0.9);
    CHECK(sc.decimation == 10);
    CHECK(sc.ident.probes == 8);
    CHECK(sc.ident.gain == 100.0);
    CHECK(sc.ident.leak == 5.0);
    CHECK_FALSE(sc.ident.replay.enabled);
    CHECK(sc.theta.eps == 1.0);
    CHECK(sc.theta.a1 == Catch::Approx(2.0)); // 1/beta, beta = b*k2/(k1+k2) = 1/2
    CHECK(sc.theta.a2 == Catch::Approx(0.5));
    CHECK(sc.theta.lambda == Catch::Approx(-2.0));
}

TEST_CASE("config hash is a stable FNV-1a fingerprint") {
    CHECK(config_hash("") == "fnv1a:cbf29ce484222325");
    CHECK(config_hash("a") == config_hash("a"));
    CHECK(config_hash("a") != config_hash("b"));
    const Scenario a = parse_scenario(minimal_identify());
    const Scenario b = parse_scenario(minimal_identify());
    CHECK(config_hash(a.config_dump) == config_hash(b.config_dump));
}

TEST_CASE("shipped scenario files parse cleanly") {
    const fs::path dir = VISCOSIM_SCENARIO_DIR;
    std::size_t seen = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json")
            continue;
        INFO(entry.path().filename().string());
        CHECK_NOTHROW(load_scenario(entry.path().string()));
        ++seen;
    }
    CHECK(seen >= 8);
}

TEST_CASE("output directory guard refuses to clobber without --force") {
    TempDir tmp("outdir_guard");
    fs::create_directories(tmp.path);
    std::ofstream(tmp.path / "leftover.txt") << "keep me\n";

    const Scenario sc = parse_scenario(minimal_identify());
    RunOptions opt;
    opt.out_dir = tmp.path;
    CHECK_THROWS_WITH(run_identify(sc, opt), Catch::Matchers::ContainsSubstring("--force"));
    CHECK(fs::exists(tmp.path / "leftover.txt"));

    opt.force = true;
    const RunReport rep = run_identify(sc, opt);
    CHECK_FALSE(fs::exists(tmp.path / "leftover.txt"));
    CHECK(fs::exists(tmp.path / "identify.csv"));
    CHECK(fs::exists(tmp.path / "manifest.json"));
    CHECK((rep.exit_code == 0 || rep.exit_code == 1)); // thresholds, not plumbing
}

TEST_CASE("identify run writes the contracted artifacts") {
    TempDir tmp("identify_artifacts");
    const Scenario sc = parse_scenario(minimal_identify());
    RunOptions opt;
    opt.out_dir = tmp.path;
    opt.seed_override = 123;

    const RunReport rep = run_identify(sc, opt);
    CHECK(first_line(tmp.path / "identify.csv") ==
          "t,eps_hat,a1_hat,a2_hat,lambda_hat,pe_min_eig,obs_err_sup");

    std::ifstream is(tmp.path / "manifest.json");
    const json m = json::parse(is);
    CHECK(m.at("artifact_version") == kArtifactVersion);
    CHECK(m.at("mode") == "identify");
    CHECK(m.at("seed") == 123);
    CHECK(m.at("config_hash").get<std::string>().rfind("fnv1a:", 0) == 0);
    CHECK(m.at("thresholds_met") == (rep.exit_code == 0));
    CHECK(m.at("values").contains("final_rel_error"));
    CHECK(m.at("dt").get<double>() > 0.0);
    CHECK(m.at("steps").get<std::size_t>() > 0);
}

TEST_CASE("oracle run matches the eigen-series on a short horizon") {
    TempDir tmp("oracle_run");
    const json j = json::parse(R"({
        "name": "oracle-short",
        "mode": "oracle_check",
        "duration": 0.05,
        "grid": {"nx": 31, "ny": 1, "nz": 1, "transverse": false},
        "material": {"theta": {"eps": 1.0, "lambda": 0.0}},
        "time": {"cfl_factor": 0.3},
        "output": {"decimation": 50},
        "initial": {"modes": [{"n": 1, "coeff": 1.0}]}
    })");
    const Scenario sc = parse_scenario(j);
    RunOptions opt;
    opt.out_dir = tmp.path;
    const RunReport rep = run_oracle_check(sc, opt);
    CHECK(rep.exit_code == 0);
    CHECK(rep.value("max_rel_l2") < 0.01);
    CHECK(rep.value("decay_rate_measured") ==
          Catch::Approx(rep.value("decay_rate_exact")).epsilon(0.02));
    CHECK(first_line(tmp.path / "oracle.csv") == "t,l2_num,l2_ref,rel_err");
}

TEST_CASE("pipelines verify the scenario mode") {
    TempDir tmp("mode_mismatch");
    const Scenario sc = parse_scenario(minimal_identify());
    RunOptions opt;
    opt.out_dir = tmp.path;
    CHECK_THROWS_AS(run_dual_loop(sc, opt), ConfigError);
    CHECK_THROWS_AS(run_oracle_check(sc, opt), ConfigError);
}

TEST_CASE("dual loop refuses non-passive gains unless forced") {
    TempDir tmp("passivity_refusal");
    const json j = json::parse(R"({
        "mode": "dual_loop", "duration": 0.1,
        "grid": {"nx": 5, "ny": 3, "nz": 3},
        "material": {"theta": {"eps": 1.0, "a1": -1.0, "a2": 0.5, "lambda": -2.0}},
        "gains": {"lambda1": 1.0, "lambda2": 0.5}
    })");
    const Scenario sc = parse_scenario(j); // a1*lambda1 < 0: interface is active
    RunOptions opt;
    opt.out_dir = tmp.path;
    CHECK_THROWS_WITH(run_dual_loop(sc, opt),
                      Catch::Matchers::ContainsSubstring("passivity"));
}

TEST_CASE("unstable configuration is detected and flagged") {
    TempDir tmp("dual_unstable");
    const Scenario sc =
        load_scenario((fs::path(VISCOSIM_SCENARIO_DIR) / "dual_loop_unstable.json").string());
    RunOptions opt;
    opt.out_dir = tmp.path;
    const RunReport rep = run_dual_loop(sc, opt);
    CHECK(rep.exit_code == 1);
    CHECK(rep.has_flag("divergence detected"));
    CHECK(rep.value("diverged") == 1.0);
    CHECK(first_line(tmp.path / "metrics.csv") == "t,fte,eps_dist,eps_area,eps_total");
    CHECK(first_line(tmp.path / "trajectory.csv") == "t,l2_phi,linf_phi,resultant_force");
}
