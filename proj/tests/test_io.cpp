#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lmdyn/config.hpp"
#include "lmdyn/runner.hpp"
#include "lmdyn/trajectory.hpp"

using namespace lmdyn;
using Catch::Approx;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("lmdyn_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json minimal_config(const std::string& out_dir) {
    return json{{"model",
                 {{"type", "jc"}, {"omega0", 1.0}, {"omega", 1.0}, {"alpha_sq", 4.0}, {"Omega", 0.5}}},
                {"ansatz", {{"branches", 2}, {"seed", 11}}},
                {"integration",
                 {{"dt", 0.01}, {"t_final", 1.0}, {"sample_stride", 10}}},
                {"engines",
                 {{"variational", true}, {"semiclassical", true}, {"oracle", true}}},
                {"output", {{"directory", out_dir}}}};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("records survive a csv round trip", "[io]") {
    io::TrajectoryRecord record;
    record.columns = {"P_1", "delta_n_1"};
    record.metadata["engine"] = "variational";
    record.time = {0.0, 0.5, 1.0};
    record.rows = {{1.0, 0.0}, {0.875, -0.125}, {0.5000000000000021, -0.5}};
    const auto dir = temp_dir("roundtrip");
    const auto path = (dir / "r.csv").string();
    io::write_csv(record, path);
    const auto loaded = io::read_csv(path);
    REQUIRE(loaded.columns == record.columns);
    REQUIRE(loaded.time.size() == 3);
    CHECK(loaded.metadata.at("engine") == "variational");
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(loaded.time[i] == record.time[i]);
        CHECK(loaded.rows[i][0] == record.rows[i][0]);
        CHECK(loaded.rows[i][1] == record.rows[i][1]);
    }
}

TEST_CASE("comparison of identical records reports zero differences", "[io]") {
    io::TrajectoryRecord record;
    record.columns = {"P_2"};
    record.time = {0.0, 1.0};
    record.rows = {{0.25}, {0.5}};
    const auto report = io::compare(record, record, {"P_2"}, 0.0);
    CHECK(report.pass);
    CHECK(report.diffs[0].max_abs == 0.0);
    CHECK(report.diffs[0].rms == 0.0);
}

TEST_CASE("zero tolerance on differing records locates the first exceedance", "[io]") {
    io::TrajectoryRecord a, b;
    a.columns = b.columns = {"P_2"};
    a.time = b.time = {0.0, 1.0, 2.0};
    a.rows = {{0.1}, {0.2}, {0.3}};
    b.rows = {{0.1}, {0.25}, {0.35}};
    const auto report = io::compare(a, b, {"P_2"}, 0.0);
    CHECK_FALSE(report.pass);
    CHECK(report.diffs[0].exceeded);
    CHECK(report.diffs[0].first_exceedance_time == 1.0);
    CHECK(report.diffs[0].max_abs == Approx(0.05));
}

TEST_CASE("mismatched grids are refused", "[io]") {
    io::TrajectoryRecord a, b;
    a.columns = b.columns = {"P_2"};
    a.time = {0.0, 1.0};
    b.time = {0.0, 1.5};
    a.rows = {{0.1}, {0.2}};
    b.rows = {{0.1}, {0.2}};
    CHECK_THROWS_AS(io::compare(a, b, {"P_2"}, 1.0), GridMismatchError);
}

TEST_CASE("config parsing converts the drive amplitude to a coupling", "[io]") {
    const auto cfg = io::parse_config(minimal_config("x"));
    CHECK(cfg.model.modes[0].g == Approx(0.25));  // Omega/|alpha| = 0.5/2
    CHECK(cfg.model.modes[0].alpha_abs == Approx(2.0));
    CHECK(cfg.ansatz.branches == 2);
    CHECK(cfg.integration.t_final == 1.0);
}

TEST_CASE("config validation rejects bad sections", "[io]") {
    auto doc = minimal_config("x");
    doc["engines"] = {{"variational", false}};
    CHECK_THROWS_AS(io::parse_config(doc), ConfigError);

    doc = minimal_config("x");
    doc["model"]["g"] = 0.1;  // both g and Omega
    CHECK_THROWS_AS(io::parse_config(doc), ConfigError);

    doc = minimal_config("x");
    doc["model"]["alpha_sq"] = 0.0;  // Omega without amplitude
    CHECK_THROWS_AS(io::parse_config(doc), ConfigError);

    doc = minimal_config("x");
    doc["model"]["type"] = "unknown";
    CHECK_THROWS_AS(io::parse_config(doc), ConfigError);

    doc = minimal_config("x");
    doc["integration"].erase("t_final");
    CHECK_THROWS_AS(io::parse_config(doc), ConfigError);
}

TEST_CASE("config hash tracks semantic fields only", "[io]") {
    const auto base = minimal_config("outdir_a");
    auto same_output_changed = base;
    same_output_changed["output"]["directory"] = "outdir_b";
    auto semantics_changed = base;
    semantics_changed["model"]["alpha_sq"] = 9.0;
    CHECK(io::config_hash(base) == io::config_hash(same_output_changed));
    CHECK(io::config_hash(base) != io::config_hash(semantics_changed));
}

TEST_CASE("a full run writes per-engine csv files and a manifest", "[io][runner]") {
    const auto dir = temp_dir("run");
    auto doc = minimal_config((dir / "out").string());
    const auto cfg = io::parse_config(doc);
    const auto outcome = cli::run_config(cfg);
    REQUIRE(outcome.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "variational.csv"));
    CHECK(fs::exists(dir / "out" / "semiclassical.csv"));
    CHECK(fs::exists(dir / "out" / "oracle.csv"));
    CHECK(fs::exists(dir / "out" / "manifest.json"));

    const auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
    CHECK(manifest["status"] == "ok");
    CHECK(manifest["config_hash"] == io::config_hash(doc));

    // engines share the sample grid and the variational tracks the oracle
    const auto var = io::read_csv((dir / "out" / "variational.csv").string());
    const auto ora = io::read_csv((dir / "out" / "oracle.csv").string());
    const auto report = io::compare(var, ora, {"P_2"}, 5e-3);
    CHECK(report.pass);
}

TEST_CASE("reruns with the same seed are byte-identical", "[io][runner]") {
    const auto dir = temp_dir("determinism");
    auto doc = minimal_config((dir / "a").string());
    cli::run_config(io::parse_config(doc));
    doc["output"]["directory"] = (dir / "b").string();
    cli::run_config(io::parse_config(doc));
    CHECK(slurp(dir / "a" / "variational.csv") == slurp(dir / "b" / "variational.csv"));
    CHECK(slurp(dir / "a" / "semiclassical.csv") == slurp(dir / "b" / "semiclassical.csv"));
}

TEST_CASE("distribution requests write per-time files", "[io][runner]") {
    const auto dir = temp_dir("dist");
    auto doc = minimal_config((dir / "out").string());
    doc["engines"]["semiclassical"] = false;
    doc["observables"]["distribution"] = {{"times", {0.0, 1.0}}};
    const auto outcome = cli::run_config(io::parse_config(doc));
    REQUIRE(outcome.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "distribution_variational_0.csv"));
    CHECK(fs::exists(dir / "out" / "distribution_variational_1.csv"));
    CHECK(fs::exists(dir / "out" / "distribution_oracle_0.csv"));
    CHECK(fs::exists(dir / "out" / "distribution_oracle_1.csv"));

    // initial distributions from both engines agree pointwise
    const auto va = io::read_csv((dir / "out" / "distribution_variational_0.csv").string());
    const auto ora = io::read_csv((dir / "out" / "distribution_oracle_0.csv").string());
    const auto pv = va.column("p");
    const auto po = ora.column("p");
    REQUIRE(pv.size() == po.size());
    for (std::size_t i = 0; i < pv.size(); ++i) CHECK(pv[i] == Approx(po[i]).margin(1e-9));
}

TEST_CASE("engine aborts preserve outputs and annotate the manifest", "[io][runner]") {
    const auto dir = temp_dir("abort");
    auto doc = minimal_config((dir / "out").string());
    doc["engines"]["oracle"] = false;
    doc["engines"]["semiclassical"] = false;
    doc["integration"]["dt"] = 0.9;  // coarse enough to trip the norm guard
    doc["integration"]["t_final"] = 90.0;
    doc["integration"]["norm_tolerance"] = 1e-12;
    doc["integration"]["auto_halve_dt"] = false;
    doc["model"]["Omega"] = 0.9;
    const auto outcome = cli::run_config(io::parse_config(doc));
    CHECK(outcome.exit_code == cli::kExitEngineError);
    const auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
    CHECK(manifest["status"] == "failed");
    CHECK(manifest["failure"].contains("time"));
}

TEST_CASE("sweeps expand the grid into independent runs", "[io][runner]") {
    const auto dir = temp_dir("sweep");
    auto doc = minimal_config((dir / "grid").string());
    doc["engines"]["oracle"] = false;
    doc["sweep"] = {{"model.alpha_sq", {4.0, 9.0}}};
    const int code = cli::run_sweep(io::parse_config(doc));
    CHECK(code == 0);
    CHECK(fs::exists(dir / "grid" / "run_000" / "variational.csv"));
    CHECK(fs::exists(dir / "grid" / "run_001" / "variational.csv"));
    const auto manifest = json::parse(slurp(dir / "grid" / "sweep_manifest.json"));
    REQUIRE(manifest["runs"].size() == 2);
    CHECK(manifest["runs"][0]["status"] == "ok");

    const auto m0 = json::parse(slurp(dir / "grid" / "run_000" / "manifest.json"));
    const auto m1 = json::parse(slurp(dir / "grid" / "run_001" / "manifest.json"));
    CHECK(m0["config"]["model"]["alpha_sq"].get<double>() == 4.0);
    CHECK(m1["config"]["model"]["alpha_sq"].get<double>() == 9.0);
}

TEST_CASE("single-point sweeps match a direct run", "[io][runner]") {
    const auto dir = temp_dir("sweep1");
    auto doc = minimal_config((dir / "grid").string());
    doc["engines"]["oracle"] = false;
    doc["engines"]["semiclassical"] = false;
    doc["sweep"] = {{"ansatz.seed", {11.0}}};
    REQUIRE(cli::run_sweep(io::parse_config(doc)) == 0);

    auto direct = minimal_config((dir / "direct").string());
    direct["engines"]["oracle"] = false;
    direct["engines"]["semiclassical"] = false;
    cli::run_config(io::parse_config(direct));
    CHECK(slurp(dir / "grid" / "run_000" / "variational.csv") ==
          slurp(dir / "direct" / "variational.csv"));
}

TEST_CASE("output root override redirects artifacts", "[io][runner]") {
    const auto dir = temp_dir("envroot");
    setenv("LMDYN_OUTPUT_ROOT", dir.c_str(), 1);
    auto doc = minimal_config("nested/out");
    doc["engines"]["oracle"] = false;
    doc["engines"]["semiclassical"] = false;
    const auto outcome = cli::run_config(io::parse_config(doc));
    unsetenv("LMDYN_OUTPUT_ROOT");
    REQUIRE(outcome.exit_code == 0);
    CHECK(fs::exists(dir / "nested" / "out" / "variational.csv"));
}

TEST_CASE("compare command writes a report and distinguishes pass from fail", "[io][runner]") {
    const auto dir = temp_dir("cmp");
    io::TrajectoryRecord a, b;
    a.columns = b.columns = {"P_2"};
    a.time = b.time = {0.0, 1.0};
    a.rows = {{0.1}, {0.2}};
    b.rows = {{0.1}, {0.21}};
    io::write_csv(a, (dir / "a.csv").string());
    io::write_csv(b, (dir / "b.csv").string());
    const auto report_path = (dir / "report.json").string();
    CHECK(cli::run_compare((dir / "a.csv").string(), (dir / "b.csv").string(), {"P_2"}, 0.05,
                           report_path) == cli::kExitOk);
    CHECK(cli::run_compare((dir / "a.csv").string(), (dir / "b.csv").string(), {"P_2"}, 0.001,
                           report_path) == cli::kExitToleranceFail);
    const auto report = json::parse(slurp(report_path));
    CHECK(report["pass"] == false);
    CHECK(report["columns"][0]["max_abs"].get<double>() == Approx(0.01));
}
