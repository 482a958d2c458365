#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "spraysim/eval_io.hpp"
#include "spraysim/report.hpp"
#include "spraysim/simulation.hpp"

using namespace spraysim;
namespace fs = std::filesystem;

namespace {

const std::string kDataDir = std::string(SPRAYSIM_SOURCE_DIR) + "/data";

// one plant over nozzle 1, paper underneath, noiseless detector
Scene mini_scene(double area_m2) {
    Scene s;
    CameraConfig c1;
    c1.id = 1;
    c1.covered_nozzles = {1, 2};
    CameraConfig c2;
    c2.id = 2;
    c2.covered_nozzles = {3, 4};
    s.cameras = {c1, c2};
    Plant p;
    p.id = 1;
    p.x_m = 1.0;
    p.y_m = s.boom.nozzle_y(1);
    p.canopy_area_m2 = area_m2;
    p.footprint = circle_footprint(p.x_m, p.y_m, area_m2);
    s.plants = {p};
    WspPlacement w;
    w.id = 1;
    w.x_m = 1.0;
    w.y_m = p.y_m;
    s.papers = {w};
    s.noise = OracleNoise{0, 0, 0};
    s.deposition.pass_x_end_m = 2.0;
    return s;
}

}  // namespace

TEST_CASE("bundled default scenario loads and validates") {
    const Scene s = Scene::from_file(kDataDir + "/default_scenario.json");
    CHECK(s.plants.size() == 15);
    CHECK(s.papers.size() == 15);
    CHECK(s.cameras.size() == 2);
    CHECK(s.seed == 42);
    int small = 0, medium = 0, large = 0;
    for (const Plant& p : s.plants) {
        switch (classify_canopy(p.canopy_area_m2, s.control)) {
            case CanopyClass::Small: ++small; break;
            case CanopyClass::Medium: ++medium; break;
            case CanopyClass::Large: ++large; break;
        }
    }
    CHECK(small == 5);
    CHECK(medium == 5);
    CHECK(large == 5);
}

TEST_CASE("configs violating invariants are rejected with diagnostics") {
    json j;
    j["control"] = {{"area_t1_m2", 0.05}, {"area_t2_m2", 0.01}};
    CHECK_THROWS_AS(Scene::from_json(j), std::invalid_argument);

    json unknown;
    unknown["boom"] = {{"nozzle_count", 4}, {"bogus_key", 1}};
    CHECK_THROWS_WITH_AS(Scene::from_json(unknown), doctest::Contains("bogus_key"),
                         std::invalid_argument);

    json dup;
    dup["cameras"] = json::array({json{{"id", 1}, {"covered_nozzles", {1, 2}}},
                                  json{{"id", 1}, {"covered_nozzles", {3, 4}}}});
    CHECK_THROWS_AS(Scene::from_json(dup), std::invalid_argument);

    // nozzle covered twice
    json twice;
    twice["cameras"] = json::array({json{{"id", 1}, {"covered_nozzles", {1, 2}}},
                                    json{{"id", 2}, {"covered_nozzles", {2, 3}}}});
    CHECK_THROWS_AS(Scene::from_json(twice), std::invalid_argument);
}

TEST_CASE("an empty scene produces an all-off log and blank papers") {
    Scene s = mini_scene(0.05);
    s.plants.clear();
    const SimRun run = simulate(s, 5);
    CHECK(run.n_ticks > 0);
    for (const TickLogRow& row : run.decision_log) CHECK(row.decision.duty == 0);
    CHECK(run.pass.rasters[0].mask.count() == 0);
}

TEST_CASE("a large plant over nozzle 1 drives only nozzle 1") {
    const Scene s = mini_scene(0.05);
    const SimRun run = simulate(s, 7);
    bool nozzle1_on = false;
    for (const TickLogRow& row : run.decision_log) {
        if (row.decision.nozzle == 1 && row.decision.duty > 0) {
            nozzle1_on = true;
            CHECK(row.decision.duty == s.control.duty_levels[2]);
            CHECK(row.decision.canopy == CanopyClass::Large);
        }
        if (row.decision.nozzle != 1) CHECK(row.decision.duty == 0);
    }
    CHECK(nozzle1_on);
    CHECK(run.pass.rasters[0].mask.count() > 0);
}

TEST_CASE("simulate is deterministic in memory") {
    const Scene s = mini_scene(0.02);
    const SimRun a = simulate(s, 11);
    const SimRun b = simulate(s, 11);
    REQUIRE(a.pass.rasters.size() == b.pass.rasters.size());
    CHECK(a.pass.rasters[0].mask.v == b.pass.rasters[0].mask.v);
    REQUIRE(a.wire.size() == b.wire.size());
    for (size_t i = 0; i < a.wire.size(); ++i) CHECK(a.wire[i].bytes == b.wire[i].bytes);
}

TEST_CASE("write_run emits the full reproducible artifact set") {
    const Scene s = mini_scene(0.02);
    const SimRun run = simulate(s, 3);
    const fs::path dir_a = fs::temp_directory_path() / "spraysim_run_a";
    const fs::path dir_b = fs::temp_directory_path() / "spraysim_run_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    write_run(run, dir_a);
    write_run(simulate(s, 3), dir_b);

    for (const char* name : {"manifest.json", "decisions.csv", "wire.txt", "detections.txt",
                             "truths.txt", "rasters/paper_01.pgm"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(dir_a / name));
        std::ifstream fa(dir_a / name, std::ios::binary), fb(dir_b / name, std::ios::binary);
        const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
        const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
        CHECK(ba == bb);
        CHECK_FALSE(ba.empty());
    }

    json manifest;
    std::ifstream(dir_a / "manifest.json") >> manifest;
    CHECK(manifest.at("seed") == 3);
    CHECK(manifest.at("papers").size() == 1);
    CHECK(manifest.at("papers")[0].at("canopy_class") == "medium");

    // decisions.csv latency column is simulated time (constant zero)
    std::ifstream csv(dir_a / "decisions.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "tick,sim_time_ms,nozzle,action,duty,canopy_class,latency_ms,clamped_flag");
    while (std::getline(csv, line)) CHECK(line.find(",0.000,") != std::string::npos);

    // exported detections and truths feed the evaluator
    const auto preds = read_predictions((dir_a / "detections.txt").string());
    const auto truths = read_truths((dir_a / "truths.txt").string());
    CHECK_FALSE(preds.empty());
    CHECK_FALSE(truths.empty());
    const EvalReport rep = evaluate(preds, truths);
    CHECK(rep.map == doctest::Approx(1.0));  // noiseless oracle
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("a scene reloaded from its own serialization simulates identically") {
    const Scene s = mini_scene(0.02);
    const Scene reloaded = Scene::from_json(s.to_json());
    const SimRun a = simulate(s, 21);
    const SimRun b = simulate(reloaded, 21);
    CHECK(a.pass.rasters[0].mask.v == b.pass.rasters[0].mask.v);
    REQUIRE(a.wire.size() == b.wire.size());
    for (size_t i = 0; i < a.wire.size(); ++i) CHECK(a.wire[i].bytes == b.wire[i].bytes);
}

TEST_CASE("polygon footprints flow through detection and control") {
    Scene s = mini_scene(0.05);
    // replace the ellipse with a 0.2 m x 0.25 m rectangle (same area)
    PolygonFootprint poly;
    const double cx = s.plants[0].x_m, cy = s.plants[0].y_m;
    poly.points = {{cx - 0.1, cy - 0.125}, {cx + 0.1, cy - 0.125}, {cx + 0.1, cy + 0.125},
                   {cx - 0.1, cy + 0.125}};
    s.plants[0].footprint = poly;
    s.plants[0].canopy_area_m2 = 0.05;
    const SimRun run = simulate(s, 9);
    bool on = false;
    for (const TickLogRow& row : run.decision_log)
        if (row.decision.nozzle == 1 && row.decision.duty == s.control.duty_levels[2]) on = true;
    CHECK(on);
}

TEST_CASE("oracle noise fields are validated") {
    OracleNoise n;
    n.fn_rate = 1.5;
    CHECK_THROWS_AS(n.validate(), std::invalid_argument);
    n = OracleNoise{};
    n.fp_rate = -1;
    CHECK_THROWS_AS(n.validate(), std::invalid_argument);
    n = OracleNoise{};
    n.area_jitter = -0.1;
    CHECK_THROWS_AS(n.validate(), std::invalid_argument);
}

TEST_CASE("aggregate coverage groups papers by manifest class") {
    std::vector<AnalyzedPaper> papers(6);
    const char* classes[] = {"small", "small", "medium", "medium", "large", "large"};
    const double cov[] = {10, 12, 20, 22, 24, 26};
    for (int i = 0; i < 6; ++i) {
        papers[size_t(i)].canopy_class = classes[i];
        papers[size_t(i)].report.coverage_percent = cov[i];
    }
    const auto summary = aggregate_coverage(papers);
    REQUIRE(summary.size() == 3);
    CHECK(summary[0].canopy_class == "small");
    CHECK(summary[0].mean == doctest::Approx(11.0));
    CHECK(summary[1].mean == doctest::Approx(21.0));
    CHECK(summary[2].mean == doctest::Approx(25.0));
    CHECK(summary[0].n == 2);
}

TEST_CASE("quantiles use linear interpolation") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    CHECK(quantile_sorted(v, 0.5) == doctest::Approx(3.0));
    CHECK(quantile_sorted(v, 0.25) == doctest::Approx(2.0));
    CHECK(quantile_sorted(v, 0.75) == doctest::Approx(4.0));
    CHECK(quantile_sorted(v, 0.0) == doctest::Approx(1.0));
    CHECK(quantile_sorted(v, 1.0) == doctest::Approx(5.0));
}
