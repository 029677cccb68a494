#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "semnbv/runner.hpp"

using namespace semnbv;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = SEMNBV_SOURCE_DIR;

ExperimentConfig room_config(std::size_t iterations)
{
    auto c = load_config(kSource / "configs/mini_room.json");
    c.iterations = iterations;
    return c;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("semnbv_test_" + name);
    fs::remove_all(dir);
    return dir;
}

json minimal_config()
{
    return json::parse(R"({
      "version": 1,
      "scenario": {
        "version": 1,
        "bounds": {"min": [0, 0, 0], "max": [4, 4, 2]},
        "classes": ["Sky", "Box"],
        "boxes": [{"name": "b", "min": [2.4, 2.4, 0], "max": [3.2, 3.2, 0.8], "class": "Box"}],
        "start": {"position": [1.0, 1.0, 1.0], "yaw_deg": 45}
      }
    })");
}

} // namespace

TEST(Config, DefaultsResolve)
{
    const auto c = config_from_json(minimal_config());
    EXPECT_EQ(c.map.num_classes, 2u);
    EXPECT_EQ(c.map.resolution, 0.4);
    EXPECT_EQ(c.iterations, 2000u);
    EXPECT_EQ(c.planner.mode, GainMode::SemanticWeighted);
    EXPECT_EQ(c.planner.class_weights, (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(c.planner.tree_nodes, 60u);
    EXPECT_EQ(c.planner.gain_camera.cols, 24u);
    EXPECT_EQ(c.planner.gain_camera.rows, 18u);
    EXPECT_EQ(c.planner.workspace.min, c.map.bounds.min);
    EXPECT_EQ(c.evaluation_bounds.max, c.planner.workspace.max);
    EXPECT_NEAR(c.start.yaw, std::numbers::pi / 4, 1e-12);
    EXPECT_NEAR(c.confusion(1, 1), 0.9, 1e-15);
    EXPECT_NEAR(c.confusion(1, 0), 0.1, 1e-15);
}

TEST(Config, RoundTripPreservesHash)
{
    const auto c = load_config(kSource / "configs/mini_shipyard.json");
    const auto again = config_from_json(config_to_json(c));
    EXPECT_EQ(config_hash(c), config_hash(again));
    EXPECT_EQ(config_to_json(c).dump(), config_to_json(again).dump());
}

TEST(Config, HashIgnoresOutputDirButNotSeed)
{
    auto a = room_config(10);
    auto b = a;
    b.output_dir = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = a.seed + 1;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, Errors)
{
    auto j = minimal_config();
    j.erase("version");
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = minimal_config();
    j["scenario"]["boxes"][0]["class"] = "Dock";
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = minimal_config();
    j["planner"] = {{"mode", "frontier"}};
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = minimal_config();
    j["planner"] = {{"class_weights", {0.7, 0.7}}};
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = minimal_config();
    j["planner"] = {{"class_weights", "vessel"}};
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = minimal_config();
    j["map"] = {{"p_free", 0.6}};
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = minimal_config();
    j["iterations"] = "many";
    EXPECT_THROW(config_from_json(j), ConfigError);

    j = minimal_config();
    j["scenario"]["version"] = 7;
    EXPECT_THROW(config_from_json(j), ConfigError);

    EXPECT_THROW(load_config(kSource / "does/not/exist.json"), ConfigError);
}

TEST(Config, ModeTokens)
{
    auto c = load_config(kSource / "configs/mini_shipyard.json");
    apply_mode_token(c, "semantic:vessel");
    EXPECT_EQ(c.planner.mode, GainMode::SemanticWeighted);
    EXPECT_EQ(c.planner.class_weights, (std::vector<double>{0.1, 0.1, 0.6, 0.1, 0.1}));
    apply_mode_token(c, "baseline");
    EXPECT_EQ(c.planner.mode, GainMode::BaselineUnknownCount);
    EXPECT_THROW(apply_mode_token(c, "semantic:nope"), ConfigError);
    EXPECT_THROW(apply_mode_token(c, "geometric:vessel"), ConfigError);
    EXPECT_THROW(apply_mode_token(c, "greedy"), ConfigError);
}

TEST(Mission, InvalidStartRejected)
{
    auto c = room_config(1);
    c.start = Pose(Vec3(6.5, 4.0, 1.0), 0.0);   // inside the crate
    EXPECT_THROW(Mission{c}, ConfigError);
    c.start = Pose(Vec3(20, 4.0, 1.0), 0.0);
    EXPECT_THROW(Mission{c}, ConfigError);
    c.start = Pose(Vec3(0.7, 3.0, 1.4), 0.0);   // too close to the west wall
    EXPECT_THROW(Mission{c}, ConfigError);
}

TEST(Mission, SingleIterationWritesOneRow)
{
    const auto dir = scratch("one");
    auto c = room_config(1);
    const auto r = run_mission(c, dir);
    EXPECT_EQ(r.steps, 1u);
    for (const char* f : {"config.json", "metrics.csv", "timings.csv", "map.txt", "summary.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    std::istringstream csv(slurp(dir / "metrics.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) ++lines;
    EXPECT_EQ(lines, 3);   // hash comment, header, one row
    const auto summary = json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary.at("steps"), 1);
    EXPECT_EQ(summary.at("config_hash"), config_hash(c));
    fs::remove_all(dir);
}

TEST(Mission, StepOrderAndRecords)
{
    Mission m(room_config(5));
    const Pose start = m.pose();
    const double h0 = m.initial_entropy();
    EXPECT_NEAR(h0, keys_with_center_in(m.config().map, m.config().evaluation_bounds).count() * 0.5 * std::log(2.0),
                1e-9);
    const auto& rec = m.step();
    EXPECT_EQ(rec.step, 0u);
    EXPECT_EQ(rec.pose, start);   // the record holds the pose the scan was taken from
    EXPECT_LT(rec.entropy, h0);
    EXPECT_GT(m.last_fusion().hit_updates, 0u);
    EXPECT_FALSE(m.last_plan().exploration_complete());
    m.run();
    EXPECT_EQ(m.records().size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(m.records()[i].step, i);
}

TEST(Mission, ObserverCanStopEarly)
{
    Mission m(room_config(50));
    m.run([](const Mission&, const StepRecord& r) { return r.step < 2; });
    EXPECT_EQ(m.records().size(), 3u);
}

TEST(Mission, RobotNeverEntersTrueGeometry)
{
    Mission m(room_config(40));
    m.run([](const Mission& mm, const StepRecord&) {
        EXPECT_TRUE(mm.motion_clear(mm.pose().position, mm.pose().position));
        return true;
    });
}

TEST(Mission, ExplorationCompleteStopsEarly)
{
    auto c = room_config(400);
    apply_mode_token(c, "baseline");
    const auto dir = scratch("complete");
    Mission m(c);
    m.run();
    m.write_artifacts(dir);
    EXPECT_TRUE(m.exploration_complete());
    EXPECT_LT(m.records().size(), 400u);
    EXPECT_EQ(json::parse(slurp(dir / "summary.json")).at("exploration_complete"), true);
    fs::remove_all(dir);
}

TEST(Mission, IdenticalSeedsGiveIdenticalArtifacts)
{
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    auto c = room_config(8);
    run_mission(c, a);
    run_mission(c, b);
    for (const char* f : {"metrics.csv", "map.txt", "config.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    c.seed = 99;
    const auto d = scratch("det_c");
    run_mission(c, d);
    EXPECT_NE(slurp(a / "metrics.csv"), slurp(d / "metrics.csv"));
    for (const auto& p : {a, b, d}) fs::remove_all(p);
}

TEST(Mission, TelescopingGains)
{
    Mission m(room_config(12));
    m.run();
    const auto g = information_gains(m.records(), m.initial_entropy());
    double sum = 0.0;
    for (double v : g) sum += v;
    EXPECT_NEAR(sum, m.initial_entropy() - m.records().back().entropy, 1e-9 * m.initial_entropy());
}

TEST(Compare, OneModeOneSeedMatchesRunMission)
{
    auto c = room_config(4);
    const auto rows = compare_runs(c, {"geometric"}, {3});
    ASSERT_EQ(rows.size(), 1u);
    c.seed = 3;
    const auto direct = run_mission(c).summary;
    EXPECT_EQ(rows[0].mean.avg_information_gain, direct.avg_information_gain);
    EXPECT_EQ(rows[0].mean.avg_coverage, direct.avg_coverage);
    EXPECT_EQ(rows[0].mean.avg_per_class, direct.avg_per_class);
}

TEST(Compare, MeanOverSeedsAndOutputs)
{
    const auto dir = scratch("compare");
    const auto rows = compare_runs(room_config(3), {"baseline", "semantic:uniform"}, {1, 2, 3}, dir);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& row : rows) {
        ASSERT_EQ(row.runs.size(), 3u);
        double gain = 0.0, cov = 0.0;
        for (const auto& r : row.runs) {
            gain += r.avg_information_gain;
            cov += r.avg_coverage;
        }
        EXPECT_NEAR(row.mean.avg_information_gain, gain / 3.0, 1e-9);
        EXPECT_NEAR(row.mean.avg_coverage, cov / 3.0, 1e-9);
    }
    EXPECT_TRUE(fs::exists(dir / "comparison.csv"));
    EXPECT_TRUE(fs::exists(dir / "semantic-uniform_seed2" / "metrics.csv"));
    const auto csv = slurp(dir / "comparison.csv");
    EXPECT_EQ(csv.rfind("mode,runs,avg_information_gain,avg_occupied,avg_occupied_sky", 0), 0u);
    fs::remove_all(dir);
}

TEST(Compare, FailureKeepsFinishedRows)
{
    const auto dir = scratch("compare_fail");
    EXPECT_THROW(compare_runs(room_config(2), {"geometric", "bogus"}, {1}, dir), ConfigError);
    const auto csv = slurp(dir / "comparison.csv");
    EXPECT_NE(csv.find("\ngeometric,1,"), std::string::npos);
    EXPECT_THROW(compare_runs(room_config(2), {}, {1}), ConfigError);
    fs::remove_all(dir);
}
