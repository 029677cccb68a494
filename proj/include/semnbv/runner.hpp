#ifndef SEMNBV_RUNNER_HPP
#define SEMNBV_RUNNER_HPP

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <string>
#include <vector>

#include "semnbv/config.hpp"
#include "semnbv/map_io.hpp"
#include "semnbv/metrics.hpp"
#include "semnbv/nbv_planner.hpp"
#include "semnbv/semantic_octree.hpp"
#include "semnbv/sensor_sim.hpp"
#include "semnbv/world_sim.hpp"

namespace semnbv {

/// Sense -> fuse -> record -> plan -> act loop over one experiment.
///
/// A single rng stream seeded from the config drives everything; within an
/// iteration the sensor consumes it first and the planner second. Motion is a
/// teleport to the planned pose. The planner treats unknown space as free, so
/// it can aim into obstacles it has not seen yet; such moves are refused and
/// the robot holds position. The guard uses the true geometry grown by one
/// voxel because range noise smears hits on a face into the cell in front.
class Mission {
public:
    explicit Mission(ExperimentConfig config)
        : config_((config.validate(), std::move(config))),
          map_(config_.map),
          truth_(config_.scenario.world, config_.map),
          guard_(dilate(truth_)),
          rng_(config_.seed),
          pose_(config_.start)
    {
        if (!config_.map.bounds.contains(pose_.position))
            throw ConfigError("start pose lies outside the map bounds");
        for (const auto& p : config_.scenario.world.primitives)
            if (p.box.contains_closed(pose_.position))
                throw ConfigError("start pose lies inside primitive '" + p.name + "'");
        if (!motion_clear(pose_.position, pose_.position))
            throw ConfigError("start pose is closer than robot_radius to the scenario geometry");
        initial_entropy_ = total_entropy(map_, config_.evaluation_bounds);
    }

    const ExperimentConfig& config() const { return config_; }
    const OctreeMap& map() const { return map_; }
    const Pose& pose() const { return pose_; }
    const std::vector<StepRecord>& records() const { return records_; }
    double initial_entropy() const { return initial_entropy_; }
    bool exploration_complete() const { return complete_; }
    bool finished() const { return complete_ || records_.size() >= config_.iterations; }
    const PlanResult& last_plan() const { return last_plan_; }
    const FusionStats& last_fusion() const { return last_fusion_; }
    const GroundTruthGrid& truth() const { return truth_; }
    std::size_t refused_moves() const { return refused_moves_; }

    /// False when moving along from -> to would come within robot_radius of
    /// the (one-voxel grown) true geometry.
    bool motion_clear(const Vec3& from, const Vec3& to) const
    {
        const auto& dims = truth_.dims();
        return segment_clear(config_.map, from, to, config_.planner.robot_radius,
                             [&](const VoxelKey& k) { return guard_[linear_index(k, dims)] != 0; });
    }

    /// Runs one iteration and returns its record.
    const StepRecord& step()
    {
        using clock = std::chrono::steady_clock;
        const auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };

        StepRecord rec;
        rec.step = records_.size();
        rec.pose = pose_;

        const auto t0 = clock::now();
        const auto cloud = generate_measurement(config_.scenario.world, config_.camera, pose_, config_.noise,
                                                config_.confusion, rng_);
        last_fusion_ = integrate_scan(map_, pose_.position, cloud, config_.noise.axial_scale);
        const auto t1 = clock::now();
        rec.fusion_ms = ms(t1 - t0);

        rec.entropy = total_entropy(map_, config_.evaluation_bounds);
        const auto cov = surface_coverage(map_, config_.planner.occupancy_threshold, config_.evaluation_bounds);
        rec.occupied = cov.total;
        rec.per_class = cov.per_class;

        const auto t2 = clock::now();
        last_plan_ = plan_step(map_, pose_, config_.planner, rng_);
        rec.planning_ms = ms(clock::now() - t2);

        if (last_plan_.exploration_complete()) complete_ = true;
        else if (motion_clear(pose_.position, last_plan_.next->position)) pose_ = *last_plan_.next;
        else ++refused_moves_;

        records_.push_back(std::move(rec));
        return records_.back();
    }

    /// Steps until the budget is spent, exploration completes, or `observer`
    /// returns false.
    void run(const std::function<bool(const Mission&, const StepRecord&)>& observer = {})
    {
        while (!finished()) {
            const auto& rec = step();
            if (observer && !observer(*this, rec)) break;
        }
    }

    RunSummary summary() const { return run_averages(records_, initial_entropy_); }

    /// Writes config.json, metrics.csv, timings.csv, map.txt and summary.json.
    void write_artifacts(const std::filesystem::path& dir) const
    {
        std::filesystem::create_directories(dir);
        const auto open = [&](const char* name) {
            std::ofstream f(dir / name);
            if (!f) throw Error("cannot write " + (dir / name).string());
            return f;
        };
        const auto hash = config_hash(config_);
        {
            auto f = open("config.json");
            f << config_to_json(config_).dump(2) << '\n';
        }
        {
            auto f = open("metrics.csv");
            write_metrics_csv(f, records_, config_.class_names(), hash);
        }
        {
            auto f = open("timings.csv");
            write_timings_csv(f, records_);
        }
        {
            auto f = open("map.txt");
            dump_map(f, map_, config_.class_names());
        }
        {
            auto f = open("summary.json");
            f << summary_to_json(summary(), hash).dump(2) << '\n';
        }
    }

    json summary_to_json(const RunSummary& s, const std::string& hash) const
    {
        json per_class = json::object();
        for (std::size_t k = 0; k < s.avg_per_class.size(); ++k) per_class[config_.class_names()[k]] = s.avg_per_class[k];
        return {{"config_hash", hash},
                {"seed", config_.seed},
                {"mode", to_string(config_.planner.mode)},
                {"class_weights", config_.planner.class_weights},
                {"steps", s.steps},
                {"exploration_complete", complete_},
                {"refused_moves", refused_moves_},
                {"initial_entropy", s.initial_entropy},
                {"final_entropy", s.final_entropy},
                {"avg_information_gain", s.avg_information_gain},
                {"avg_coverage", s.avg_coverage},
                {"avg_per_class_coverage", per_class},
                {"avg_planning_ms", s.avg_planning_ms},
                {"avg_fusion_ms", s.avg_fusion_ms}};
    }

private:
    static std::vector<char> dilate(const GroundTruthGrid& truth)
    {
        const auto& d = truth.dims();
        std::vector<char> out(truth.size(), 0);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const VoxelKey k = key_from_linear(i, d);
            if (!truth.occupied(k)) continue;
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const std::int64_t x = std::int64_t{k.ix} + dx, y = std::int64_t{k.iy} + dy,
                                           z = std::int64_t{k.iz} + dz;
                        if (x < 0 || y < 0 || z < 0 || x >= d[0] || y >= d[1] || z >= d[2]) continue;
                        out[linear_index(VoxelKey{static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                                                  static_cast<std::uint32_t>(z)},
                                         d)] = 1;
                    }
        }
        return out;
    }

    ExperimentConfig config_;
    OctreeMap map_;
    GroundTruthGrid truth_;
    std::vector<char> guard_;
    Rng rng_;
    Pose pose_;
    std::vector<StepRecord> records_;
    double initial_entropy_ = 0.0;
    bool complete_ = false;
    std::size_t refused_moves_ = 0;
    PlanResult last_plan_;
    FusionStats last_fusion_;
};

struct MissionResult {
    RunSummary summary;
    bool exploration_complete = false;
    std::size_t steps = 0;
};

/// Runs a full mission; writes artifacts when `out_dir` is non-empty.
inline MissionResult run_mission(const ExperimentConfig& config, const std::filesystem::path& out_dir = {})
{
    Mission mission(config);
    mission.run();
    if (!out_dir.empty()) mission.write_artifacts(out_dir);
    return {mission.summary(), mission.exploration_complete(), mission.records().size()};
}

struct ComparisonRow {
    std::string mode;                  // mode token as given
    std::vector<std::uint64_t> seeds;
    std::vector<RunSummary> runs;      // one per seed
    RunSummary mean;
};

/// Mean of summaries, column by column.
inline RunSummary mean_summary(const std::vector<RunSummary>& runs)
{
    if (runs.empty()) throw DomainError("mean_summary needs at least one run");
    const auto n = static_cast<double>(runs.size());
    RunSummary m;
    m.avg_per_class.assign(runs.front().avg_per_class.size(), 0.0);
    for (const auto& r : runs) {
        m.steps += r.steps;
        m.avg_information_gain += r.avg_information_gain / n;
        m.avg_coverage += r.avg_coverage / n;
        for (std::size_t k = 0; k < m.avg_per_class.size(); ++k) m.avg_per_class[k] += r.avg_per_class[k] / n;
        m.avg_planning_ms += r.avg_planning_ms / n;
        m.avg_fusion_ms += r.avg_fusion_ms / n;
        m.initial_entropy += r.initial_entropy / n;
        m.final_entropy += r.final_entropy / n;
    }
    m.steps = static_cast<std::size_t>(static_cast<double>(m.steps) / n + 0.5);
    return m;
}

inline void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows,
                                 const std::vector<std::string>& class_names)
{
    os << "mode,runs,avg_information_gain,avg_occupied";
    for (const auto& name : class_names) os << ",avg_occupied_" << csv_column_name(name);
    os << ",avg_planning_ms,avg_fusion_ms\n" << std::setprecision(10);
    for (const auto& r : rows) {
        os << r.mode << ',' << r.runs.size() << ',' << r.mean.avg_information_gain << ',' << r.mean.avg_coverage;
        for (double v : r.mean.avg_per_class) os << ',' << v;
        os << ',' << r.mean.avg_planning_ms << ',' << r.mean.avg_fusion_ms << '\n';
    }
}

/// Runs every (mode, seed) pair and averages per mode. With a non-empty
/// `out_dir`, each run writes its artifacts to <out_dir>/<mode>_seed<N>/ and
/// comparison.csv is rewritten after every completed mode, so a failure
/// leaves the finished rows on disk.
inline std::vector<ComparisonRow> compare_runs(const ExperimentConfig& base, const std::vector<std::string>& modes,
                                               const std::vector<std::uint64_t>& seeds,
                                               const std::filesystem::path& out_dir = {})
{
    if (modes.empty() || seeds.empty()) throw ConfigError("compare needs at least one mode and one seed");
    std::vector<ComparisonRow> rows;
    const auto flush = [&] {
        if (out_dir.empty()) return;
        std::filesystem::create_directories(out_dir);
        std::ofstream f(out_dir / "comparison.csv");
        write_comparison_csv(f, rows, base.class_names());
    };
    for (const auto& token : modes) {
        ExperimentConfig cfg = base;
        apply_mode_token(cfg, token);
        ComparisonRow row;
        row.mode = token;
        for (const auto seed : seeds) {
            cfg.seed = seed;
            std::filesystem::path dir;
            if (!out_dir.empty()) {
                std::string name = token;
                std::replace(name.begin(), name.end(), ':', '-');
                dir = out_dir / (name + "_seed" + std::to_string(seed));
            }
            try {
                row.runs.push_back(run_mission(cfg, dir).summary);
                row.seeds.push_back(seed);
            } catch (...) {
                flush();
                throw;
            }
        }
        row.mean = mean_summary(row.runs);
        rows.push_back(std::move(row));
        flush();
    }
    return rows;
}

} // namespace semnbv

#endif // SEMNBV_RUNNER_HPP
