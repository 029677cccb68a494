#ifndef SEMNBV_NBV_PLANNER_HPP
#define SEMNBV_NBV_PLANNER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "semnbv/common.hpp"
#include "semnbv/grid.hpp"
#include "semnbv/raycast.hpp"
#include "semnbv/semantic_octree.hpp"
#include "semnbv/sensor_sim.hpp"
#include "semnbv/world_sim.hpp"

namespace semnbv {

struct InvalidRootError : Error {
    using Error::Error;
};

enum class GainMode {
    BaselineUnknownCount,   // 1 for unknown voxels, 0 otherwise
    GeometricEntropy,       // occupancy entropy
    SemanticWeighted,       // occupancy entropy times class-weighted semantic entropy
};

inline std::string to_string(GainMode m)
{
    switch (m) {
    case GainMode::BaselineUnknownCount: return "baseline";
    case GainMode::GeometricEntropy: return "geometric";
    case GainMode::SemanticWeighted: return "semantic";
    }
    return "?";
}

inline std::optional<GainMode> gain_mode_from_string(const std::string& s)
{
    if (s == "baseline") return GainMode::BaselineUnknownCount;
    if (s == "geometric") return GainMode::GeometricEntropy;
    if (s == "semantic") return GainMode::SemanticWeighted;
    return std::nullopt;
}

struct PlannerParams {
    std::size_t tree_nodes = 60;
    std::size_t sample_budget = 1000;
    double step_length = 1.5;
    // Rays used to evaluate view gain; field of view normally copied from the sensing camera.
    CameraModel gain_camera{std::numbers::pi / 2.0, std::numbers::pi / 3.0, 24, 18, 8.0};
    double distance_weight = 0.25;
    GainMode mode = GainMode::SemanticWeighted;
    std::vector<double> class_weights{0.2, 0.2, 0.2, 0.2, 0.2};
    Box3 workspace{Vec3::Zero(), Vec3::Constant(4.0)};
    double robot_radius = 0.5;
    double gain_threshold = 1e-3;
    std::size_t max_retries = 3;
    double occupancy_threshold = 0.7;
    // Use I = -H for the geometric gain, exactly as printed, instead of +H.
    bool paper_literal_sign = false;

    void validate(std::size_t num_classes) const
    {
        if (tree_nodes < 2) throw ConfigError("planner tree budget must be at least 2 nodes");
        if (sample_budget < tree_nodes) throw ConfigError("planner sample budget must be >= tree budget");
        if (!(step_length > 0.0)) throw ConfigError("planner step length must be positive");
        gain_camera.validate();
        if (!(distance_weight >= 0.0)) throw ConfigError("distance weight must be non-negative");
        if (class_weights.size() != num_classes) throw ConfigError("class weight vector must have one entry per class");
        double sum = 0.0;
        for (double w : class_weights) {
            if (!(w >= 0.0)) throw ConfigError("class weights must be non-negative");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("class weights must sum to 1");
        if (!workspace.valid()) throw ConfigError("planner workspace is empty");
        if (!(robot_radius >= 0.0)) throw ConfigError("robot radius must be non-negative");
        if (!(gain_threshold >= 0.0)) throw ConfigError("gain threshold must be non-negative");
        if (!(occupancy_threshold > 0.0 && occupancy_threshold < 1.0))
            throw ConfigError("occupancy threshold must lie in (0, 1)");
    }
};

struct VisibleVoxel {
    VoxelKey key;
    bool terminal = false;
};

/// Voxels seen from `view` by the camera's ray grid. Each ray marches voxel by
/// voxel up to max_range or the map limit and stops after the first voxel whose
/// occupancy exceeds `occupancy_threshold` (reported as terminal). Every voxel
/// appears once; output is ordered by linear grid index.
inline std::vector<VisibleVoxel> visible_set(const OctreeMap& map, const Pose& view, const CameraModel& camera,
                                             double max_range, double occupancy_threshold)
{
    const auto& params = map.params();
    const auto& dims = map.dims();
    const double blocking = logit(occupancy_threshold);

    // (linear index << 1) | terminal
    std::vector<std::size_t> hits;
    hits.reserve(camera.ray_count() * 16);
    for (std::size_t r = 0; r < camera.rows; ++r) {
        for (std::size_t c = 0; c < camera.cols; ++c) {
            const Vec3 dir = camera.ray_direction(view.yaw, c, r).normalized();
            march_segment(params, view.position, view.position + max_range * dir, [&](const VoxelKey& k) {
                const auto v = map.find(k);
                const bool terminal = v && v->occ_log_odds > blocking;
                hits.push_back((linear_index(k, dims) << 1) | (terminal ? 1u : 0u));
                return !terminal;
            });
        }
    }
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());

    std::vector<VisibleVoxel> out;
    out.reserve(hits.size());
    for (std::size_t h : hits) out.push_back({key_from_linear(h >> 1, dims), (h & 1u) != 0});
    return out;
}

/// Per-voxel information gain evaluated directly from a stored (or absent) leaf.
class VoxelGainEvaluator {
public:
    VoxelGainEvaluator(const OctreeMap& map, GainMode mode, std::vector<double> weights, bool literal_sign = false)
        : map_(map), mode_(mode), weights_(std::move(weights)), literal_sign_(literal_sign)
    {
        if (weights_.size() != map.num_classes()) throw DomainError("class weight vector has wrong length");
        const auto k = static_cast<double>(map.num_classes());
        const double h_occ = occupancy_entropy(map.params().prior_occupancy, map.params().entropy_form);
        double weighted = 0.0;
        for (double w : weights_) weighted += w * plogp_neg(1.0 / k);
        unknown_gain_ = evaluate_from(h_occ, weighted, true);
    }

    double operator()(const VoxelKey& key) const
    {
        const auto v = map_.find(key);
        if (!v) return unknown_gain_;
        const auto& params = map_.params();
        const double p = logistic(v->occ_log_odds);
        const bool unknown = std::abs(p - params.prior_occupancy) < params.unknown_band;
        if (mode_ == GainMode::BaselineUnknownCount) return unknown ? 1.0 : 0.0;
        const double h_occ = occupancy_entropy(p, params.entropy_form);
        double weighted = 0.0;
        if (mode_ == GainMode::SemanticWeighted) {
            for (std::size_t i = 0; i < weights_.size(); ++i)
                if (weights_[i] != 0.0) weighted += weights_[i] * plogp_neg(std::exp(v->class_log_probs[i]));
        }
        return evaluate_from(h_occ, weighted, unknown);
    }

    double unknown_gain() const { return unknown_gain_; }

private:
    double evaluate_from(double h_occ, double weighted_sem, bool unknown) const
    {
        switch (mode_) {
        case GainMode::BaselineUnknownCount: return unknown ? 1.0 : 0.0;
        case GainMode::GeometricEntropy: return literal_sign_ ? -h_occ : h_occ;
        case GainMode::SemanticWeighted: return h_occ * weighted_sem;
        }
        return 0.0;
    }

    const OctreeMap& map_;
    GainMode mode_;
    std::vector<double> weights_;
    bool literal_sign_;
    double unknown_gain_ = 0.0;
};

inline double voxel_gain(const OctreeMap& map, const VoxelKey& key, GainMode mode, const std::vector<double>& weights,
                         bool literal_sign = false)
{
    return VoxelGainEvaluator(map, mode, weights, literal_sign)(key);
}

/// Accumulated branch gain: parent + S * exp(-lambda * segment_length).
inline double node_gain(double parent_gain, double visible_gain_sum, double segment_length, double distance_weight)
{
    return parent_gain + visible_gain_sum * std::exp(-distance_weight * segment_length);
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b)
{
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

/// True iff no voxel for which `blocked(key)` holds is crossed by the segment
/// or has its center within `radius` of it.
template <class Blocked>
bool segment_clear(const MapParams& params, const Vec3& from, const Vec3& to, double radius, Blocked&& blocked)
{
    bool hit = false;
    march_segment(params, from, to, [&](const VoxelKey& k) {
        hit = blocked(k);
        return !hit;
    });
    if (hit) return false;
    if (radius <= 0.0) return true;

    const auto dims = grid_dims(params);
    std::array<std::uint32_t, 3> lo{};
    std::array<std::uint32_t, 3> hi{};
    for (int a = 0; a < 3; ++a) {
        const double mn = (std::min(from[a], to[a]) - radius - params.bounds.min[a]) / params.resolution;
        const double mx = (std::max(from[a], to[a]) + radius - params.bounds.min[a]) / params.resolution;
        const double top = static_cast<double>(dims[a]) - 1.0;
        if (mx < 0.0 || mn > top + 1.0) return true;
        lo[a] = static_cast<std::uint32_t>(std::clamp(std::floor(mn), 0.0, top));
        hi[a] = static_cast<std::uint32_t>(std::clamp(std::floor(mx), 0.0, top));
    }
    for (std::uint32_t z = lo[2]; z <= hi[2]; ++z)
        for (std::uint32_t y = lo[1]; y <= hi[1]; ++y)
            for (std::uint32_t x = lo[0]; x <= hi[0]; ++x) {
                const VoxelKey k{x, y, z};
                if (blocked(k) && point_segment_distance(center_of(k, params), from, to) <= radius) return false;
            }
    return true;
}

/// Only voxels known to be occupied (above the threshold) block; unknown
/// space is treated as traversable.
inline bool collision_free(const OctreeMap& map, const Vec3& from, const Vec3& to, double radius,
                           double occupancy_threshold)
{
    if (map.known_count() == 0) return true;
    const double blocking = logit(occupancy_threshold);
    return segment_clear(map.params(), from, to, radius, [&](const VoxelKey& k) {
        const auto v = map.find(k);
        return v && v->occ_log_odds > blocking;
    });
}

struct RrtNode {
    Pose config;
    std::optional<std::size_t> parent;
    double gain = 0.0;         // accumulated G along the branch
    double cost = 0.0;         // path length from the root, meters
    double visible_gain = 0.0; // S at this node
};

struct RrtTree {
    std::vector<RrtNode> nodes;
    std::size_t samples_drawn = 0;

    std::size_t best_index() const
    {
        std::size_t best = 0;
        for (std::size_t i = 1; i < nodes.size(); ++i)
            if (nodes[i].gain > nodes[best].gain) best = i;
        return best;
    }
};

/// Sum of per-voxel gains over everything visible from `view`.
inline double view_gain(const OctreeMap& map, const Pose& view, const PlannerParams& params)
{
    const VoxelGainEvaluator gain(map, params.mode, params.class_weights, params.paper_literal_sign);
    double sum = 0.0;
    for (const auto& v : visible_set(map, view, params.gain_camera, params.gain_camera.max_range,
                                     params.occupancy_threshold))
        sum += gain(v.key);
    return sum;
}

/// Grows an RRT from `root`. Each draw consumes four uniforms from `rng`
/// (x, y, z, yaw); growth stops at params.tree_nodes nodes or after
/// params.sample_budget draws.
inline RrtTree build_tree(const OctreeMap& map, const Pose& root, const PlannerParams& params, Rng& rng)
{
    if (!map.params().bounds.contains(root.position) ||
        !collision_free(map, root.position, root.position, params.robot_radius, params.occupancy_threshold))
        throw InvalidRootError("planner root pose is in collision or outside the map");

    const VoxelGainEvaluator gain(map, params.mode, params.class_weights, params.paper_literal_sign);
    const auto& ws = params.workspace;
    std::uniform_real_distribution<double> ux(ws.min.x(), ws.max.x());
    std::uniform_real_distribution<double> uy(ws.min.y(), ws.max.y());
    std::uniform_real_distribution<double> uz(ws.min.z(), ws.max.z());
    std::uniform_real_distribution<double> uyaw(-std::numbers::pi, std::numbers::pi);

    RrtTree tree;
    tree.nodes.push_back(RrtNode{root, std::nullopt, 0.0, 0.0, 0.0});
    while (tree.nodes.size() < params.tree_nodes && tree.samples_drawn < params.sample_budget) {
        ++tree.samples_drawn;
        const Vec3 sample(ux(rng), uy(rng), uz(rng));
        const double yaw = uyaw(rng);

        std::size_t nearest = 0;
        double nearest_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const double d2 = (tree.nodes[i].config.position - sample).squaredNorm();
            if (d2 < nearest_d2) {
                nearest_d2 = d2;
                nearest = i;
            }
        }
        const Vec3 from = tree.nodes[nearest].config.position;
        const double dist = std::sqrt(nearest_d2);
        if (dist < 1e-9) continue;
        const Vec3 to = from + (sample - from) * std::min(1.0, params.step_length / dist);
        if (!map.params().bounds.contains(to)) continue;
        if (!collision_free(map, from, to, params.robot_radius, params.occupancy_threshold)) continue;

        const Pose config(to, yaw);
        double s = 0.0;
        for (const auto& v :
             visible_set(map, config, params.gain_camera, params.gain_camera.max_range, params.occupancy_threshold))
            s += gain(v.key);
        const double length = (to - from).norm();
        const auto& parent = tree.nodes[nearest];
        tree.nodes.push_back(RrtNode{config, nearest, node_gain(parent.gain, s, length, params.distance_weight),
                                     parent.cost + length, s});
    }
    return tree;
}

struct PlanResult {
    std::optional<Pose> next;   // nullopt: exploration complete
    double best_gain = 0.0;
    std::size_t best_index = 0;
    std::size_t tree_size = 0;
    std::size_t attempts = 0;

    bool exploration_complete() const { return !next.has_value(); }
};

/// One receding-horizon step: grow a tree, pick the highest-gain node (lowest
/// index on ties) and return the first pose on the path to it. Trees whose
/// best gain falls below the threshold are regrown up to max_retries times.
inline PlanResult plan_step(const OctreeMap& map, const Pose& current, const PlannerParams& params, Rng& rng)
{
    PlanResult result;
    for (std::size_t attempt = 0; attempt <= params.max_retries; ++attempt) {
        const RrtTree tree = build_tree(map, current, params, rng);
        const std::size_t best = tree.best_index();
        result.attempts = attempt + 1;
        result.best_index = best;
        result.best_gain = tree.nodes[best].gain;
        result.tree_size = tree.nodes.size();
        if (best == 0 || !(result.best_gain >= params.gain_threshold)) continue;

        std::size_t n = best;
        while (*tree.nodes[n].parent != 0) n = *tree.nodes[n].parent;
        result.next = tree.nodes[n].config;
        return result;
    }
    return result;
}

} // namespace semnbv

#endif // SEMNBV_NBV_PLANNER_HPP
