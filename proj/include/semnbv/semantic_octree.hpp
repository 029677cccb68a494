#ifndef SEMNBV_SEMANTIC_OCTREE_HPP
#define SEMNBV_SEMANTIC_OCTREE_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "semnbv/common.hpp"
#include "semnbv/grid.hpp"
#include "semnbv/point_cloud.hpp"
#include "semnbv/raycast.hpp"

namespace semnbv {

/// Payload of one leaf: occupancy log-odds and per-class log-probabilities.
struct SemanticVoxel {
    double occ_log_odds = 0.0;
    std::vector<double> class_log_probs;

    double occupancy() const { return logistic(occ_log_odds); }
    std::vector<double> class_probs() const
    {
        std::vector<double> p(class_log_probs.size());
        std::transform(class_log_probs.begin(), class_log_probs.end(), p.begin(),
                       [](double l) { return std::exp(l); });
        return p;
    }
};

/// Read-only view of a stored leaf.
struct VoxelView {
    double occ_log_odds;
    std::span<const double> class_log_probs;
};

/// Occupancy entropy of a single voxel.
inline double occupancy_entropy(double p, EntropyForm form = EntropyForm::SingleTerm)
{
    double h = plogp_neg(p);
    if (form == EntropyForm::Binary) h += plogp_neg(1.0 - p);
    return h;
}

/// Floors every entry at `floor` and rescales the remaining mass so the vector
/// sums to one. Entries pinned at the floor stay exactly at the floor.
inline void floor_and_normalize(std::vector<double>& p, double floor)
{
    const std::size_t k = p.size();
    std::vector<bool> pinned(k, false);
    for (std::size_t iter = 0; iter <= k; ++iter) {
        double free_mass = 0.0;
        std::size_t n_pinned = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (pinned[i]) ++n_pinned;
            else free_mass += p[i];
        }
        const double target = 1.0 - floor * static_cast<double>(n_pinned);
        if (!(free_mass > 0.0)) throw DegenerateUpdateError("class distribution has no mass left");
        bool changed = false;
        for (std::size_t i = 0; i < k; ++i) {
            if (pinned[i]) {
                p[i] = floor;
                continue;
            }
            p[i] *= target / free_mass;
            if (p[i] < floor) {
                pinned[i] = true;
                changed = true;
            }
        }
        if (!changed) return;
    }
}

/// Fixed-depth octree over the map bounds. Only leaves carry payloads; inner
/// nodes exist solely to index them. Unstored leaves read as the prior.
class OctreeMap {
public:
    explicit OctreeMap(MapParams params) : params_(std::move(params))
    {
        params_.validate();
        dims_ = grid_dims(params_);
        const auto widest = std::max({dims_[0], dims_[1], dims_[2]});
        depth_ = std::max(1, static_cast<int>(std::bit_width(widest - 1)));
        prior_log_odds_ = logit(params_.prior_occupancy);
        uniform_log_prob_ = -std::log(static_cast<double>(params_.num_classes));
        nodes_.push_back(Node{});
    }

    const MapParams& params() const { return params_; }
    const std::array<std::uint32_t, 3>& dims() const { return dims_; }
    int depth() const { return depth_; }
    std::size_t num_classes() const { return params_.num_classes; }
    std::size_t known_count() const { return leaf_keys_.size(); }
    std::size_t node_count() const { return nodes_.size(); }
    double prior_log_odds() const { return prior_log_odds_; }

    bool contains(const VoxelKey& key) const { return key_in_grid(key, dims_); }

    std::optional<VoxelView> find(const VoxelKey& key) const
    {
        check_key(key);
        const auto leaf = find_leaf(key);
        if (leaf < 0) return std::nullopt;
        return view(static_cast<std::size_t>(leaf));
    }

    SemanticVoxel voxel(const VoxelKey& key) const
    {
        if (const auto v = find(key))
            return {v->occ_log_odds, {v->class_log_probs.begin(), v->class_log_probs.end()}};
        return {prior_log_odds_, std::vector<double>(params_.num_classes, uniform_log_prob_)};
    }

    double occupancy_prob(const VoxelKey& key) const
    {
        const auto v = find(key);
        return logistic(v ? v->occ_log_odds : prior_log_odds_);
    }

    std::vector<double> class_distribution(const VoxelKey& key) const { return voxel(key).class_probs(); }

    bool is_unknown(const VoxelKey& key) const
    {
        return std::abs(occupancy_prob(key) - params_.prior_occupancy) < params_.unknown_band;
    }

    double entropy_occ(const VoxelKey& key) const
    {
        return occupancy_entropy(occupancy_prob(key), params_.entropy_form);
    }

    double entropy_sem_class(const VoxelKey& key, std::size_t k) const
    {
        if (k >= params_.num_classes) throw DomainError("class index out of range");
        const auto v = find(key);
        return plogp_neg(std::exp(v ? v->class_log_probs[k] : uniform_log_prob_));
    }

    double entropy_sem(const VoxelKey& key) const
    {
        double h = 0.0;
        for (std::size_t k = 0; k < params_.num_classes; ++k) h += entropy_sem_class(key, k);
        return h;
    }

    /// Adds `delta` to the voxel's log-odds and clamps to the configured range.
    void add_log_odds(const VoxelKey& key, double delta)
    {
        check_key(key);
        const auto leaf = find_or_create_leaf(key);
        double& l = occ_[leaf];
        l = std::clamp(l + delta, params_.log_odds_min, params_.log_odds_max);
    }

    /// Bayesian occupancy update with a single measurement likelihood.
    SemanticVoxel update_occupancy(const VoxelKey& key, double p_hit)
    {
        if (!(p_hit > 0.0 && p_hit < 1.0))
            throw DomainError("occupancy measurement probability must lie strictly inside (0, 1)");
        add_log_odds(key, logit(p_hit));
        return voxel(key);
    }

    /// Categorical Bayes update: posterior proportional to measurement times prior.
    SemanticVoxel update_semantics(const VoxelKey& key, std::span<const double> class_dist)
    {
        check_key(key);
        const std::size_t k = params_.num_classes;
        validate_simplex({class_dist.begin(), class_dist.end()}, k, 1e-6);

        std::vector<double> meas(class_dist.begin(), class_dist.end());
        std::vector<double> post(k);
        const auto existing = find_leaf(key);
        for (std::size_t i = 0; i < k; ++i)
            post[i] = existing < 0 ? 1.0 / static_cast<double>(k) : std::exp(class_lp_[existing * k + i]);

        if (params_.class_floor > 0.0) {
            floor_and_normalize(meas, params_.class_floor);
            floor_and_normalize(post, params_.class_floor);
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            post[i] *= meas[i];
            sum += post[i];
        }
        if (!(sum > 0.0)) throw DegenerateUpdateError("semantic update annihilates every class");
        for (double& v : post) v /= sum;
        if (params_.class_floor > 0.0) floor_and_normalize(post, params_.class_floor);

        const auto leaf = find_or_create_leaf(key);
        for (std::size_t i = 0; i < k; ++i) class_lp_[leaf * k + i] = std::log(post[i]);
        return voxel(key);
    }

    /// Visits stored leaves in insertion order: f(const VoxelKey&, const VoxelView&).
    template <class F>
    void for_each_known(F&& f) const
    {
        for (std::size_t i = 0; i < leaf_keys_.size(); ++i) f(leaf_keys_[i], view(i));
    }

    std::vector<VoxelKey> known_keys_sorted() const
    {
        std::vector<VoxelKey> keys = leaf_keys_;
        std::sort(keys.begin(), keys.end());
        return keys;
    }

private:
    struct Node {
        std::array<std::int32_t, 8> child;
        Node() { child.fill(-1); }
    };

    void check_key(const VoxelKey& key) const
    {
        if (!key_in_grid(key, dims_)) throw OutOfBoundsError("voxel key outside the map grid");
    }

    static int child_slot(const VoxelKey& key, int level)
    {
        return static_cast<int>(((key.ix >> level) & 1u) | (((key.iy >> level) & 1u) << 1) |
                                (((key.iz >> level) & 1u) << 2));
    }

    std::int64_t find_leaf(const VoxelKey& key) const
    {
        std::size_t n = 0;
        for (int level = depth_ - 1; level >= 0; --level) {
            const std::int32_t next = nodes_[n].child[child_slot(key, level)];
            if (next < 0) return -1;
            if (level == 0) return next;
            n = static_cast<std::size_t>(next);
        }
        return -1;
    }

    std::size_t find_or_create_leaf(const VoxelKey& key)
    {
        std::size_t n = 0;
        for (int level = depth_ - 1; level >= 0; --level) {
            const int slot = child_slot(key, level);
            std::int32_t next = nodes_[n].child[slot];
            if (next < 0) {
                if (level == 0) {
                    next = static_cast<std::int32_t>(leaf_keys_.size());
                    leaf_keys_.push_back(key);
                    occ_.push_back(prior_log_odds_);
                    class_lp_.insert(class_lp_.end(), params_.num_classes, uniform_log_prob_);
                } else {
                    next = static_cast<std::int32_t>(nodes_.size());
                    nodes_.emplace_back();
                }
                nodes_[n].child[slot] = next;
            }
            if (level == 0) return static_cast<std::size_t>(next);
            n = static_cast<std::size_t>(next);
        }
        return 0; // unreachable, depth_ >= 1
    }

    VoxelView view(std::size_t leaf) const
    {
        const std::size_t k = params_.num_classes;
        return {occ_[leaf], std::span<const double>(class_lp_.data() + leaf * k, k)};
    }

    MapParams params_;
    std::array<std::uint32_t, 3> dims_{};
    int depth_ = 1;
    double prior_log_odds_ = 0.0;
    double uniform_log_prob_ = 0.0;

    std::vector<Node> nodes_;
    std::vector<VoxelKey> leaf_keys_;
    std::vector<double> occ_;
    std::vector<double> class_lp_; // num_classes entries per leaf
};

// ---------------------------------------------------------------------------
// Depth sensor model

/// Probability mass of a normal N(z, (lambda_a z^2)^2) within one voxel
/// around the measured range z: F(z + d/2) - F(z - d/2) = erf(d / (2 sqrt2 sigma)).
inline double endpoint_hit_probability(double measured_range, double axial_scale, double resolution)
{
    if (!(measured_range > 0.0) || !(axial_scale > 0.0) || !(resolution > 0.0))
        throw DomainError("endpoint_hit_probability requires positive range, noise scale and resolution");
    const double sigma = axial_scale * measured_range * measured_range;
    return std::erf(resolution / (2.0 * std::numbers::sqrt2 * sigma));
}

/// Log-odds increment for an endpoint hit. Uses erf/erfc directly so ranges
/// with a near-certain hit do not round to p = 1. A zero noise scale is the
/// noiseless limit and saturates to the full clamp span.
inline double endpoint_hit_log_odds(double measured_range, double axial_scale, const MapParams& params)
{
    const double saturate = params.log_odds_max - params.log_odds_min;
    if (axial_scale <= 0.0) return saturate;
    const double sigma = axial_scale * measured_range * measured_range;
    const double u = params.resolution / (2.0 * std::numbers::sqrt2 * sigma);
    const double miss = std::erfc(u);
    if (miss <= 0.0) return saturate;
    return std::clamp(std::log(std::erf(u)) - std::log(miss), -saturate, saturate);
}

struct FusionStats {
    std::size_t hit_updates = 0;
    std::size_t free_updates = 0;
    std::size_t clipped_rays = 0;
};

/// Integrates one semantic scan taken at `origin`.
///
/// Per point: the endpoint voxel receives the range-dependent hit update and a
/// categorical update with the point's class simplex; every voxel traversed on
/// the way there receives a free update with `p_free`. Points outside the map
/// only contribute free space up to the boundary.
///
/// The endpoint voxel is resolved a hair past the measured point along the
/// ray, so returns lying exactly on a voxel face land in the surface voxel
/// rather than the free one in front of it.
inline FusionStats integrate_scan(OctreeMap& map, const Vec3& origin, const SemanticPointCloud& cloud,
                                  double axial_scale)
{
    const MapParams& params = map.params();
    if (!params.bounds.contains(origin)) throw OutOfBoundsError("scan origin lies outside the map bounds");
    const double free_delta = logit(params.p_free);
    const double nudge = 1e-6 * params.resolution;

    FusionStats stats;
    for (const auto& pt : cloud.points) {
        if (pt.range <= 0.0) continue;
        const Vec3 dir = pt.position / pt.position.norm();
        const Vec3 end = origin + pt.position + nudge * dir;
        const auto end_key = try_key_of(end, params);

        if (end_key) {
            map.add_log_odds(*end_key, endpoint_hit_log_odds(pt.range, axial_scale, params));
            map.update_semantics(*end_key, pt.class_probs);
            ++stats.hit_updates;
        } else {
            ++stats.clipped_rays;
        }

        march_segment(params, origin, end, [&](const VoxelKey& k) {
            if (end_key && k == *end_key) return false;
            map.add_log_odds(k, free_delta);
            ++stats.free_updates;
            return true;
        });
    }
    return stats;
}

} // namespace semnbv

#endif // SEMNBV_SEMANTIC_OCTREE_HPP
