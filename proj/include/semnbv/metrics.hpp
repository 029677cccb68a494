#ifndef SEMNBV_METRICS_HPP
#define SEMNBV_METRICS_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "semnbv/common.hpp"
#include "semnbv/grid.hpp"
#include "semnbv/semantic_octree.hpp"

namespace semnbv {

struct StepRecord {
    std::size_t step = 0;
    double entropy = 0.0;                  // nats, over the evaluation bounds
    std::size_t occupied = 0;
    std::vector<std::size_t> per_class;    // argmax split of `occupied`
    double planning_ms = 0.0;
    double fusion_ms = 0.0;
    Pose pose;
};

/// Inclusive key ranges of the voxels whose centers lie in `region`.
struct KeyRange {
    std::array<std::uint32_t, 3> lo{};
    std::array<std::uint32_t, 3> hi{};   // exclusive
    bool empty = true;

    bool contains(const VoxelKey& k) const
    {
        return !empty && k.ix >= lo[0] && k.ix < hi[0] && k.iy >= lo[1] && k.iy < hi[1] && k.iz >= lo[2] &&
               k.iz < hi[2];
    }
    std::size_t count() const
    {
        if (empty) return 0;
        return static_cast<std::size_t>(hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
    }
};

inline KeyRange keys_with_center_in(const MapParams& params, const Box3& region)
{
    const auto dims = grid_dims(params);
    KeyRange r;
    r.empty = false;
    for (int a = 0; a < 3; ++a) {
        // center_i = min + (i + 0.5) * res lies in [region.min, region.max)
        const double first = std::ceil((region.min[a] - params.bounds.min[a]) / params.resolution - 0.5);
        const double last = std::ceil((region.max[a] - params.bounds.min[a]) / params.resolution - 0.5);
        const double top = static_cast<double>(dims[a]);
        const double lo = std::clamp(first, 0.0, top);
        const double hi = std::clamp(last, 0.0, top);
        if (hi <= lo) {
            r.empty = true;
            return r;
        }
        r.lo[a] = static_cast<std::uint32_t>(lo);
        r.hi[a] = static_cast<std::uint32_t>(hi);
    }
    return r;
}

/// Sum of per-voxel occupancy entropy over the evaluation region. Voxels never
/// observed contribute the prior entropy.
inline double total_entropy(const OctreeMap& map, const Box3& region)
{
    const auto& params = map.params();
    const KeyRange range = keys_with_center_in(params, region);
    const double prior_h = occupancy_entropy(params.prior_occupancy, params.entropy_form);
    double sum = 0.0;
    std::size_t known = 0;
    map.for_each_known([&](const VoxelKey& k, const VoxelView& v) {
        if (!range.contains(k)) return;
        sum += occupancy_entropy(logistic(v.occ_log_odds), params.entropy_form);
        ++known;
    });
    return sum + static_cast<double>(range.count() - known) * prior_h;
}

inline double total_entropy(const OctreeMap& map) { return total_entropy(map, map.params().bounds); }

/// Most likely class of a stored voxel; lowest index wins ties.
inline std::size_t argmax_class(const VoxelView& v)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.class_log_probs.size(); ++i)
        if (v.class_log_probs[i] > v.class_log_probs[best]) best = i;
    return best;
}

struct Coverage {
    std::size_t total = 0;
    std::vector<std::size_t> per_class;
};

/// Voxels in the region with occupancy above `occupancy_threshold`, in total
/// and split by argmax class.
inline Coverage surface_coverage(const OctreeMap& map, double occupancy_threshold, const Box3& region)
{
    if (!(occupancy_threshold > 0.0 && occupancy_threshold < 1.0))
        throw DomainError("occupancy threshold must lie in (0, 1)");
    const KeyRange range = keys_with_center_in(map.params(), region);
    const double l_occ = logit(occupancy_threshold);
    Coverage c;
    c.per_class.assign(map.num_classes(), 0);
    map.for_each_known([&](const VoxelKey& k, const VoxelView& v) {
        if (!range.contains(k) || !(v.occ_log_odds > l_occ)) return;
        ++c.total;
        ++c.per_class[argmax_class(v)];
    });
    return c;
}

inline Coverage surface_coverage(const OctreeMap& map, double occupancy_threshold)
{
    return surface_coverage(map, occupancy_threshold, map.params().bounds);
}

inline std::vector<std::size_t> per_class_coverage(const OctreeMap& map, double occupancy_threshold,
                                                   const Box3& region)
{
    return surface_coverage(map, occupancy_threshold, region).per_class;
}

/// Fraction of `keys` whose occupancy exceeds the threshold.
inline double fraction_occupied(const OctreeMap& map, std::span<const VoxelKey> keys, double occupancy_threshold)
{
    if (keys.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& k : keys)
        if (map.occupancy_prob(k) > occupancy_threshold) ++n;
    return static_cast<double>(n) / static_cast<double>(keys.size());
}

struct RunSummary {
    std::size_t steps = 0;
    double avg_information_gain = 0.0;   // nats per step
    double avg_coverage = 0.0;
    std::vector<double> avg_per_class;
    double avg_planning_ms = 0.0;
    double avg_fusion_ms = 0.0;
    double initial_entropy = 0.0;
    double final_entropy = 0.0;
};

/// Per-step entropy reduction: gain(t) = H(t-1) - H(t) with H(-1) the
/// entropy of the fresh map.
inline std::vector<double> information_gains(std::span<const StepRecord> records, double initial_entropy)
{
    std::vector<double> g;
    g.reserve(records.size());
    double prev = initial_entropy;
    for (const auto& r : records) {
        g.push_back(prev - r.entropy);
        prev = r.entropy;
    }
    return g;
}

inline RunSummary run_averages(std::span<const StepRecord> records, double initial_entropy)
{
    if (records.empty()) throw DomainError("run_averages needs at least one step record");
    const auto n = static_cast<double>(records.size());
    RunSummary s;
    s.steps = records.size();
    s.initial_entropy = initial_entropy;
    s.final_entropy = records.back().entropy;
    s.avg_per_class.assign(records.front().per_class.size(), 0.0);
    for (double g : information_gains(records, initial_entropy)) s.avg_information_gain += g;
    for (const auto& r : records) {
        s.avg_coverage += static_cast<double>(r.occupied);
        for (std::size_t k = 0; k < s.avg_per_class.size() && k < r.per_class.size(); ++k)
            s.avg_per_class[k] += static_cast<double>(r.per_class[k]);
        s.avg_planning_ms += r.planning_ms;
        s.avg_fusion_ms += r.fusion_ms;
    }
    s.avg_information_gain /= n;
    s.avg_coverage /= n;
    for (double& v : s.avg_per_class) v /= n;
    s.avg_planning_ms /= n;
    s.avg_fusion_ms /= n;
    return s;
}

// ---------------------------------------------------------------------------
// CSV output. The metrics file holds only deterministic columns; wall-clock
// timings go to a separate file so identical runs stay byte-identical.

inline std::string csv_column_name(const std::string& s)
{
    std::string out;
    for (char c : s) out += (c == ' ' || c == ',') ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline void write_metrics_csv(std::ostream& os, std::span<const StepRecord> records,
                              const std::vector<std::string>& class_names, const std::string& config_hash)
{
    os << "# config_hash=" << config_hash << '\n';
    os << "step,entropy,occupied";
    for (const auto& name : class_names) os << ",occupied_" << csv_column_name(name);
    os << ",x,y,z,yaw\n";
    os << std::setprecision(17);
    for (const auto& r : records) {
        os << r.step << ',' << r.entropy << ',' << r.occupied;
        for (std::size_t c : r.per_class) os << ',' << c;
        os << ',' << r.pose.position.x() << ',' << r.pose.position.y() << ',' << r.pose.position.z() << ','
           << r.pose.yaw << '\n';
    }
}

inline void write_timings_csv(std::ostream& os, std::span<const StepRecord> records)
{
    os << "step,planning_ms,fusion_ms\n" << std::fixed << std::setprecision(3);
    for (const auto& r : records) os << r.step << ',' << r.planning_ms << ',' << r.fusion_ms << '\n';
}

} // namespace semnbv

#endif // SEMNBV_METRICS_HPP
