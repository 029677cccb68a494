#ifndef SEMNBV_RAYCAST_HPP
#define SEMNBV_RAYCAST_HPP

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "semnbv/grid.hpp"

namespace semnbv {

/// Clips segment a->b to the closed box. Returns the parameter interval
/// [t0, t1] within [0, 1], or nullopt if the segment misses the box.
inline std::optional<std::pair<double, double>> clip_segment(const Vec3& a, const Vec3& b, const Box3& box)
{
    double t0 = 0.0;
    double t1 = 1.0;
    const Vec3 d = b - a;
    for (int axis = 0; axis < 3; ++axis) {
        if (d[axis] == 0.0) {
            if (a[axis] < box.min[axis] || a[axis] > box.max[axis]) return std::nullopt;
            continue;
        }
        double ta = (box.min[axis] - a[axis]) / d[axis];
        double tb = (box.max[axis] - a[axis]) / d[axis];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
    }
    return std::make_pair(t0, t1);
}

/// Incremental grid traversal (Amanatides & Woo) of the segment a->b clipped
/// to the map bounds. Visits every crossed cell once, in order, including the
/// cells containing both (clipped) ends. `visit(const VoxelKey&)` returns false
/// to stop early.
template <class Visit>
void march_segment(const MapParams& params, const Vec3& a, const Vec3& b, Visit&& visit)
{
    const auto clipped = clip_segment(a, b, params.bounds);
    if (!clipped) return;
    const auto dims = grid_dims(params);

    const Vec3 ga = (a + clipped->first * (b - a) - params.bounds.min) / params.resolution;
    const Vec3 gb = (a + clipped->second * (b - a) - params.bounds.min) / params.resolution;
    const Vec3 d = gb - ga;

    std::array<std::int64_t, 3> cell{};
    std::array<std::int64_t, 3> step{};
    std::array<double, 3> t_max{};
    std::array<double, 3> t_delta{};
    constexpr double inf = std::numeric_limits<double>::infinity();

    for (int axis = 0; axis < 3; ++axis) {
        const auto hi = static_cast<std::int64_t>(dims[axis]) - 1;
        cell[axis] = std::clamp(static_cast<std::int64_t>(std::floor(ga[axis])), std::int64_t{0}, hi);
        if (d[axis] > 0.0) {
            step[axis] = 1;
            t_max[axis] = (static_cast<double>(cell[axis] + 1) - ga[axis]) / d[axis];
            t_delta[axis] = 1.0 / d[axis];
        } else if (d[axis] < 0.0) {
            step[axis] = -1;
            t_max[axis] = (static_cast<double>(cell[axis]) - ga[axis]) / d[axis];
            t_delta[axis] = -1.0 / d[axis];
        } else {
            step[axis] = 0;
            t_max[axis] = inf;
            t_delta[axis] = inf;
        }
    }

    for (;;) {
        const VoxelKey key{static_cast<std::uint32_t>(cell[0]), static_cast<std::uint32_t>(cell[1]),
                           static_cast<std::uint32_t>(cell[2])};
        if (!visit(key)) return;

        int axis = 0;
        if (t_max[1] < t_max[axis]) axis = 1;
        if (t_max[2] < t_max[axis]) axis = 2;
        if (!(t_max[axis] < 1.0)) return;

        cell[axis] += step[axis];
        if (cell[axis] < 0 || cell[axis] >= static_cast<std::int64_t>(dims[axis])) return;
        t_max[axis] += t_delta[axis];
    }
}

/// Voxels crossed by the segment origin->endpoint, in order, excluding the
/// voxel that contains the endpoint. Parts of the segment outside the map are
/// ignored.
inline std::vector<VoxelKey> raycast_traverse(const Vec3& origin, const Vec3& endpoint, const MapParams& params)
{
    std::vector<VoxelKey> keys;
    if (origin == endpoint) return keys;
    march_segment(params, origin, endpoint, [&](const VoxelKey& k) {
        keys.push_back(k);
        return true;
    });
    if (const auto end_key = try_key_of(endpoint, params); end_key && !keys.empty() && keys.back() == *end_key)
        keys.pop_back();
    return keys;
}

} // namespace semnbv

#endif // SEMNBV_RAYCAST_HPP
