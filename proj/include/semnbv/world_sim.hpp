#ifndef SEMNBV_WORLD_SIM_HPP
#define SEMNBV_WORLD_SIM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semnbv/common.hpp"
#include "semnbv/grid.hpp"

namespace semnbv {

struct LabeledPrimitive {
    Box3 box;
    std::size_t class_index = 0;
    std::string name;
};

/// Labeled box world used as the simulation ground truth.
struct GroundTruthWorld {
    Box3 bounds;
    std::vector<std::string> class_names;
    std::vector<LabeledPrimitive> primitives;

    std::size_t num_classes() const { return class_names.size(); }

    std::optional<std::size_t> class_index(const std::string& name) const
    {
        for (std::size_t i = 0; i < class_names.size(); ++i)
            if (class_names[i] == name) return i;
        return std::nullopt;
    }

    void validate() const
    {
        if (!bounds.valid()) throw ConfigError("world bounds are empty");
        if (class_names.empty()) throw ConfigError("world has no classes");
        for (const auto& p : primitives) {
            if (!p.box.valid()) throw ConfigError("primitive '" + p.name + "' has max corner <= min corner");
            if (p.class_index >= class_names.size())
                throw ConfigError("primitive '" + p.name + "' has an invalid class");
            if (!bounds.contains(p.box)) throw ConfigError("primitive '" + p.name + "' leaves the world bounds");
        }
    }
};

struct CameraModel {
    double hfov = std::numbers::pi / 2.0;    // radians
    double vfov = std::numbers::pi / 3.0;    // radians
    std::size_t cols = 64;
    std::size_t rows = 48;
    double max_range = 8.0;

    std::size_t ray_count() const { return cols * rows; }

    void validate() const
    {
        if (!(hfov > 0.0 && hfov < std::numbers::pi) || !(vfov > 0.0 && vfov < std::numbers::pi))
            throw ConfigError("camera field of view must lie in (0, pi)");
        if (cols < 1 || rows < 1) throw ConfigError("camera ray grid must be at least 1x1");
        if (!(max_range > 0.0)) throw ConfigError("camera max range must be positive");
    }

    /// Unit direction of ray (col, row) for a sensor with the given heading.
    /// Column 0 is the leftmost ray, row 0 the topmost; the grid is regular in
    /// azimuth and elevation and centered on the optical axis.
    Vec3 ray_direction(double yaw, std::size_t col, std::size_t row) const
    {
        const double az = hfov * (0.5 - (static_cast<double>(col) + 0.5) / static_cast<double>(cols));
        const double el = vfov * (0.5 - (static_cast<double>(row) + 0.5) / static_cast<double>(rows));
        const double heading = yaw + az;
        return {std::cos(el) * std::cos(heading), std::cos(el) * std::sin(heading), std::sin(el)};
    }
};

struct RayHit {
    double range = 0.0;
    std::size_t class_index = 0;
    std::size_t primitive = 0;
};

/// Parametric entry/exit of a ray against a box (slab method).
inline std::optional<std::pair<double, double>> ray_box(const Vec3& origin, const Vec3& dir, const Box3& box)
{
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (origin[a] < box.min[a] || origin[a] > box.max[a]) return std::nullopt;
            continue;
        }
        double t0 = (box.min[a] - origin[a]) / dir[a];
        double t1 = (box.max[a] - origin[a]) / dir[a];
        if (t0 > t1) std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far) return std::nullopt;
    }
    return std::make_pair(t_near, t_far);
}

/// Nearest positive surface crossing along the ray within `max_range`. Ties go
/// to the primitive listed first. A ray starting inside a box reports the
/// box's exit face.
inline std::optional<RayHit> ray_intersect(const GroundTruthWorld& world, const Vec3& origin, const Vec3& dir,
                                           double max_range = std::numeric_limits<double>::infinity())
{
    if (std::abs(dir.norm() - 1.0) > 1e-9) throw DomainError("ray direction must be a unit vector");
    std::optional<RayHit> best;
    for (std::size_t i = 0; i < world.primitives.size(); ++i) {
        const auto span = ray_box(origin, dir, world.primitives[i].box);
        if (!span) continue;
        double t = span->first > 0.0 ? span->first : span->second;
        if (!(t > 0.0) || t > max_range) continue;
        if (!best || t < best->range) best = RayHit{t, world.primitives[i].class_index, i};
    }
    return best;
}

struct RenderedRay {
    Vec3 direction;
    std::optional<RayHit> hit;
};

/// Ray-casts the camera's ray grid from `pose`; row-major, row 0 first.
inline std::vector<RenderedRay> render(const GroundTruthWorld& world, const CameraModel& camera, const Pose& pose)
{
    std::vector<RenderedRay> out;
    out.reserve(camera.ray_count());
    for (std::size_t r = 0; r < camera.rows; ++r) {
        for (std::size_t c = 0; c < camera.cols; ++c) {
            Vec3 dir = camera.ray_direction(pose.yaw, c, r);
            dir.normalize();
            out.push_back({dir, ray_intersect(world, pose.position, dir, camera.max_range)});
        }
    }
    return out;
}

/// Dense reference labeling: class of the first primitive containing the
/// voxel center, or -1 for free space.
class GroundTruthGrid {
public:
    static constexpr int kFree = -1;

    GroundTruthGrid(const GroundTruthWorld& world, const MapParams& params)
        : params_(params), dims_(grid_dims(params)), labels_(cell_count(dims_), kFree)
    {
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            const Vec3 c = center_of(key_from_linear(i, dims_), params_);
            for (const auto& prim : world.primitives) {
                if (prim.box.contains_closed(c)) {
                    labels_[i] = static_cast<int>(prim.class_index);
                    break;
                }
            }
        }
    }

    const MapParams& params() const { return params_; }
    const std::array<std::uint32_t, 3>& dims() const { return dims_; }
    int label(const VoxelKey& k) const { return labels_.at(linear_index(k, dims_)); }
    bool occupied(const VoxelKey& k) const { return label(k) != kFree; }
    std::size_t size() const { return labels_.size(); }

    std::size_t occupied_count() const
    {
        return static_cast<std::size_t>(std::count_if(labels_.begin(), labels_.end(), [](int l) { return l != kFree; }));
    }

    std::vector<VoxelKey> occupied_keys() const
    {
        std::vector<VoxelKey> keys;
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] != kFree) keys.push_back(key_from_linear(i, dims_));
        return keys;
    }

    /// Occupied voxels sharing a face with free space reachable (6-connected)
    /// from `seed`. These are the surfaces a sensor moving through that free
    /// space could ever observe.
    std::vector<VoxelKey> reachable_surface(const VoxelKey& seed) const
    {
        std::vector<std::uint8_t> reached(labels_.size(), 0);
        std::vector<std::size_t> stack;
        const auto s = linear_index(seed, dims_);
        if (labels_.at(s) != kFree) return {};
        reached[s] = 1;
        stack.push_back(s);
        std::vector<std::uint8_t> surface(labels_.size(), 0);
        while (!stack.empty()) {
            const VoxelKey k = key_from_linear(stack.back(), dims_);
            stack.pop_back();
            for_each_face_neighbor(k, [&](const VoxelKey& n) {
                const auto ni = linear_index(n, dims_);
                if (labels_[ni] != kFree) {
                    surface[ni] = 1;
                } else if (!reached[ni]) {
                    reached[ni] = 1;
                    stack.push_back(ni);
                }
            });
        }
        std::vector<VoxelKey> keys;
        for (std::size_t i = 0; i < surface.size(); ++i)
            if (surface[i]) keys.push_back(key_from_linear(i, dims_));
        return keys;
    }

private:
    template <class F>
    void for_each_face_neighbor(const VoxelKey& k, F&& f) const
    {
        const std::array<std::uint32_t, 3> c{k.ix, k.iy, k.iz};
        for (int a = 0; a < 3; ++a) {
            for (int s : {-1, 1}) {
                auto n = c;
                if (s < 0 && n[a] == 0) continue;
                n[a] = static_cast<std::uint32_t>(static_cast<int>(n[a]) + s);
                if (n[a] >= dims_[a]) continue;
                f(VoxelKey{n[0], n[1], n[2]});
            }
        }
    }

    MapParams params_;
    std::array<std::uint32_t, 3> dims_;
    std::vector<int> labels_;
};

inline GroundTruthGrid voxelize_ground_truth(const GroundTruthWorld& world, const MapParams& params)
{
    return GroundTruthGrid(world, params);
}

} // namespace semnbv

#endif // SEMNBV_WORLD_SIM_HPP
