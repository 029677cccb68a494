#ifndef SEMNBV_GRID_HPP
#define SEMNBV_GRID_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "semnbv/common.hpp"

namespace semnbv {

enum class EntropyForm {
    SingleTerm,   // -P ln P
    Binary,       // -P ln P - (1-P) ln(1-P)
};

/// Static configuration of a semantic occupancy map.
struct MapParams {
    double resolution = 0.4;
    Box3 bounds{Vec3::Zero(), Vec3::Constant(4.0)};
    std::size_t num_classes = 5;
    double log_odds_min = -3.5;
    double log_odds_max = 3.5;
    double p_free = 0.4;
    double prior_occupancy = 0.5;
    // class probabilities never drop below this after a semantic update
    double class_floor = 1e-6;
    // half-width of the "unknown" band around the prior occupancy
    double unknown_band = 1e-3;
    EntropyForm entropy_form = EntropyForm::SingleTerm;

    void validate() const
    {
        if (!(resolution > 0.0)) throw ConfigError("map resolution must be positive");
        if (!bounds.valid()) throw ConfigError("map bounds_max must exceed bounds_min on every axis");
        if (num_classes < 1) throw ConfigError("num_classes must be at least 1");
        if (!(log_odds_min < 0.0 && log_odds_max > 0.0))
            throw ConfigError("log-odds clamp must satisfy min < 0 < max");
        if (!(p_free > 0.0 && p_free < 0.5)) throw ConfigError("p_free must lie in (0, 0.5)");
        if (!(prior_occupancy > 0.0 && prior_occupancy < 1.0))
            throw ConfigError("prior_occupancy must lie in (0, 1)");
        if (!(class_floor >= 0.0 && class_floor * static_cast<double>(num_classes) < 1.0))
            throw ConfigError("class_floor must be non-negative and below 1/num_classes");
        if (!(unknown_band > 0.0 && unknown_band < 0.5)) throw ConfigError("unknown_band must lie in (0, 0.5)");
    }
};

struct VoxelKey {
    std::uint32_t ix = 0;
    std::uint32_t iy = 0;
    std::uint32_t iz = 0;

    std::uint32_t operator[](int axis) const { return axis == 0 ? ix : (axis == 1 ? iy : iz); }
    auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& k) const noexcept
    {
        std::uint64_t h = k.ix;
        h = h * 0x9E3779B97F4A7C15ull ^ k.iy;
        h = h * 0x9E3779B97F4A7C15ull ^ k.iz;
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

/// Cell counts per axis: ceil(extent / resolution). A small tolerance absorbs
/// representation error so that e.g. 10 m / 0.4 m yields 25, not 26.
inline std::array<std::uint32_t, 3> grid_dims(const MapParams& params)
{
    std::array<std::uint32_t, 3> d{};
    for (int a = 0; a < 3; ++a) {
        const double cells = (params.bounds.max[a] - params.bounds.min[a]) / params.resolution;
        d[a] = static_cast<std::uint32_t>(std::max(1.0, std::ceil(cells - 1e-9)));
    }
    return d;
}

inline bool key_in_grid(const VoxelKey& k, const std::array<std::uint32_t, 3>& dims)
{
    return k.ix < dims[0] && k.iy < dims[1] && k.iz < dims[2];
}

/// Key of the voxel containing `p`, or nullopt if `p` is outside [min, max).
inline std::optional<VoxelKey> try_key_of(const Vec3& p, const MapParams& params)
{
    if (!params.bounds.contains(p)) return std::nullopt;
    const auto dims = grid_dims(params);
    std::array<std::uint32_t, 3> idx{};
    for (int a = 0; a < 3; ++a) {
        const double c = std::floor((p[a] - params.bounds.min[a]) / params.resolution);
        idx[a] = static_cast<std::uint32_t>(std::clamp(c, 0.0, static_cast<double>(dims[a] - 1)));
    }
    return VoxelKey{idx[0], idx[1], idx[2]};
}

inline VoxelKey key_of(const Vec3& p, const MapParams& params)
{
    if (auto k = try_key_of(p, params)) return *k;
    throw OutOfBoundsError("point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ", " +
                           std::to_string(p.z()) + ") lies outside the map bounds");
}

inline Vec3 center_of(const VoxelKey& k, const MapParams& params)
{
    return params.bounds.min +
           params.resolution * Vec3(k.ix + 0.5, k.iy + 0.5, k.iz + 0.5);
}

/// Row-major linear index (x fastest).
inline std::size_t linear_index(const VoxelKey& k, const std::array<std::uint32_t, 3>& dims)
{
    return k.ix + static_cast<std::size_t>(dims[0]) * (k.iy + static_cast<std::size_t>(dims[1]) * k.iz);
}

inline VoxelKey key_from_linear(std::size_t i, const std::array<std::uint32_t, 3>& dims)
{
    const auto ix = static_cast<std::uint32_t>(i % dims[0]);
    i /= dims[0];
    const auto iy = static_cast<std::uint32_t>(i % dims[1]);
    return {ix, iy, static_cast<std::uint32_t>(i / dims[1])};
}

inline std::size_t cell_count(const std::array<std::uint32_t, 3>& dims)
{
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
}

} // namespace semnbv

#endif // SEMNBV_GRID_HPP
