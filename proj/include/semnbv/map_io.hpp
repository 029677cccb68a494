#ifndef SEMNBV_MAP_IO_HPP
#define SEMNBV_MAP_IO_HPP

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "semnbv/semantic_octree.hpp"

namespace semnbv {

/// Text dump of every stored voxel, sorted by key:
///
///   # semnbv-map resolution <d> min <x y z> max <x y z> classes <K> <name;name;...>
///   ix iy iz occupancy p_1 ... p_K
///
/// Values are printed with %.9g so that identical maps give identical files.
inline void dump_map(std::ostream& os, const OctreeMap& map, const std::vector<std::string>& class_names)
{
    const auto& p = map.params();
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        return std::string(buf);
    };
    os << "# semnbv-map resolution " << num(p.resolution) << " min " << num(p.bounds.min.x()) << ' '
       << num(p.bounds.min.y()) << ' ' << num(p.bounds.min.z()) << " max " << num(p.bounds.max.x()) << ' '
       << num(p.bounds.max.y()) << ' ' << num(p.bounds.max.z()) << " classes " << p.num_classes << ' ';
    for (std::size_t i = 0; i < class_names.size(); ++i) os << (i ? ";" : "") << class_names[i];
    os << '\n';

    for (const auto& k : map.known_keys_sorted()) {
        const auto v = *map.find(k);
        os << k.ix << ' ' << k.iy << ' ' << k.iz << ' ' << num(logistic(v.occ_log_odds));
        for (double lp : v.class_log_probs) os << ' ' << num(std::exp(lp));
        os << '\n';
    }
}

} // namespace semnbv

#endif // SEMNBV_MAP_IO_HPP
