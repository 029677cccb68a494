#ifndef SEMNBV_POINT_CLOUD_HPP
#define SEMNBV_POINT_CLOUD_HPP

#include <cmath>
#include <numeric>
#include <vector>

#include "semnbv/common.hpp"

namespace semnbv {

/// One depth return with its per-class probabilities. `position` is the
/// offset from the sensor origin expressed in world-aligned axes, so the
/// world point is origin + position and |position| == range.
struct SemanticPoint {
    Vec3 position = Vec3::Zero();
    double range = 0.0;
    std::vector<double> class_probs;
};

struct SemanticPointCloud {
    std::vector<SemanticPoint> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

inline void validate_simplex(const std::vector<double>& p, std::size_t k, double tol)
{
    if (p.size() != k) throw DomainError("class distribution has wrong length");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw DomainError("class distribution has a negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol) throw DomainError("class distribution does not sum to 1");
}

} // namespace semnbv

#endif // SEMNBV_POINT_CLOUD_HPP
