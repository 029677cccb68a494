#ifndef SEMNBV_SENSOR_SIM_HPP
#define SEMNBV_SENSOR_SIM_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "semnbv/common.hpp"
#include "semnbv/point_cloud.hpp"
#include "semnbv/world_sim.hpp"

namespace semnbv {

using Rng = std::mt19937_64;

/// Depth noise: sigma_axial = axial_scale * range^2. Lateral noise is carried
/// for completeness; measurements are perturbed along the ray only.
struct NoiseModel {
    double axial_scale = 0.005;
    double lateral_std = 0.0;

    void validate() const
    {
        if (!(axial_scale >= 0.0)) throw ConfigError("axial noise scale must be non-negative");
        if (!(lateral_std >= 0.0)) throw ConfigError("lateral noise std must be non-negative");
    }
};

/// Row-stochastic matrix; entry (k, j) is the probability that the semantic
/// sensor reports class j for a surface of true class k.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;

    ConfusionMatrix(std::size_t num_classes, std::vector<double> entries) : k_(num_classes), m_(std::move(entries))
    {
        if (k_ == 0 || m_.size() != k_ * k_) throw ConfigError("confusion matrix must be K x K");
        for (std::size_t r = 0; r < k_; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < k_; ++c) {
                const double v = m_[r * k_ + c];
                if (!(v >= 0.0)) throw ConfigError("confusion matrix entries must be non-negative");
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("confusion matrix rows must sum to 1");
        }
    }

    /// `diagonal` on the diagonal, the rest spread evenly over the other classes.
    static ConfusionMatrix uniform_off_diagonal(std::size_t num_classes, double diagonal)
    {
        if (num_classes == 1) return ConfusionMatrix(1, {1.0});
        if (!(diagonal >= 0.0 && diagonal <= 1.0)) throw ConfigError("confusion diagonal must lie in [0, 1]");
        const double off = (1.0 - diagonal) / static_cast<double>(num_classes - 1);
        std::vector<double> m(num_classes * num_classes, off);
        for (std::size_t i = 0; i < num_classes; ++i) m[i * num_classes + i] = diagonal;
        return ConfusionMatrix(num_classes, std::move(m));
    }

    static ConfusionMatrix identity(std::size_t num_classes) { return uniform_off_diagonal(num_classes, 1.0); }

    std::size_t num_classes() const { return k_; }
    double operator()(std::size_t row, std::size_t col) const { return m_.at(row * k_ + col); }
    std::vector<double> row(std::size_t r) const
    {
        if (r >= k_) throw DomainError("class index out of range");
        return {m_.begin() + static_cast<std::ptrdiff_t>(r * k_), m_.begin() + static_cast<std::ptrdiff_t>((r + 1) * k_)};
    }
    const std::vector<double>& entries() const { return m_; }

private:
    std::size_t k_ = 0;
    std::vector<double> m_;
};

inline constexpr int kMaxRangeResamples = 100;

/// Noisy range along the ray. Non-positive draws are redrawn (nullopt after
/// kMaxRangeResamples failures); draws beyond max_range saturate at max_range.
inline std::optional<double> sample_range(double true_range, const NoiseModel& noise, double max_range, Rng& rng)
{
    if (!(true_range > 0.0)) throw DomainError("true range must be positive");
    const double sigma = noise.axial_scale * true_range * true_range;
    if (sigma == 0.0) return std::min(true_range, max_range);
    std::normal_distribution<double> dist(true_range, sigma);
    for (int attempt = 0; attempt < kMaxRangeResamples; ++attempt) {
        const double z = dist(rng);
        if (z > 0.0) return std::min(z, max_range);
    }
    return std::nullopt;
}

/// Per-point class distribution reported by the semantic front end.
inline std::vector<double> semantic_response(std::size_t true_class, const ConfusionMatrix& cm)
{
    return cm.row(true_class);
}

/// Simulated semantic depth scan. Consumes the rng once per hit ray, in
/// render order.
inline SemanticPointCloud generate_measurement(const GroundTruthWorld& world, const CameraModel& camera,
                                               const Pose& pose, const NoiseModel& noise,
                                               const ConfusionMatrix& cm, Rng& rng)
{
    SemanticPointCloud cloud;
    const auto rays = render(world, camera, pose);
    cloud.points.reserve(rays.size());
    for (const auto& ray : rays) {
        if (!ray.hit) continue;
        const auto range = sample_range(ray.hit->range, noise, camera.max_range, rng);
        if (!range) continue;
        cloud.points.push_back({ray.direction * *range, *range, semantic_response(ray.hit->class_index, cm)});
    }
    return cloud;
}

} // namespace semnbv

#endif // SEMNBV_SENSOR_SIM_HPP
