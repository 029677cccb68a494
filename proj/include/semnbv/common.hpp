#ifndef SEMNBV_COMMON_HPP
#define SEMNBV_COMMON_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace semnbv {

using Vec3 = Eigen::Vector3d;

// Error hierarchy. Everything derives from std::runtime_error so callers that
// only care about "something failed" can catch one type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutOfBoundsError : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct DegenerateUpdateError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

/// Axis-aligned box, min corner inclusive.
struct Box3 {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    bool valid() const { return (max.array() > min.array()).all(); }
    Vec3 size() const { return max - min; }
    Vec3 center() const { return 0.5 * (min + max); }

    // half-open [min, max)
    bool contains(const Vec3& p) const
    {
        return (p.array() >= min.array()).all() && (p.array() < max.array()).all();
    }
    bool contains_closed(const Vec3& p) const
    {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
    bool contains(const Box3& other) const
    {
        return (other.min.array() >= min.array()).all() && (other.max.array() <= max.array()).all();
    }
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    else if (a > std::numbers::pi) a -= two_pi;
    return a;
}

/// Sensor / robot configuration: position plus heading. Pitch and roll are zero.
struct Pose {
    Vec3 position = Vec3::Zero();
    double yaw = 0.0;

    Pose() = default;
    Pose(const Vec3& p, double yaw_rad) : position(p), yaw(wrap_angle(yaw_rad)) {}

    bool operator==(const Pose& o) const { return position == o.position && yaw == o.yaw; }
};

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double logistic(double l) { return 1.0 / (1.0 + std::exp(-l)); }

/// -p ln p with the 0 ln 0 = 0 convention.
inline double plogp_neg(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

} // namespace semnbv

#endif // SEMNBV_COMMON_HPP
