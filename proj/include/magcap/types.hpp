// Core value types, units and error categories shared by every magcap module.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace magcap {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Vacuum permeability [T*m/A].
inline constexpr double kMu0 = 4.0e-7 * std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

inline bool is_finite(const Vector3 &v) { return v.allFinite(); }

// -----------------------------------------------------------------------------
// Errors
// -----------------------------------------------------------------------------

/// Evaluation too close to a dipole source (the 1/r^n singularity).
class SingularityError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

enum class Degeneracy {
    kPolarOrientation, ///< axis within 1e-9 of +-z, theta_z undefined
    kGeometry,         ///< a direction needed by the construction vanishes
    kField,            ///< field parallel to the capsule axis (moment projection undefined)
    kStaleHeading,     ///< not enough travel to estimate a heading
    kJacobian,         ///< rank-deficient least-squares system
};

inline const char *to_string(Degeneracy kind) {
    switch (kind) {
    case Degeneracy::kPolarOrientation:
        return "polar orientation";
    case Degeneracy::kGeometry:
        return "degenerate geometry";
    case Degeneracy::kField:
        return "degenerate field";
    case Degeneracy::kStaleHeading:
        return "stale heading";
    case Degeneracy::kJacobian:
        return "degenerate jacobian";
    }
    return "unknown";
}

/// A configuration for which the requested quantity is undefined. Callers in
/// the control loop catch this and hold their previous value.
class DegenerateError : public std::domain_error {
  public:
    DegenerateError(Degeneracy kind, const std::string &what)
        : std::domain_error(std::string(to_string(kind)) + ": " + what),
          kind_(kind) {}

    Degeneracy kind() const noexcept { return kind_; }

  private:
    Degeneracy kind_;
};

/// Invalid user-supplied parameters (ranges, counts, file contents).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// -----------------------------------------------------------------------------
// UnitVector3
// -----------------------------------------------------------------------------

/// A direction in R^3. The stored vector has Euclidean norm 1 to within 1e-12.
class UnitVector3 {
  public:
    static constexpr double kNormTolerance = 1e-12;

    /// +x.
    UnitVector3() : v_(1.0, 0.0, 0.0) {}

    /// Normalizes `v`. Throws DegenerateError for zero or non-finite input.
    static UnitVector3 normalize(const Vector3 &v) {
        const double n = v.norm();
        if (!std::isfinite(n) || n == 0.0) {
            throw DegenerateError(Degeneracy::kGeometry,
                                  "cannot normalize a zero or non-finite vector");
        }
        return UnitVector3(v / n);
    }

    /// Wraps an already-normalized vector; rejects anything off the unit
    /// sphere by more than kNormTolerance.
    static UnitVector3 from_unit(const Vector3 &v) {
        if (!v.allFinite() || std::abs(v.norm() - 1.0) > kNormTolerance) {
            throw std::invalid_argument("UnitVector3: vector is not normalized");
        }
        return UnitVector3(v);
    }

    static UnitVector3 unit_x() { return UnitVector3(Vector3::UnitX()); }
    static UnitVector3 unit_y() { return UnitVector3(Vector3::UnitY()); }
    static UnitVector3 unit_z() { return UnitVector3(Vector3::UnitZ()); }

    const Vector3 &vec() const { return v_; }
    operator const Vector3 &() const { return v_; }

    double x() const { return v_.x(); }
    double y() const { return v_.y(); }
    double z() const { return v_.z(); }
    double dot(const Vector3 &o) const { return v_.dot(o); }

    UnitVector3 operator-() const { return UnitVector3(-v_); }

    /// Angle to another direction [rad], robust near 0 and pi.
    double angle_to(const UnitVector3 &o) const {
        return std::atan2(v_.cross(o.v_).norm(), v_.dot(o.v_));
    }

  private:
    explicit UnitVector3(const Vector3 &v) : v_(v) {}
    Vector3 v_;
};

/// Elementary rotations, right-handed, angles in radians.
inline Matrix3 rot_x(double a) {
    return Eigen::AngleAxisd(a, Vector3::UnitX()).toRotationMatrix();
}
inline Matrix3 rot_y(double a) {
    return Eigen::AngleAxisd(a, Vector3::UnitY()).toRotationMatrix();
}
inline Matrix3 rot_z(double a) {
    return Eigen::AngleAxisd(a, Vector3::UnitZ()).toRotationMatrix();
}

/// Wraps an angle into [0, 2*pi).
inline double wrap_two_pi(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) {
        w += kTwoPi;
    }
    // fmod of a tiny negative can round up to exactly 2*pi
    return w >= kTwoPi ? 0.0 : w;
}

} // namespace magcap
