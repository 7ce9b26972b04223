// Closed-form point-dipole field, field gradient, force and torque.
//
// Conventions: `r` is always the position of the evaluation point (the
// capsule, a sensor) relative to the source dipole, in metres. Fields are in
// tesla, forces in newtons, torques in N*m, moments in A*m^2.
#pragma once

#include "magcap/types.hpp"

#include <variant>

namespace magcap::magnetics {

/// Separations below this are rejected: the magnets would overlap.
inline constexpr double kMinSeparation = 1e-3;

/// A magnetic moment split into magnitude and direction.
struct Moment {
    double magnitude{1.0}; ///< A*m^2, > 0
    UnitVector3 direction{UnitVector3::unit_z()};

    Vector3 vector() const { return magnitude * direction.vec(); }
};

/// A point dipole: actuator magnet or capsule magnet.
struct DipoleSource {
    Vector3 position{Vector3::Zero()};
    Moment moment{};
};

struct Sphere {
    double diameter; ///< m
};

/// Axially magnetized ring (hollow cylinder).
struct Ring {
    double outer_diameter; ///< m
    double inner_diameter; ///< m
    double length;         ///< m
};

struct MagnetSpec {
    std::variant<Sphere, Ring> shape;
    double remanence; ///< T

    void validate() const {
        if (!(remanence > 0.0 && remanence < 2.0)) {
            throw ConfigError("MagnetSpec: remanence must lie in (0, 2) T");
        }
        if (const auto *s = std::get_if<Sphere>(&shape)) {
            if (!(s->diameter > 0.0)) {
                throw ConfigError("MagnetSpec: sphere diameter must be > 0");
            }
        } else {
            const auto &r = std::get<Ring>(shape);
            if (!(r.outer_diameter > 0.0 && r.inner_diameter > 0.0 && r.length > 0.0)) {
                throw ConfigError("MagnetSpec: ring dimensions must be > 0");
            }
            if (!(r.inner_diameter < r.outer_diameter)) {
                throw ConfigError("MagnetSpec: ring inner diameter must be < outer diameter");
            }
        }
    }
};

/// Default actuator: 50 mm N42 sphere. Remanence is a configuration default.
inline MagnetSpec default_actuator_magnet() { return {Sphere{0.05}, 1.32}; }

/// Default capsule magnet: 12.8/9/15 mm N38SH ring.
inline MagnetSpec default_capsule_magnet() { return {Ring{0.0128, 0.009, 0.015}, 1.26}; }

inline double magnet_volume(const MagnetSpec &spec) {
    spec.validate();
    if (const auto *s = std::get_if<Sphere>(&spec.shape)) {
        return kPi * s->diameter * s->diameter * s->diameter / 6.0;
    }
    const auto &r = std::get<Ring>(spec.shape);
    const double ro = 0.5 * r.outer_diameter;
    const double ri = 0.5 * r.inner_diameter;
    return kPi * (ro * ro - ri * ri) * r.length;
}

/// |m| = Br * V / mu0 for a uniformly magnetized body.
inline double moment_magnitude_from_spec(const MagnetSpec &spec) {
    return spec.remanence * magnet_volume(spec) / kMu0;
}

namespace detail {

inline double checked_norm(const Vector3 &r) {
    const double n = r.norm();
    if (!std::isfinite(n)) {
        throw SingularityError("dipole evaluation at a non-finite offset");
    }
    if (n < kMinSeparation) {
        throw SingularityError("dipole evaluation closer than 1 mm to the source");
    }
    return n;
}

inline void check_magnitude(double m) {
    if (!(m > 0.0) || !std::isfinite(m)) {
        throw std::invalid_argument("dipole moment magnitude must be finite and > 0");
    }
}

} // namespace detail

/// b(r) = mu0 |m| / (4 pi |r|^5) (3 r r^T - |r|^2 I) m_hat
inline Vector3 dipole_field(const Vector3 &r, const Moment &source) {
    detail::check_magnitude(source.magnitude);
    const double n = detail::checked_norm(r);
    const double n2 = n * n;
    const double k = kMu0 * source.magnitude / (4.0 * kPi * n2 * n2 * n);
    const Vector3 &m = source.direction;
    return k * (3.0 * r.dot(m) * r - n2 * m);
}

/// d b / d r. Symmetric and traceless away from the source.
inline Matrix3 dipole_field_jacobian(const Vector3 &r, const Moment &source) {
    detail::check_magnitude(source.magnitude);
    const double n = detail::checked_norm(r);
    const double n2 = n * n;
    const double k = kMu0 * source.magnitude / (4.0 * kPi * n2 * n2 * n);
    const Vector3 &m = source.direction;
    const double rm = r.dot(m);
    Matrix3 J = r * m.transpose() + m * r.transpose();
    J.diagonal().array() += rm;
    J -= (5.0 * rm / n2) * (r * r.transpose());
    return 3.0 * k * J;
}

/// Force on `capsule` in the field of `actuator`, with r = p_capsule - p_actuator:
///
///   f = 3 mu0 |ma||mc| / (4 pi |r|^7) [ (mc ma^T) r |r|^2 + (ma mc^T) r |r|^2
///                                      + (mc^T (|r|^2 I - 5 r r^T) ma) r ]
///
/// This is grad(m_c . b) with respect to the capsule position.
inline Vector3 dipole_force(const Vector3 &r, const Moment &actuator, const Moment &capsule) {
    detail::check_magnitude(actuator.magnitude);
    detail::check_magnitude(capsule.magnitude);
    const double n = detail::checked_norm(r);
    const double n2 = n * n;
    const double k =
        3.0 * kMu0 * actuator.magnitude * capsule.magnitude / (4.0 * kPi * n2 * n2 * n2 * n);
    const Vector3 &ma = actuator.direction;
    const Vector3 &mc = capsule.direction;
    const double ra = r.dot(ma);
    const double rc = r.dot(mc);
    const double cross_term = n2 * mc.dot(ma) - 5.0 * rc * ra;
    return k * (mc * (ra * n2) + ma * (rc * n2) + cross_term * r);
}

/// tau = m_c x b(r)
inline Vector3 dipole_torque(const Vector3 &r, const Moment &actuator, const Moment &capsule) {
    detail::check_magnitude(capsule.magnitude);
    return capsule.vector().cross(dipole_field(r, actuator));
}

} // namespace magcap::magnetics
