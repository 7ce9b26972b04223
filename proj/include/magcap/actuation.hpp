// Actuator pose planning for rotating magnetic actuation of a capsule.
//
// Given where the capsule is and which way it should move, this module places
// the actuator magnet, picks the actuator spin axis so that the field at the
// capsule rotates about the desired heading, generates the spin phase for the
// DMA/CRMA/RRMA modes, and splits the resulting magnetic force into
// propulsive, lateral and remainder parts.
//
// Angles are radians throughout. Rotations Rot_k are right-handed about +k.
#pragma once

#include "magcap/magnetics.hpp"
#include "magcap/types.hpp"

#include <algorithm>
#include <string>
#include <variant>
#include <vector>

namespace magcap::actuation {

using magnetics::Moment;

/// Spherical parametrization of a direction: Rot_z(theta_z) Rot_y(-theta_y) x_hat.
struct AxisAngles {
    double theta_z{0.0}; ///< [0, 2*pi)
    double theta_y{0.0}; ///< (-pi/2, pi/2)

    void validate() const {
        if (!(theta_z >= 0.0 && theta_z < kTwoPi)) {
            throw std::invalid_argument("AxisAngles: theta_z must lie in [0, 2*pi)");
        }
        if (!(std::abs(theta_y) < 0.5 * kPi)) {
            throw std::invalid_argument("AxisAngles: theta_y must lie in (-pi/2, pi/2)");
        }
    }
};

/// Placement of the actuator relative to the capsule.
struct ActuationGeometry {
    double d{0.15};      ///< capsule-actuator distance [m]
    double alpha{0.0};   ///< angle between r and p_a->H [rad]
    double beta{0.0};    ///< tilt of plane U from the vertical [rad]
    UnitVector3 omega_dc{}; ///< desired capsule rotation axis / heading

    void validate() const {
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw ConfigError("ActuationGeometry: d must be > 0");
        }
        if (!(std::abs(alpha) < 0.5 * kPi)) {
            throw ConfigError("ActuationGeometry: |alpha| must be < pi/2");
        }
        if (!std::isfinite(beta)) {
            throw ConfigError("ActuationGeometry: beta must be finite");
        }
    }
};

/// Dragging: static actuator, theta_ax held at pi.
struct Dma {};
/// Continuous rotation of the actuator in one direction.
struct Crma {};
/// Reciprocating rotation with theta_ax in [pi - theta_ar, pi + theta_ar].
struct Rrma {
    double theta_ar{0.5 * kPi};
};

using ActuationMode = std::variant<Dma, Crma, Rrma>;

inline void validate_mode(const ActuationMode &mode) {
    if (const auto *r = std::get_if<Rrma>(&mode)) {
        if (!(r->theta_ar > 0.0 && r->theta_ar <= 0.5 * kPi)) {
            throw ConfigError("RRMA: theta_ar must lie in (0, pi/2]");
        }
    }
}

inline std::string mode_name(const ActuationMode &mode) {
    if (std::holds_alternative<Dma>(mode)) {
        return "DMA";
    }
    if (std::holds_alternative<Crma>(mode)) {
        return "CRMA";
    }
    return "RRMA";
}

/// Moment magnitudes of the two magnets [A*m^2].
struct MomentPair {
    double actuator{0.0};
    double capsule{0.0};
};

/// What the robot is asked to do at one instant.
struct ActuatorCommand {
    Vector3 position{Vector3::Zero()};
    UnitVector3 rotation_axis{};
    double theta_ax{kPi};
    double spin_rate{0.0}; ///< signed [rad/s]
    int spin_sign{0};      ///< +1, -1, or 0 when not spinning
    double time{0.0};
};

/// f = propulsive + lateral + remainder.
///
/// propulsive is along the heading axis, lateral along the plane-U normal,
/// remainder is what is left (in plane U, perpendicular to the heading).
struct ForceDecomposition {
    Vector3 propulsive{Vector3::Zero()};
    Vector3 lateral{Vector3::Zero()};
    Vector3 remainder{Vector3::Zero()};
    UnitVector3 axis{};
    UnitVector3 plane_normal{UnitVector3::unit_y()};

    Vector3 total() const { return propulsive + lateral + remainder; }
    double propulsive_signed() const { return propulsive.dot(axis.vec()); }
    double lateral_signed() const { return lateral.dot(plane_normal.vec()); }
};

// -----------------------------------------------------------------------------
// Orientation parametrization
// -----------------------------------------------------------------------------

inline UnitVector3 unit_vector_from_axis_angles(const AxisAngles &angles) {
    angles.validate();
    const double cy = std::cos(angles.theta_y);
    return UnitVector3::normalize(Vector3(cy * std::cos(angles.theta_z),
                                          cy * std::sin(angles.theta_z),
                                          std::sin(angles.theta_y)));
}

/// Inverse of unit_vector_from_axis_angles. Uses atan2 so theta_z spans the
/// full [0, 2*pi). Vertical directions have no theta_z and are rejected.
inline AxisAngles axis_angles_from_unit_vector(const UnitVector3 &w) {
    if (std::abs(w.z()) >= 1.0 - 1e-9) {
        throw DegenerateError(Degeneracy::kPolarOrientation,
                              "direction is vertical; azimuth undefined");
    }
    AxisAngles out;
    out.theta_z = wrap_two_pi(std::atan2(w.y(), w.x()));
    out.theta_y = std::asin(std::clamp(w.z(), -1.0, 1.0));
    return out;
}

/// Rot_z(theta_z) Rot_y(-theta_y): maps x_hat onto the parametrized direction.
inline Matrix3 axis_frame(const AxisAngles &angles) {
    return rot_z(angles.theta_z) * rot_y(-angles.theta_y);
}

// -----------------------------------------------------------------------------
// Actuator pose
// -----------------------------------------------------------------------------

/// Spin axis of the actuator that makes the field at the capsule rotate about
/// omega_dc: unit((3 r r^T - I) omega_dc).
///
/// (3 r r^T - I) has eigenvalues {2, -1, -1} so the product never vanishes for
/// unit inputs; the check guards against non-normalized or non-finite data.
inline UnitVector3 actuator_rotation_axis(const UnitVector3 &r_hat, const UnitVector3 &omega_dc) {
    const Vector3 v = 3.0 * r_hat.dot(omega_dc) * r_hat.vec() - omega_dc.vec();
    if (!(v.norm() > 1e-12)) {
        throw DegenerateError(Degeneracy::kGeometry, "rotation-axis map annihilated omega_dc");
    }
    return UnitVector3::normalize(v);
}

/// r = p_c - p_a = d Rot_z(theta_cz) Rot_y(-theta_cy) Rot_x(beta) Rot_y(alpha) (0, 0, -1).
inline Vector3 capsule_offset_from_actuator(const ActuationGeometry &geometry) {
    geometry.validate();
    const AxisAngles heading = axis_angles_from_unit_vector(geometry.omega_dc);
    return geometry.d * (axis_frame(heading) * rot_x(geometry.beta) * rot_y(geometry.alpha) *
                         Vector3(0.0, 0.0, -1.0));
}

inline Vector3 actuator_position(const Vector3 &p_c, const ActuationGeometry &geometry) {
    return p_c - capsule_offset_from_actuator(geometry);
}

/// m_a = Rot_z(theta_az) Rot_y(-theta_ay) Rot_x(theta_ax) z_hat. Always
/// perpendicular to the actuator axis described by `axis_angles`.
inline UnitVector3 actuator_moment_direction(const AxisAngles &axis_angles, double theta_ax) {
    axis_angles.validate();
    const Vector3 spun(0.0, -std::sin(theta_ax), std::cos(theta_ax));
    return UnitVector3::normalize(axis_frame(axis_angles) * spun);
}

/// Capsule magnet direction: the field projected onto the plane normal to the
/// capsule's rotation axis. Undefined when the field is along the axis.
inline UnitVector3 capsule_moment_direction(const Vector3 &b_c, const UnitVector3 &omega_c) {
    const Vector3 perp = b_c - b_c.dot(omega_c.vec()) * omega_c.vec();
    const double bn = b_c.norm();
    if (!(bn > 0.0) || perp.norm() <= 1e-9 * bn) {
        throw DegenerateError(Degeneracy::kField, "field parallel to the capsule axis");
    }
    return UnitVector3::normalize(perp);
}

/// Everything the planner derives from (capsule position, geometry).
struct ActuatorPlan {
    Vector3 offset;              ///< r = p_c - p_a
    Vector3 position;            ///< p_a
    UnitVector3 rotation_axis;   ///< omega_a
    AxisAngles axis_angles;      ///< (theta_az, theta_ay) of omega_a
};

inline ActuatorPlan plan_actuator(const Vector3 &p_c, const ActuationGeometry &geometry) {
    ActuatorPlan plan{};
    plan.offset = capsule_offset_from_actuator(geometry);
    plan.position = p_c - plan.offset;
    plan.rotation_axis = actuator_rotation_axis(UnitVector3::normalize(plan.offset), geometry.omega_dc);
    plan.axis_angles = axis_angles_from_unit_vector(plan.rotation_axis);
    return plan;
}

// -----------------------------------------------------------------------------
// Force decomposition
// -----------------------------------------------------------------------------

/// Normal of plane U (through p_a, p_c and H, the foot of p_a on the capsule
/// axis line): n = unit(axis x (p_a - H)).
///
/// Orientation convention: with the heading along +x and the actuator above
/// the capsule, n = -y. Positive lateral force means a push along n.
inline UnitVector3 plane_u_normal(const Vector3 &p_c, const Vector3 &p_a, const UnitVector3 &axis) {
    const Vector3 rel = p_a - p_c;
    const Vector3 perp = rel - rel.dot(axis.vec()) * axis.vec();
    if (!(perp.norm() > 1e-9 * rel.norm()) || !(rel.norm() > 0.0)) {
        throw DegenerateError(Degeneracy::kGeometry, "actuator lies on the capsule axis; plane U undefined");
    }
    return UnitVector3::normalize(axis.vec().cross(perp));
}

inline ForceDecomposition decompose_force(const Vector3 &f, const Vector3 &p_c, const Vector3 &p_a,
                                          const UnitVector3 &axis) {
    ForceDecomposition out;
    out.axis = axis;
    out.plane_normal = plane_u_normal(p_c, p_a, axis);
    out.propulsive = f.dot(axis.vec()) * axis.vec();
    out.lateral = f.dot(out.plane_normal.vec()) * out.plane_normal.vec();
    out.remainder = f - out.propulsive - out.lateral;
    return out;
}

/// Decomposition for the planned geometry, capsule at the origin.
inline ForceDecomposition decompose_force(const Vector3 &f, const ActuationGeometry &geometry) {
    const Vector3 r = capsule_offset_from_actuator(geometry);
    return decompose_force(f, Vector3::Zero(), -r, geometry.omega_dc);
}

// -----------------------------------------------------------------------------
// Spin waveform
// -----------------------------------------------------------------------------

struct SpinPhase {
    double theta_ax{kPi};
    int spin_sign{0};
};

/// Spin phase at time t for an actuator spinning at `rate` rad/s.
///
/// CRMA: theta_ax = rate*t mod 2*pi. RRMA: constant-speed triangle wave
/// starting at pi going positive, half-amplitude theta_ar; the sign is the
/// sweep direction and is 0 exactly at a reversal. DMA: pi, sign 0.
inline SpinPhase spin_phase(const ActuationMode &mode, double t, double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument("spin_phase: rate must be > 0");
    }
    validate_mode(mode);
    if (std::holds_alternative<Dma>(mode)) {
        return {kPi, 0};
    }
    if (std::holds_alternative<Crma>(mode)) {
        return {wrap_two_pi(rate * t), +1};
    }
    const double a = std::get<Rrma>(mode).theta_ar;
    const double span = 4.0 * a;
    double s = std::fmod(rate * t, span);
    if (s < 0.0) {
        s += span;
    }
    const double snap = 1e-9 * a;
    if (std::abs(s - a) <= snap) {
        return {kPi + a, 0};
    }
    if (std::abs(s - 3.0 * a) <= snap) {
        return {kPi - a, 0};
    }
    if (s < a) {
        return {kPi + s, +1};
    }
    if (s < 3.0 * a) {
        return {kPi + 2.0 * a - s, -1};
    }
    return {kPi + s - span, +1};
}

/// Duration of one actuation cycle [s]. DMA has no cycle.
inline double cycle_period(const ActuationMode &mode, double rate) {
    if (!(rate > 0.0)) {
        throw std::invalid_argument("cycle_period: rate must be > 0");
    }
    validate_mode(mode);
    if (std::holds_alternative<Crma>(mode)) {
        return kTwoPi / rate;
    }
    if (const auto *r = std::get_if<Rrma>(&mode)) {
        return 4.0 * r->theta_ar / rate;
    }
    throw std::invalid_argument("cycle_period: DMA has no actuation cycle");
}

// -----------------------------------------------------------------------------
// Force on the capsule
// -----------------------------------------------------------------------------

struct CapsuleForce {
    Vector3 field{Vector3::Zero()};
    UnitVector3 capsule_moment{};
    Vector3 force{Vector3::Zero()};
};

/// Field, capsule moment direction and magnetic force at the capsule.
///
/// `r` is p_c - p_a. When the field is parallel to omega_c the capsule keeps
/// `held_moment` if one is given; otherwise the DegenerateError propagates.
inline CapsuleForce evaluate_capsule_force(const Vector3 &r, const Moment &actuator,
                                           double capsule_magnitude, const UnitVector3 &omega_c,
                                           const UnitVector3 *held_moment = nullptr) {
    CapsuleForce out;
    out.field = magnetics::dipole_field(r, actuator);
    try {
        out.capsule_moment = capsule_moment_direction(out.field, omega_c);
    } catch (const DegenerateError &) {
        if (held_moment == nullptr) {
            throw;
        }
        out.capsule_moment = *held_moment;
    }
    out.force = magnetics::dipole_force(r, actuator, Moment{capsule_magnitude, out.capsule_moment});
    return out;
}

struct ForceSample {
    double theta_ax{0.0};
    ForceDecomposition force;
};

/// Force on a capsule at the origin for one actuator spin phase.
inline ForceSample force_at_phase(const ActuatorPlan &plan, const ActuationGeometry &geometry,
                                  const MomentPair &moments, const UnitVector3 &omega_c,
                                  double theta_ax) {
    const Moment actuator{moments.actuator, actuator_moment_direction(plan.axis_angles, theta_ax)};
    const CapsuleForce cf = evaluate_capsule_force(plan.offset, actuator, moments.capsule, omega_c);
    return {theta_ax, decompose_force(cf.force, Vector3::Zero(), plan.position, geometry.omega_dc)};
}

inline ForceSample force_at_phase(const ActuationGeometry &geometry, const MomentPair &moments,
                                  const UnitVector3 &omega_c, double theta_ax) {
    return force_at_phase(plan_actuator(Vector3::Zero(), geometry), geometry, moments, omega_c,
                          theta_ax);
}

/// Force decomposition over one actuator revolution, theta_ax = 2*pi*k/n.
inline std::vector<ForceSample> force_profile(const ActuationGeometry &geometry,
                                              const MomentPair &moments,
                                              const UnitVector3 &omega_c, int n_samples) {
    if (n_samples < 8) {
        throw std::invalid_argument("force_profile: need at least 8 samples");
    }
    const ActuatorPlan plan = plan_actuator(Vector3::Zero(), geometry);
    std::vector<ForceSample> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (int k = 0; k < n_samples; ++k) {
        const double theta = kTwoPi * static_cast<double>(k) / static_cast<double>(n_samples);
        out.push_back(force_at_phase(plan, geometry, moments, omega_c, theta));
    }
    return out;
}

/// Worst relative deviation of the force over an RRMA sweep from the force at
/// theta_ax = pi:  max |f(theta) - f(pi)| / |f(pi)|, theta in [pi - ar, pi + ar].
///
/// Moment magnitudes cancel in the ratio. Dense sampling (endpoints included)
/// followed by a golden-section refinement around the best sample.
inline double approximation_error(const ActuationGeometry &geometry, const Rrma &mode,
                                  int n_samples = 2049) {
    validate_mode(mode);
    if (n_samples < 3) {
        throw std::invalid_argument("approximation_error: need at least 3 samples");
    }
    const MomentPair unit_moments{1.0, 1.0};
    const ActuatorPlan plan = plan_actuator(Vector3::Zero(), geometry);
    auto total = [&](double theta) {
        return force_at_phase(plan, geometry, unit_moments, geometry.omega_dc, theta).force.total();
    };
    const Vector3 f0 = total(kPi);
    const double f0n = f0.norm();
    if (!(f0n > 0.0)) {
        throw std::domain_error("approximation_error: zero force at theta_ax = pi");
    }
    auto deviation = [&](double theta) { return (total(theta) - f0).norm() / f0n; };

    const double lo = kPi - mode.theta_ar;
    const double h = 2.0 * mode.theta_ar / static_cast<double>(n_samples - 1);
    double best = 0.0;
    int best_k = 0;
    for (int k = 0; k < n_samples; ++k) {
        const double e = deviation(lo + h * k);
        if (e > best) {
            best = e;
            best_k = k;
        }
    }
    double a = lo + h * std::max(best_k - 1, 0);
    double b = lo + h * std::min(best_k + 1, n_samples - 1);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
        const double c = b - g * (b - a);
        const double e = a + g * (b - a);
        if (deviation(c) > deviation(e)) {
            b = e;
        } else {
            a = c;
        }
    }
    return std::max(best, deviation(0.5 * (a + b)));
}

} // namespace magcap::actuation
