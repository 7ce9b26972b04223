// Wall-contact friction model for the intestinal twist (volvulus) comparison
// of continuous vs. reciprocating rotation.
//
// The capsule is pressed against the wall by the lateral magnetic force, so
// the normal force is |f_l|. Coulomb friction |f_friction| = mu_wall * |f_l|.
// The spinning capsule drags the wall along its surface velocity, so the twist
// it imposes has the sign of the spin regardless of which side it touches.
//
// Sign convention: positive twist is right-handed about the heading omega_dc.
// With spin_sign = +1 (theta_ax increasing) the field, and the capsule with it,
// turns right-handed about omega_dc, so positive spin gives positive friction.
#pragma once

#include "magcap/actuation.hpp"

#include <span>
#include <vector>

namespace magcap::risk {

using actuation::ActuationGeometry;
using actuation::ActuationMode;
using actuation::MomentPair;

inline constexpr int kMinCycleSamples = 64;

struct ContactSample {
    double phase{0.0};         ///< fraction of the cycle in [0, 1]
    double theta_ax{0.0};      ///< rad
    double normal_force{0.0};  ///< N, >= 0
    double signed_friction{0.0}; ///< N, positive = right-handed about heading
    int spin_sign{0};
};

struct RiskProfile {
    std::vector<ContactSample> samples; ///< phase 0..1 inclusive
    ActuationMode mode{actuation::Crma{}};
};

/// Normal force and signed wall friction over one actuation cycle.
///
/// The cycle is sampled at n+1 evenly spaced instants including both ends.
/// For RRMA n is rounded up to a multiple of 4 so the sweep reversals are
/// sampled exactly (spin sign 0 there).
inline RiskProfile contact_profile(const ActuationGeometry &geometry, const MomentPair &moments,
                                   const ActuationMode &mode, double mu_wall, int n_samples) {
    if (!(mu_wall > 0.0 && mu_wall <= 2.0)) {
        throw ConfigError("contact_profile: mu_wall must lie in (0, 2]");
    }
    if (std::holds_alternative<actuation::Dma>(mode)) {
        throw std::invalid_argument("contact_profile: DMA has no rotation cycle");
    }
    if (n_samples < kMinCycleSamples) {
        throw std::invalid_argument("contact_profile: need at least 64 samples per cycle");
    }
    int n = n_samples;
    if (std::holds_alternative<actuation::Rrma>(mode)) {
        n = (n + 3) / 4 * 4;
    }
    const double period = actuation::cycle_period(mode, 1.0);
    const actuation::ActuatorPlan plan = actuation::plan_actuator(Vector3::Zero(), geometry);

    RiskProfile profile;
    profile.mode = mode;
    profile.samples.reserve(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        const double phase = static_cast<double>(k) / static_cast<double>(n);
        const actuation::SpinPhase spin = actuation::spin_phase(mode, phase * period, 1.0);
        const auto fs = actuation::force_at_phase(plan, geometry, moments, geometry.omega_dc,
                                                  spin.theta_ax);
        ContactSample s;
        s.phase = phase;
        s.theta_ax = spin.theta_ax;
        s.normal_force = std::abs(fs.force.lateral_signed());
        s.spin_sign = spin.spin_sign;
        s.signed_friction = static_cast<double>(spin.spin_sign) * mu_wall * s.normal_force;
        profile.samples.push_back(s);
    }
    return profile;
}

namespace detail {
template <class F> double cycle_average(const RiskProfile &profile, F &&value) {
    const auto &s = profile.samples;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        acc += 0.5 * (value(s[k]) + value(s[k + 1])) * (s[k + 1].phase - s[k].phase);
    }
    return acc;
}
} // namespace detail

/// Cycle-averaged signed friction (trapezoidal rule over time / period).
inline double net_twist_per_cycle(const RiskProfile &profile) {
    return detail::cycle_average(profile, [](const ContactSample &s) { return s.signed_friction; });
}

/// Cycle-averaged |friction|: the absolute friction impulse per unit cycle time.
inline double friction_impulse_per_cycle(const RiskProfile &profile) {
    return detail::cycle_average(profile,
                                 [](const ContactSample &s) { return std::abs(s.signed_friction); });
}

namespace detail {

inline double abs_lateral(const actuation::ActuatorPlan &plan, const ActuationGeometry &geometry,
                          const MomentPair &moments, double theta) {
    return std::abs(actuation::force_at_phase(plan, geometry, moments, geometry.omega_dc, theta)
                        .force.lateral_signed());
}

inline double simpson(const auto &f, double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int k = 1; k < n; ++k) {
        acc += (k % 2 == 1 ? 4.0 : 2.0) * f(a + h * k);
    }
    return acc * h / 3.0;
}

inline void check_theta_ar(double theta_ar) {
    if (!(theta_ar > 0.0 && theta_ar <= 0.5 * kPi)) {
        throw ConfigError("theta_ar must lie in (0, pi/2]");
    }
}

} // namespace detail

/// Mean |f_l| over one half reciprocation sweep, theta_ax in [pi - ar, pi + ar].
///
/// The integrand has a kink at pi (the zero crossing of f_l), so each side is
/// integrated separately with composite Simpson.
inline double mean_normal_force(const ActuationGeometry &geometry, const MomentPair &moments,
                                double theta_ar, int intervals_per_side = 1024) {
    detail::check_theta_ar(theta_ar);
    const actuation::ActuatorPlan plan = actuation::plan_actuator(Vector3::Zero(), geometry);
    const auto g = [&](double th) { return detail::abs_lateral(plan, geometry, moments, th); };
    const int n = intervals_per_side + intervals_per_side % 2;
    const double area =
        detail::simpson(g, kPi - theta_ar, kPi, n) + detail::simpson(g, kPi, kPi + theta_ar, n);
    return area / (2.0 * theta_ar);
}

/// Largest |f_l| seen during a half reciprocation sweep.
inline double max_normal_force(const ActuationGeometry &geometry, const MomentPair &moments,
                               double theta_ar, int n_samples = 4097) {
    detail::check_theta_ar(theta_ar);
    const actuation::ActuatorPlan plan = actuation::plan_actuator(Vector3::Zero(), geometry);
    double best = 0.0;
    for (int k = 0; k < n_samples; ++k) {
        const double th = kPi - theta_ar + 2.0 * theta_ar * k / (n_samples - 1);
        best = std::max(best, detail::abs_lateral(plan, geometry, moments, th));
    }
    return best;
}

/// Candidate reciprocation angle with the largest mean normal force. Every
/// RRMA candidate has zero net twist, so the stretching force decides. Ties go
/// to the larger angle so the result does not depend on candidate order.
inline double recommend_reciprocation_angle(const ActuationGeometry &geometry,
                                            const MomentPair &moments,
                                            std::span<const double> candidates) {
    if (candidates.empty()) {
        throw std::invalid_argument("recommend_reciprocation_angle: no candidates");
    }
    double best_angle = 0.0;
    double best_force = -1.0;
    for (const double c : candidates) {
        const double f = mean_normal_force(geometry, moments, c);
        if (f > best_force || (f == best_force && c > best_angle)) {
            best_force = f;
            best_angle = c;
        }
    }
    return best_angle;
}

} // namespace magcap::risk
