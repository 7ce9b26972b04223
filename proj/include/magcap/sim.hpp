// Quasi-static closed-loop propulsion of a magnetic capsule through a tube.
//
// The capsule rides the tube centerline. Each step it feels the magnetic force
// from the commanded actuator pose; the propulsive component has to beat a
// Coulomb wall friction plus a constant hoop resistance at the advancing
// front, and the excess is mapped to speed through a viscous coefficient (no
// inertia). A spinning capsule drags the wall with it and accumulates twist;
// crossing the volvulus threshold ends the run.
//
// The loop mirrors a real system: sense -> subtract actuator -> localize ->
// estimate heading -> re-plan actuator -> move.
#pragma once

#include "magcap/actuation.hpp"
#include "magcap/heading.hpp"
#include "magcap/magnetics.hpp"
#include "magcap/sensing.hpp"
#include "magcap/types.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace magcap::sim {

using actuation::ActuationGeometry;
using actuation::ActuationMode;
using actuation::ActuatorCommand;
using actuation::MomentPair;

/// Capsule radius of the default 16 mm capsule [m].
inline constexpr double kCapsuleRadius = 0.008;

struct TubeEnvironment {
    std::vector<Vector3> centerline;     ///< piecewise-linear, m
    double inner_radius{0.009};          ///< m
    double mu_static{0.5};
    double mu_kinetic{0.35};
    double rotation_friction_factor{0.3}; ///< kinetic multiplier while spinning
    double hoop_resistance{0.001};       ///< N
    double twist_compliance{24.6};       ///< rad / (N s)
    double volvulus_threshold{kTwoPi};   ///< rad
    double gravity_load{0.02};           ///< N
    double viscous_coefficient{1.2};     ///< N s / m

    void validate(double capsule_radius = kCapsuleRadius) const {
        if (centerline.size() < 2) {
            throw ConfigError("TubeEnvironment: centerline needs at least 2 points");
        }
        for (std::size_t i = 0; i < centerline.size(); ++i) {
            if (!centerline[i].allFinite()) {
                throw ConfigError("TubeEnvironment: non-finite centerline point");
            }
            if (i > 0 && !((centerline[i] - centerline[i - 1]).norm() > 0.0)) {
                throw ConfigError("TubeEnvironment: repeated centerline point");
            }
        }
        if (!(inner_radius > capsule_radius)) {
            throw ConfigError("TubeEnvironment: inner_radius must exceed the capsule radius");
        }
        if (!(mu_kinetic > 0.0 && mu_kinetic <= mu_static)) {
            throw ConfigError("TubeEnvironment: need 0 < mu_kinetic <= mu_static");
        }
        if (!(rotation_friction_factor > 0.0 && rotation_friction_factor <= 1.0)) {
            throw ConfigError("TubeEnvironment: rotation_friction_factor must lie in (0, 1]");
        }
        if (!(hoop_resistance >= 0.0) || !(gravity_load >= 0.0) || !(twist_compliance >= 0.0)) {
            throw ConfigError("TubeEnvironment: hoop, gravity and compliance must be >= 0");
        }
        if (!(volvulus_threshold > 0.0)) {
            throw ConfigError("TubeEnvironment: volvulus_threshold must be > 0");
        }
        if (!(viscous_coefficient > 0.0)) {
            throw ConfigError("TubeEnvironment: viscous_coefficient must be > 0");
        }
    }

    double length() const {
        double total = 0.0;
        for (std::size_t i = 1; i < centerline.size(); ++i) {
            total += (centerline[i] - centerline[i - 1]).norm();
        }
        return total;
    }

    /// Segment index containing arc length s, and the arc length at its start.
    std::pair<std::size_t, double> locate(double s) const {
        double start = 0.0;
        for (std::size_t i = 1; i < centerline.size(); ++i) {
            const double len = (centerline[i] - centerline[i - 1]).norm();
            if (s < start + len || i + 1 == centerline.size()) {
                return {i - 1, start};
            }
            start += len;
        }
        return {0, 0.0};
    }

    Vector3 point_at(double s) const {
        const auto [i, start] = locate(s);
        const Vector3 seg = centerline[i + 1] - centerline[i];
        const double len = seg.norm();
        const double u = std::clamp((s - start) / len, 0.0, 1.0);
        return centerline[i] + u * seg;
    }

    UnitVector3 tangent_at(double s) const {
        const auto [i, start] = locate(s);
        return UnitVector3::normalize(centerline[i + 1] - centerline[i]);
    }
};

/// Straight 155 mm tube, 10 cm above the middle of the default sensor array.
/// Friction, hoop, viscous and twist constants are calibrated so that DMA
/// stalls, RRMA(90 deg) advances at about 1.8 mm/s, and CRMA arrives at the
/// end with its twist within about 1% of the volvulus threshold, so whether a
/// CRMA run fails depends on the sensor-noise seed. See tools/calibrate_sim.cpp.
inline TubeEnvironment default_environment() {
    TubeEnvironment env;
    env.centerline = {Vector3(0.1325, 0.27, 0.10), Vector3(0.2875, 0.27, 0.10)};
    return env;
}

struct SimState {
    double arc_length{0.0};
    UnitVector3 heading{};
    double twist{0.0};
    double time{0.0};
    int stalled_steps{0};
    bool volvulus{false};
    bool moving{false};
    std::optional<UnitVector3> capsule_moment; ///< last well-defined m_c
};

inline SimState initial_state(const TubeEnvironment &env) {
    SimState s;
    s.heading = env.tangent_at(0.0);
    return s;
}

/// One recorded row of a run.
struct StepRecord {
    double t{0.0};
    double arc_length{0.0};
    double twist{0.0};
    double theta_ax{0.0};
    double f_p{0.0};
    double f_l_signed{0.0};
    double f_r{0.0};
    Vector3 position{Vector3::Zero()};
};

struct StepResult {
    SimState state;
    StepRecord record;
};

/// Advances the capsule by dt under `command`.
inline StepResult step(const SimState &state, const TubeEnvironment &env,
                       const ActuatorCommand &command, const MomentPair &moments, double dt) {
    if (!(dt > 1e-4 && dt <= 0.1)) {
        throw std::invalid_argument("sim::step: dt must lie in (1e-4, 0.1] s");
    }
    const double length = env.length();
    const Vector3 p_c = env.point_at(state.arc_length);
    const UnitVector3 axis = env.tangent_at(state.arc_length);

    SimState next = state;
    actuation::ForceDecomposition dec;
    dec.axis = axis;
    if (moments.actuator > 0.0 && moments.capsule > 0.0) {
        const auto angles = actuation::axis_angles_from_unit_vector(command.rotation_axis);
        const magnetics::Moment actuator{
            moments.actuator, actuation::actuator_moment_direction(angles, command.theta_ax)};
        const Vector3 r = p_c - command.position;
        const UnitVector3 *held = state.capsule_moment ? &*state.capsule_moment : nullptr;
        const auto cf = actuation::evaluate_capsule_force(r, actuator, moments.capsule, axis, held);
        next.capsule_moment = cf.capsule_moment;
        dec = actuation::decompose_force(cf.force, p_c, command.position, axis);
    }

    const double lateral = dec.lateral_signed();
    const double normal = std::abs(lateral) + env.gravity_load;
    const bool spinning = command.spin_sign != 0;
    double mu = 0.0;
    if (spinning) {
        mu = env.mu_kinetic * env.rotation_friction_factor;
    } else {
        mu = state.moving ? env.mu_kinetic : env.mu_static;
    }
    const double resistance = mu * normal + env.hoop_resistance;
    const double drive = dec.propulsive_signed();

    if (drive > resistance && state.arc_length < length) {
        const double speed = (drive - resistance) / env.viscous_coefficient;
        next.arc_length = std::min(state.arc_length + speed * dt, length);
        next.moving = true;
        next.stalled_steps = 0;
    } else {
        next.moving = false;
        ++next.stalled_steps;
    }

    next.twist += env.twist_compliance * static_cast<double>(command.spin_sign) * mu * normal * dt;
    if (std::abs(next.twist) >= env.volvulus_threshold) {
        next.volvulus = true;
    }
    next.time = state.time + dt;
    next.heading = env.tangent_at(next.arc_length);

    StepRecord rec;
    rec.t = next.time;
    rec.arc_length = next.arc_length;
    rec.twist = next.twist;
    rec.theta_ax = command.theta_ax;
    rec.f_p = drive;
    rec.f_l_signed = lateral;
    rec.f_r = dec.remainder.norm();
    rec.position = env.point_at(next.arc_length);
    return {next, rec};
}

/// Re-plans the actuator from the latest pose estimate: the desired heading is
/// the estimated moving direction, (d, alpha, beta) stay fixed relative to the
/// capsule, the spin phase follows the actuation mode.
inline ActuatorCommand closed_loop_update(const sensing::PoseEstimate &estimate,
                                          const ActuationGeometry &geometry,
                                          const ActuationMode &mode, double t, double spin_rate) {
    ActuationGeometry g = geometry;
    g.omega_dc = estimate.heading;
    const actuation::ActuatorPlan plan = actuation::plan_actuator(estimate.position, g);
    const actuation::SpinPhase phase = actuation::spin_phase(mode, t, spin_rate);
    ActuatorCommand cmd;
    cmd.position = plan.position;
    cmd.rotation_axis = plan.rotation_axis;
    cmd.theta_ax = phase.theta_ax;
    cmd.spin_sign = phase.spin_sign;
    cmd.spin_rate = spin_rate * static_cast<double>(phase.spin_sign);
    cmd.time = t;
    return cmd;
}

struct SimConfig {
    double d{0.15};
    double alpha{deg2rad(10.0)};
    double beta{0.0};
    double spin_rate{kTwoPi}; ///< rad/s
    magnetics::MagnetSpec actuator_magnet{magnetics::default_actuator_magnet()};
    magnetics::MagnetSpec capsule_magnet{magnetics::default_capsule_magnet()};
    double dt{0.01};
    double time_budget{200.0};
    bool use_localizer{true};
    double noise_sigma{2e-6};  ///< T per axis
    int stall_limit{500};
    int history_stride{50};    ///< localizer samples averaged per history point
    int heading_window{10};     ///< history points used for the heading fit
    double min_heading_travel{1e-2};
    double max_fix_jump{0.02}; ///< m; fixes farther than this from the last estimate are rejected
    Vector3 background{2.0e-5, 0.0, -4.5e-5}; ///< T, earth-like
    int record_stride{1};

    void validate() const {
        ActuationGeometry g{d, alpha, beta, UnitVector3::unit_x()};
        g.validate();
        if (!(spin_rate > 0.0)) {
            throw ConfigError("SimConfig: spin_rate must be > 0");
        }
        actuator_magnet.validate();
        capsule_magnet.validate();
        if (!(dt > 1e-4 && dt <= 0.1)) {
            throw ConfigError("SimConfig: dt must lie in (1e-4, 0.1] s");
        }
        if (!(time_budget > 0.0)) {
            throw ConfigError("SimConfig: time_budget must be > 0");
        }
        if (!(noise_sigma >= 0.0)) {
            throw ConfigError("SimConfig: noise_sigma must be >= 0");
        }
        if (!(max_fix_jump > 0.0)) {
            throw ConfigError("SimConfig: max_fix_jump must be > 0");
        }
        if (stall_limit < 1 || history_stride < 1 || heading_window < 4 || record_stride < 1) {
            throw ConfigError("SimConfig: stall_limit, history_stride, record_stride >= 1; heading_window >= 4");
        }
    }
};

enum class FailureReason { kNone, kStall, kVolvulus, kTimeout };

inline const char *to_string(FailureReason r) {
    switch (r) {
    case FailureReason::kNone:
        return "none";
    case FailureReason::kStall:
        return "stall";
    case FailureReason::kVolvulus:
        return "volvulus";
    case FailureReason::kTimeout:
        return "timeout";
    }
    return "unknown";
}

struct SimResult {
    bool success{false};
    FailureReason failure_reason{FailureReason::kTimeout};
    double avg_speed{0.0};    ///< m/s
    double time_elapsed{0.0}; ///< s
    double distance{0.0};     ///< m
    double max_abs_twist{0.0};
    int localizer_fallbacks{0};
    std::vector<StepRecord> trace;
};

/// Full closed-loop run until the tube end, volvulus, stall or timeout.
/// Deterministic in (env, mode, config, seed).
inline SimResult run_propulsion(const TubeEnvironment &env, const ActuationMode &mode,
                                const SimConfig &config, std::uint64_t seed) {
    env.validate();
    config.validate();
    actuation::validate_mode(mode);

    const MomentPair moments{magnetics::moment_magnitude_from_spec(config.actuator_magnet),
                             magnetics::moment_magnitude_from_spec(config.capsule_magnet)};
    const ActuationGeometry geometry{config.d, config.alpha, config.beta, UnitVector3::unit_x()};
    const double length = env.length();

    std::mt19937_64 rng(seed);
    const auto array = sensing::SensorArray::grid(8, 10, 0.06, config.noise_sigma);

    SimState state = initial_state(env);

    sensing::PoseEstimate estimate;
    estimate.position = env.point_at(0.0);
    estimate.heading = state.heading;
    estimate.converged = true;

    ActuatorCommand command =
        closed_loop_update(estimate, geometry, mode, 0.0, config.spin_rate);
    {
        // capsule magnet settles into the initial field before the run starts
        const auto angles = actuation::axis_angles_from_unit_vector(command.rotation_axis);
        const magnetics::Moment ma{moments.actuator,
                                   actuation::actuator_moment_direction(angles, command.theta_ax)};
        const auto cf = actuation::evaluate_capsule_force(estimate.position - command.position, ma,
                                                          moments.capsule, state.heading);
        state.capsule_moment = cf.capsule_moment;
        estimate.moment_direction = cf.capsule_moment;
    }

    Vector3 background_estimate = config.background;
    if (config.use_localizer) {
        const auto empty = sensing::sample_field(array, {}, config.background, rng);
        background_estimate = sensing::estimate_background(empty);
    }

    std::vector<sensing::TimedPosition> history;
    Vector3 history_acc = Vector3::Zero();
    int history_count = 0;

    SimResult result;
    const auto max_steps = static_cast<long>(std::ceil(config.time_budget / config.dt));
    StepRecord last_record;
    for (long k = 0; k < max_steps; ++k) {
        const double t = static_cast<double>(k) * config.dt;
        const Vector3 p_true = env.point_at(state.arc_length);

        if (config.use_localizer) {
            const auto angles = actuation::axis_angles_from_unit_vector(command.rotation_axis);
            const sensing::DipoleSource actuator{
                command.position,
                {moments.actuator, actuation::actuator_moment_direction(angles, command.theta_ax)}};
            const sensing::DipoleSource capsule{p_true, {moments.capsule, *state.capsule_moment}};
            const std::vector<sensing::DipoleSource> sources{capsule, actuator};
            const auto reading = sensing::sample_field(array, sources, config.background, rng, t);
            const auto cleaned =
                sensing::subtract_actuator(reading, array, actuator, background_estimate);
            bool ok = false;
            try {
                const auto fit =
                    sensing::localize_capsule(array, cleaned, moments.capsule, estimate);
                if (fit.converged &&
                    (fit.position - estimate.position).norm() <= config.max_fix_jump) {
                    estimate.position = fit.position;
                    estimate.moment_direction = fit.moment_direction;
                    estimate.residual_rms = fit.residual_rms;
                    ok = true;
                }
            } catch (const std::domain_error &) {
            }
            if (!ok) {
                ++result.localizer_fallbacks;
            }
            history_acc += estimate.position;
            if (++history_count == config.history_stride) {
                history.push_back({t, history_acc / static_cast<double>(history_count)});
                history_acc.setZero();
                history_count = 0;
                try {
                    estimate.heading = sensing::estimate_heading(history, config.heading_window,
                                                                 config.min_heading_travel);
                } catch (const DegenerateError &) {
                    // keep the previous heading
                }
            }
        } else {
            estimate.position = p_true;
            estimate.heading = env.tangent_at(state.arc_length);
            if (state.capsule_moment) {
                estimate.moment_direction = *state.capsule_moment;
            }
        }

        // the actuator follows the stride-averaged position, not the raw fix
        sensing::PoseEstimate control = estimate;
        if (config.use_localizer && !history.empty()) {
            control.position = history.back().position;
        }
        try {
            command = closed_loop_update(control, geometry, mode, t, config.spin_rate);
        } catch (const DegenerateError &) {
            // hold the previous actuator pose, keep the waveform running
            const auto phase = actuation::spin_phase(mode, t, config.spin_rate);
            command.theta_ax = phase.theta_ax;
            command.spin_sign = phase.spin_sign;
            command.spin_rate = config.spin_rate * phase.spin_sign;
            command.time = t;
        }

        const StepResult out = step(state, env, command, moments, config.dt);
        state = out.state;
        last_record = out.record;
        result.max_abs_twist = std::max(result.max_abs_twist, std::abs(state.twist));
        if (k % config.record_stride == 0) {
            result.trace.push_back(out.record);
        }

        if (state.volvulus) {
            result.failure_reason = FailureReason::kVolvulus;
            break;
        }
        if (state.arc_length >= length) {
            result.success = true;
            result.failure_reason = FailureReason::kNone;
            break;
        }
        if (state.stalled_steps >= config.stall_limit) {
            result.failure_reason = FailureReason::kStall;
            break;
        }
    }
    result.time_elapsed = state.time;
    result.distance = state.arc_length;
    result.avg_speed = state.time > 0.0 ? state.arc_length / state.time : 0.0;
    if (state.time > 0.0 && (result.trace.empty() || result.trace.back().t != last_record.t)) {
        result.trace.push_back(last_record);
    }
    return result;
}

} // namespace magcap::sim
