// Run configuration shared by the CLI commands, and the JSON forms of the
// run config and the tube environment file.
//
// Angles are degrees here (that is what users type); everything is converted
// to radians at the library boundary.
#pragma once

#include "magcap/actuation.hpp"
#include "magcap/magnetics.hpp"
#include "magcap/sim.hpp"
#include "magcap/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace magcap {

/// Bumped whenever a CSV column layout changes. Echoed in every sidecar.
inline constexpr int kCsvSchemaVersion = 1;

struct RunConfig {
    double d_m{0.15};
    double alpha_deg{10.0};
    double beta_deg{0.0};
    magnetics::MagnetSpec actuator_magnet{magnetics::default_actuator_magnet()};
    magnetics::MagnetSpec capsule_magnet{magnetics::default_capsule_magnet()};
    std::string mode{"rrma"};          ///< dma | crma | rrma
    double theta_ar_deg{90.0};
    double spin_rate_deg_s{360.0};
    double noise_sigma_t{sim::SimConfig{}.noise_sigma};
    double dt_s{0.01};
    double time_budget_s{200.0};
    std::uint64_t seed{0};
    std::string out;

    // per-command knobs
    double mu_wall{0.35};               ///< risk-sweep wall friction coefficient
    int samples{360};                   ///< force-profile samples per revolution
    int cycle_samples{720};             ///< risk-sweep samples per cycle
    int trials{500};                    ///< localize-bench
    int seeds{5};                       ///< propel
    std::vector<std::string> modes{"dma", "crma", "rrma"}; ///< propel / risk-sweep
    std::vector<double> theta_ar_grid_deg{10.0, 30.0, 50.0, 70.0, 90.0};
    bool use_localizer{true};
    std::string env_path;               ///< propel; empty = default environment

    void validate() const {
        if (!(d_m > 0.0) || !std::isfinite(d_m)) {
            throw ConfigError("d_m must be > 0");
        }
        if (!(std::abs(alpha_deg) < 90.0)) {
            throw ConfigError("alpha_deg must lie in (-90, 90)");
        }
        if (!std::isfinite(beta_deg)) {
            throw ConfigError("beta_deg must be finite");
        }
        actuator_magnet.validate();
        capsule_magnet.validate();
        actuation::validate_mode(parse_mode(mode, theta_ar_deg));
        if (!(spin_rate_deg_s > 0.0)) {
            throw ConfigError("spin_rate_deg_s must be > 0");
        }
        if (!(noise_sigma_t >= 0.0)) {
            throw ConfigError("noise_sigma_t must be >= 0");
        }
        if (!(dt_s > 1e-4 && dt_s <= 0.1)) {
            throw ConfigError("dt_s must lie in (1e-4, 0.1]");
        }
        if (!(time_budget_s > 0.0)) {
            throw ConfigError("time_budget_s must be > 0");
        }
        if (!(mu_wall > 0.0 && mu_wall <= 2.0)) {
            throw ConfigError("mu_wall must lie in (0, 2]");
        }
        if (samples < 8) {
            throw ConfigError("samples must be >= 8");
        }
        if (cycle_samples < 64) {
            throw ConfigError("cycle_samples must be >= 64");
        }
        if (trials < 1 || seeds < 1) {
            throw ConfigError("trials and seeds must be >= 1");
        }
        for (const auto &m : modes) {
            parse_mode(m, theta_ar_deg);
        }
        for (const double a : theta_ar_grid_deg) {
            if (!(a > 0.0 && a <= 90.0)) {
                throw ConfigError("theta_ar grid values must lie in (0, 90]");
            }
        }
    }

    static actuation::ActuationMode parse_mode(const std::string &name, double theta_ar_deg) {
        if (name == "dma") {
            return actuation::Dma{};
        }
        if (name == "crma") {
            return actuation::Crma{};
        }
        if (name == "rrma") {
            return actuation::Rrma{deg2rad(theta_ar_deg)};
        }
        throw ConfigError("unknown mode '" + name + "' (expected dma, crma or rrma)");
    }

    actuation::ActuationMode actuation_mode() const { return parse_mode(mode, theta_ar_deg); }

    /// Heading +x; the analyses place the capsule at the origin.
    actuation::ActuationGeometry geometry() const {
        return {d_m, deg2rad(alpha_deg), deg2rad(beta_deg), UnitVector3::unit_x()};
    }

    actuation::MomentPair moments() const {
        return {magnetics::moment_magnitude_from_spec(actuator_magnet),
                magnetics::moment_magnitude_from_spec(capsule_magnet)};
    }

    sim::SimConfig sim_config() const {
        sim::SimConfig c;
        c.d = d_m;
        c.alpha = deg2rad(alpha_deg);
        c.beta = deg2rad(beta_deg);
        c.spin_rate = deg2rad(spin_rate_deg_s);
        c.actuator_magnet = actuator_magnet;
        c.capsule_magnet = capsule_magnet;
        c.dt = dt_s;
        c.time_budget = time_budget_s;
        c.use_localizer = use_localizer;
        c.noise_sigma = noise_sigma_t;
        return c;
    }
};

// -----------------------------------------------------------------------------
// JSON
// -----------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json &j, const std::set<std::string> &known, const char *what) {
    if (!j.is_object()) {
        throw ConfigError(std::string(what) + ": expected a JSON object");
    }
    for (const auto &item : j.items()) {
        if (!known.contains(item.key())) {
            throw ConfigError(std::string(what) + ": unknown key '" + item.key() + "'");
        }
    }
}

template <class T> void read_if(const json &j, const char *key, T &target) {
    if (const auto it = j.find(key); it != j.end()) {
        try {
            target = it->get<T>();
        } catch (const json::exception &e) {
            throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

inline Vector3 vector_from_json(const json &j) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError("expected [x, y, z]");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace detail

inline nlohmann::json magnet_to_json(const magnetics::MagnetSpec &spec) {
    nlohmann::json j;
    if (const auto *s = std::get_if<magnetics::Sphere>(&spec.shape)) {
        j["shape"] = "sphere";
        j["diameter_m"] = s->diameter;
    } else {
        const auto &r = std::get<magnetics::Ring>(spec.shape);
        j["shape"] = "ring";
        j["outer_diameter_m"] = r.outer_diameter;
        j["inner_diameter_m"] = r.inner_diameter;
        j["length_m"] = r.length;
    }
    j["remanence_t"] = spec.remanence;
    return j;
}

inline magnetics::MagnetSpec magnet_from_json(const nlohmann::json &j) {
    detail::reject_unknown(
        j, {"shape", "diameter_m", "outer_diameter_m", "inner_diameter_m", "length_m", "remanence_t"},
        "magnet");
    std::string shape;
    detail::read_if(j, "shape", shape);
    magnetics::MagnetSpec spec{magnetics::Sphere{0.0}, 0.0};
    detail::read_if(j, "remanence_t", spec.remanence);
    if (shape == "sphere") {
        magnetics::Sphere s{0.0};
        detail::read_if(j, "diameter_m", s.diameter);
        spec.shape = s;
    } else if (shape == "ring") {
        magnetics::Ring r{0.0, 0.0, 0.0};
        detail::read_if(j, "outer_diameter_m", r.outer_diameter);
        detail::read_if(j, "inner_diameter_m", r.inner_diameter);
        detail::read_if(j, "length_m", r.length);
        spec.shape = r;
    } else {
        throw ConfigError("magnet: shape must be 'sphere' or 'ring'");
    }
    spec.validate();
    return spec;
}

inline nlohmann::json to_json(const RunConfig &c) {
    nlohmann::json j;
    j["d_m"] = c.d_m;
    j["alpha_deg"] = c.alpha_deg;
    j["beta_deg"] = c.beta_deg;
    j["actuator_magnet"] = magnet_to_json(c.actuator_magnet);
    j["capsule_magnet"] = magnet_to_json(c.capsule_magnet);
    j["mode"] = c.mode;
    j["theta_ar_deg"] = c.theta_ar_deg;
    j["spin_rate_deg_s"] = c.spin_rate_deg_s;
    j["noise_sigma_t"] = c.noise_sigma_t;
    j["dt_s"] = c.dt_s;
    j["time_budget_s"] = c.time_budget_s;
    j["seed"] = c.seed;
    j["out"] = c.out;
    j["mu_wall"] = c.mu_wall;
    j["samples"] = c.samples;
    j["cycle_samples"] = c.cycle_samples;
    j["trials"] = c.trials;
    j["seeds"] = c.seeds;
    j["modes"] = c.modes;
    j["theta_ar_grid_deg"] = c.theta_ar_grid_deg;
    j["use_localizer"] = c.use_localizer;
    j["env_path"] = c.env_path;
    return j;
}

/// Missing keys keep their defaults; unknown keys are an error.
inline RunConfig run_config_from_json(const nlohmann::json &j) {
    detail::reject_unknown(j,
                           {"d_m", "alpha_deg", "beta_deg", "actuator_magnet", "capsule_magnet",
                            "mode", "theta_ar_deg", "spin_rate_deg_s", "noise_sigma_t", "dt_s",
                            "time_budget_s", "seed", "out", "mu_wall", "samples", "cycle_samples",
                            "trials", "seeds", "modes", "theta_ar_grid_deg", "use_localizer",
                            "env_path"},
                           "config");
    RunConfig c;
    detail::read_if(j, "d_m", c.d_m);
    detail::read_if(j, "alpha_deg", c.alpha_deg);
    detail::read_if(j, "beta_deg", c.beta_deg);
    if (j.contains("actuator_magnet")) {
        c.actuator_magnet = magnet_from_json(j["actuator_magnet"]);
    }
    if (j.contains("capsule_magnet")) {
        c.capsule_magnet = magnet_from_json(j["capsule_magnet"]);
    }
    detail::read_if(j, "mode", c.mode);
    detail::read_if(j, "theta_ar_deg", c.theta_ar_deg);
    detail::read_if(j, "spin_rate_deg_s", c.spin_rate_deg_s);
    detail::read_if(j, "noise_sigma_t", c.noise_sigma_t);
    detail::read_if(j, "dt_s", c.dt_s);
    detail::read_if(j, "time_budget_s", c.time_budget_s);
    detail::read_if(j, "seed", c.seed);
    detail::read_if(j, "out", c.out);
    detail::read_if(j, "mu_wall", c.mu_wall);
    detail::read_if(j, "samples", c.samples);
    detail::read_if(j, "cycle_samples", c.cycle_samples);
    detail::read_if(j, "trials", c.trials);
    detail::read_if(j, "seeds", c.seeds);
    detail::read_if(j, "modes", c.modes);
    detail::read_if(j, "theta_ar_grid_deg", c.theta_ar_grid_deg);
    detail::read_if(j, "use_localizer", c.use_localizer);
    detail::read_if(j, "env_path", c.env_path);
    return c;
}

inline nlohmann::json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open '" + path + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline RunConfig load_run_config(const std::string &path) {
    return run_config_from_json(read_json_file(path));
}

// -----------------------------------------------------------------------------
// Environment file
// -----------------------------------------------------------------------------

inline nlohmann::json to_json(const sim::TubeEnvironment &env) {
    nlohmann::json j;
    nlohmann::json pts = nlohmann::json::array();
    for (const auto &p : env.centerline) {
        pts.push_back({p.x(), p.y(), p.z()});
    }
    j["centerline"] = pts;
    j["inner_radius_m"] = env.inner_radius;
    j["mu_static"] = env.mu_static;
    j["mu_kinetic"] = env.mu_kinetic;
    j["rotation_friction_factor"] = env.rotation_friction_factor;
    j["hoop_resistance_n"] = env.hoop_resistance;
    j["twist_compliance"] = env.twist_compliance;
    j["volvulus_threshold_rad"] = env.volvulus_threshold;
    j["gravity_load_n"] = env.gravity_load;
    j["viscous_coefficient"] = env.viscous_coefficient;
    return j;
}

/// `centerline` is required; the other keys default to default_environment().
inline sim::TubeEnvironment environment_from_json(const nlohmann::json &j) {
    detail::reject_unknown(j,
                           {"centerline", "inner_radius_m", "mu_static", "mu_kinetic",
                            "rotation_friction_factor", "hoop_resistance_n", "twist_compliance",
                            "volvulus_threshold_rad", "gravity_load_n", "viscous_coefficient"},
                           "environment");
    if (!j.contains("centerline") || !j["centerline"].is_array()) {
        throw ConfigError("environment: 'centerline' must be a list of [x, y, z] points");
    }
    sim::TubeEnvironment env = sim::default_environment();
    env.centerline.clear();
    for (const auto &p : j["centerline"]) {
        env.centerline.push_back(detail::vector_from_json(p));
    }
    detail::read_if(j, "inner_radius_m", env.inner_radius);
    detail::read_if(j, "mu_static", env.mu_static);
    detail::read_if(j, "mu_kinetic", env.mu_kinetic);
    detail::read_if(j, "rotation_friction_factor", env.rotation_friction_factor);
    detail::read_if(j, "hoop_resistance_n", env.hoop_resistance);
    detail::read_if(j, "twist_compliance", env.twist_compliance);
    detail::read_if(j, "volvulus_threshold_rad", env.volvulus_threshold);
    detail::read_if(j, "gravity_load_n", env.gravity_load);
    detail::read_if(j, "viscous_coefficient", env.viscous_coefficient);
    env.validate();
    return env;
}

inline sim::TubeEnvironment load_environment(const std::string &path) {
    return environment_from_json(read_json_file(path));
}

} // namespace magcap
