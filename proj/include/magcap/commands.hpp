// The batch analyses behind the CLI subcommands.
//
// Each command validates its config, runs, and returns its tables as CSV text:
// a main table plus optional extra tables keyed by a file suffix. Nothing here
// touches the filesystem except loading an environment file for `propel`.
#pragma once

#include "magcap/actuation.hpp"
#include "magcap/localization_bench.hpp"
#include "magcap/risk.hpp"
#include "magcap/run_config.hpp"
#include "magcap/sim.hpp"

#include <algorithm>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

namespace magcap::commands {

struct Table {
    std::string suffix; ///< "" for the main output, else appended to the output path
    std::string csv;
};

struct CommandResult {
    std::vector<Table> tables;

    const std::string &main() const { return tables.front().csv; }
    const std::string *find(const std::string &suffix) const {
        for (const auto &t : tables) {
            if (t.suffix == suffix) {
                return &t.csv;
            }
        }
        return nullptr;
    }
};

/// Minimal RFC-4180 writer: comma separated, dot decimal, 12 significant digits.
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string> &header) {
        os_.imbue(std::locale::classic());
        os_.precision(12);
        row(header);
    }

    template <class... Ts> void add(const Ts &...fields) {
        bool first = true;
        ((put(fields, first)), ...);
        os_ << "\r\n";
    }

    void row(const std::vector<std::string> &fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) {
                os_ << ',';
            }
            os_ << quote(fields[i]);
        }
        os_ << "\r\n";
    }

    std::string str() const { return os_.str(); }

private:
    static std::string quote(const std::string &s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos) {
            return s;
        }
        std::string out = "\"";
        for (const char c : s) {
            out += c;
            if (c == '"') {
                out += '"';
            }
        }
        return out + "\"";
    }

    template <class T> void put(const T &v, bool &first) {
        if (!first) {
            os_ << ',';
        }
        first = false;
        if constexpr (std::is_convertible_v<T, std::string>) {
            os_ << quote(std::string(v));
        } else if constexpr (std::is_same_v<T, bool>) {
            os_ << (v ? 1 : 0);
        } else {
            os_ << v;
        }
    }

    std::ostringstream os_;
};

// -----------------------------------------------------------------------------

/// Force decomposition over one actuator revolution, raw [N] and normalized by
/// the largest total force of the revolution.
inline CommandResult force_profile(const RunConfig &cfg) {
    cfg.validate();
    const auto geometry = cfg.geometry();
    const auto samples =
        actuation::force_profile(geometry, cfg.moments(), geometry.omega_dc, cfg.samples);
    double scale = 0.0;
    for (const auto &s : samples) {
        scale = std::max(scale, s.force.total().norm());
    }
    CsvWriter csv({"theta_ax_deg", "f_p", "f_l_signed", "f_r", "f_total", "f_p_norm",
                   "f_l_signed_norm", "f_r_norm", "f_total_norm"});
    for (const auto &s : samples) {
        const double fp = s.force.propulsive_signed();
        const double fl = s.force.lateral_signed();
        const double fr = s.force.remainder.norm();
        const double ft = s.force.total().norm();
        csv.add(rad2deg(s.theta_ax), fp, fl, fr, ft, fp / scale, fl / scale, fr / scale, ft / scale);
    }
    return {{{"", csv.str()}}};
}

/// Net twist per cycle for CRMA and RRMA at each reciprocation angle, plus the
/// per-sample contact profiles.
inline CommandResult risk_sweep(const RunConfig &cfg) {
    cfg.validate();
    std::vector<std::string> modes;
    for (const auto &m : cfg.modes) {
        if (m != "dma") {
            modes.push_back(m);
        }
    }
    if (modes.empty()) {
        throw ConfigError("risk-sweep: needs at least one rotating mode (crma or rrma)");
    }
    const auto geometry = cfg.geometry();
    const auto moments = cfg.moments();
    CsvWriter summary({"mode", "theta_ar_deg", "net_twist_per_cycle_n", "friction_impulse_per_cycle_n",
                       "mean_normal_force_n"});
    CsvWriter profiles({"mode", "theta_ar_deg", "phase", "theta_ax_deg", "normal_force_n",
                        "signed_friction_n", "spin_sign"});
    auto emit = [&](const std::string &name, double theta_ar_deg, const actuation::ActuationMode &mode) {
        const auto profile = risk::contact_profile(geometry, moments, mode, cfg.mu_wall, cfg.cycle_samples);
        double normal = 0.0;
        for (const auto &s : profile.samples) {
            profiles.add(name, theta_ar_deg, s.phase, rad2deg(s.theta_ax), s.normal_force,
                         s.signed_friction, s.spin_sign);
            normal += s.normal_force;
        }
        normal /= static_cast<double>(profile.samples.size());
        summary.add(name, theta_ar_deg, risk::net_twist_per_cycle(profile),
                    risk::friction_impulse_per_cycle(profile), normal);
    };
    for (const auto &m : modes) {
        if (m == "crma") {
            emit("CRMA", 0.0, actuation::Crma{});
        } else {
            for (const double a : cfg.theta_ar_grid_deg) {
                emit("RRMA", a, actuation::Rrma{deg2rad(a)});
            }
        }
    }
    return {{{"", summary.str()}, {".profiles.csv", profiles.str()}}};
}

/// Mean and max normal force over the reciprocation-angle grid and the
/// recommended angle among the grid points.
inline CommandResult normal_force_sweep(const RunConfig &cfg) {
    cfg.validate();
    const auto geometry = cfg.geometry();
    const auto moments = cfg.moments();
    std::vector<double> grid = cfg.theta_ar_grid_deg;
    std::sort(grid.begin(), grid.end());
    std::vector<double> radians;
    for (const double a : grid) {
        radians.push_back(deg2rad(a));
    }
    const double best = risk::recommend_reciprocation_angle(geometry, moments, radians);
    CsvWriter csv({"theta_ar_deg", "mean_normal_force_n", "max_normal_force_n", "recommended"});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        csv.add(grid[i], risk::mean_normal_force(geometry, moments, radians[i]),
                risk::max_normal_force(geometry, moments, radians[i]), radians[i] == best);
    }
    return {{{"", csv.str()}}};
}

/// Monte-Carlo localization accuracy at the configured sensor noise.
inline CommandResult localize_bench(const RunConfig &cfg) {
    cfg.validate();
    const auto array = sensing::SensorArray::grid(8, 10, 0.06, cfg.noise_sigma_t);
    const double mc = magnetics::moment_magnitude_from_spec(cfg.capsule_magnet);
    const auto trials = sensing::run_localization_bench(array, mc, cfg.trials, cfg.seed);
    CsvWriter rows({"trial", "true_x_m", "true_y_m", "true_z_m", "est_x_m", "est_y_m", "est_z_m",
                    "position_error_m", "orientation_error_deg", "converged", "iterations",
                    "residual_rms_t"});
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto &t = trials[i];
        rows.add(i, t.true_position.x(), t.true_position.y(), t.true_position.z(),
                 t.estimate.position.x(), t.estimate.position.y(), t.estimate.position.z(),
                 t.position_error, rad2deg(t.orientation_error), t.estimate.converged,
                 t.estimate.iterations, t.estimate.residual_rms);
    }
    const auto s = sensing::summarize(trials);
    CsvWriter summary({"trials", "converged", "noise_sigma_t", "rms_position_error_mm",
                       "mean_position_error_mm", "std_position_error_mm",
                       "mean_orientation_error_deg", "std_orientation_error_deg"});
    summary.add(s.trials, s.converged, cfg.noise_sigma_t, 1e3 * s.rms_position_error,
                1e3 * s.mean_position_error, 1e3 * s.std_position_error,
                rad2deg(s.mean_orientation_error), rad2deg(s.std_orientation_error));
    return {{{"", rows.str()}, {".summary.csv", summary.str()}}};
}

inline std::string trace_csv(const sim::SimResult &r) {
    CsvWriter csv({"t", "arc_length_m", "twist_rad", "theta_ax_deg", "f_p", "f_l_signed", "f_r"});
    for (const auto &s : r.trace) {
        csv.add(s.t, s.arc_length, s.twist, rad2deg(s.theta_ax), s.f_p, s.f_l_signed, s.f_r);
    }
    return csv.str();
}

/// Closed-loop propulsion for every configured mode over seeds seed..seed+n-1.
/// Main table: one row per run. Summary: success rate and mean speed of the
/// successful runs per mode. With `traces`, one step trace per run.
inline CommandResult propel(const RunConfig &cfg, bool traces = false) {
    cfg.validate();
    if (cfg.modes.empty()) {
        throw ConfigError("propel: empty mode list");
    }
    const sim::TubeEnvironment env =
        cfg.env_path.empty() ? sim::default_environment() : load_environment(cfg.env_path);
    const sim::SimConfig sc = cfg.sim_config();

    CommandResult out;
    CsvWriter runs({"mode", "seed", "success", "failure_reason", "time_s", "distance_m",
                    "avg_speed_mm_s", "max_abs_twist_rad", "localizer_fallbacks"});
    CsvWriter summary({"mode", "runs", "successes", "success_rate", "avg_speed_mm_s",
                       "stalls", "volvulus", "timeouts"});
    std::vector<Table> trace_tables;
    for (const auto &name : cfg.modes) {
        const auto mode = RunConfig::parse_mode(name, cfg.theta_ar_deg);
        int successes = 0;
        int stalls = 0;
        int volvulus = 0;
        int timeouts = 0;
        double speed_sum = 0.0;
        for (int k = 0; k < cfg.seeds; ++k) {
            const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
            const auto r = sim::run_propulsion(env, mode, sc, seed);
            runs.add(actuation::mode_name(mode), seed, r.success, sim::to_string(r.failure_reason),
                     r.time_elapsed, r.distance, 1e3 * r.avg_speed, r.max_abs_twist,
                     r.localizer_fallbacks);
            if (r.success) {
                ++successes;
                speed_sum += r.avg_speed;
            }
            stalls += r.failure_reason == sim::FailureReason::kStall ? 1 : 0;
            volvulus += r.failure_reason == sim::FailureReason::kVolvulus ? 1 : 0;
            timeouts += r.failure_reason == sim::FailureReason::kTimeout ? 1 : 0;
            if (traces) {
                trace_tables.push_back(
                    {"." + name + ".seed" + std::to_string(seed) + ".trace.csv", trace_csv(r)});
            }
        }
        const double mean_speed = successes > 0 ? 1e3 * speed_sum / successes : 0.0;
        summary.add(actuation::mode_name(mode), cfg.seeds, successes,
                    static_cast<double>(successes) / cfg.seeds, mean_speed, stalls, volvulus,
                    timeouts);
    }
    out.tables.push_back({"", runs.str()});
    out.tables.push_back({".summary.csv", summary.str()});
    for (auto &t : trace_tables) {
        out.tables.push_back(std::move(t));
    }
    return out;
}

/// Worst relative deviation of the RRMA force from the theta_ax = 180 deg force.
inline CommandResult approx_check(const RunConfig &cfg) {
    cfg.validate();
    const auto geometry = cfg.geometry();
    std::vector<double> grid = cfg.theta_ar_grid_deg;
    std::sort(grid.begin(), grid.end());
    CsvWriter csv({"theta_ar_deg", "approximation_error"});
    for (const double a : grid) {
        csv.add(a, actuation::approximation_error(geometry, actuation::Rrma{deg2rad(a)}));
    }
    return {{{"", csv.str()}}};
}

} // namespace magcap::commands
