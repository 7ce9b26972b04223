// magcap: batch CLI over the actuation, risk, sensing and propulsion models.
//
//   magcap <command> [--config file.json] [--seed N] [--out path.csv] [flags]
//
// Flags override values from --config. Every output gets a sidecar
// `<out>.config.json` with the effective configuration. MAGCAP_LOG sets the
// log level (trace, debug, info, warn, error, off; default warn).
#include "magcap/commands.hpp"
#include "magcap/run_config.hpp"

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

namespace {

using magcap::RunConfig;

/// Values given on the command line; unset ones fall back to the config file.
struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<double> d_m;
    std::optional<double> alpha_deg;
    std::optional<double> beta_deg;
    std::optional<std::string> mode;
    std::optional<double> theta_ar_deg;
    std::optional<double> spin_rate_deg_s;
    std::optional<double> noise_sigma_t;
    std::optional<double> dt_s;
    std::optional<double> time_budget_s;
    std::optional<double> mu_wall;
    std::optional<int> samples;
    std::optional<int> cycle_samples;
    std::optional<int> trials;
    std::optional<int> seeds;
    std::optional<std::vector<std::string>> modes;
    std::optional<std::vector<double>> theta_ar_grid_deg;
    std::optional<bool> use_localizer;
    std::optional<std::string> env_path;
    bool traces{false};
};

template <class T> void apply(const std::optional<T> &src, T &dst) {
    if (src) {
        dst = *src;
    }
}

RunConfig effective_config(const Overrides &o) {
    RunConfig c = o.config_path ? magcap::load_run_config(*o.config_path) : RunConfig{};
    apply(o.seed, c.seed);
    apply(o.out, c.out);
    apply(o.d_m, c.d_m);
    apply(o.alpha_deg, c.alpha_deg);
    apply(o.beta_deg, c.beta_deg);
    apply(o.mode, c.mode);
    apply(o.theta_ar_deg, c.theta_ar_deg);
    apply(o.spin_rate_deg_s, c.spin_rate_deg_s);
    apply(o.noise_sigma_t, c.noise_sigma_t);
    apply(o.dt_s, c.dt_s);
    apply(o.time_budget_s, c.time_budget_s);
    apply(o.mu_wall, c.mu_wall);
    apply(o.samples, c.samples);
    apply(o.cycle_samples, c.cycle_samples);
    apply(o.trials, c.trials);
    apply(o.seeds, c.seeds);
    apply(o.modes, c.modes);
    apply(o.theta_ar_grid_deg, c.theta_ar_grid_deg);
    apply(o.use_localizer, c.use_localizer);
    apply(o.env_path, c.env_path);
    return c;
}

void add_common(CLI::App &cmd, Overrides &o) {
    cmd.add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd.add_option("--seed", o.seed, "RNG seed (u64)");
    cmd.add_option("--out", o.out, "output CSV path (default: stdout)");
    cmd.add_option("--d", o.d_m, "capsule-actuator distance [m]");
    cmd.add_option("--alpha", o.alpha_deg, "actuator offset angle alpha [deg]");
    cmd.add_option("--beta", o.beta_deg, "plane-U tilt beta [deg]");
}

void write_file(const std::string &path, const std::string &content) {
    const auto parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) {
        std::filesystem::create_directories(parent, ec);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    f << content;
    if (!f) {
        throw std::runtime_error("write failed for '" + path + "'");
    }
}

void emit(const std::string &command, const RunConfig &cfg, const magcap::commands::CommandResult &r) {
    if (cfg.out.empty()) {
        std::cout << r.main();
        for (std::size_t i = 1; i < r.tables.size(); ++i) {
            spdlog::warn("no --out given; skipping extra table '{}'", r.tables[i].suffix);
        }
        return;
    }
    for (const auto &t : r.tables) {
        const std::string path = cfg.out + t.suffix;
        write_file(path, t.csv);
        spdlog::info("wrote {}", path);
    }
    nlohmann::json sidecar;
    sidecar["command"] = command;
    sidecar["csv_schema_version"] = magcap::kCsvSchemaVersion;
    sidecar["config"] = magcap::to_json(cfg);
    write_file(cfg.out + ".config.json", sidecar.dump(2) + "\n");
}

void setup_logging() {
    auto logger = spdlog::stderr_logger_mt("magcap");
    logger->set_pattern("magcap [%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char *env = std::getenv("MAGCAP_LOG")) {
        spdlog::cfg::helpers::load_levels(env);
    }
}

} // namespace

int main(int argc, char **argv) {
    setup_logging();

    CLI::App app{"Rotating magnetic actuation of a capsule robot: force, risk, localization and "
                 "propulsion analyses"};
    app.require_subcommand(1);
    Overrides o;

    auto *fp = app.add_subcommand("force-profile", "force decomposition over one actuator revolution");
    add_common(*fp, o);
    fp->add_option("--samples", o.samples, "samples per revolution (>= 8)");

    auto *rs = app.add_subcommand("risk-sweep", "net twist per cycle, CRMA vs RRMA");
    add_common(*rs, o);
    rs->add_option("--modes", o.modes, "rotating modes: crma, rrma")->delimiter(',');
    rs->add_option("--theta-ar-grid", o.theta_ar_grid_deg, "RRMA half-sweep angles [deg]")->delimiter(',');
    rs->add_option("--mu-wall", o.mu_wall, "wall friction coefficient");
    rs->add_option("--cycle-samples", o.cycle_samples, "samples per cycle (>= 64)");

    auto *nf = app.add_subcommand("normal-force-sweep", "mean and max normal force vs reciprocation angle");
    add_common(*nf, o);
    nf->add_option("--theta-ar-grid", o.theta_ar_grid_deg, "reciprocation angles [deg]")->delimiter(',');

    auto *lb = app.add_subcommand("localize-bench", "Monte-Carlo localization accuracy");
    add_common(*lb, o);
    lb->add_option("--trials", o.trials, "number of random poses");
    lb->add_option("--noise-sigma", o.noise_sigma_t, "sensor noise per axis [T]");

    auto *pr = app.add_subcommand("propel", "closed-loop propulsion success and speed per mode");
    add_common(*pr, o);
    pr->add_option("--env", o.env_path, "tube environment JSON")->check(CLI::ExistingFile);
    pr->add_option("--seeds", o.seeds, "runs per mode, seeds seed..seed+n-1");
    pr->add_option("--modes", o.modes, "modes: dma, crma, rrma")->delimiter(',');
    pr->add_option("--theta-ar", o.theta_ar_deg, "RRMA half-sweep angle [deg]");
    pr->add_option("--spin-rate", o.spin_rate_deg_s, "actuator spin rate [deg/s]");
    pr->add_option("--noise-sigma", o.noise_sigma_t, "sensor noise per axis [T]");
    pr->add_option("--dt", o.dt_s, "time step [s]");
    pr->add_option("--time-budget", o.time_budget_s, "time budget per run [s]");
    pr->add_option("--localizer", o.use_localizer, "close the loop through the localizer (true/false)");
    pr->add_flag("--traces", o.traces, "also write one step trace per run");

    auto *ac = app.add_subcommand("approx-check", "deviation of the RRMA force from the 180 deg force");
    add_common(*ac, o);
    ac->add_option("--theta-ar-grid", o.theta_ar_grid_deg, "reciprocation angles [deg]")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    const std::map<CLI::App *, std::function<magcap::commands::CommandResult(const RunConfig &)>>
        commands{
            {fp, magcap::commands::force_profile},
            {rs, magcap::commands::risk_sweep},
            {nf, magcap::commands::normal_force_sweep},
            {lb, magcap::commands::localize_bench},
            {pr, [&](const RunConfig &c) { return magcap::commands::propel(c, o.traces); }},
            {ac, magcap::commands::approx_check},
        };
    CLI::App *chosen = app.get_subcommands().front();

    try {
        const RunConfig cfg = effective_config(o);
        cfg.validate();
        spdlog::info("running {} (seed {})", chosen->get_name(), cfg.seed);
        const auto result = commands.at(chosen)(cfg);
        emit(chosen->get_name(), cfg, result);
    } catch (const magcap::ConfigError &e) {
        spdlog::error("invalid configuration: {}", e.what());
        return 2;
    } catch (const std::exception &e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
