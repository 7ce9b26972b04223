// Acceptance checks, one PASS/FAIL line per criterion. Exit code 1 if any fails.
#include "magcap/actuation.hpp"
#include "magcap/localization_bench.hpp"
#include "magcap/magnetics.hpp"
#include "magcap/risk.hpp"
#include "magcap/sim.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef MAGCAP_CLI_PATH
#error "MAGCAP_CLI_PATH must point at the magcap CLI binary"
#endif

using namespace magcap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

actuation::MomentPair default_moments() {
    return {magnetics::moment_magnitude_from_spec(magnetics::default_actuator_magnet()),
            magnetics::moment_magnitude_from_spec(magnetics::default_capsule_magnet())};
}

actuation::ActuationGeometry geometry(double alpha_deg) {
    return {0.15, deg2rad(alpha_deg), 0.0, UnitVector3::unit_x()};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// -----------------------------------------------------------------------------

Outcome force_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> len(0.08, 0.4);
    std::uniform_real_distribution<double> mag(0.1, 100.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Vector3 r = len(rng) * Vector3(n(rng), n(rng), n(rng)).normalized();
        const magnetics::Moment ma{mag(rng), UnitVector3::normalize(Vector3(n(rng), n(rng), n(rng)))};
        const magnetics::Moment mc{mag(rng), UnitVector3::normalize(Vector3(n(rng), n(rng), n(rng)))};
        const Vector3 f = magnetics::dipole_force(r, ma, mc);
        const double h = 1e-5 * r.norm();
        Vector3 fd;
        for (int k = 0; k < 3; ++k) {
            Vector3 e = Vector3::Zero();
            e[k] = h;
            fd[k] = (mc.vector().dot(magnetics::dipole_field(r + e, ma)) -
                     mc.vector().dot(magnetics::dipole_field(r - e, ma))) /
                    (2.0 * h);
        }
        worst = std::max(worst, (f - fd).norm() / f.norm());
    }
    const double dt = seconds_since(t0);
    return {worst < 1e-5 && dt < 5.0, fmt("max relative error %.3e over 1000 configs, %.2f s", worst, dt)};
}

Outcome rotation_axis_special_cases() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const UnitVector3 w = UnitVector3::normalize(Vector3(n(rng), n(rng), n(rng)));
        const UnitVector3 p = UnitVector3::normalize(w.vec().cross(Vector3(n(rng), n(rng), n(rng))));
        worst = std::max(worst, (actuation::actuator_rotation_axis(p, w).vec() + w.vec()).norm());
        worst = std::max(worst, (actuation::actuator_rotation_axis(w, w).vec() - w.vec()).norm());
        worst = std::max(worst, (actuation::actuator_rotation_axis(-w, w).vec() - w.vec()).norm());
    }
    return {worst < 1e-12, fmt("perpendicular -> -w, parallel -> +w; max deviation %.3e", worst)};
}

Outcome force_profile_shape() {
    const int n = 720;
    const auto p = actuation::force_profile(geometry(10.0), default_moments(), UnitVector3::unit_x(), n);
    double max_fl = 0.0;
    double min_fp = 1e300;
    std::vector<double> fr(n);
    for (int k = 0; k < n; ++k) {
        const auto &f = p[static_cast<std::size_t>(k)].force;
        max_fl = std::max(max_fl, std::abs(f.lateral_signed()));
        min_fp = std::min(min_fp, f.propulsive_signed());
        fr[static_cast<std::size_t>(k)] = f.remainder.norm();
    }
    const double fl0 = std::abs(p[0].force.lateral_signed());
    const double fl180 = std::abs(p[360].force.lateral_signed());
    const bool zero_cross = fl0 < 1e-10 * max_fl && fl180 < 1e-10 * max_fl;

    // every local maximum of |f_r| (circular) must sit within 2 samples of 0 or 180 deg
    bool maxima_ok = true;
    int maxima = 0;
    for (int k = 0; k < n; ++k) {
        const double prev = fr[static_cast<std::size_t>((k + n - 1) % n)];
        const double next = fr[static_cast<std::size_t>((k + 1) % n)];
        const double cur = fr[static_cast<std::size_t>(k)];
        if (cur >= prev && cur >= next) {
            ++maxima;
            const int d0 = std::min(k, n - k);
            const int d180 = std::abs(k - n / 2);
            maxima_ok = maxima_ok && (d0 <= 2 || d180 <= 2);
        }
    }
    const bool fp_ok = min_fp > 0.0;
    return {zero_cross && maxima_ok && maxima > 0 && fp_ok,
            fmt("|f_l|(0)/max=%.1e |f_l|(180)/max=%.1e; %d f_r maxima near 0/180: %s; min f_p=%.4e N",
                fl0 / max_fl, fl180 / max_fl, maxima, maxima_ok ? "yes" : "no", min_fp)};
}

Outcome volvulus_cancellation() {
    const auto g = geometry(0.0);
    const auto m = default_moments();
    double worst = 0.0;
    for (const double deg : {10.0, 30.0, 50.0, 70.0, 90.0}) {
        const auto prof = risk::contact_profile(g, m, actuation::Rrma{deg2rad(deg)}, 0.35, 720);
        worst = std::max(worst, std::abs(risk::net_twist_per_cycle(prof)) / risk::friction_impulse_per_cycle(prof));
    }
    const auto crma = risk::contact_profile(g, m, actuation::Crma{}, 0.35, 720);
    const double net = risk::net_twist_per_cycle(crma);
    const double mean_abs = risk::friction_impulse_per_cycle(crma);
    return {worst < 1e-10 && net > 0.05 * mean_abs,
            fmt("RRMA max |net|/impulse=%.2e; CRMA net=%.4e N vs 0.05*mean=%.4e N", worst, net, 0.05 * mean_abs)};
}

Outcome normal_force_trend() {
    const auto g = geometry(10.0);
    const auto m = default_moments();
    std::vector<double> grid;
    std::string values;
    bool increasing = true;
    double prev = -1.0;
    for (int deg = 10; deg <= 90; deg += 10) {
        grid.push_back(deg2rad(deg));
        const double v = risk::mean_normal_force(g, m, deg2rad(deg));
        increasing = increasing && v > prev;
        prev = v;
        values += fmt("%d:%.3e ", deg, v);
    }
    const double rec = rad2deg(risk::recommend_reciprocation_angle(g, m, grid));
    return {increasing && std::abs(rec - 90.0) < 1e-9,
            fmt("strictly increasing: %s; recommended %.0f deg; mean |f_l| [N] %s", increasing ? "yes" : "no", rec,
                values.c_str())};
}

Outcome approximation_regime() {
    const auto g = geometry(10.0);
    bool nondecreasing = true;
    double prev = 0.0;
    double at1 = 0.0;
    double at90 = 0.0;
    for (int deg = 1; deg <= 90; ++deg) {
        const double e = actuation::approximation_error(g, actuation::Rrma{deg2rad(deg)});
        nondecreasing = nondecreasing && e >= prev;
        prev = e;
        if (deg == 1) {
            at1 = e;
        }
        at90 = e;
    }
    return {nondecreasing && at1 < 0.01 * at90,
            fmt("nondecreasing: %s; err(1 deg)=%.3e, err(90 deg)=%.3e", nondecreasing ? "yes" : "no", at1, at90)};
}

Outcome localization_round_trip() {
    const auto t0 = std::chrono::steady_clock::now();
    const double mc = default_moments().capsule;
    const auto exact = sensing::run_localization_bench(sensing::SensorArray::grid(), mc, 100, 11);
    double worst_p = 0.0;
    double worst_o = 0.0;
    for (const auto &t : exact) {
        worst_p = std::max(worst_p, t.position_error);
        worst_o = std::max(worst_o, rad2deg(t.orientation_error));
    }
    const double sigma = sim::SimConfig{}.noise_sigma;
    const auto noisy = sensing::run_localization_bench(sensing::SensorArray::grid(8, 10, 0.06, sigma), mc, 500, 12);
    const auto s = sensing::summarize(noisy);
    const double rms_mm = 1e3 * s.rms_position_error;
    const double dt = seconds_since(t0);
    return {worst_p < 1e-4 && worst_o < 0.1 && rms_mm >= 2.0 && rms_mm <= 8.0 && dt < 60.0,
            fmt("sigma=0: max %.2e m, %.2e deg; sigma=%.1e T: RMS %.2f mm (mean %.2f +- %.2f mm, %.2f deg); %.1f s",
                worst_p, worst_o, sigma, rms_mm, 1e3 * s.mean_position_error, 1e3 * s.std_position_error,
                rad2deg(s.mean_orientation_error), dt)};
}

Outcome propulsion_trend() {
    const auto env = sim::default_environment();
    const sim::SimConfig cfg;
    struct Tally {
        int success{0};
        int stall{0};
        int volvulus{0};
        double speed_min{1e9};
        double speed_max{0.0};
    };
    std::map<std::string, Tally> t;
    const std::vector<std::pair<std::string, actuation::ActuationMode>> modes{
        {"DMA", actuation::Dma{}}, {"CRMA", actuation::Crma{}}, {"RRMA", actuation::Rrma{0.5 * kPi}}};
    for (const auto &[name, mode] : modes) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto r = sim::run_propulsion(env, mode, cfg, seed);
            auto &x = t[name];
            x.success += r.success ? 1 : 0;
            x.stall += r.failure_reason == sim::FailureReason::kStall ? 1 : 0;
            x.volvulus += r.failure_reason == sim::FailureReason::kVolvulus ? 1 : 0;
            if (r.success) {
                x.speed_min = std::min(x.speed_min, 1e3 * r.avg_speed);
                x.speed_max = std::max(x.speed_max, 1e3 * r.avg_speed);
            }
        }
    }
    const auto &dma = t["DMA"];
    const auto &crma = t["CRMA"];
    const auto &rrma = t["RRMA"];
    const bool ok = dma.success == 0 && dma.stall == 5 && rrma.success == 5 && rrma.speed_min >= 1.0 &&
                    rrma.speed_max <= 5.0 && crma.success <= 4 && crma.volvulus >= 1 &&
                    rrma.success >= crma.success && crma.success > dma.success;
    return {ok, fmt("DMA %d/5 (%d stall); CRMA %d/5 (%d volvulus); RRMA %d/5 at %.2f-%.2f mm/s", dma.success,
                    dma.stall, crma.success, crma.volvulus, rrma.success, rrma.speed_min, rrma.speed_max)};
}

std::map<std::string, std::string> slurp_dir(const fs::path &dir) {
    std::map<std::string, std::string> out;
    for (const auto &e : fs::directory_iterator(dir)) {
        std::ifstream f(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        out[e.path().filename().string()] = ss.str();
    }
    return out;
}

Outcome cli_determinism() {
    const std::vector<std::pair<std::string, std::string>> commands{
        {"force-profile", "--samples 72"},
        {"risk-sweep", "--cycle-samples 128"},
        {"normal-force-sweep", ""},
        {"localize-bench", "--trials 40"},
        {"propel", "--seeds 2 --modes dma,rrma --time-budget 8 --traces"},
        {"approx-check", "--theta-ar-grid 1,30,60,90"},
    };
    const fs::path root = fs::temp_directory_path() / "magcap_acceptance_determinism";
    fs::remove_all(root);
    std::string report;
    bool ok = true;
    for (const auto &[cmd, args] : commands) {
        const fs::path dir = root / cmd;
        std::map<std::string, std::string> runs[2];
        bool ran = true;
        for (int i = 0; i < 2; ++i) {
            fs::remove_all(dir);
            fs::create_directories(dir);
            const std::string line = std::string("\"") + MAGCAP_CLI_PATH + "\" " + cmd + " --seed 5 " + args +
                                     " --out \"" + (dir / "out.csv").string() + "\"";
            ran = ran && std::system(line.c_str()) == 0;
            runs[i] = slurp_dir(dir);
        }
        const bool same = ran && !runs[0].empty() && runs[0] == runs[1];
        ok = ok && same;
        report += fmt("%s:%zu files %s ", cmd.c_str(), runs[0].size(), same ? "identical" : "DIFFER");
    }
    fs::remove_all(root);
    return {ok, report};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 force closed form vs finite differences", force_oracle},
        {"2 rotation-axis special cases", rotation_axis_special_cases},
        {"3 force profile shape at alpha=10 deg", force_profile_shape},
        {"4 volvulus cancellation RRMA vs CRMA", volvulus_cancellation},
        {"5 mean normal force increasing, 90 deg recommended", normal_force_trend},
        {"6 constant-force approximation regime", approximation_regime},
        {"7 localization round trip", localization_round_trip},
        {"8 propulsion success trend DMA/CRMA/RRMA", propulsion_trend},
        {"9 CLI byte-identical reruns", cli_determinism},
    };
    int failed = 0;
    for (const auto &[name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %s -- %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
