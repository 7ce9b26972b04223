// Calibration sweep for the simulation defaults.
//
// Prints the localization RMS error over a noise grid and the propulsion
// outcome of DMA / CRMA / RRMA(90 deg) under the default environment. The
// defaults in sim.hpp and SimConfig were picked from this output so that
// DMA stalls, RRMA averages 1-5 mm/s and CRMA ends in volvulus on some seeds
// but not all, with the localization RMS error near 4-5 mm at the default
// sensor noise.
//
// usage: calibrate_sim [seeds] [sim noise sigma T] [use localizer 0/1]
#include "magcap/localization_bench.hpp"
#include "magcap/sim.hpp"

#include <cstdio>
#include <cstdlib>

using namespace magcap;

int main(int argc, char **argv) {
    const int seeds = argc > 1 ? std::atoi(argv[1]) : 5;
    const double mc = magnetics::moment_magnitude_from_spec(magnetics::default_capsule_magnet());

    std::printf("# localization: sigma_T rms_mm mean_mm std_mm mean_deg converged/500\n");
    for (const double sigma : {0.0, 5e-7, 1e-6, 2e-6, 3e-6}) {
        const auto array = sensing::SensorArray::grid(8, 10, 0.06, sigma);
        const auto trials = sensing::run_localization_bench(array, mc, 500, 1);
        const auto s = sensing::summarize(trials);
        std::printf("%.1e %.3f %.3f %.3f %.3f %d\n", sigma, 1e3 * s.rms_position_error,
                    1e3 * s.mean_position_error, 1e3 * s.std_position_error,
                    rad2deg(s.mean_orientation_error), s.converged);
    }

    const sim::TubeEnvironment env = sim::default_environment();
    sim::SimConfig cfg;
    if (argc > 2) {
        cfg.noise_sigma = std::atof(argv[2]);
    }
    if (argc > 3) {
        cfg.use_localizer = std::atoi(argv[3]) != 0;
    }
    std::printf("# propulsion: mode seed success reason time_s dist_mm speed_mm_s max_twist fallbacks\n");
    const actuation::ActuationMode modes[] = {actuation::Dma{}, actuation::Crma{},
                                              actuation::Rrma{kPi / 2}};
    for (const auto &mode : modes) {
        for (int seed = 0; seed < seeds; ++seed) {
            const auto r = sim::run_propulsion(env, mode, cfg, static_cast<std::uint64_t>(seed));
            std::printf("%s %d %d %s %.2f %.2f %.3f %.3f %d\n", actuation::mode_name(mode).c_str(),
                        seed, r.success ? 1 : 0, sim::to_string(r.failure_reason), r.time_elapsed,
                        1e3 * r.distance, 1e3 * r.avg_speed, r.max_abs_twist,
                        r.localizer_fallbacks);
        }
    }
    return 0;
}
