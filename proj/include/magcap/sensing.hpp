// Magnetometer-array forward model and capsule localization.
//
// The array is a planar grid of three-axis sensors at z = 0. Readings are the
// superposed dipole fields of the capsule and the actuator plus a constant
// background and white Gaussian noise. The localizer fits a single dipole of
// known strength to the actuator-free field: 3 position + 2 direction unknowns.
#pragma once

#include "magcap/magnetics.hpp"
#include "magcap/types.hpp"

#include <Eigen/Dense>

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace magcap::sensing {

using magnetics::DipoleSource;
using magnetics::Moment;

struct SensorArray {
    std::vector<Vector3> positions; ///< m
    double noise_sigma{0.0};        ///< T per axis
    double sample_rate{100.0};      ///< Hz

    std::size_t size() const { return positions.size(); }

    /// rows x cols grid in the z = 0 plane, first sensor at the origin,
    /// indexed row-major: index = i * cols + j at (i*spacing, j*spacing, 0).
    static SensorArray grid(int rows = 8, int cols = 10, double spacing = 0.06,
                            double noise_sigma = 0.0, double sample_rate = 100.0) {
        if (rows <= 0 || cols <= 0 || !(spacing > 0.0)) {
            throw ConfigError("SensorArray: rows, cols and spacing must be positive");
        }
        if (!(noise_sigma >= 0.0)) {
            throw ConfigError("SensorArray: noise_sigma must be >= 0");
        }
        SensorArray a;
        a.noise_sigma = noise_sigma;
        a.sample_rate = sample_rate;
        a.positions.reserve(static_cast<std::size_t>(rows * cols));
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                a.positions.emplace_back(i * spacing, j * spacing, 0.0);
            }
        }
        return a;
    }
};

struct FieldReading {
    std::vector<Vector3> field; ///< T, one per sensor
    double timestamp{0.0};      ///< s
};

struct PoseEstimate {
    Vector3 position{Vector3::Zero()};
    UnitVector3 moment_direction{UnitVector3::unit_z()};
    UnitVector3 heading{UnitVector3::unit_x()};
    double residual_rms{0.0}; ///< T
    bool converged{false};
    int iterations{0};
};

// -----------------------------------------------------------------------------
// Forward model
// -----------------------------------------------------------------------------

/// Superposed field of `sources` plus `background` plus N(0, sigma) per axis.
inline FieldReading sample_field(const SensorArray &array, std::span<const DipoleSource> sources,
                                 const Vector3 &background, std::mt19937_64 &rng,
                                 double timestamp = 0.0) {
    constexpr double kMinPlaneClearance = 0.01;
    for (const auto &s : sources) {
        if (std::abs(s.position.z()) < kMinPlaneClearance) {
            throw SingularityError("source lies within 1 cm of the sensor plane");
        }
    }
    FieldReading out;
    out.timestamp = timestamp;
    out.field.reserve(array.size());
    std::normal_distribution<double> noise(0.0, 1.0);
    for (const Vector3 &p : array.positions) {
        Vector3 b = background;
        for (const auto &s : sources) {
            b += magnetics::dipole_field(p - s.position, s.moment);
        }
        if (array.noise_sigma > 0.0) {
            const double nx = noise(rng);
            const double ny = noise(rng);
            const double nz = noise(rng);
            b += array.noise_sigma * Vector3(nx, ny, nz);
        }
        out.field.push_back(b);
    }
    return out;
}

/// One reading of the capsule (and optionally the actuator); deterministic in `seed`.
inline FieldReading simulate_reading(const SensorArray &array, const DipoleSource &capsule,
                                     const std::optional<DipoleSource> &actuator,
                                     const Vector3 &background, std::uint64_t seed,
                                     double timestamp = 0.0) {
    std::mt19937_64 rng(seed);
    std::vector<DipoleSource> sources{capsule};
    if (actuator) {
        sources.push_back(*actuator);
    }
    return sample_field(array, sources, background, rng, timestamp);
}

/// Removes the modeled actuator field and a constant background.
inline FieldReading subtract_actuator(const FieldReading &reading, const SensorArray &array,
                                      const std::optional<DipoleSource> &actuator,
                                      const Vector3 &background) {
    if (reading.field.size() != array.size()) {
        throw std::invalid_argument("subtract_actuator: reading/array size mismatch");
    }
    FieldReading out = reading;
    for (std::size_t i = 0; i < array.size(); ++i) {
        out.field[i] -= background;
        if (actuator) {
            out.field[i] -= magnetics::dipole_field(array.positions[i] - actuator->position,
                                                    actuator->moment);
        }
    }
    return out;
}

/// Background estimate from a source-free reading: the per-axis sensor mean.
inline Vector3 estimate_background(const FieldReading &reading) {
    if (reading.field.empty()) {
        throw std::invalid_argument("estimate_background: empty reading");
    }
    Vector3 acc = Vector3::Zero();
    for (const auto &b : reading.field) {
        acc += b;
    }
    return acc / static_cast<double>(reading.field.size());
}

// -----------------------------------------------------------------------------
// Localization
// -----------------------------------------------------------------------------

struct LocalizerOptions {
    int max_iterations{100};
    double gradient_tolerance{1e-12}; ///< on the field-normalized residual
    double step_tolerance{1e-10};     ///< m (position) and rad (direction)
    double initial_damping{1e-3};
};

namespace detail {

/// Orthonormal basis of the plane normal to `m`.
inline std::pair<Vector3, Vector3> tangent_basis(const Vector3 &m) {
    const Vector3 seed = std::abs(m.x()) < 0.9 ? Vector3::UnitX() : Vector3::UnitY();
    const Vector3 u = m.cross(seed).normalized();
    return {u, m.cross(u)};
}

/// Normalized residuals (model - measured) / scale. Returns nullopt when the
/// candidate is singular (within 1 mm of a sensor).
inline std::optional<Eigen::VectorXd> residuals(const SensorArray &array,
                                                const FieldReading &reading, double magnitude,
                                                const Vector3 &p, const UnitVector3 &m,
                                                double scale) {
    Eigen::VectorXd e(3 * static_cast<Eigen::Index>(array.size()));
    const Moment moment{magnitude, m};
    try {
        for (std::size_t i = 0; i < array.size(); ++i) {
            const Vector3 b = magnetics::dipole_field(array.positions[i] - p, moment);
            e.segment<3>(3 * static_cast<Eigen::Index>(i)) = (b - reading.field[i]) / scale;
        }
    } catch (const SingularityError &) {
        return std::nullopt;
    }
    return e;
}

} // namespace detail

/// Damped least-squares (Levenberg-Marquardt) fit of capsule position and
/// moment direction to an actuator-free reading. The moment magnitude is
/// known. On non-convergence the best iterate is returned with
/// converged = false; the caller decides whether to trust it.
inline PoseEstimate localize_capsule(const SensorArray &array, const FieldReading &reading,
                                     double known_moment_magnitude,
                                     const PoseEstimate &initial_guess,
                                     const LocalizerOptions &options = {}) {
    if (reading.field.size() != array.size()) {
        throw std::invalid_argument("localize_capsule: reading/array size mismatch");
    }
    if (array.size() < 2) {
        throw std::invalid_argument("localize_capsule: need at least two sensors");
    }
    if (!(known_moment_magnitude > 0.0)) {
        throw std::invalid_argument("localize_capsule: moment magnitude must be > 0");
    }
    double scale = 0.0;
    for (const auto &b : reading.field) {
        scale = std::max(scale, b.cwiseAbs().maxCoeff());
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw DegenerateError(Degeneracy::kJacobian, "reading carries no field");
    }

    Vector3 p = initial_guess.position;
    UnitVector3 m = initial_guess.moment_direction;
    auto e0 = detail::residuals(array, reading, known_moment_magnitude, p, m, scale);
    if (!e0) {
        throw SingularityError("localize_capsule: initial guess coincides with a sensor");
    }
    Eigen::VectorXd e = *e0;
    double cost = e.squaredNorm();
    double lambda = options.initial_damping;

    PoseEstimate out = initial_guess;
    out.converged = false;
    const auto n_rows = static_cast<Eigen::Index>(3 * array.size());
    Eigen::MatrixXd A(n_rows, 5);

    int it = 0;
    for (; it < options.max_iterations; ++it) {
        const auto [u, v] = detail::tangent_basis(m);
        const Moment moment{known_moment_magnitude, m};
        for (std::size_t i = 0; i < array.size(); ++i) {
            const Vector3 r = array.positions[i] - p;
            const auto row = 3 * static_cast<Eigen::Index>(i);
            A.block<3, 3>(row, 0) = -magnetics::dipole_field_jacobian(r, moment) / scale;
            // b is linear in m_hat: b = k (3 r r^T - |r|^2 I) m_hat
            const double n2 = r.squaredNorm();
            const double k = kMu0 * known_moment_magnitude / (4.0 * kPi * n2 * n2 * std::sqrt(n2));
            const Matrix3 B = k * (3.0 * r * r.transpose() - n2 * Matrix3::Identity()) / scale;
            A.block<3, 1>(row, 3) = B * u;
            A.block<3, 1>(row, 4) = B * v;
        }
        const Eigen::Matrix<double, 5, 5> H = A.transpose() * A;
        const Eigen::Matrix<double, 5, 1> g = A.transpose() * e;
        if (g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
            out.converged = true;
            break;
        }
        if ((H.diagonal().array() <= 0.0).any()) {
            throw DegenerateError(Degeneracy::kJacobian, "column of the dipole Jacobian vanished");
        }

        bool accepted = false;
        double step_norm = 0.0;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            Eigen::Matrix<double, 5, 5> D = H;
            D.diagonal() *= (1.0 + lambda);
            const Eigen::LDLT<Eigen::Matrix<double, 5, 5>> ldlt(D);
            if (ldlt.info() != Eigen::Success) {
                throw DegenerateError(Degeneracy::kJacobian, "damped normal equations not solvable");
            }
            const Eigen::Matrix<double, 5, 1> delta = ldlt.solve(-g);
            const Vector3 p_new = p + delta.head<3>();
            const Vector3 m_raw = m.vec() + delta(3) * u + delta(4) * v;
            const UnitVector3 m_new = UnitVector3::normalize(m_raw);
            const auto e_new =
                detail::residuals(array, reading, known_moment_magnitude, p_new, m_new, scale);
            const double cost_new = e_new ? e_new->squaredNorm() : INFINITY;
            if (cost_new < cost) {
                step_norm = delta.norm();
                p = p_new;
                m = m_new;
                e = *e_new;
                cost = cost_new;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
            } else {
                lambda *= 4.0;
            }
        }
        if (!accepted) {
            // no descent direction left at machine precision
            out.converged = true;
            ++it;
            break;
        }
        if (step_norm < options.step_tolerance) {
            out.converged = true;
            ++it;
            break;
        }
    }
    out.position = p;
    out.moment_direction = m;
    out.iterations = it;
    out.residual_rms = std::sqrt(cost / static_cast<double>(n_rows)) * scale;
    return out;
}

// -----------------------------------------------------------------------------
// CSV dump/load: t, sensor_index, bx, by, bz (tesla), sensor-major rows
// -----------------------------------------------------------------------------

inline void write_readings_csv(std::ostream &os, std::span<const FieldReading> readings) {
    os << "t,sensor_index,bx,by,bz\n";
    if (readings.empty()) {
        return;
    }
    const std::size_t n = readings.front().field.size();
    for (const auto &r : readings) {
        if (r.field.size() != n) {
            throw std::invalid_argument("write_readings_csv: readings differ in sensor count");
        }
    }
    const auto old_precision = os.precision(17);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto &r : readings) {
            const Vector3 &b = r.field[i];
            os << r.timestamp << ',' << i << ',' << b.x() << ',' << b.y() << ',' << b.z() << '\n';
        }
    }
    os.precision(old_precision);
}

/// Inverse of write_readings_csv. Readings come back ordered by timestamp.
inline std::vector<FieldReading> read_readings_csv(std::istream &is) {
    std::string line;
    if (!std::getline(is, line)) {
        throw ConfigError("reading csv: empty input");
    }
    if (line.rfind("t,sensor_index,bx,by,bz", 0) != 0) {
        throw ConfigError("reading csv: unexpected header '" + line + "'");
    }
    std::map<double, std::map<std::size_t, Vector3>> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::istringstream ls(line);
        double t = 0.0;
        std::size_t idx = 0;
        double bx = 0.0;
        double by = 0.0;
        double bz = 0.0;
        char c1 = 0;
        char c2 = 0;
        char c3 = 0;
        char c4 = 0;
        if (!(ls >> t >> c1 >> idx >> c2 >> bx >> c3 >> by >> c4 >> bz) || c1 != ',' ||
            c2 != ',' || c3 != ',' || c4 != ',') {
            throw ConfigError("reading csv: malformed row at line " + std::to_string(line_no));
        }
        rows[t][idx] = Vector3(bx, by, bz);
    }
    std::vector<FieldReading> out;
    for (const auto &[t, sensors] : rows) {
        FieldReading r;
        r.timestamp = t;
        std::size_t expect = 0;
        for (const auto &[idx, b] : sensors) {
            if (idx != expect++) {
                throw ConfigError("reading csv: missing sensor index at t=" + std::to_string(t));
            }
            r.field.push_back(b);
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace magcap::sensing
