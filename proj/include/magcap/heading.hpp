// Heading estimation from a capsule position history by least-squares cubic
// Bezier fitting with chord-length parametrization.
#pragma once

#include "magcap/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

namespace magcap::sensing {

struct TimedPosition {
    double t{0.0};
    Vector3 position{Vector3::Zero()};
};

struct CubicBezier {
    std::array<Vector3, 4> control{};

    Vector3 point(double u) const {
        const double w = 1.0 - u;
        return w * w * w * control[0] + 3.0 * w * w * u * control[1] +
               3.0 * w * u * u * control[2] + u * u * u * control[3];
    }

    Vector3 derivative(double u) const {
        const double w = 1.0 - u;
        return 3.0 * w * w * (control[1] - control[0]) + 6.0 * w * u * (control[2] - control[1]) +
               3.0 * u * u * (control[3] - control[2]);
    }
};

/// Least-squares cubic Bezier through `points`, parameter = normalized
/// cumulative chord length.
inline CubicBezier fit_cubic_bezier(std::span<const Vector3> points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    if (n < 4) {
        throw DegenerateError(Degeneracy::kStaleHeading, "need at least 4 points for a cubic fit");
    }
    Eigen::VectorXd u(n);
    u(0) = 0.0;
    for (Eigen::Index i = 1; i < n; ++i) {
        u(i) = u(i - 1) + (points[static_cast<std::size_t>(i)] -
                           points[static_cast<std::size_t>(i - 1)]).norm();
    }
    const double total = u(n - 1);
    if (!(total > 0.0)) {
        throw DegenerateError(Degeneracy::kStaleHeading, "all points coincide");
    }
    u /= total;

    Eigen::MatrixXd basis(n, 4);
    Eigen::MatrixXd rhs(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = u(i);
        const double w = 1.0 - s;
        basis(i, 0) = w * w * w;
        basis(i, 1) = 3.0 * w * w * s;
        basis(i, 2) = 3.0 * w * s * s;
        basis(i, 3) = s * s * s;
        rhs.row(i) = points[static_cast<std::size_t>(i)].transpose();
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    if (qr.rank() < 4) {
        throw DegenerateError(Degeneracy::kStaleHeading, "parameters too clustered for a cubic fit");
    }
    const Eigen::MatrixXd ctrl = qr.solve(rhs);
    CubicBezier out;
    for (int k = 0; k < 4; ++k) {
        out.control[static_cast<std::size_t>(k)] = ctrl.row(k).transpose();
    }
    return out;
}

/// Unit end tangent of a cubic fitted to the last `window` positions.
///
/// Throws DegenerateError(kStaleHeading) with fewer than 4 points or less
/// than `min_travel` metres between the first and last point of the window;
/// the control loop then keeps its previous heading.
inline UnitVector3 estimate_heading(std::span<const TimedPosition> history, int window,
                                    double min_travel = 2e-3) {
    if (window < 4) {
        throw std::invalid_argument("estimate_heading: window must be >= 4");
    }
    const std::size_t count = std::min(history.size(), static_cast<std::size_t>(window));
    if (count < 4) {
        throw DegenerateError(Degeneracy::kStaleHeading, "fewer than 4 history points");
    }
    const auto tail = history.subspan(history.size() - count);
    if ((tail.back().position - tail.front().position).norm() < min_travel) {
        throw DegenerateError(Degeneracy::kStaleHeading, "insufficient travel in window");
    }
    std::vector<Vector3> pts;
    pts.reserve(count);
    for (const auto &h : tail) {
        pts.push_back(h.position);
    }
    const CubicBezier curve = fit_cubic_bezier(pts);
    const Vector3 tangent = curve.control[3] - curve.control[2];
    if (!(tangent.norm() > 1e-12)) {
        throw DegenerateError(Degeneracy::kStaleHeading, "vanishing end tangent");
    }
    return UnitVector3::normalize(tangent);
}

} // namespace magcap::sensing
