#include "magcap/heading.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace magcap;
using namespace magcap::sensing;

namespace {

std::vector<TimedPosition> arc(double radius, double span, int n) {
    std::vector<TimedPosition> out;
    for (int i = 0; i < n; ++i) {
        const double a = span * i / (n - 1);
        out.push_back({0.1 * i, Vector3(radius * std::sin(a), radius * (1.0 - std::cos(a)), 0.0)});
    }
    return out;
}

} // namespace

TEST(Heading, CollinearPointsGiveTheLineDirection) {
    const Vector3 dir = Vector3(1.0, 2.0, -0.5).normalized();
    std::vector<TimedPosition> h;
    for (int i = 0; i < 8; ++i) {
        h.push_back({0.1 * i, Vector3(0.1, 0.2, 0.1) + 0.003 * i * dir});
    }
    const UnitVector3 w = estimate_heading(h, 8);
    EXPECT_LT((w.vec() - dir).norm(), 1e-10);
}

TEST(Heading, CircularArcEndTangentWithinTwoDegrees) {
    const double span = 0.6;
    const auto h = arc(0.05, span, 10);
    const UnitVector3 w = estimate_heading(h, 10);
    const UnitVector3 truth = UnitVector3::normalize(Vector3(std::cos(span), std::sin(span), 0.0));
    EXPECT_LT(rad2deg(w.angle_to(truth)), 2.0);
}

TEST(Heading, InvariantUnderTranslationAndRotation) {
    const auto h = arc(0.08, 0.5, 9);
    const UnitVector3 w0 = estimate_heading(h, 9);
    const Matrix3 R = rot_z(0.7) * rot_x(-0.4);
    const Vector3 t(0.3, -0.1, 0.2);
    std::vector<TimedPosition> moved;
    for (const auto &p : h) {
        moved.push_back({p.t, R * p.position + t});
    }
    const UnitVector3 w1 = estimate_heading(moved, 9);
    EXPECT_LT((w1.vec() - R * w0.vec()).norm(), 1e-10);
}

TEST(Heading, UsesOnlyTheLastWindow) {
    auto h = arc(0.05, 0.6, 10);
    // an old detour far away must not matter
    h.insert(h.begin(), {-1.0, Vector3(5.0, -3.0, 2.0)});
    const UnitVector3 a = estimate_heading(h, 10);
    const UnitVector3 b = estimate_heading(arc(0.05, 0.6, 10), 10);
    EXPECT_LT((a.vec() - b.vec()).norm(), 1e-12);
}

TEST(Heading, StaleCasesAreReported) {
    std::vector<TimedPosition> few{{0.0, Vector3::Zero()}, {0.1, Vector3(0.01, 0, 0)}, {0.2, Vector3(0.02, 0, 0)}};
    try {
        estimate_heading(few, 8);
        FAIL() << "expected DegenerateError";
    } catch (const DegenerateError &e) {
        EXPECT_EQ(e.kind(), Degeneracy::kStaleHeading);
    }
    std::vector<TimedPosition> still;
    for (int i = 0; i < 8; ++i) {
        still.push_back({0.1 * i, Vector3(0.1, 0.1, 0.1) + Vector3(1e-4 * (i % 2), 0, 0)});
    }
    EXPECT_THROW(estimate_heading(still, 8, 2e-3), DegenerateError);
    EXPECT_THROW(estimate_heading(still, 3), std::invalid_argument);
}

TEST(Bezier, FitInterpolatesEndpointsOfALine) {
    std::vector<Vector3> pts;
    for (int i = 0; i < 6; ++i) {
        pts.emplace_back(0.01 * i, 0.0, 0.0);
    }
    const CubicBezier c = fit_cubic_bezier(pts);
    EXPECT_LT((c.point(0.0) - pts.front()).norm(), 1e-12);
    EXPECT_LT((c.point(1.0) - pts.back()).norm(), 1e-12);
    EXPECT_LT((c.derivative(1.0) - 3.0 * (c.control[3] - c.control[2])).norm(), 1e-12);
    std::vector<Vector3> same(5, Vector3(0.1, 0.1, 0.1));
    EXPECT_THROW(fit_cubic_bezier(same), DegenerateError);
}
