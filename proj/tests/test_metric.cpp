#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "conemetric/metric.hpp"

using namespace conemetric;
using std::numbers::pi;

namespace {

double round_lambda(cplx z) { return 2.0 / (1.0 + std::norm(z)); }

// Pullback of the round metric by z^a: a cone of angle 2 pi a at 0 and at infinity.
auto model_lambda(double a) {
    return [a](cplx z) {
        const double r = std::abs(z);
        return 2.0 * a * std::pow(r, a - 1.0) / (1.0 + std::pow(r, 2.0 * a));
    };
}

const UnitarizingSolution& three_point() {
    static const UnitarizingSolution sol = [] {
        using exact::Rational;
        using exact::Scalar;
        return solve_unitarizing_parameters(exact::ConeConfiguration(
            {Scalar(0), Scalar(1), Scalar(-1)}, {Rational(1, 2), Rational(1, 2), Rational(1, 2)}));
    }();
    return sol;
}

}  // namespace

TEST(ConformalFactor, KnownValues) {
    EXPECT_DOUBLE_EQ(conformal_factor(0.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(conformal_factor(1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(conformal_factor(cplx(0, 1), cplx(0, -3)), 3.0);
}

TEST(ConformalFactor, ChartsAgree) {
    // same point seen through f and 1/f
    const cplx y1(2.0, 0.5), y2(0.3, -0.4), dy1(0.1, 1.0), dy2(-0.7, 0.2);
    const auto a = make_frame(0.0, y1, y2, dy1, dy2);
    const auto b = make_frame(0.0, y2, y1, dy2, dy1);
    EXPECT_NE(a.chart, b.chart);
    EXPECT_NEAR(conformal_factor(a), conformal_factor(b), 1e-14);
    const cplx W = dy1 * y2 - y1 * dy2;
    const cplx f = y1 / y2;
    EXPECT_NEAR(conformal_factor(a), 2.0 * std::abs(W / (y2 * y2)) / (1.0 + std::norm(f)), 1e-14);
}

TEST(Curvature, RoundMetricIsSecondOrder) {
    const cplx z(0.3, -0.7);
    const double e1 = std::abs(stencil_curvature(round_lambda, z, 1e-2) - 1.0);
    const double e2 = std::abs(stencil_curvature(round_lambda, z, 5e-3) - 1.0);
    EXPECT_LT(e1, 1e-4);
    EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(Curvature, ModelConeWithHarmonicPart) {
    const double a = 0.5;
    const auto lam = model_lambda(a);
    const std::vector<cplx> poles{0.0};
    auto harmonic = [&](cplx z) { return cone_log_singularity(poles, {a}, z); };
    const auto pts = grid_points({cplx(-1, -1), cplx(1, 1), 9, 9, 0.1}, poles);
    const auto r = curvature_check([&](cplx z, double h) { return stencil_curvature(lam, z, h, harmonic); }, pts,
                                   poles, 1e-3);
    EXPECT_LT(r.max_deviation, 1e-4);
    EXPECT_THROW(curvature_check([&](cplx z, double h) { return stencil_curvature(lam, z, h); },
                                 std::vector<cplx>{cplx(0.005, 0)}, poles, 1e-3),
                 StencilTooCloseToPole);
}

TEST(ConeAngle, ModelCone) {
    for (double a : {0.5, 0.75, 1.5}) {
        const auto e = cone_angle_estimate(model_lambda(a), 0.0, a, {2e-4, 1e-4}, 1.0);
        EXPECT_NEAR(e.estimate, a, 1e-6) << a;
    }
    // the next correction is O(r^{4a}) and decays slowly for small a
    EXPECT_NEAR(cone_angle_estimate(model_lambda(0.25), 0.0, 0.25, {2e-4, 1e-4}, 1.0).estimate, 0.25, 2.5e-5);
    EXPECT_THROW(cone_angle_estimate(model_lambda(0.5), 0.0, 0.5, {0.6}, 0.5), ConeRadiusTooLarge);
}

TEST(Area, RoundSphere) {
    const auto r = area_estimate(round_lambda, {0.0}, {1.0});
    EXPECT_NEAR(r.area, 4.0 * pi, 1e-6);
}

TEST(Area, ModelFootball) {
    for (double a : {0.5, 0.75}) {
        AreaOptions opt;
        opt.alpha_infinity = a;
        const auto r = area_estimate(model_lambda(a), {0.0}, {a}, opt);
        EXPECT_NEAR(r.area, 4.0 * pi * a, 1e-4) << a;
    }
}

TEST(Transversality, RoundSphereMinimum) {
    std::vector<cplx> probes;
    const double R = 3.0;
    for (int k = 0; k < 16; ++k) probes.push_back(std::polar(R * (k + 1) / 16.0, 0.4 * k));
    const auto t = transversality_check(round_lambda, probes);
    EXPECT_DOUBLE_EQ(t.min_lambda, 2.0 / (1.0 + R * R));
    EXPECT_TRUE(t.passed());
}

TEST(Develop, BasepointFrame) {
    const auto& sol = three_point();
    const MetricContext ctx(sol.data, sol.monodromy.basepoint, HermitianForm{});
    const auto fr = develop(ctx, ctx.basepoint());
    EXPECT_LT(std::abs(fr.f()), 1e-15);
    EXPECT_LT(std::abs(fr.derivative - 1.0), 1e-15);
    EXPECT_DOUBLE_EQ(conformal_factor(fr), 2.0);
}

TEST(Develop, WronskianConserved) {
    const MetricContext ctx(three_point());
    for (cplx z : {cplx(0.5, 0.5), cplx(-0.3, -0.8), cplx(1.2, 0.1), cplx(0.05, 0.02)}) {
        EXPECT_NEAR(std::abs(develop(ctx, z, 0.0).wronskian - 1.0), 0.0, 1e-9) << z;
    }
}

TEST(Develop, HomotopicPathsAgree) {
    const MetricContext ctx(three_point());
    const cplx z0 = ctx.basepoint();
    const cplx z(0.4, 1.1);
    TransportPath a(z0);
    a.line_to(z);
    TransportPath b(z0);
    b.line_to(cplx(1.5, 1.8));
    b.line_to(cplx(1.2, 0.9));
    b.line_to(z);
    EXPECT_NEAR(conformal_factor(develop_along(ctx, a, 0.05)), conformal_factor(develop_along(ctx, b, 0.05)), 1e-9);
}

TEST(Develop, LoopsDoNotChangeLambda) {
    const MetricContext ctx(three_point());
    EXPECT_LT(path_independence_residual(ctx, {cplx(0.5, 0.5), cplx(-0.6, -0.3), cplx(0.1, 0.05)}), 1e-8);
}

TEST(Develop, GaugeInvariance) {
    const auto& sol = three_point();
    const auto other = minimize_defect(sol.monodromy.generators, HermitianForm::exp_of(0.6, -0.4, 0.3));
    const MetricContext a(sol), b(sol.data, sol.monodromy.basepoint, other.form);
    for (cplx z : {cplx(0.5, 0.5), cplx(-0.6, -0.3), cplx(2.0, -1.0)}) {
        const double la = conformal_factor(develop(a, z)), lb = conformal_factor(develop(b, z));
        EXPECT_LT(std::abs(la - lb) / la, 1e-7) << z;
    }
}

TEST(Develop, TooCloseThrows) {
    const MetricContext ctx(three_point());
    EXPECT_THROW(develop(ctx, cplx(1e-4, 0.0)), PathTooClose);
}

TEST(Metric, ThreePointChecks) {
    const auto& sol = three_point();
    const MetricContext ctx(sol);
    const auto pts = grid_points({cplx(-1.5, -1.5), cplx(1.5, 1.5), 7, 7, 0.1}, ctx.poles());
    EXPECT_LT(curvature_check(ctx, pts, 1e-3).max_deviation, 1e-4);
    for (std::size_t i = 0; i < 3; ++i) {
        const double est = cone_angle_estimate(ctx, i).estimate;
        EXPECT_NEAR(est, 0.5, 5e-4);
        EXPECT_NEAR(est, angle_from_trace(sol.monodromy.generators[i]), 5e-4);
    }
    EXPECT_GT(transversality_check(ctx, pts).min_lambda, 0.01);
    EXPECT_THROW(cone_angle_estimate(ctx, 0, {.relative_radii = {0.3}}), ConeRadiusTooLarge);
}
