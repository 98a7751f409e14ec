#include "isomass/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace isomass;

namespace {
const QuadratureConfig kCfg;
}

TEST(GaussRule, IntegratesPolynomialsExactly) {
    // order-n Gauss-Legendre is exact through degree 2n-1
    for (int n : {2, 5, 8, 16}) {
        const auto& rule = detail::gauss_rule(n);
        for (int p = 0; p <= 2 * n - 1; ++p) {
            double sum = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                sum += rule.weights[i] * std::pow(rule.nodes[i], p);
            const double exact = (p % 2 == 0) ? 2.0 / (p + 1) : 0.0;
            EXPECT_NEAR(sum, exact, 1e-13) << "n=" << n << " p=" << p;
        }
    }
}

TEST(BallVolume, EuclideanExactness) {
    const auto model = MetricModel::euclidean();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> c(-20.0, 20.0);
    std::uniform_real_distribution<double> rad(0.1, 15.0);
    for (int i = 0; i < 50; ++i) {
        const Vec3 center{c(rng), c(rng), c(rng)};
        const double r = rad(rng);
        const Measure v = ball_volume(model, center, r, kCfg);
        const Measure a = sphere_area(model, center, r, kCfg);
        EXPECT_NEAR(v.value, flat_ball_volume(r), 1e-12 * flat_ball_volume(r));
        EXPECT_NEAR(a.value, flat_sphere_area(r), 1e-12 * flat_sphere_area(r));
        EXPECT_EQ(v.delta, 0.0);
        EXPECT_TRUE(v.tolerance_reached);
    }
}

TEST(BallVolume, EuclideanTranslationCovariance) {
    const auto model = MetricModel::euclidean();
    const Measure a = ball_volume(model, {0.0, 0.0, 0.0}, 2.5, kCfg);
    const Measure b = ball_volume(model, {100.0, -40.0, 3.0}, 2.5, kCfg);
    EXPECT_EQ(a.value, b.value);
}

TEST(AnnulusVolume, EuclideanClosedForm) {
    const auto model = MetricModel::euclidean();
    const Measure v = annulus_volume(model, 2.0, kCfg);
    EXPECT_NEAR(v.value, 32.0 * M_PI / 3.0, 1e-12 * v.value);
}

TEST(AnnulusVolume, SchwarzschildPositiveClosedForm) {
    // 4 pi * int_1^10 r^2 (1+1/r)^6 dr has an elementary antiderivative
    const auto model = MetricModel::schwarzschild(2.0);
    auto antiderivative = [](double r) {
        return r * r * r / 3.0 + 3.0 * r * r + 15.0 * r + 20.0 * std::log(r) - 15.0 / r -
               3.0 / (r * r) - 1.0 / (3.0 * r * r * r);
    };
    const double exact = 4.0 * M_PI * (antiderivative(10.0) - antiderivative(1.0));
    const Measure v = annulus_volume(model, 10.0, kCfg);
    EXPECT_NEAR(v.value, exact, 1e-8 * exact);
    // the 1-d radial oracle agrees too
    const double oracle = test::radial_annulus_volume(model, 1.0, 10.0, 1000000);
    EXPECT_NEAR(v.value, oracle, 1e-7 * exact);
}

TEST(AnnulusVolume, NegativeMassInnerBoundary) {
    const auto model = MetricModel::schwarzschild(-2.0);
    const Measure v = annulus_volume(model, 2.0, kCfg);
    EXPECT_GT(v.value, 0.0);
    const double oracle = test::radial_annulus_volume(model, 1.0, 2.0, 1000000);
    EXPECT_NEAR(v.value, oracle, 1e-7 * v.value);
    EXPECT_TRUE(v.tolerance_reached);
}

TEST(BallVolume, SchwarzschildOffCenterBracketAndOracle) {
    const auto model = MetricModel::schwarzschild(2.0);
    const Vec3 center{50.0, 0.0, 0.0};
    const Measure v = ball_volume(model, center, 1.0, kCfg);
    const double base = flat_ball_volume(1.0);
    EXPECT_GT(v.value, base * std::pow(0.96, 6.0) * 0.9);
    EXPECT_LT(v.value, base * std::pow(1.05, 6.0) * 1.1);
    const double oracle = test::midpoint_ball_volume(model, center, 1.0, 800, 50, 50);
    EXPECT_NEAR(v.value, oracle, 1e-6 * v.value);
}

TEST(BallVolume, FarNegativeMassBallIsNearlyFlat) {
    const auto model = MetricModel::schwarzschild(-2.0);
    const Measure v = ball_volume(model, {1e6, 0.0, 0.0}, 1.0, kCfg);
    EXPECT_NEAR(v.value, flat_ball_volume(1.0), 1e-4 * flat_ball_volume(1.0));
}

TEST(SphereArea, EuclideanAndCenteredConformal) {
    EXPECT_NEAR(sphere_area(MetricModel::euclidean(), {0, 0, 0}, 1.0, kCfg).value, 4.0 * M_PI,
                1e-12);
    // centered conformal sphere: area = 4 pi R^2 u(R)^4 exactly
    const auto model = MetricModel::schwarzschild(2.0);
    const double expect = 4.0 * M_PI * 100.0 * std::pow(1.1, 4.0);
    EXPECT_NEAR(sphere_area(model, {0, 0, 0}, 10.0, kCfg).value, expect, 1e-10 * expect);
}

TEST(SphereArea, DiagonalPerturbationAgainstMidpointOracle) {
    const auto model = MetricModel::diagonal_perturbation({0.1, 0.0, 0.0}, 1.0);
    const Measure a = sphere_area(model, {0, 0, 0}, 100.0, kCfg);
    const double oracle = test::midpoint_sphere_area(model, {0, 0, 0}, 100.0, 2000, 2000);
    EXPECT_NEAR(a.value, oracle, 1e-6 * a.value);
}

TEST(SphereArea, ConformalFastPathMatchesGeneralPath) {
    for (double m : {2.0, -2.0}) {
        const auto model = MetricModel::schwarzschild(m);
        for (const Vec3& center : {Vec3{0, 0, 0}, Vec3{30.0, 0, 0}, Vec3{5.0, 4.0, -3.0}}) {
            const double r = 2.0;
            if (center.norm() > 0.0 && !(center.norm() - r > model.excised_radius)) continue;
            const Measure fast = sphere_area(model, center, center.norm() == 0 ? 10.0 : r, kCfg);
            const Measure gen =
                sphere_area_general(model, center, center.norm() == 0 ? 10.0 : r, kCfg);
            const double bound =
                2.0 * (fast.abs_error_bound + gen.abs_error_bound) + 1e-12 * fast.value;
            EXPECT_NEAR(fast.value, gen.value, bound) << "m=" << m;
        }
    }
}

TEST(BallVolume, GeneralPathMatchesReducedPath) {
    const auto model = MetricModel::schwarzschild(-2.0);
    QuadratureConfig general = kCfg;
    general.force_general_path = true;
    for (const Vec3& center : {Vec3{20.0, 0, 0}, Vec3{7.0, -2.0, 11.0}}) {
        const Measure fast = ball_volume(model, center, 3.0, kCfg);
        const Measure gen = ball_volume(model, center, 3.0, general);
        const double bound =
            2.0 * (fast.abs_error_bound + gen.abs_error_bound) + 1e-11 * std::fabs(fast.value);
        EXPECT_NEAR(fast.value, gen.value, bound);
        EXPECT_GT(gen.evaluations, fast.evaluations);
    }
}

TEST(BallVolume, MonotoneInRadius) {
    const auto model = MetricModel::schwarzschild(-2.0);
    double prev = 0.0;
    for (double r : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double v = ball_volume(model, {20.0, 0.0, 0.0}, r, kCfg).value;
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(Measure, SelfConsistencyUnderTightening) {
    const auto model = MetricModel::schwarzschild(-2.0);
    QuadratureConfig loose = kCfg;
    loose.rel_tol = 1e-6;
    const QuadratureConfig tight = loose.tightened(0.1);
    for (double R : {2.0, 10.0, 100.0}) {
        const Measure a = annulus_volume(model, R, loose);
        const Measure b = annulus_volume(model, R, tight);
        EXPECT_LE(std::fabs(a.value - b.value), a.abs_error_bound + 1e-15 * std::fabs(a.value))
            << "R=" << R;
    }
    const Measure a = ball_volume(model, {15.0, 0, 0}, 4.0, loose);
    const Measure b = ball_volume(model, {15.0, 0, 0}, 4.0, tight);
    EXPECT_LE(std::fabs(a.value - b.value), a.abs_error_bound + 1e-15 * a.value);
}

TEST(Measure, DeterministicAcrossCalls) {
    const auto model = MetricModel::schwarzschild(-2.0);
    const Measure a = annulus_volume(model, 17.0, kCfg);
    const Measure b = annulus_volume(model, 17.0, kCfg);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.abs_error_bound, b.abs_error_bound);
    EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Quadrature, ExcisedSetErrors) {
    const auto model = MetricModel::schwarzschild(-2.0);
    try {
        ball_volume(model, {1.5, 0.0, 0.0}, 1.0, kCfg);
        FAIL() << "expected BallIntersectsExcisedSet";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::ball_intersects_excised_set);
    }
    // centered balls on excised charts must go through annulus_volume
    EXPECT_THROW(ball_volume(model, {0.0, 0.0, 0.0}, 5.0, kCfg), error);
    EXPECT_THROW(annulus_volume(model, 0.5, kCfg), error);
    try {
        sphere_area(model, {1.2, 0.0, 0.0}, 0.5, kCfg);
        FAIL() << "expected SphereIntersectsExcisedSet";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::sphere_intersects_excised_set);
    }
}

TEST(Quadrature, ConfigValidation) {
    QuadratureConfig bad = kCfg;
    bad.rel_tol = 0.5;
    EXPECT_THROW(bad.validate(), error);
    bad = kCfg;
    bad.radial_rule_order = 1;
    EXPECT_THROW(bad.validate(), error);
    bad = kCfg;
    bad.rel_tol = -1.0;
    EXPECT_THROW(bad.validate(), error);
}

TEST(Quadrature, ToleranceNotReachedIsFlagged) {
    const auto model = MetricModel::schwarzschild(-2.0);
    QuadratureConfig starved;
    starved.rel_tol = 1e-9;
    starved.max_subdivisions = 4;
    starved.radial_rule_order = 2;
    starved.angular_rule_order = 2;
    const Measure v = annulus_volume(model, 10240.0, starved);
    EXPECT_FALSE(v.tolerance_reached);
    EXPECT_GT(v.value, 0.0);  // best estimate still returned
}
