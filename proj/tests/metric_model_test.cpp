#include "isomass/metric_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace isomass;

TEST(MetricModel, EuclideanIsIdentity) {
    const auto model = MetricModel::euclidean();
    const Sym3 g = metric_at(model, {1.0, 2.0, 3.0});
    EXPECT_EQ(g.xx(), 1.0);
    EXPECT_EQ(g.yy(), 1.0);
    EXPECT_EQ(g.zz(), 1.0);
    EXPECT_EQ(g.xy(), 0.0);
    EXPECT_EQ(g.xz(), 0.0);
    EXPECT_EQ(g.yz(), 0.0);
    EXPECT_EQ(volume_density(model, {5.0, -1.0, 0.5}), 1.0);
}

TEST(MetricModel, SchwarzschildConformalFactor) {
    const auto model = MetricModel::schwarzschild(2.0);
    const Sym3 g = metric_at(model, {10.0, 0.0, 0.0});
    const double expect = std::pow(1.1, 4.0);  // (1 + 2/(2*10))^4
    EXPECT_NEAR(g.xx(), expect, 1e-14 * expect);
    EXPECT_EQ(g.xy(), 0.0);
    EXPECT_NEAR(volume_density(model, {10.0, 0.0, 0.0}), std::pow(1.1, 6.0), 1e-14);
}

TEST(MetricModel, NegativeMassDensityExample) {
    const auto model = MetricModel::schwarzschild(-2.0);
    // u = 1 - 1/100 = 0.99, density u^6
    EXPECT_NEAR(volume_density(model, {100.0, 0.0, 0.0}), std::pow(0.99, 6.0), 1e-14);
}

TEST(MetricModel, ExcisedSetIsClosed) {
    const auto model = MetricModel::schwarzschild(-2.0);
    // |x| = 1 = |m|/2 lies on the boundary of the excised closed ball
    try {
        metric_at(model, {1.0, 0.0, 0.0});
        FAIL() << "expected PointInExcisedSet";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::point_in_excised_set);
    }
    EXPECT_THROW(metric_at(model, {0.5, 0.0, 0.0}), error);
    // positive mass excises the horizon ball as well
    const auto pos = MetricModel::schwarzschild(2.0);
    EXPECT_THROW(metric_at(pos, {0.9, 0.0, 0.0}), error);
    EXPECT_NO_THROW(metric_at(pos, {1.0 + 1e-12, 0.0, 0.0}));
}

TEST(MetricModel, ConformalSingularityDetected) {
    // u = 1 - 1/r vanishes at r = 1 for amplitude -1, but excised_radius is 0
    const auto model = MetricModel::conformal_perturbation(-1.0, 1.0);
    try {
        metric_at(model, {1.0, 0.0, 0.0});
        FAIL() << "expected PointAtConformalSingularity";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::point_at_conformal_singularity);
    }
    EXPECT_NO_THROW(metric_at(model, {2.0, 0.0, 0.0}));
}

TEST(MetricModel, DensityMatchesDeterminant) {
    const std::vector<MetricModel> models = {
        MetricModel::euclidean(), MetricModel::schwarzschild(2.0),
        MetricModel::schwarzschild(-2.0), MetricModel::conformal_perturbation(0.5, 1.5),
        MetricModel::diagonal_perturbation({0.2, -0.1, 0.05}, 1.0)};
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> radius(2.0, 500.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (const auto& model : models) {
        for (int i = 0; i < 200; ++i) {
            Vec3 dir{unit(rng), unit(rng), unit(rng)};
            if (dir.norm() < 1e-3) continue;
            const Vec3 x = dir * (radius(rng) / dir.norm());
            const double vd = volume_density(model, x);
            const double od = test::det_density(model, x);
            EXPECT_NEAR(vd, od, 1e-14 * std::fabs(od))
                << model.describe() << " at r=" << x.norm();
        }
    }
}

TEST(MetricModel, SchwarzschildIsotropyExact) {
    const auto model = MetricModel::schwarzschild(-2.0);
    const Sym3 g = metric_at(model, {3.0, 4.0, 12.0});
    EXPECT_EQ(g.xx(), g.yy());
    EXPECT_EQ(g.yy(), g.zz());
    EXPECT_EQ(g.xy(), 0.0);
    EXPECT_EQ(g.xz(), 0.0);
    EXPECT_EQ(g.yz(), 0.0);
}

TEST(MetricModel, SmoothAlongRay) {
    const auto model = MetricModel::schwarzschild(2.0);
    const Vec3 dir{1.0, 0.5, -0.25};
    const Vec3 d = dir * (1.0 / dir.norm());
    double prev_diff = 0.0;
    for (double h : {1e-2, 1e-3, 1e-4}) {
        const Vec3 x = d * 5.0;
        const Sym3 a = metric_at(model, x);
        const Sym3 b = metric_at(model, x + d * h);
        double diff = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) diff = std::max(diff, std::fabs(a(i, j) - b(i, j)));
        EXPECT_LT(diff, 1.0 * h);  // O(h) continuity along the ray
        if (prev_diff > 0.0) {
            EXPECT_LT(diff, prev_diff);
        }
        prev_diff = diff;
    }
}

TEST(MetricModel, DecayCheckEuclidean) {
    const auto model = MetricModel::euclidean();
    const auto rep = decay_check(model, {1.0, 10.0, 100.0}, 64);
    EXPECT_TRUE(rep.passed);
    EXPECT_EQ(rep.max_violation, 0.0);
}

TEST(MetricModel, DecayCheckSchwarzschildDeclaredConstants) {
    auto model = MetricModel::schwarzschild(2.0);
    model.decay_constant = 5.0;
    model.decay_rate = 1.0;
    const auto rep = decay_check(model, {10.0, 100.0, 1000.0}, 128);
    EXPECT_TRUE(rep.passed) << "observed sup " << rep.observed_sup;
    // |u^4 - 1| * r -> 2|m| = 4 from below at large r; 4.64 at r = 10
    EXPECT_GT(rep.observed_sup, 4.0);
    EXPECT_LT(rep.observed_sup, 5.0);
}

TEST(MetricModel, DecayCheckWrongExponentFails) {
    auto model = MetricModel::conformal_perturbation(1.0, 1.0);
    model.decay_rate = 2.0;  // declared faster than the actual 1/r decay
    model.decay_constant = 5.0;
    const auto rep = decay_check(model, {10.0, 100.0, 1000.0}, 32);
    EXPECT_FALSE(rep.passed);
    EXPECT_GT(rep.max_violation, 0.0);
}

TEST(MetricModel, DefaultConstantsPassOwnDecayCheck) {
    const std::vector<MetricModel> models = {
        MetricModel::schwarzschild(2.0), MetricModel::schwarzschild(-2.0),
        MetricModel::conformal_perturbation(0.5, 1.0),
        MetricModel::diagonal_perturbation({0.2, -0.1, 0.05}, 1.5)};
    for (const auto& model : models) {
        const double base = std::max(1.0, 2.0 * model.excised_radius);
        const auto rep =
            decay_check(model, {base * 1.5, base * 4.0, base * 16.0, base * 256.0}, 64);
        EXPECT_TRUE(rep.passed) << model.describe() << " sup=" << rep.observed_sup;
    }
}

TEST(MetricModel, DecayCheckPreconditions) {
    const auto model = MetricModel::schwarzschild(-2.0);
    EXPECT_THROW(decay_check(model, {}, 8), error);
    EXPECT_THROW(decay_check(model, {0.5, 2.0}, 8), error);   // inside excised set
    EXPECT_THROW(decay_check(model, {10.0, 5.0}, 8), error);  // not ascending
}
