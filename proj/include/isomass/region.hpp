#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "isomass/errors.hpp"
#include "isomass/geometry.hpp"
#include "isomass/metric_model.hpp"
#include "isomass/quadrature.hpp"

namespace isomass {

struct Ball {
    Vec3 center;
    double radius = 0.0;
};

/// A bounded finite-perimeter set in the chart: a finite disjoint union of
/// coordinate balls, plus at most one centered component B_R (realized as the
/// annulus excised_radius < |x| < R on excised models).
struct Region {
    std::optional<double> centered_annulus;  // outer radius of the B_R component
    std::vector<Ball> balls;

    static Region annulus(double outer_radius) {
        Region r;
        r.centered_annulus = outer_radius;
        return r;
    }

    static Region single_ball(const Vec3& center, double radius) {
        Region r;
        r.balls.push_back({center, radius});
        return r;
    }

    std::size_t component_count() const {
        return balls.size() + (centered_annulus ? 1u : 0u);
    }

    /// Canonical component order: annulus first, balls sorted by center then
    /// radius. Measurement sums follow this order, so permuting the ball list
    /// cannot change any reported value.
    Region canonical() const {
        Region r = *this;
        std::sort(r.balls.begin(), r.balls.end(), [](const Ball& a, const Ball& b) {
            return std::tie(a.center.x, a.center.y, a.center.z, a.radius) <
                   std::tie(b.center.x, b.center.y, b.center.z, b.radius);
        });
        return r;
    }
};

struct ValidationResult {
    bool ok = true;
    std::string violation;  // names the offending component or pair

    explicit operator bool() const { return ok; }
};

namespace detail {

inline std::string ball_label(std::size_t i) { return "ball " + std::to_string(i); }

}  // namespace detail

/// Checks the Region invariants against a model: every component strictly
/// inside the admissible chart and pairwise positive chart distance (at least
/// min_gap when a margin is requested).
inline ValidationResult validate_region(const MetricModel& model, const Region& region,
                                        double min_gap = 0.0) {
    auto fail = [](std::string msg) { return ValidationResult{false, std::move(msg)}; };
    if (region.component_count() == 0) return fail("region has no components");

    if (region.centered_annulus) {
        const double R = *region.centered_annulus;
        if (!(R > model.excised_radius) || !(R > 0.0))
            return fail("centered component radius " + std::to_string(R) +
                        " does not exceed the excised radius");
    }
    for (std::size_t i = 0; i < region.balls.size(); ++i) {
        const Ball& b = region.balls[i];
        if (!(b.radius > 0.0)) return fail(detail::ball_label(i) + " has nonpositive radius");
        if (!model.chart_covers_origin()) {
            const double gap = b.center.norm() - b.radius - model.excised_radius;
            if (!(gap > 0.0) || gap < min_gap)
                return fail(detail::ball_label(i) + " intersects excised set or chart origin");
        }
        if (region.centered_annulus) {
            const double gap = b.center.norm() - b.radius - *region.centered_annulus;
            if (!(gap > 0.0) || gap < min_gap)
                return fail(detail::ball_label(i) +
                            " touches the centered component (gap " + std::to_string(gap) + ")");
        }
        for (std::size_t j = i + 1; j < region.balls.size(); ++j) {
            const Ball& c = region.balls[j];
            const double gap = (b.center - c.center).norm() - b.radius - c.radius;
            if (!(gap > 0.0) || gap < min_gap)
                return fail("touching components: " + detail::ball_label(i) + " and " +
                            detail::ball_label(j) + " (gap " + std::to_string(gap) + ")");
        }
    }
    return {};
}

/// One measured component of a region. `flat_defect` is the exact value of
/// flat_volume - perimeter_flat^{3/2}/(6 sqrt(pi)): identically 0 for a ball,
/// -(4pi/3) r_in^3 for the centered annulus (outer boundary only). Keeping it
/// in closed form is what lets the mass functional stay accurate on regions
/// whose naive volume/perimeter magnitudes exhaust double precision.
struct ComponentMeasure {
    bool is_annulus = false;
    Vec3 center;
    double radius = 0.0;  // ball radius or annulus outer radius
    Measure volume;
    Measure area;
    double flat_defect = 0.0;
};

/// A region with its metric volume and perimeter; totals are the exact sums
/// of the component measures in canonical order.
struct MeasuredRegion {
    Region region;  // canonical
    std::vector<ComponentMeasure> components;
    Measure volume;
    Measure perimeter;
};

namespace detail {

inline void accumulate_totals(MeasuredRegion& mr) {
    mr.volume = Measure{};
    mr.perimeter = Measure{};
    mr.volume.tolerance_reached = mr.perimeter.tolerance_reached = true;
    for (const ComponentMeasure& c : mr.components) {
        mr.volume.value += c.volume.value;
        mr.volume.flat += c.volume.flat;
        mr.volume.delta += c.volume.delta;
        mr.volume.abs_error_bound += c.volume.abs_error_bound;
        mr.volume.evaluations += c.volume.evaluations;
        mr.volume.tolerance_reached &= c.volume.tolerance_reached;
        mr.perimeter.value += c.area.value;
        mr.perimeter.flat += c.area.flat;
        mr.perimeter.delta += c.area.delta;
        mr.perimeter.abs_error_bound += c.area.abs_error_bound;
        mr.perimeter.evaluations += c.area.evaluations;
        mr.perimeter.tolerance_reached &= c.area.tolerance_reached;
    }
}

inline ComponentMeasure measure_annulus(const MetricModel& model, double outer,
                                        const QuadratureConfig& cfg) {
    ComponentMeasure c;
    c.is_annulus = true;
    c.radius = outer;
    c.volume = annulus_volume(model, outer, cfg);
    c.area = sphere_area(model, Vec3{}, outer, cfg);
    c.flat_defect = -flat_ball_volume(model.excised_radius);
    return c;
}

inline ComponentMeasure measure_ball(const MetricModel& model, const Ball& b,
                                     const QuadratureConfig& cfg) {
    ComponentMeasure c;
    c.center = b.center;
    c.radius = b.radius;
    c.volume = ball_volume(model, b.center, b.radius, cfg);
    c.area = sphere_area(model, b.center, b.radius, cfg);
    c.flat_defect = 0.0;
    return c;
}

}  // namespace detail

/// Measures a validated region: component-wise quadrature, exact additivity.
inline MeasuredRegion measure(const MetricModel& model, const Region& region,
                              const QuadratureConfig& cfg) {
    const ValidationResult v = validate_region(model, region);
    if (!v) throw error(errc::invalid_region, v.violation);
    MeasuredRegion mr;
    mr.region = region.canonical();
    if (mr.region.centered_annulus)
        mr.components.push_back(detail::measure_annulus(model, *mr.region.centered_annulus, cfg));
    for (const Ball& b : mr.region.balls)
        mr.components.push_back(detail::measure_ball(model, b, cfg));
    detail::accumulate_totals(mr);
    return mr;
}

}  // namespace isomass
