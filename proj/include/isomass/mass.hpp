#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "isomass/errors.hpp"
#include "isomass/geometry.hpp"
#include "isomass/metric_model.hpp"
#include "isomass/quadrature.hpp"
#include "isomass/region.hpp"

namespace isomass {

/// Quasilocal isoperimetric mass of a measured region.
struct MassReport {
    double mql = 0.0;
    double volume = 0.0;
    double perimeter = 0.0;
    double propagated_error = 0.0;  // first-order sensitivity to quadrature error
};

inline constexpr double kIsoperimetricCoeff = 0.09403159725795937;  // 1/(6 sqrt(pi))

/// The quasilocal mass functional on raw volume/perimeter values:
///   2/P (V - P^{3/2}/(6 sqrt(pi))).
inline double mass_ql_value(double volume, double perimeter) {
    if (!(perimeter > 0.0)) throw error(errc::zero_perimeter, "perimeter must be positive");
    return (2.0 / perimeter) * (volume - kIsoperimetricCoeff * std::pow(perimeter, 1.5));
}

/// d mql / dV and d mql / dP at (V, P).
inline std::array<double, 2> mass_ql_sensitivities(double volume, double perimeter) {
    const double dV = 2.0 / perimeter;
    const double dP = -2.0 * volume / (perimeter * perimeter) -
                      kIsoperimetricCoeff / std::sqrt(perimeter);
    return {dV, dP};
}

namespace detail {

/// V - P^{3/2}/(6 sqrt(pi)) for a measured region, evaluated so that the
/// result keeps full relative accuracy even when V and P are individually far
/// beyond the precision needed for their difference. The flat parts cancel
/// through the exact per-component ball identity (flat_defect) and the
/// remainder of the perimeter enters through expm1/log1p.
inline double isoperimetric_deficit(const MeasuredRegion& mr, double* perimeter_out) {
    if (mr.components.empty()) throw error(errc::invalid_region, "region has no components");
    std::size_t jmax = 0;
    for (std::size_t i = 1; i < mr.components.size(); ++i)
        if (mr.components[i].area.flat > mr.components[jmax].area.flat) jmax = i;

    const double pf_max = mr.components[jmax].area.flat;
    double rest = mr.components[jmax].area.delta;
    for (std::size_t i = 0; i < mr.components.size(); ++i)
        if (i != jmax) rest += mr.components[i].area.value;
    const double perimeter = pf_max + rest;
    if (!(perimeter > 0.0)) throw error(errc::zero_perimeter, "perimeter must be positive");
    if (perimeter_out) *perimeter_out = perimeter;

    const double f_max = kIsoperimetricCoeff * pf_max * std::sqrt(pf_max);
    double deficit = mr.components[jmax].flat_defect + mr.components[jmax].volume.delta;
    for (std::size_t i = 0; i < mr.components.size(); ++i)
        if (i != jmax) deficit += mr.components[i].volume.value;
    deficit -= f_max * std::expm1(1.5 * std::log1p(rest / pf_max));
    return deficit;
}

}  // namespace detail

/// Quasilocal mass of a measured region. Uses the cancellation-free deficit
/// form; agrees with mass_ql_value(volume, perimeter) to rounding whenever the
/// latter is itself representable.
inline MassReport mass_ql(const MeasuredRegion& mr) {
    double perimeter = 0.0;
    const double deficit = detail::isoperimetric_deficit(mr, &perimeter);
    MassReport rep;
    rep.volume = mr.volume.value;
    rep.perimeter = mr.perimeter.value;
    rep.mql = 2.0 * deficit / perimeter;
    const auto sens = mass_ql_sensitivities(rep.volume, perimeter);
    rep.propagated_error = std::fabs(sens[0]) * mr.volume.abs_error_bound +
                           std::fabs(sens[1]) * mr.perimeter.abs_error_bound;
    return rep;
}

// ---------------------------------------------------------------------------
// Centered sweeps and limit extrapolation
// ---------------------------------------------------------------------------

struct SweepRow {
    double R = 0.0;
    double volume = 0.0;
    double perimeter = 0.0;
    double mql = 0.0;
    double vol_err = 0.0;
    double per_err = 0.0;
    double mql_err = 0.0;
};

struct SweepTable {
    std::vector<SweepRow> rows;
};

/// mql(B_R) over the given coordinate radii (ascending, outside the excised
/// set). Rows come from annulus volume + centered sphere area.
inline SweepTable sweep_centered(const MetricModel& model, const std::vector<double>& radii,
                                 const QuadratureConfig& cfg) {
    double prev = model.excised_radius;
    for (double r : radii)
        if (!(r > prev))
            throw error(errc::invalid_argument,
                        "sweep radii must be ascending and exceed the excised radius");
        else
            prev = r;
    SweepTable table;
    table.rows.reserve(radii.size());
    for (double r : radii) {
        const MeasuredRegion mr = measure(model, Region::annulus(r), cfg);
        const MassReport rep = mass_ql(mr);
        table.rows.push_back({r, rep.volume, rep.perimeter, rep.mql,
                              mr.volume.abs_error_bound, mr.perimeter.abs_error_bound,
                              rep.propagated_error});
    }
    return table;
}

struct LimitEstimate {
    double limit = 0.0;
    double a = 0.0;  // coefficient of 1/R
    double b = 0.0;  // coefficient of 1/R^2
    double residual = 0.0;
    std::size_t rows_used = 0;
    static constexpr const char* model = "m + a/R + b/R^2";
};

/// Least-squares fit mql(R) = m + a/R + b/R^2 over the largest-R half of the
/// table; the fitted m is the numerical surrogate for the limsup behind
/// m_iso^c. Refuses (IllConditionedFit) when the residual is large against
/// both the propagated measurement error and the spread of the fitted rows,
/// as happens when the decay model is wrong.
inline LimitEstimate extrapolate(const SweepTable& table) {
    const std::size_t n = table.rows.size();
    if (n < 4) throw error(errc::invalid_argument, "extrapolation needs at least 4 sweep rows");
    for (std::size_t i = 1; i < n; ++i)
        if (!(table.rows[i].R > table.rows[i - 1].R))
            throw error(errc::invalid_argument, "sweep rows must have increasing R");
    if (!(table.rows[n - 1].R >= 8.0 * table.rows[0].R))
        throw error(errc::invalid_argument, "sweep radii must span at least a factor of 8");

    const std::size_t used = std::max<std::size_t>(4, n / 2);
    const std::size_t first = n - used;
    const double r_ref = table.rows[first].R;

    // normal equations in the scaled basis {1, t, t^2}, t = r_ref / R
    double m[3][3] = {};
    double rhs[3] = {};
    for (std::size_t i = first; i < n; ++i) {
        const double t = r_ref / table.rows[i].R;
        const double basis[3] = {1.0, t, t * t};
        for (int a = 0; a < 3; ++a) {
            rhs[a] += basis[a] * table.rows[i].mql;
            for (int b = 0; b < 3; ++b) m[a][b] += basis[a] * basis[b];
        }
    }
    // gaussian elimination with partial pivoting
    int piv[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(m[piv[r]][col]) > std::fabs(m[piv[best]][col])) best = r;
        std::swap(piv[col], piv[best]);
        const double d = m[piv[col]][col];
        if (d == 0.0) throw error(errc::ill_conditioned_fit, "singular normal equations");
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[piv[r]][col] / d;
            for (int c = col; c < 3; ++c) m[piv[r]][c] -= f * m[piv[col]][c];
            rhs[piv[r]] -= f * rhs[piv[col]];
        }
    }
    double coeff[3];
    for (int row = 2; row >= 0; --row) {
        double s = rhs[piv[row]];
        for (int c = row + 1; c < 3; ++c) s -= m[piv[row]][c] * coeff[c];
        coeff[row] = s / m[piv[row]][row];
    }

    LimitEstimate est;
    est.limit = coeff[0];
    est.a = coeff[1] * r_ref;
    est.b = coeff[2] * r_ref * r_ref;
    est.rows_used = used;

    double max_abs_mql = 0.0, max_err = 0.0;
    double lo_mql = table.rows[first].mql, hi_mql = table.rows[first].mql;
    for (std::size_t i = first; i < n; ++i) {
        const double t = r_ref / table.rows[i].R;
        const double fit = coeff[0] + coeff[1] * t + coeff[2] * t * t;
        est.residual = std::max(est.residual, std::fabs(fit - table.rows[i].mql));
        max_abs_mql = std::max(max_abs_mql, std::fabs(table.rows[i].mql));
        max_err = std::max(max_err, table.rows[i].mql_err);
        lo_mql = std::min(lo_mql, table.rows[i].mql);
        hi_mql = std::max(hi_mql, table.rows[i].mql);
    }
    // Refuse when the residual is large against both the measurement error
    // and the variation of the data itself; the latter floor keeps exact
    // measurements from tripping the gate on the fit model's own higher-order
    // terms, while a wrong decay exponent still leaves residual ~ spread.
    const double gate = std::max({10.0 * max_err, 1e-3 * (hi_mql - lo_mql),
                                  1e-12 * (1.0 + max_abs_mql)});
    if (est.residual > gate)
        throw error(errc::ill_conditioned_fit,
                    "fit residual " + std::to_string(est.residual) +
                        " exceeds the measurement-error and data-spread gates");
    return est;
}

// ---------------------------------------------------------------------------
// Far-ball constructions and the exhaustion driver
// ---------------------------------------------------------------------------

/// Search budgets for the constructive operations.
struct ConstructionLimits {
    std::size_t max_offset_doublings = 60;
    std::size_t max_volume_doublings = 200;
};

struct FarBallResult {
    bool ok = false;  // false: offset search exhausted
    Ball ball;
    Measure volume;
    Measure area;
    double deficit = 0.0;        // |E| - |dE|^{3/2}/(6 sqrt(pi)), stable form
    double deficit_error = 0.0;  // propagated quadrature bound on the deficit
    double offset_used = 0.0;
    double last_shortfall = 0.0;  // deficit excess over eps when !ok
    std::size_t candidates_tried = 0;
};

namespace detail {

/// Stable deficit of one measured ball: Delta V - V_flat expm1(1.5 log1p(q)).
inline double ball_deficit(const Measure& vol, const Measure& area, double* err_out) {
    const double q = area.delta / area.flat;
    const double deficit = vol.delta - vol.flat * std::expm1(1.5 * std::log1p(q));
    if (err_out) {
        const double dfdP = 1.5 * (vol.flat / area.flat) * std::sqrt(1.0 + q);
        *err_out = vol.abs_error_bound + std::fabs(dfdP) * area.abs_error_bound;
    }
    return deficit;
}

inline double chart_gap(const MetricModel& model, const Region& forbidden, const Ball& cand) {
    double gap = std::numeric_limits<double>::infinity();
    if (!model.chart_covers_origin())
        gap = std::min(gap, cand.center.norm() - cand.radius - model.excised_radius);
    if (forbidden.centered_annulus)
        gap = std::min(gap, cand.center.norm() - cand.radius - *forbidden.centered_annulus);
    for (const Ball& b : forbidden.balls)
        gap = std::min(gap,
                       (cand.center - b.center).norm() - cand.radius - b.radius);
    return gap;
}

}  // namespace detail

/// Constructs a far off-center coordinate ball E with
///   |E| >= V,  |dE| >= (36 pi)^{1/3} V^{2/3},  | |E| - |dE|^{3/2}/(6 sqrt(pi)) | <= eps,
/// at positive chart distance from `forbidden`. The ball radius is fixed by
/// the margin (4 pi/3) R^3 = 2V and the center (d, 0, 0) doubles outward from
/// d = 4R until the measured inequalities hold.
inline FarBallResult construct_far_ball(const MetricModel& model, const Region& forbidden,
                                     double volume_target, double eps,
                                     const QuadratureConfig& cfg,
                                     const ConstructionLimits& limits = {}) {
    if (!(volume_target > 0.0) || !(eps > 0.0))
        throw error(errc::invalid_argument, "far-ball construction needs positive V and eps");
    const double radius = std::cbrt(2.0 * volume_target / (4.0 * M_PI / 3.0));
    const double area_floor = std::cbrt(36.0 * M_PI) * std::pow(volume_target, 2.0 / 3.0);

    FarBallResult res;
    double d = 4.0 * radius;
    for (std::size_t step = 0; step <= limits.max_offset_doublings; ++step, d *= 2.0) {
        const Ball cand{{d, 0.0, 0.0}, radius};
        if (!(detail::chart_gap(model, forbidden, cand) > 0.0)) continue;
        ++res.candidates_tried;
        const Measure vol = ball_volume(model, cand.center, cand.radius, cfg);
        const Measure area = sphere_area(model, cand.center, cand.radius, cfg);
        double derr = 0.0;
        const double deficit = detail::ball_deficit(vol, area, &derr);
        res.ball = cand;
        res.volume = vol;
        res.area = area;
        res.deficit = deficit;
        res.deficit_error = derr;
        res.offset_used = d;
        res.last_shortfall = std::fabs(deficit) + derr - eps;
        if (vol.value >= volume_target && area.value >= area_floor &&
            std::fabs(deficit) + derr <= eps) {
            res.ok = true;
            return res;
        }
    }
    res.ok = false;
    return res;
}

/// One candidate union examined by augment_with_far_ball (audit trail).
struct AugmentCandidate {
    double volume_target = 0.0;
    double ball_radius = 0.0;
    double offset = 0.0;
    double perimeter_e = 0.0;  // measured |dE|
    double deficit_e = 0.0;    // measured ball deficit
    double mql_union = 0.0;
    double mql_error = 0.0;
};

struct AugmentResult {
    bool ok = false;  // false: volume/offset budget exhausted
    Region augmented;
    MeasuredRegion measured;
    MassReport report;
    Ball added_ball;
    double offset_used = 0.0;
    std::vector<AugmentCandidate> candidates;
};

namespace detail {

inline MeasuredRegion append_ball_measured(const MeasuredRegion& base, const Ball& ball,
                                           const Measure& vol, const Measure& area) {
    MeasuredRegion mr = base;
    mr.region.balls.push_back(ball);
    ComponentMeasure c;
    c.center = ball.center;
    c.radius = ball.radius;
    c.volume = vol;
    c.area = area;
    mr.components.push_back(c);
    mr.region = mr.region.canonical();
    // keep component order aligned with the canonical region
    std::sort(mr.components.begin(), mr.components.end(),
              [](const ComponentMeasure& a, const ComponentMeasure& b) {
                  if (a.is_annulus != b.is_annulus) return a.is_annulus;
                  return std::tie(a.center.x, a.center.y, a.center.z, a.radius) <
                         std::tie(b.center.x, b.center.y, b.center.z, b.radius);
              });
    accumulate_totals(mr);
    return mr;
}

}  // namespace detail

/// Adds one far ball to omega so that the union's
/// quasilocal mass satisfies |mql| <= eps. Ball volumes follow the doubling
/// schedule V_k = 2^k max(|omega|, 1) with deficit targets shrinking in
/// proportion to the expected perimeter; termination is the proof's damping
/// of the omega contributions by |dE|^{-1/2}.
inline AugmentResult augment_with_far_ball(const MetricModel& model, const Region& omega, double eps,
                                   const QuadratureConfig& cfg,
                                   const ConstructionLimits& limits = {}) {
    if (!(eps > 0.0)) throw error(errc::invalid_argument, "augmentation needs positive eps");
    const ValidationResult v = validate_region(model, omega);
    if (!v) throw error(errc::invalid_region, v.violation);

    const MeasuredRegion base = measure(model, omega, cfg);
    const double v0 = std::max(base.volume.value, 1.0);

    AugmentResult res;
    double v_target = v0;
    double best_abs = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= limits.max_volume_doublings; ++k, v_target *= 2.0) {
        const double p_expected = std::cbrt(36.0 * M_PI) * std::pow(2.0 * v_target, 2.0 / 3.0);
        const double deficit_target = eps * p_expected / 8.0;
        const FarBallResult e =
            construct_far_ball(model, omega, v_target, deficit_target, cfg, limits);
        if (!e.ok) break;
        const MeasuredRegion mr = detail::append_ball_measured(base, e.ball, e.volume, e.area);
        const MassReport rep = mass_ql(mr);
        res.candidates.push_back({v_target, e.ball.radius, e.offset_used, e.area.value,
                                  e.deficit, rep.mql, rep.propagated_error});
        const bool accept = std::fabs(rep.mql) + rep.propagated_error <= eps;
        if (accept || std::fabs(rep.mql) < best_abs) {
            best_abs = std::fabs(rep.mql);
            res.augmented = mr.region;
            res.measured = mr;
            res.report = rep;
            res.added_ball = e.ball;
            res.offset_used = e.offset_used;
        }
        if (accept) {
            res.ok = true;
            return res;
        }
    }
    res.ok = false;  // budget exhausted; best candidate retained
    if (res.candidates.empty()) {
        res.measured = base;
        res.report = mass_ql(base);
        res.augmented = base.region;
    }
    return res;
}

/// One row of the exhaustion trace. The seed row has no epsilon
/// target; row i >= 2 is built with eps = 1/(i-1).
struct ExhaustionStep {
    Region region;
    double target_eps = std::numeric_limits<double>::infinity();
    double achieved_mql_abs = 0.0;
    double offset_used = 0.0;
    double ball_radius_used = 0.0;
    double mql = 0.0;
    double volume = 0.0;
    double perimeter = 0.0;
    double propagated_error = 0.0;
};

struct ExhaustionTrace {
    std::vector<ExhaustionStep> steps;
    bool complete = true;       // false when an augmentation budget ran out
    double certified_delta = 0.0;  // evaluated witness: m_iso >= -certified_delta
};

/// The constructive exhaustion: seed B_{R0}, then step i+1 augments
/// (step i) union B_{R0+i} with a far ball at eps = 1/i. The certified bound
/// is the smallest achieved |mql| over the trace (the schedule decreases, so
/// for complete runs this is the final step): the trace exhibits an
/// exhaustion prefix whose tail quasilocal mass is at least -certified_delta.
inline ExhaustionTrace exhaust(const MetricModel& model, double r0, std::size_t steps,
                               const QuadratureConfig& cfg,
                               const ConstructionLimits& limits = {}) {
    if (!(r0 > model.excised_radius))
        throw error(errc::invalid_argument, "R0 must exceed the excised radius");
    if (steps < 1) throw error(errc::invalid_argument, "exhaustion needs at least one step");

    ExhaustionTrace trace;
    Region current = Region::annulus(r0);
    {
        const MeasuredRegion mr = measure(model, current, cfg);
        const MassReport rep = mass_ql(mr);
        ExhaustionStep s;
        s.region = mr.region;
        s.achieved_mql_abs = std::fabs(rep.mql);
        s.mql = rep.mql;
        s.volume = rep.volume;
        s.perimeter = rep.perimeter;
        s.propagated_error = rep.propagated_error;
        trace.steps.push_back(std::move(s));
    }
    while (trace.steps.size() < steps) {
        const std::size_t i = trace.steps.size();  // building step i+1 with eps = 1/i
        Region omega = current;
        omega.centered_annulus = r0 + static_cast<double>(i);
        const double eps = 1.0 / static_cast<double>(i);
        const AugmentResult l2 = augment_with_far_ball(model, omega, eps, cfg, limits);
        ExhaustionStep s;
        s.region = l2.augmented;
        s.target_eps = eps;
        s.achieved_mql_abs = std::fabs(l2.report.mql);
        s.offset_used = l2.offset_used;
        s.ball_radius_used = l2.added_ball.radius;
        s.mql = l2.report.mql;
        s.volume = l2.report.volume;
        s.perimeter = l2.report.perimeter;
        s.propagated_error = l2.report.propagated_error;
        trace.steps.push_back(std::move(s));
        if (!l2.ok) {
            trace.complete = false;
            break;
        }
        current = l2.augmented;
    }
    trace.certified_delta = std::numeric_limits<double>::infinity();
    for (const ExhaustionStep& s : trace.steps)
        trace.certified_delta =
            std::min(trace.certified_delta, s.achieved_mql_abs + s.propagated_error);
    return trace;
}

}  // namespace isomass
