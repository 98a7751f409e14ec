#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include "isomass/errors.hpp"
#include "isomass/geometry.hpp"
#include "isomass/metric_model.hpp"

namespace isomass {

/// A metric volume or area together with its quadrature error estimate.
///
/// Internally the quantity is split as value = flat + delta, where `flat` is
/// the closed-form Euclidean part of the region and `delta` integrates the
/// deviation of the metric density from 1. Downstream mass computations rely
/// on this split to avoid catastrophic cancellation on very large regions.
struct Measure {
    double value = 0.0;
    double flat = 0.0;
    double delta = 0.0;
    double abs_error_bound = 0.0;  // bound on |delta - exact delta|
    std::size_t evaluations = 0;
    bool tolerance_reached = true;
};

struct QuadratureConfig {
    double rel_tol = 1e-9;
    std::size_t max_subdivisions = 512;  // panel cap per adaptive pass
    int radial_rule_order = 8;
    int angular_rule_order = 12;
    /// Error floor, as a fraction of the flat part; keeps refinement finite
    /// when the deviation integral is many orders below the flat term.
    double deviation_floor = 1e-14;
    /// Disable the symmetry reductions and conformal shortcut (test hook).
    bool force_general_path = false;

    void validate() const {
        if (!(rel_tol > 0.0) || !(rel_tol <= 1e-2))
            throw error(errc::invalid_config, "rel_tol must lie in (0, 1e-2]");
        if (radial_rule_order < 2 || angular_rule_order < 2)
            throw error(errc::invalid_config, "quadrature rule orders must be >= 2");
        if (max_subdivisions < 4)
            throw error(errc::invalid_config, "max_subdivisions must be >= 4");
        if (!(deviation_floor >= 0.0))
            throw error(errc::invalid_config, "deviation_floor must be >= 0");
    }

    QuadratureConfig tightened(double factor) const {
        QuadratureConfig c = *this;
        c.rel_tol = std::max(rel_tol * factor, 1e-15);
        return c;
    }
};

inline double flat_ball_volume(double radius) {
    return (4.0 * M_PI / 3.0) * radius * radius * radius;
}

inline double flat_sphere_area(double radius) { return 4.0 * M_PI * radius * radius; }

namespace detail {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;  // sum to 2
};

/// Gauss-Legendre nodes/weights by Newton iteration on P_n.
inline GaussRule make_gauss_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
    }
    return rule;
}

inline const GaussRule& gauss_rule(int n) {
    thread_local std::map<int, GaussRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss_rule(n)).first;
    return it->second;
}

/// Outcome of one adaptive 1-d pass. `value` is the refined panel sum.
struct PanelSum {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
    bool converged = true;
};

struct Panel {
    double lo = 0.0, hi = 0.0;
    double value = 0.0, error = 0.0;
};

/// Adaptive Gauss-Legendre over panels with order-doubling error estimates.
///
/// `profile(t, refined)` evaluates the (possibly nested-angular) integrand at
/// abscissa t; `refined` selects doubled inner orders. Panels are bisected
/// worst-error-first until sum(err) <= rel_tol * |sum(value)| + abs_floor.
/// The final sum runs over panels ordered by position, so the result is
/// independent of the refinement history.
template <typename Profile>
PanelSum adaptive_panels(Profile&& profile, std::vector<double> breakpoints, int order,
                         double rel_tol, double abs_floor, std::size_t max_panels,
                         std::size_t* eval_counter) {
    const GaussRule& base = gauss_rule(order);
    const GaussRule& fine = gauss_rule(2 * order);

    auto eval_panel = [&](double lo, double hi) {
        Panel p;
        p.lo = lo;
        p.hi = hi;
        const double mid = 0.5 * (lo + hi);
        const double hw = 0.5 * (hi - lo);
        double coarse = 0.0;
        for (std::size_t i = 0; i < base.nodes.size(); ++i)
            coarse += base.weights[i] * profile(mid + hw * base.nodes[i], false);
        coarse *= hw;
        double refined = 0.0;
        for (std::size_t i = 0; i < fine.nodes.size(); ++i)
            refined += fine.weights[i] * profile(mid + hw * fine.nodes[i], true);
        refined *= hw;
        p.value = refined;
        p.error = std::fabs(refined - coarse);
        return p;
    };

    std::vector<Panel> panels;
    panels.reserve(breakpoints.size());
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        panels.push_back(eval_panel(breakpoints[i], breakpoints[i + 1]));

    PanelSum out;
    while (true) {
        double total = 0.0, err = 0.0;
        for (const Panel& p : panels) {
            total += p.value;
            err += p.error;
        }
        if (err <= rel_tol * std::fabs(total) + abs_floor) break;
        if (panels.size() >= max_panels) {
            out.converged = false;
            break;
        }
        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].error > panels[worst].error) worst = i;
        const Panel split = panels[worst];
        const double mid = 0.5 * (split.lo + split.hi);
        panels[worst] = eval_panel(split.lo, mid);
        panels.push_back(eval_panel(mid, split.hi));
    }

    std::sort(panels.begin(), panels.end(),
              [](const Panel& a, const Panel& b) { return a.lo < b.lo; });
    for (const Panel& p : panels) {
        out.value += p.value;
        out.error += p.error;
    }
    if (eval_counter) out.evaluations = *eval_counter;
    return out;
}

/// Angular average of the volume-density deviation over the sphere of radius
/// rho about `center`, with the polar axis along `center`.
struct VolumeAngularKernel {
    const MetricModel* model;
    Vec3 center;
    Frame frame;
    int mu_order;
    int phi_count;
    std::size_t* evals;

    double operator()(double rho, bool refined) const {
        const int nmu = refined ? 2 * mu_order : mu_order;
        const int nphi = refined ? 2 * phi_count : phi_count;
        const GaussRule& mu_rule = gauss_rule(nmu);
        const double wphi = 2.0 * M_PI / nphi;
        double acc = 0.0;
        for (int j = 0; j < nmu; ++j) {
            const double mu = mu_rule.nodes[static_cast<std::size_t>(j)];
            const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
            double phi_acc = 0.0;
            for (int k = 0; k < nphi; ++k) {
                const double phi = wphi * (k + 0.5);
                const Vec3 omega = frame.e1 * (s * std::cos(phi)) +
                                   frame.e2 * (s * std::sin(phi)) + frame.e3 * mu;
                phi_acc += volume_density_deviation(*model, center + omega * rho);
            }
            acc += mu_rule.weights[static_cast<std::size_t>(j)] * phi_acc * wphi;
        }
        *evals += static_cast<std::size_t>(nmu) * static_cast<std::size_t>(nphi);
        return rho * rho * acc;
    }
};

inline std::vector<double> radial_breakpoints(double lo, double hi, bool cluster_at_lo) {
    std::vector<double> bp;
    if (cluster_at_lo) {
        // geometric subdivision toward the inner boundary where the density
        // varies sharply (vanishing conformal factor)
        bp.push_back(lo);
        const double span = hi - lo;
        for (int i = 10; i >= 1; --i) bp.push_back(hi - span * (1.0 - std::pow(2.0, -i)));
        bp.push_back(hi);
        std::sort(bp.begin(), bp.end());
        bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    } else {
        bp = {lo, lo + 0.5 * (hi - lo), hi};
    }
    return bp;
}

inline Measure volume_integral(const MetricModel& model, const Vec3& center, double r_lo,
                               double r_hi, double flat, const QuadratureConfig& cfg,
                               bool cluster_at_lo) {
    std::size_t evals = 0;
    const bool centered = center.norm() == 0.0;
    const bool reduce = model.radial_volume_density() && !cfg.force_general_path;
    VolumeAngularKernel kernel{&model,
                               center,
                               frame_with_axis(centered ? Vec3{0, 0, 1} : center),
                               reduce ? (centered ? 1 : cfg.angular_rule_order)
                                      : cfg.angular_rule_order,
                               reduce ? 1 : 2 * cfg.angular_rule_order,
                               &evals};
    const double abs_floor = cfg.rel_tol * cfg.deviation_floor * std::fabs(flat);
    PanelSum sum = adaptive_panels(kernel, radial_breakpoints(r_lo, r_hi, cluster_at_lo),
                                   cfg.radial_rule_order, cfg.rel_tol, abs_floor,
                                   cfg.max_subdivisions, &evals);
    Measure m;
    m.flat = flat;
    m.delta = sum.value;
    m.value = flat + sum.value;
    m.abs_error_bound = sum.error;
    m.evaluations = sum.evaluations;
    m.tolerance_reached = sum.converged;
    return m;
}

/// Deviation of the induced area element on the sphere |x - center| = R,
/// reduced by the flat factor sin(theta): integrand over (mu, phi).
struct AreaGeneralKernel {
    const MetricModel* model;
    Vec3 center;
    double radius;
    Frame frame;
    int phi_count;
    std::size_t* evals;

    double operator()(double mu, bool refined) const {
        const int nphi = refined ? 2 * phi_count : phi_count;
        const double wphi = 2.0 * M_PI / nphi;
        const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        double acc = 0.0;
        for (int k = 0; k < nphi; ++k) {
            const double phi = wphi * (k + 0.5);
            const double c = std::cos(phi), sn = std::sin(phi);
            const Vec3 u_r = frame.e1 * c + frame.e2 * sn;
            const Vec3 omega = u_r * s + frame.e3 * mu;
            // unit tangents: t1 = d_theta omega, t2 = d_phi omega / sin(theta)
            const Vec3 t1 = u_r * mu - frame.e3 * s;
            const Vec3 t2 = frame.e1 * (-sn) + frame.e2 * c;
            const Sym3 dev = metric_deviation(*model, center + omega * radius);
            const double m00 = dev.quad(t1, t1);
            const double m11 = dev.quad(t2, t2);
            const double m01 = dev.quad(t1, t2);
            // sqrt(det(I + M)) - 1 without cancellation
            const double dd = m00 + m11 + m00 * m11 - m01 * m01;
            acc += std::expm1(0.5 * std::log1p(dd));
        }
        *evals += static_cast<std::size_t>(nphi);
        return radius * radius * acc * wphi;
    }
};

/// Conformal shortcut: area element deviation is u^4 - 1 times the flat one.
struct AreaConformalKernel {
    const MetricModel* model;
    Vec3 center;
    double radius;
    Frame frame;
    int phi_count;
    std::size_t* evals;

    double operator()(double mu, bool refined) const {
        const int nphi = refined ? 2 * phi_count : phi_count;
        const double wphi = 2.0 * M_PI / nphi;
        const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        double acc = 0.0;
        for (int k = 0; k < nphi; ++k) {
            const double phi = wphi * (k + 0.5);
            const Vec3 omega = frame.e1 * (s * std::cos(phi)) + frame.e2 * (s * std::sin(phi)) +
                               frame.e3 * mu;
            const Vec3 x = center + omega * radius;
            const double r = x.norm();
            require_admissible(*model, r);
            acc += powm1(conformal_w(*model, r), 4.0);
        }
        *evals += static_cast<std::size_t>(nphi);
        return radius * radius * acc * wphi;
    }
};

template <typename Kernel>
Measure area_integral(Kernel kernel, double radius, const QuadratureConfig& cfg,
                      std::size_t* evals) {
    const double flat = flat_sphere_area(radius);
    const double abs_floor = cfg.rel_tol * cfg.deviation_floor * flat;
    PanelSum sum = adaptive_panels(kernel, std::vector<double>{-1.0, 0.0, 1.0},
                                   cfg.angular_rule_order, cfg.rel_tol, abs_floor,
                                   cfg.max_subdivisions, evals);
    Measure m;
    m.flat = flat;
    m.delta = sum.value;
    m.value = flat + sum.value;
    m.abs_error_bound = sum.error;
    m.evaluations = sum.evaluations;
    m.tolerance_reached = sum.converged;
    return m;
}

inline void require_ball_admissible(const MetricModel& model, const Vec3& center, double radius) {
    if (!(radius > 0.0)) throw error(errc::invalid_argument, "ball radius must be positive");
    if (model.chart_covers_origin()) return;
    if (!(center.norm() - radius > model.excised_radius))
        throw error(errc::ball_intersects_excised_set,
                    "coordinate ball reaches the excised set or the chart origin; "
                    "use annulus_volume for centered regions");
}

}  // namespace detail

/// Metric volume of the coordinate ball |x - center| < radius.
inline Measure ball_volume(const MetricModel& model, const Vec3& center, double radius,
                           const QuadratureConfig& cfg) {
    cfg.validate();
    detail::require_ball_admissible(model, center, radius);
    return detail::volume_integral(model, center, 0.0, radius, flat_ball_volume(radius), cfg,
                                   false);
}

/// Metric volume of the centered region excised_radius < |x| < outer_radius
/// (the chart realization of the region enclosed by the coordinate sphere).
inline Measure annulus_volume(const MetricModel& model, double outer_radius,
                              const QuadratureConfig& cfg) {
    cfg.validate();
    if (!(outer_radius > model.excised_radius))
        throw error(errc::invalid_argument, "annulus outer radius must exceed the excised radius");
    const double r_in = model.excised_radius;
    const double flat = flat_ball_volume(outer_radius) - flat_ball_volume(r_in);
    return detail::volume_integral(model, Vec3{}, r_in, outer_radius, flat, cfg, r_in > 0.0);
}

/// Area of the sphere |x - center| = radius in the induced metric.
/// Conformal models take the u^4 fast path unless cfg.force_general_path.
inline Measure sphere_area(const MetricModel& model, const Vec3& center, double radius,
                           const QuadratureConfig& cfg) {
    cfg.validate();
    if (!(radius > 0.0)) throw error(errc::invalid_argument, "sphere radius must be positive");
    if (!model.chart_covers_origin()) {
        if (!(std::fabs(center.norm() - radius) > model.excised_radius))
            throw error(errc::sphere_intersects_excised_set,
                        "coordinate sphere reaches the excised set");
    }
    std::size_t evals = 0;
    const bool centered = center.norm() == 0.0;
    const Frame frame = frame_with_axis(centered ? Vec3{0, 0, 1} : center);
    if (model.conformal() && !cfg.force_general_path) {
        // conformal shortcut: the integrand is phi-free in the aligned frame
        detail::AreaConformalKernel kernel{&model, center, radius, frame, 1, &evals};
        return detail::area_integral(kernel, radius, cfg, &evals);
    }
    detail::AreaGeneralKernel kernel{&model, center, radius, frame,
                                     2 * cfg.angular_rule_order, &evals};
    return detail::area_integral(kernel, radius, cfg, &evals);
}

/// Induced-metric path regardless of model kind (consistency-test surface).
inline Measure sphere_area_general(const MetricModel& model, const Vec3& center, double radius,
                                   const QuadratureConfig& cfg) {
    QuadratureConfig c = cfg;
    c.force_general_path = true;
    return sphere_area(model, center, radius, c);
}

}  // namespace isomass
