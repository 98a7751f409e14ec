#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "isomass/errors.hpp"
#include "isomass/geometry.hpp"

namespace isomass {

enum class ModelKind {
    Euclidean,
    Schwarzschild,
    ConformalPerturbation,
    DiagonalPerturbation,
};

inline const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Euclidean: return "euclidean";
        case ModelKind::Schwarzschild: return "schwarzschild";
        case ModelKind::ConformalPerturbation: return "conformal";
        case ModelKind::DiagonalPerturbation: return "diagonal";
    }
    return "?";
}

/// Explicit metric model on the asymptotically flat chart.
///
/// Kinds:
///   Euclidean                g = delta
///   Schwarzschild(m)         g = (1 + m/(2r))^4 delta, chart r > |m|/2
///   ConformalPerturbation    g = (1 + A r^-tau)^4 delta
///   DiagonalPerturbation     g_ii = 1 + A_i r^-tau (no off-diagonal terms)
///
/// The declared (decay_constant, decay_rate) are the user's claimed flatness
/// constants; decay_check() validates them empirically.
struct MetricModel {
    ModelKind kind = ModelKind::Euclidean;

    double mass = 0.0;                       // Schwarzschild parameter m
    double amplitude = 0.0;                  // conformal amplitude A
    std::array<double, 3> amplitudes{};      // diagonal amplitudes A1..A3
    double structural_decay = 1.0;           // the model's own decay exponent

    double excised_radius = 0.0;             // coordinate radius of removed closed ball
    double decay_constant = 1.0;             // declared C of the flatness bound
    double decay_rate = 1.0;                 // declared tau
    std::optional<double> known_adm;         // ADM mass when the model carries one

    static MetricModel euclidean() {
        MetricModel m;
        m.kind = ModelKind::Euclidean;
        m.known_adm = 0.0;
        return m;
    }

    /// Schwarzschild in isotropic coordinates. The closed ball r <= |m|/2 is
    /// excised for either sign of m: for m < 0 it is the set where the
    /// conformal factor vanishes, for m > 0 it is the horizon ball (the chart
    /// volume integral diverges at the origin otherwise).
    static MetricModel schwarzschild(double m) {
        MetricModel mm;
        mm.kind = ModelKind::Schwarzschild;
        mm.mass = m;
        mm.excised_radius = std::fabs(m) / 2.0;
        mm.structural_decay = 1.0;
        mm.decay_rate = 1.0;
        mm.decay_constant = 5.0 * std::max(std::fabs(m), 1.0);
        mm.known_adm = m;
        return mm;
    }

    static MetricModel conformal_perturbation(double a, double tau) {
        if (!(tau > 0.0)) throw error(errc::invalid_argument, "decay exponent must be positive");
        MetricModel mm;
        mm.kind = ModelKind::ConformalPerturbation;
        mm.amplitude = a;
        mm.structural_decay = tau;
        mm.decay_rate = tau;
        mm.decay_constant = 5.0 * std::max(std::fabs(a), 1.0);
        return mm;
    }

    static MetricModel diagonal_perturbation(const std::array<double, 3>& a, double tau) {
        if (!(tau > 0.0)) throw error(errc::invalid_argument, "decay exponent must be positive");
        MetricModel mm;
        mm.kind = ModelKind::DiagonalPerturbation;
        mm.amplitudes = a;
        mm.structural_decay = tau;
        mm.decay_rate = tau;
        const double amax = std::max({std::fabs(a[0]), std::fabs(a[1]), std::fabs(a[2])});
        mm.decay_constant = std::max(1.5 * amax, 0.1);
        return mm;
    }

    /// True when the metric is a conformal multiple of delta.
    bool conformal() const { return kind != ModelKind::DiagonalPerturbation; }

    /// True when sqrt(det g) depends on |x| only (all built-in kinds).
    bool radial_volume_density() const { return true; }

    /// Regions must keep positive chart distance from the origin for every
    /// non-Euclidean kind; Euclidean space has no restriction.
    bool chart_covers_origin() const { return kind == ModelKind::Euclidean; }

    std::string describe() const {
        char buf[160];
        switch (kind) {
            case ModelKind::Euclidean:
                return "euclidean";
            case ModelKind::Schwarzschild:
                std::snprintf(buf, sizeof buf, "schwarzschild(m=%.17g)", mass);
                return buf;
            case ModelKind::ConformalPerturbation:
                std::snprintf(buf, sizeof buf, "conformal(A=%.17g, tau=%.17g)", amplitude,
                              structural_decay);
                return buf;
            case ModelKind::DiagonalPerturbation:
                std::snprintf(buf, sizeof buf, "diagonal(A=[%.17g,%.17g,%.17g], tau=%.17g)",
                              amplitudes[0], amplitudes[1], amplitudes[2], structural_decay);
                return buf;
        }
        return "?";
    }
};

namespace detail {

/// u - 1 for the conformal kinds, evaluated without cancellation.
inline double conformal_w(const MetricModel& model, double r) {
    switch (model.kind) {
        case ModelKind::Euclidean: return 0.0;
        case ModelKind::Schwarzschild: return model.mass / (2.0 * r);
        case ModelKind::ConformalPerturbation:
            return model.amplitude * std::pow(r, -model.structural_decay);
        default: return 0.0;
    }
}

/// (1+w)^p - 1 computed stably; requires 1 + w > 0.
inline double powm1(double w, double p) { return std::expm1(p * std::log1p(w)); }

inline void require_admissible(const MetricModel& model, double r) {
    if (model.kind == ModelKind::Euclidean) return;
    if (!(r > model.excised_radius)) {
        // the excised set is closed, so equality is inadmissible too
        throw error(errc::point_in_excised_set,
                    "point at coordinate radius " + std::to_string(r) +
                        " lies in the excised set (radius " +
                        std::to_string(model.excised_radius) + ")");
    }
    if (model.conformal()) {
        const double w = conformal_w(model, r);
        if (!(1.0 + w > 0.0))
            throw error(errc::point_at_conformal_singularity,
                        "conformal factor vanishes at coordinate radius " + std::to_string(r));
    } else {
        const double s = std::pow(r, -model.structural_decay);
        for (double a : model.amplitudes)
            if (!(1.0 + a * s > 0.0))
                throw error(errc::point_at_conformal_singularity,
                            "diagonal metric entry vanishes at coordinate radius " +
                                std::to_string(r));
    }
}

}  // namespace detail

/// g(x) - delta, exact small-deviation form (no large-number cancellation).
inline Sym3 metric_deviation(const MetricModel& model, const Vec3& x) {
    const double r = x.norm();
    detail::require_admissible(model, r);
    switch (model.kind) {
        case ModelKind::Euclidean:
            return Sym3::zero();
        case ModelKind::Schwarzschild:
        case ModelKind::ConformalPerturbation: {
            const double d = detail::powm1(detail::conformal_w(model, r), 4.0);
            return Sym3{{d, d, d, 0.0, 0.0, 0.0}};
        }
        case ModelKind::DiagonalPerturbation: {
            const double s = std::pow(r, -model.structural_decay);
            return Sym3{{model.amplitudes[0] * s, model.amplitudes[1] * s,
                         model.amplitudes[2] * s, 0.0, 0.0, 0.0}};
        }
    }
    return Sym3::zero();
}

/// Pointwise metric tensor g_ij(x).
inline Sym3 metric_at(const MetricModel& model, const Vec3& x) {
    return Sym3::identity() + metric_deviation(model, x);
}

/// sqrt(det g(x)) - 1, stable for deviations far below machine epsilon.
inline double volume_density_deviation(const MetricModel& model, const Vec3& x) {
    const double r = x.norm();
    detail::require_admissible(model, r);
    switch (model.kind) {
        case ModelKind::Euclidean:
            return 0.0;
        case ModelKind::Schwarzschild:
        case ModelKind::ConformalPerturbation:
            // sqrt(det u^4 delta) = u^6
            return detail::powm1(detail::conformal_w(model, r), 6.0);
        case ModelKind::DiagonalPerturbation: {
            const double s = std::pow(r, -model.structural_decay);
            double half_log = 0.0;
            for (double a : model.amplitudes) half_log += std::log1p(a * s);
            return std::expm1(0.5 * half_log);
        }
    }
    return 0.0;
}

/// sqrt(det g(x)); the local metric volume element relative to dx.
inline double volume_density(const MetricModel& model, const Vec3& x) {
    return 1.0 + volume_density_deviation(model, x);
}

struct DecayReport {
    double observed_sup = 0.0;   // sup over samples of max_ij |g_ij - delta_ij| * r^tau
    double max_violation = 0.0;  // max(0, observed_sup - C)
    bool passed = true;
};

/// Samples quasi-uniform directions at each radius and checks the declared
/// decay bound max_ij |g_ij - delta_ij| <= C r^-tau.
inline DecayReport decay_check(const MetricModel& model, const std::vector<double>& radii,
                               std::size_t directions_per_radius) {
    if (radii.empty() || directions_per_radius == 0)
        throw error(errc::invalid_argument, "decay_check needs radii and a direction count");
    double prev = 0.0;
    for (double r : radii) {
        if (!(r > model.excised_radius) || !(r > prev))
            throw error(errc::invalid_argument,
                        "radii must be positive, ascending, and outside the excised set");
        prev = r;
    }
    const auto dirs = fibonacci_directions(directions_per_radius);
    DecayReport rep;
    for (double r : radii) {
        const double weight = std::pow(r, model.decay_rate);
        for (const Vec3& w : dirs) {
            const double dev = metric_deviation(model, w * r).max_abs();
            rep.observed_sup = std::max(rep.observed_sup, dev * weight);
        }
    }
    rep.max_violation = std::max(0.0, rep.observed_sup - model.decay_constant);
    rep.passed = rep.max_violation == 0.0;
    return rep;
}

}  // namespace isomass
