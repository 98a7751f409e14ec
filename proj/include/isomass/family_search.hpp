#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "isomass/errors.hpp"
#include "isomass/mass.hpp"
#include "isomass/metric_model.hpp"
#include "isomass/region.hpp"

namespace isomass {

enum class FamilyKind {
    CenteredAnnulus,  // params: {R}
    OffsetBall,       // params: {R, d}
    AnnulusPlusBall,  // params: {R_annulus, R_ball, d}
    KBalls,           // params: {R, d_1 < ... < d_k}, shared radius, collinear centers
};

inline const char* family_kind_name(FamilyKind k) {
    switch (k) {
        case FamilyKind::CenteredAnnulus: return "centered_annulus";
        case FamilyKind::OffsetBall: return "offset_ball";
        case FamilyKind::AnnulusPlusBall: return "annulus_plus_ball";
        case FamilyKind::KBalls: return "k_balls";
    }
    return "?";
}

/// A low-dimensional parametrized family of regions to maximize mql over.
struct FamilySpec {
    FamilyKind family = FamilyKind::CenteredAnnulus;
    std::size_t k = 2;  // KBalls only, <= 4
    std::vector<std::array<double, 2>> bounds;  // per-parameter {lo, hi}
    double min_gap = 1e-3;

    std::size_t dim() const {
        switch (family) {
            case FamilyKind::CenteredAnnulus: return 1;
            case FamilyKind::OffsetBall: return 2;
            case FamilyKind::AnnulusPlusBall: return 3;
            case FamilyKind::KBalls: return 1 + k;
        }
        return 0;
    }

    std::vector<std::string> param_names() const {
        switch (family) {
            case FamilyKind::CenteredAnnulus: return {"R"};
            case FamilyKind::OffsetBall: return {"R", "d"};
            case FamilyKind::AnnulusPlusBall: return {"R_annulus", "R_ball", "d"};
            case FamilyKind::KBalls: {
                std::vector<std::string> names{"R"};
                for (std::size_t i = 1; i <= k; ++i) names.push_back("d" + std::to_string(i));
                return names;
            }
        }
        return {};
    }

    /// Only far off-center balls extend to exhaustion tails via far-ball
    /// augmentation; other families report evaluated values without that
    /// certificate.
    bool embeds_in_exhaustion() const { return family == FamilyKind::OffsetBall; }

    void validate() const {
        if (family == FamilyKind::KBalls && (k < 1 || k > 4))
            throw error(errc::invalid_argument, "k_balls supports 1 <= k <= 4");
        if (bounds.size() != dim())
            throw error(errc::invalid_argument, "family bounds must match the parameter count");
        for (const auto& b : bounds)
            if (!std::isfinite(b[0]) || !std::isfinite(b[1]) || !(b[0] < b[1]) || !(b[0] > 0.0))
                throw error(errc::invalid_argument,
                            "parameter bounds must be finite, positive and ordered");
        if (!(min_gap > 0.0)) throw error(errc::invalid_argument, "min_gap must be positive");
    }
};

/// Maps a parameter point to its Region; nullopt when the point violates the
/// family's structural ordering (e.g. non-ascending KBalls offsets).
inline std::optional<Region> family_region(const FamilySpec& spec,
                                           const std::vector<double>& params) {
    if (params.size() != spec.dim()) return std::nullopt;
    switch (spec.family) {
        case FamilyKind::CenteredAnnulus:
            return Region::annulus(params[0]);
        case FamilyKind::OffsetBall:
            return Region::single_ball({params[1], 0.0, 0.0}, params[0]);
        case FamilyKind::AnnulusPlusBall: {
            Region r = Region::annulus(params[0]);
            r.balls.push_back({{params[2], 0.0, 0.0}, params[1]});
            return r;
        }
        case FamilyKind::KBalls: {
            Region r;
            for (std::size_t i = 1; i < params.size(); ++i) {
                if (i >= 2 && !(params[i] > params[i - 1])) return std::nullopt;
                r.balls.push_back({{params[i], 0.0, 0.0}, params[0]});
            }
            return r;
        }
    }
    return std::nullopt;
}

/// mql of the family member at `params`; nullopt when infeasible (out of
/// bounds, structural ordering violated, or region validation fails at the
/// family's disjointness margin).
inline std::optional<double> evaluate(const MetricModel& model, const FamilySpec& spec,
                                      const std::vector<double>& params,
                                      const QuadratureConfig& cfg) {
    spec.validate();
    if (params.size() != spec.dim()) return std::nullopt;
    for (std::size_t i = 0; i < params.size(); ++i)
        if (!(params[i] >= spec.bounds[i][0]) || !(params[i] <= spec.bounds[i][1]))
            return std::nullopt;
    const auto region = family_region(spec, params);
    if (!region) return std::nullopt;
    if (!validate_region(model, *region, spec.min_gap)) return std::nullopt;
    return mass_ql(measure(model, *region, cfg)).mql;
}

struct SearchConfig {
    std::size_t restarts = 4;
    std::size_t grid_levels = 16;  // per-axis levels of the deterministic start grid
    double simplex_scale = 0.15;   // initial simplex edge, fraction of the bound span
    double f_tol = 1e-12;          // simplex spread termination
};

struct SearchEntry {
    std::vector<double> params;
    double mql = 0.0;  // -inf recorded for infeasible points
    bool feasible = false;
};

struct SearchResult {
    std::vector<double> best_params;
    double best_mql = -std::numeric_limits<double>::infinity();
    Region best_region;
    std::size_t evaluations = 0;
    std::vector<SearchEntry> history;
};

/// Deterministic start grid: geometric per-axis levels (bounds are positive),
/// meshed over all axes. Sweep-style slices of a family are a subset of this
/// grid whenever they use the same level formula.
inline std::vector<double> family_grid_axis(const FamilySpec& spec, std::size_t axis,
                                            std::size_t levels) {
    const double lo = spec.bounds[axis][0], hi = spec.bounds[axis][1];
    std::vector<double> vals;
    if (levels < 2) {
        vals.push_back(std::sqrt(lo * hi));
        return vals;
    }
    for (std::size_t i = 0; i < levels; ++i)
        vals.push_back(lo * std::pow(hi / lo, static_cast<double>(i) /
                                                  static_cast<double>(levels - 1)));
    return vals;
}

namespace detail {

struct Objective {
    const MetricModel* model;
    const FamilySpec* spec;
    const QuadratureConfig* cfg;
    std::size_t budget;
    SearchResult* out;

    bool exhausted() const { return out->evaluations >= budget; }

    /// Returns -mql (minimization sense); infeasible points get +huge.
    double operator()(const std::vector<double>& params) {
        if (exhausted()) return 1e300;
        const auto mql = evaluate(*model, *spec, params, *cfg);
        ++out->evaluations;
        SearchEntry e;
        e.params = params;
        e.feasible = mql.has_value();
        e.mql = mql ? *mql : -std::numeric_limits<double>::infinity();
        out->history.push_back(e);
        if (mql && *mql > out->best_mql) {
            out->best_mql = *mql;
            out->best_params = params;
        }
        return mql ? -*mql : 1e300;
    }
};

inline void clamp_to_bounds(const FamilySpec& spec, std::vector<double>& x) {
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::clamp(x[i], spec.bounds[i][0], spec.bounds[i][1]);
}

/// Nelder-Mead with bound clamping (alpha=1, gamma=2, rho=1/2, sigma=1/2).
inline void nelder_mead(Objective& f, const FamilySpec& spec, std::vector<double> start,
                        double scale, double f_tol, std::size_t max_iter) {
    const std::size_t n = spec.dim();
    std::vector<std::vector<double>> x(n + 1, start);
    for (std::size_t j = 0; j < n; ++j) {
        const double span = spec.bounds[j][1] - spec.bounds[j][0];
        double step = scale * span;
        if (start[j] + step > spec.bounds[j][1]) step = -step;
        x[j + 1][j] += step;
        clamp_to_bounds(spec, x[j + 1]);
    }
    std::vector<double> fx(n + 1);
    for (std::size_t j = 0; j <= n; ++j) fx[j] = f(x[j]);

    for (std::size_t iter = 0; iter < max_iter && !f.exhausted(); ++iter) {
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        {
            std::vector<std::vector<double>> xs(n + 1);
            std::vector<double> fs(n + 1);
            for (std::size_t i = 0; i <= n; ++i) {
                xs[i] = x[idx[i]];
                fs[i] = fx[idx[i]];
            }
            x.swap(xs);
            fx.swap(fs);
        }
        if (std::fabs(fx[n] - fx[0]) <= f_tol * (1.0 + std::fabs(fx[0]))) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) centroid[i] += x[j][i];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (centroid[i] - x[n][i]);
            clamp_to_bounds(spec, p);
            return p;
        };

        const auto xr = blend(1.0);
        const double fr = f(xr);
        if (fr < fx[0]) {
            const auto xe = blend(2.0);
            const double fe = f(xe);
            if (fe < fr) {
                x[n] = xe;
                fx[n] = fe;
            } else {
                x[n] = xr;
                fx[n] = fr;
            }
        } else if (fr < fx[n - 1]) {
            x[n] = xr;
            fx[n] = fr;
        } else {
            const bool outside = fr < fx[n];
            const auto xc = blend(outside ? 0.5 : -0.5);
            const double fc = f(xc);
            if (fc < (outside ? fr : fx[n])) {
                x[n] = xc;
                fx[n] = fc;
            } else {
                for (std::size_t j = 1; j <= n; ++j) {
                    for (std::size_t i = 0; i < n; ++i)
                        x[j][i] = x[0][i] + 0.5 * (x[j][i] - x[0][i]);
                    fx[j] = f(x[j]);
                }
            }
        }
    }
}

}  // namespace detail

/// Multi-start simplex search maximizing mql over the family. Deterministic
/// for a fixed seed: a geometric start grid is evaluated first, then simplex
/// restarts from the best distinct grid points (random jitter fills in when
/// the grid yields too few feasible starts).
inline SearchResult search(const MetricModel& model, const FamilySpec& spec, std::size_t budget,
                           std::uint64_t seed, const QuadratureConfig& cfg,
                           const SearchConfig& sc = {}) {
    spec.validate();
    if (budget < 20) throw error(errc::invalid_argument, "search budget must be >= 20");

    SearchResult result;
    detail::Objective obj{&model, &spec, &cfg, budget, &result};

    const std::size_t n = spec.dim();
    std::size_t per_axis = sc.grid_levels;
    if (n >= 2) per_axis = std::max<std::size_t>(3, static_cast<std::size_t>(
                                                        std::floor(std::pow(
                                                            static_cast<double>(sc.grid_levels),
                                                            1.0 / static_cast<double>(n)) +
                                                        1e-9)));
    std::vector<std::vector<double>> axes;
    for (std::size_t a = 0; a < n; ++a) axes.push_back(family_grid_axis(spec, a, per_axis));

    std::vector<std::pair<double, std::vector<double>>> grid_scores;
    std::vector<std::size_t> counter(n, 0);
    const std::size_t grid_budget = std::max<std::size_t>(budget / 2, 1);
    while (true) {
        if (obj.exhausted() || result.history.size() >= grid_budget) break;
        std::vector<double> p(n);
        for (std::size_t a = 0; a < n; ++a) p[a] = axes[a][counter[a]];
        const double fval = obj(p);
        if (fval < 1e299) grid_scores.push_back({fval, p});
        std::size_t a = 0;
        while (a < n && ++counter[a] == axes[a].size()) {
            counter[a] = 0;
            ++a;
        }
        if (a == n) break;
    }

    std::sort(grid_scores.begin(), grid_scores.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });

    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> starts;
    for (const auto& g : grid_scores) {
        if (starts.size() >= sc.restarts) break;
        starts.push_back(g.second);
    }
    while (starts.size() < sc.restarts) {
        std::vector<double> p(n);
        for (std::size_t a = 0; a < n; ++a) {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const double lo = spec.bounds[a][0], hi = spec.bounds[a][1];
            p[a] = lo * std::pow(hi / lo, u(rng));
        }
        starts.push_back(p);
    }

    const std::size_t remaining = budget > result.evaluations ? budget - result.evaluations : 0;
    const std::size_t per_restart =
        starts.empty() ? 0 : std::max<std::size_t>(remaining / starts.size(), 8);
    for (const auto& s : starts) {
        if (obj.exhausted()) break;
        detail::nelder_mead(obj, spec, s, sc.simplex_scale, sc.f_tol, per_restart);
    }

    if (!result.best_params.empty()) {
        const auto region = family_region(spec, result.best_params);
        if (region) result.best_region = *region;
    }
    return result;
}

}  // namespace isomass
