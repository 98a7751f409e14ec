#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isomass/errors.hpp"
#include "isomass/family_search.hpp"
#include "isomass/mass.hpp"
#include "isomass/metric_model.hpp"
#include "isomass/region.hpp"
#include "isomass/version.hpp"

namespace isomass {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Locale-independent number formatting
// ---------------------------------------------------------------------------

/// Round-trip exact formatting for CSV and manifests.
inline std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// 12 significant digits for human-facing reports.
inline std::string fmt_display(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Config file: model + quadrature + search settings in one JSON document
// ---------------------------------------------------------------------------

struct RunConfig {
    MetricModel model;
    QuadratureConfig quadrature;
    SearchConfig search;
    ConstructionLimits limits;
    json snapshot;  // normalized config document (replayable)
};

namespace detail {

inline double require_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        throw error(errc::invalid_config, std::string("missing or non-numeric field '") + key +
                                              "'");
    return j[key].get<double>();
}

inline double number_or(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number())
        throw error(errc::invalid_config, std::string("field '") + key + "' must be numeric");
    return j[key].get<double>();
}

}  // namespace detail

inline MetricModel model_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw error(errc::invalid_config, "model requires a string 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    MetricModel model;
    if (kind == "euclidean") {
        model = MetricModel::euclidean();
    } else if (kind == "schwarzschild") {
        model = MetricModel::schwarzschild(detail::require_number(j, "mass"));
    } else if (kind == "conformal") {
        model = MetricModel::conformal_perturbation(detail::require_number(j, "amplitude"),
                                                    detail::require_number(j, "decay"));
        model.excised_radius = detail::number_or(j, "excised_radius", 0.0);
    } else if (kind == "diagonal") {
        if (!j.contains("amplitudes") || !j["amplitudes"].is_array() ||
            j["amplitudes"].size() != 3)
            throw error(errc::invalid_config, "diagonal model requires 'amplitudes' of size 3");
        std::array<double, 3> a{};
        for (std::size_t i = 0; i < 3; ++i) {
            if (!j["amplitudes"][i].is_number())
                throw error(errc::invalid_config, "amplitudes must be numeric");
            a[i] = j["amplitudes"][i].get<double>();
        }
        model = MetricModel::diagonal_perturbation(a, detail::require_number(j, "decay"));
        model.excised_radius = detail::number_or(j, "excised_radius", 0.0);
    } else {
        throw error(errc::invalid_config, "unknown model kind '" + kind + "'");
    }
    model.decay_constant = detail::number_or(j, "decay_constant", model.decay_constant);
    model.decay_rate = detail::number_or(j, "decay_rate", model.decay_rate);
    if (!(model.decay_constant > 0.0) || !(model.decay_rate > 0.0))
        throw error(errc::invalid_config, "decay constants must be positive");
    if (j.contains("known_adm")) model.known_adm = detail::require_number(j, "known_adm");
    if (!(model.excised_radius >= 0.0))
        throw error(errc::invalid_config, "excised_radius must be nonnegative");
    return model;
}

inline json model_to_json(const MetricModel& m) {
    json j;
    j["kind"] = model_kind_name(m.kind);
    switch (m.kind) {
        case ModelKind::Euclidean: break;
        case ModelKind::Schwarzschild: j["mass"] = m.mass; break;
        case ModelKind::ConformalPerturbation:
            j["amplitude"] = m.amplitude;
            j["decay"] = m.structural_decay;
            j["excised_radius"] = m.excised_radius;
            break;
        case ModelKind::DiagonalPerturbation:
            j["amplitudes"] = {m.amplitudes[0], m.amplitudes[1], m.amplitudes[2]};
            j["decay"] = m.structural_decay;
            j["excised_radius"] = m.excised_radius;
            break;
    }
    j["decay_constant"] = m.decay_constant;
    j["decay_rate"] = m.decay_rate;
    if (m.known_adm) j["known_adm"] = *m.known_adm;
    return j;
}

inline RunConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw error(errc::invalid_config, "config root must be an object");
    if (!doc.contains("model")) throw error(errc::invalid_config, "config requires 'model'");
    RunConfig rc;
    rc.model = model_from_json(doc["model"]);
    if (doc.contains("quadrature")) {
        const json& q = doc["quadrature"];
        rc.quadrature.rel_tol = detail::number_or(q, "rel_tol", rc.quadrature.rel_tol);
        rc.quadrature.max_subdivisions = static_cast<std::size_t>(
            detail::number_or(q, "max_subdivisions",
                              static_cast<double>(rc.quadrature.max_subdivisions)));
        rc.quadrature.radial_rule_order = static_cast<int>(detail::number_or(
            q, "radial_rule_order", rc.quadrature.radial_rule_order));
        rc.quadrature.angular_rule_order = static_cast<int>(detail::number_or(
            q, "angular_rule_order", rc.quadrature.angular_rule_order));
        rc.quadrature.validate();
    }
    if (doc.contains("search")) {
        const json& s = doc["search"];
        rc.search.restarts = static_cast<std::size_t>(
            detail::number_or(s, "restarts", static_cast<double>(rc.search.restarts)));
        rc.search.grid_levels = static_cast<std::size_t>(
            detail::number_or(s, "grid_levels", static_cast<double>(rc.search.grid_levels)));
        rc.search.simplex_scale =
            detail::number_or(s, "simplex_scale", rc.search.simplex_scale);
    }
    if (doc.contains("limits")) {
        const json& l = doc["limits"];
        rc.limits.max_offset_doublings = static_cast<std::size_t>(detail::number_or(
            l, "max_offset_doublings", static_cast<double>(rc.limits.max_offset_doublings)));
        rc.limits.max_volume_doublings = static_cast<std::size_t>(detail::number_or(
            l, "max_volume_doublings", static_cast<double>(rc.limits.max_volume_doublings)));
    }
    // normalized snapshot: re-serialized known fields only
    rc.snapshot = json{
        {"model", model_to_json(rc.model)},
        {"quadrature",
         {{"rel_tol", rc.quadrature.rel_tol},
          {"max_subdivisions", rc.quadrature.max_subdivisions},
          {"radial_rule_order", rc.quadrature.radial_rule_order},
          {"angular_rule_order", rc.quadrature.angular_rule_order}}},
        {"search",
         {{"restarts", rc.search.restarts},
          {"grid_levels", rc.search.grid_levels},
          {"simplex_scale", rc.search.simplex_scale}}},
        {"limits",
         {{"max_offset_doublings", rc.limits.max_offset_doublings},
          {"max_volume_doublings", rc.limits.max_volume_doublings}}},
    };
    return rc;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error(errc::invalid_config, "cannot open config file " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw error(errc::invalid_config, std::string("config parse error: ") + e.what());
    }
    return config_from_json(doc);
}

// ---------------------------------------------------------------------------
// Region and family-spec literals
// ---------------------------------------------------------------------------

inline Region region_from_json(const json& j) {
    if (!j.is_object()) throw error(errc::invalid_config, "region literal must be an object");
    Region r;
    if (j.contains("annulus")) {
        if (!j["annulus"].is_number())
            throw error(errc::invalid_config, "region 'annulus' must be a number");
        r.centered_annulus = j["annulus"].get<double>();
    }
    if (j.contains("balls")) {
        if (!j["balls"].is_array())
            throw error(errc::invalid_config, "region 'balls' must be an array");
        for (const json& b : j["balls"]) {
            if (!b.is_object() || !b.contains("center") || !b.contains("radius") ||
                !b["center"].is_array() || b["center"].size() != 3)
                throw error(errc::invalid_config,
                            "each ball needs 'center' [x,y,z] and 'radius'");
            Ball ball;
            ball.center = {b["center"][0].get<double>(), b["center"][1].get<double>(),
                           b["center"][2].get<double>()};
            ball.radius = b["radius"].get<double>();
            r.balls.push_back(ball);
        }
    }
    if (r.component_count() == 0)
        throw error(errc::invalid_config, "region literal has no components");
    return r;
}

inline json region_to_json(const Region& r) {
    json j = json::object();
    if (r.centered_annulus) j["annulus"] = *r.centered_annulus;
    json balls = json::array();
    for (const Ball& b : r.balls)
        balls.push_back({{"center", {b.center.x, b.center.y, b.center.z}},
                         {"radius", b.radius}});
    if (!balls.empty()) j["balls"] = balls;
    return j;
}

inline FamilySpec family_from_json(const json& j) {
    if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
        throw error(errc::invalid_config, "family spec requires a string 'family'");
    const std::string name = j["family"].get<std::string>();
    FamilySpec spec;
    if (name == "centered_annulus")
        spec.family = FamilyKind::CenteredAnnulus;
    else if (name == "offset_ball")
        spec.family = FamilyKind::OffsetBall;
    else if (name == "annulus_plus_ball")
        spec.family = FamilyKind::AnnulusPlusBall;
    else if (name == "k_balls")
        spec.family = FamilyKind::KBalls;
    else
        throw error(errc::invalid_config, "unknown family '" + name + "'");
    if (spec.family == FamilyKind::KBalls)
        spec.k = static_cast<std::size_t>(detail::require_number(j, "k"));
    spec.min_gap = detail::number_or(j, "min_gap", spec.min_gap);
    if (!j.contains("bounds") || !j["bounds"].is_object())
        throw error(errc::invalid_config, "family spec requires 'bounds' object");
    const auto names = spec.param_names();
    for (const std::string& p : names) {
        if (!j["bounds"].contains(p) || !j["bounds"][p].is_array() ||
            j["bounds"][p].size() != 2)
            throw error(errc::invalid_config, "bounds must give [lo, hi] for parameter " + p);
        spec.bounds.push_back(
            {j["bounds"][p][0].get<double>(), j["bounds"][p][1].get<double>()});
    }
    spec.validate();
    return spec;
}

inline json family_to_json(const FamilySpec& spec) {
    json j;
    j["family"] = family_kind_name(spec.family);
    if (spec.family == FamilyKind::KBalls) j["k"] = spec.k;
    j["min_gap"] = spec.min_gap;
    json bounds = json::object();
    const auto names = spec.param_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        bounds[names[i]] = {spec.bounds[i][0], spec.bounds[i][1]};
    j["bounds"] = bounds;
    return j;
}

// ---------------------------------------------------------------------------
// CSV (comma-separated, header row, LF endings, '.' decimal separator)
// ---------------------------------------------------------------------------

class CsvWriter {
  public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw error(errc::invalid_argument, "cannot open " + path.string());
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

  private:
    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(errc::invalid_argument, "cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            table.header = cells;
            first = false;
        } else {
            table.rows.push_back(cells);
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Run manifests
// ---------------------------------------------------------------------------

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Writes manifest.json describing one CLI run: config snapshot, normalized
/// invocation, produced files, and headline scalars. Replaying the manifest
/// re-executes the invocation against the snapshot.
inline void write_manifest(const std::filesystem::path& dir, const std::string& command,
                           const json& config_snapshot, const json& invocation,
                           const std::string& model_description,
                           const std::vector<std::string>& outputs, const json& summary) {
    json m;
    m["tool"] = kToolName;
    m["version"] = kToolVersion;
    m["created_utc"] = utc_timestamp();
    m["command"] = command;
    m["model"] = model_description;
    m["config"] = config_snapshot;
    m["invocation"] = invocation;
    m["outputs"] = outputs;
    m["summary"] = summary;
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw error(errc::invalid_argument, "cannot write manifest in " + dir.string());
    out << m.dump(2) << '\n';
}

inline json load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error(errc::invalid_argument, "cannot open manifest " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw error(errc::invalid_config, std::string("manifest parse error: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("config") || !doc.contains("invocation"))
        throw error(errc::invalid_config, "manifest lacks config/invocation");
    return doc;
}

}  // namespace isomass
