// Command-line front end: config ingestion, subcommands, CSV emission, and
// persisted run manifests. Exit codes: 0 ok, 2 config error, 3 domain
// validation error, 4 data error, 5 search budget exhausted (partial results
// are still written).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "isomass/family_search.hpp"
#include "isomass/mass.hpp"
#include "isomass/run_io.hpp"
#include "isomass/version.hpp"

namespace fs = std::filesystem;
using namespace isomass;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;
constexpr int kExitData = 4;
constexpr int kExitBudget = 5;

/// Inline JSON or @file indirection for literal arguments.
json parse_json_argument(const std::string& arg) {
    std::string text = arg;
    if (!arg.empty() && arg[0] == '@') {
        std::ifstream in(arg.substr(1));
        if (!in) throw error(errc::invalid_config, "cannot open " + arg.substr(1));
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw error(errc::invalid_config, std::string("JSON parse error: ") + e.what());
    }
}

void prepare_out_dir(const fs::path& dir, const json& config_snapshot) {
    fs::create_directories(dir);
    std::ofstream cfg(dir / "config.json", std::ios::binary);
    cfg << config_snapshot.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// -------------------------------------------------------------------------
// massql
// -------------------------------------------------------------------------

int run_massql(const RunConfig& rc, const json& region_literal, const fs::path& out_dir) {
    const Region region = region_from_json(region_literal);
    const ValidationResult vr = validate_region(rc.model, region);
    if (!vr) {
        std::cerr << "invalid region: " << vr.violation << "\n";
        return kExitDomain;
    }
    prepare_out_dir(out_dir, rc.snapshot);
    const MeasuredRegion mr = measure(rc.model, region, rc.quadrature);
    const MassReport rep = mass_ql(mr);

    std::string text;
    text += "volume           = " + fmt_display(rep.volume) + "\n";
    text += "perimeter        = " + fmt_display(rep.perimeter) + "\n";
    text += "mql              = " + fmt_display(rep.mql) + "\n";
    text += "propagated_error = " + fmt_display(rep.propagated_error) + "\n";
    std::cout << text;
    write_text(out_dir / "report.txt", text);

    write_manifest(out_dir, "massql", rc.snapshot,
                   json{{"command", "massql"}, {"region", region_to_json(region)}},
                   rc.model.describe(), {"config.json", "report.txt"},
                   json{{"mql", rep.mql},
                        {"volume", rep.volume},
                        {"perimeter", rep.perimeter},
                        {"propagated_error", rep.propagated_error}});
    return kExitOk;
}

// -------------------------------------------------------------------------
// sweep
// -------------------------------------------------------------------------

std::vector<double> sweep_radii(double rmin, double rmax, std::size_t count,
                                const std::string& spacing) {
    if (count < 2 || !(rmin > 0.0) || !(rmax > rmin))
        throw error(errc::invalid_argument, "need rmin < rmax and count >= 2");
    std::vector<double> radii;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(count - 1);
        radii.push_back(spacing == "linear" ? rmin + t * (rmax - rmin)
                                            : rmin * std::pow(rmax / rmin, t));
    }
    return radii;
}

int run_sweep(const RunConfig& rc, double rmin, double rmax, std::size_t count,
              const std::string& spacing, const fs::path& out_dir) {
    if (spacing != "geometric" && spacing != "linear")
        throw error(errc::invalid_argument, "spacing must be geometric or linear");
    const auto radii = sweep_radii(rmin, rmax, count, spacing);
    const SweepTable table = sweep_centered(rc.model, radii, rc.quadrature);

    prepare_out_dir(out_dir, rc.snapshot);
    {
        CsvWriter csv(out_dir / "sweep.csv");
        csv.row({"R", "volume", "perimeter", "mql", "vol_err", "per_err"});
        for (const SweepRow& r : table.rows)
            csv.row({fmt_full(r.R), fmt_full(r.volume), fmt_full(r.perimeter), fmt_full(r.mql),
                     fmt_full(r.vol_err), fmt_full(r.per_err)});
    }

    std::string summary;
    json summary_json;
    try {
        const LimitEstimate est = extrapolate(table);
        summary += "extrapolated_limit = " + fmt_display(est.limit) + "\n";
        summary += "fit_model          = " + std::string(LimitEstimate::model) + "\n";
        summary += "fit_a              = " + fmt_display(est.a) + "\n";
        summary += "fit_b              = " + fmt_display(est.b) + "\n";
        summary += "fit_residual       = " + fmt_display(est.residual) + "\n";
        summary += "rows_used          = " + std::to_string(est.rows_used) + "\n";
        summary_json = {{"limit", est.limit}, {"a", est.a},      {"b", est.b},
                        {"residual", est.residual}, {"rows_used", est.rows_used}};
        if (rc.model.known_adm) {
            summary += "known_adm          = " + fmt_display(*rc.model.known_adm) + "\n";
            summary_json["known_adm"] = *rc.model.known_adm;
        }
    } catch (const error& e) {
        if (e.code() != errc::ill_conditioned_fit && e.code() != errc::invalid_argument) throw;
        summary += std::string("extrapolation_refused = ") + e.what() + "\n";
        summary_json = {{"extrapolation_refused", e.what()}};
    }
    std::cout << summary;
    write_text(out_dir / "summary.txt", summary);

    write_manifest(out_dir, "sweep", rc.snapshot,
                   json{{"command", "sweep"},
                        {"rmin", rmin},
                        {"rmax", rmax},
                        {"count", count},
                        {"spacing", spacing}},
                   rc.model.describe(), {"config.json", "sweep.csv", "summary.txt"},
                   summary_json);
    return kExitOk;
}

// -------------------------------------------------------------------------
// exhaust
// -------------------------------------------------------------------------

int run_exhaust(const RunConfig& rc, double r0, std::size_t steps, const fs::path& out_dir) {
    const ExhaustionTrace trace = exhaust(rc.model, r0, steps, rc.quadrature, rc.limits);

    prepare_out_dir(out_dir, rc.snapshot);
    {
        CsvWriter csv(out_dir / "trace.csv");
        csv.row({"step", "target_eps", "achieved_mql_abs", "offset_used", "ball_radius_used"});
        for (std::size_t i = 0; i < trace.steps.size(); ++i) {
            const ExhaustionStep& s = trace.steps[i];
            csv.row({std::to_string(i + 1), fmt_full(s.target_eps),
                     fmt_full(s.achieved_mql_abs), fmt_full(s.offset_used),
                     fmt_full(s.ball_radius_used)});
        }
    }
    {
        CsvWriter csv(out_dir / "regions.csv");
        csv.row({"step", "kind", "cx", "cy", "cz", "radius"});
        for (std::size_t i = 0; i < trace.steps.size(); ++i) {
            const Region& r = trace.steps[i].region;
            if (r.centered_annulus)
                csv.row({std::to_string(i + 1), "annulus", "0", "0", "0",
                         fmt_full(*r.centered_annulus)});
            for (const Ball& b : r.balls)
                csv.row({std::to_string(i + 1), "ball", fmt_full(b.center.x),
                         fmt_full(b.center.y), fmt_full(b.center.z), fmt_full(b.radius)});
        }
    }

    std::string summary;
    summary += "steps_completed = " + std::to_string(trace.steps.size()) + "\n";
    summary += std::string("complete        = ") + (trace.complete ? "true" : "false") + "\n";
    summary += "m_iso >= -" + fmt_display(trace.certified_delta) + "\n";
    std::cout << summary;
    write_text(out_dir / "summary.txt", summary);

    write_manifest(out_dir, "exhaust", rc.snapshot,
                   json{{"command", "exhaust"}, {"r0", r0}, {"steps", steps}},
                   rc.model.describe(),
                   {"config.json", "trace.csv", "regions.csv", "summary.txt"},
                   json{{"certified_delta", trace.certified_delta},
                        {"complete", trace.complete}});
    return trace.complete ? kExitOk : kExitBudget;
}

// -------------------------------------------------------------------------
// optimize
// -------------------------------------------------------------------------

int run_optimize(const RunConfig& rc, const json& family_literal, std::size_t budget,
                 std::uint64_t seed, const fs::path& out_dir) {
    const FamilySpec spec = family_from_json(family_literal);
    const SearchResult result = search(rc.model, spec, budget, seed, rc.quadrature, rc.search);

    prepare_out_dir(out_dir, rc.snapshot);
    write_text(out_dir / "family.json", family_to_json(spec).dump(2) + "\n");
    const auto names = spec.param_names();
    {
        CsvWriter csv(out_dir / "history.csv");
        std::vector<std::string> header{"index"};
        header.insert(header.end(), names.begin(), names.end());
        header.push_back("mql");
        header.push_back("feasible");
        csv.row(header);
        for (std::size_t i = 0; i < result.history.size(); ++i) {
            const SearchEntry& e = result.history[i];
            std::vector<std::string> row{std::to_string(i)};
            for (double p : e.params) row.push_back(fmt_full(p));
            row.push_back(fmt_full(e.mql));
            row.push_back(e.feasible ? "1" : "0");
            csv.row(row);
        }
    }

    std::string text;
    text += "family          = " + std::string(family_kind_name(spec.family)) + "\n";
    text += "best_mql        = " + fmt_display(result.best_mql) + "\n";
    for (std::size_t i = 0; i < names.size() && i < result.best_params.size(); ++i)
        text += "best_" + names[i] + std::string(10 - std::min<std::size_t>(names[i].size(), 9),
                                                 ' ') +
                " = " + fmt_display(result.best_params[i]) + "\n";
    text += "evaluations     = " + std::to_string(result.evaluations) + "\n";
    text += std::string("exhaustion_tail = ") +
            (spec.embeds_in_exhaustion()
                 ? "yes (far off-center balls extend into exhaustion tails)"
                 : "no (evaluated values only)") +
            "\n";
    std::cout << text;
    write_text(out_dir / "result.txt", text);

    json summary{{"best_mql", result.best_mql},
                 {"evaluations", result.evaluations},
                 {"embeds_in_exhaustion", spec.embeds_in_exhaustion()}};
    json best_params = json::array();
    for (double p : result.best_params) best_params.push_back(p);
    summary["best_params"] = best_params;

    write_manifest(out_dir, "optimize", rc.snapshot,
                   json{{"command", "optimize"},
                        {"family", family_to_json(spec)},
                        {"budget", budget},
                        {"seed", seed}},
                   rc.model.describe(),
                   {"config.json", "family.json", "history.csv", "result.txt"}, summary);
    return kExitOk;
}

// -------------------------------------------------------------------------
// plotdata
// -------------------------------------------------------------------------

int run_plotdata(const fs::path& input, const std::string& xcol, const std::string& ycol,
                 const fs::path& output) {
    CsvTable table;
    try {
        table = read_csv(input);
    } catch (const error&) {
        std::cerr << "cannot read " << input << "\n";
        return kExitData;
    }
    if (table.header.empty() || table.rows.empty()) {
        std::cerr << "empty CSV: " << input << "\n";
        return kExitData;
    }
    const auto xi = table.column(xcol);
    const auto yi = table.column(ycol);
    if (!xi || !yi) {
        std::cerr << "missing column '" << (xi ? ycol : xcol) << "' in " << input << "\n";
        return kExitData;
    }
    std::ofstream out(output, std::ios::binary);
    if (!out) {
        std::cerr << "cannot write " << output << "\n";
        return kExitData;
    }
    for (const auto& row : table.rows) {
        if (row.size() <= std::max(*xi, *yi)) {
            std::cerr << "short row in " << input << "\n";
            return kExitData;
        }
        out << row[*xi] << ' ' << row[*yi] << '\n';
    }
    return kExitOk;
}

// -------------------------------------------------------------------------
// replay
// -------------------------------------------------------------------------

int run_from_invocation(const RunConfig& rc, const json& inv, const fs::path& out_dir) {
    const std::string command = inv.at("command").get<std::string>();
    if (command == "massql") return run_massql(rc, inv.at("region"), out_dir);
    if (command == "sweep")
        return run_sweep(rc, inv.at("rmin").get<double>(), inv.at("rmax").get<double>(),
                         inv.at("count").get<std::size_t>(),
                         inv.at("spacing").get<std::string>(), out_dir);
    if (command == "exhaust")
        return run_exhaust(rc, inv.at("r0").get<double>(), inv.at("steps").get<std::size_t>(),
                           out_dir);
    if (command == "optimize")
        return run_optimize(rc, inv.at("family"), inv.at("budget").get<std::size_t>(),
                            inv.at("seed").get<std::uint64_t>(), out_dir);
    throw error(errc::invalid_config, "manifest invocation has unknown command " + command);
}

int run_replay(const fs::path& manifest_path, const fs::path& out_dir) {
    const json manifest = load_manifest(manifest_path);
    const RunConfig rc = config_from_json(manifest.at("config"));
    return run_from_invocation(rc, manifest.at("invocation"), out_dir);
}

int exit_code_for(const error& e) {
    switch (e.code()) {
        case errc::invalid_config: return kExitConfig;
        default: return kExitDomain;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasilocal isoperimetric mass on asymptotically flat metric models"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "run_out";
    std::string region_arg;
    std::string family_arg;
    std::string input_csv, xcol, ycol, plot_out;
    std::string manifest_path;
    std::string spacing = "geometric";
    double rmin = 10.0, rmax = 1000.0, r0 = 2.0;
    std::size_t count = 8, steps = 4, budget = 200;
    std::uint64_t seed = 1;

    auto* massql = app.add_subcommand("massql", "Measure a region and print its mql");
    massql->add_option("--config", config_path, "JSON config file")->required();
    massql->add_option("--region", region_arg, "region literal (JSON or @file)")->required();
    massql->add_option("--out-dir", out_dir, "run directory");

    auto* sweep = app.add_subcommand("sweep", "mql(B_R) sweep with limit extrapolation");
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--rmin", rmin)->required();
    sweep->add_option("--rmax", rmax)->required();
    sweep->add_option("--count", count)->required();
    sweep->add_option("--spacing", spacing, "geometric|linear");
    sweep->add_option("--out-dir", out_dir);

    auto* exhaust_cmd = app.add_subcommand("exhaust", "nested exhaustion trace with certified mass bound");
    exhaust_cmd->add_option("--config", config_path)->required();
    exhaust_cmd->add_option("--r0", r0)->required();
    exhaust_cmd->add_option("--steps", steps)->required();
    exhaust_cmd->add_option("--out-dir", out_dir);

    auto* optimize = app.add_subcommand("optimize", "maximize mql over a region family");
    optimize->add_option("--config", config_path)->required();
    optimize->add_option("--family-spec", family_arg, "family spec (JSON or @file)")->required();
    optimize->add_option("--budget", budget);
    optimize->add_option("--seed", seed);
    optimize->add_option("--out-dir", out_dir);

    auto* plotdata = app.add_subcommand("plotdata", "extract two columns from a CSV");
    plotdata->add_option("--input", input_csv)->required();
    plotdata->add_option("--x", xcol)->required();
    plotdata->add_option("--y", ycol)->required();
    plotdata->add_option("--out", plot_out)->required();

    auto* replay = app.add_subcommand("replay", "re-run a recorded manifest");
    replay->add_option("--manifest", manifest_path)->required();
    replay->add_option("--out-dir", out_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (plotdata->parsed()) return run_plotdata(input_csv, xcol, ycol, plot_out);
        if (replay->parsed()) return run_replay(manifest_path, out_dir);

        const RunConfig rc = load_config(config_path);
        if (massql->parsed()) return run_massql(rc, parse_json_argument(region_arg), out_dir);
        if (sweep->parsed()) return run_sweep(rc, rmin, rmax, count, spacing, out_dir);
        if (exhaust_cmd->parsed()) return run_exhaust(rc, r0, steps, out_dir);
        if (optimize->parsed())
            return run_optimize(rc, parse_json_argument(family_arg), budget, seed, out_dir);
    } catch (const error& e) {
        std::cerr << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitOk;
}
