#include "isomass/run_io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

using namespace isomass;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / ("isomass_io_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}
}  // namespace

TEST(Config, ParseSchwarzschild) {
    const json doc = {{"model", {{"kind", "schwarzschild"}, {"mass", -2.0}}},
                      {"quadrature", {{"rel_tol", 1e-8}}}};
    const RunConfig rc = config_from_json(doc);
    EXPECT_EQ(rc.model.kind, ModelKind::Schwarzschild);
    EXPECT_EQ(rc.model.mass, -2.0);
    EXPECT_EQ(rc.model.excised_radius, 1.0);
    ASSERT_TRUE(rc.model.known_adm.has_value());
    EXPECT_EQ(*rc.model.known_adm, -2.0);
    EXPECT_EQ(rc.quadrature.rel_tol, 1e-8);
}

TEST(Config, SnapshotRoundTrip) {
    const json doc = {{"model",
                       {{"kind", "diagonal"},
                        {"amplitudes", {0.1, -0.05, 0.2}},
                        {"decay", 1.5},
                        {"decay_constant", 0.4}}},
                      {"search", {{"restarts", 6}}}};
    const RunConfig rc = config_from_json(doc);
    const RunConfig rc2 = config_from_json(rc.snapshot);
    EXPECT_EQ(rc2.model.kind, ModelKind::DiagonalPerturbation);
    EXPECT_EQ(rc2.model.amplitudes[2], 0.2);
    EXPECT_EQ(rc2.model.decay_constant, 0.4);
    EXPECT_EQ(rc2.search.restarts, 6u);
    EXPECT_EQ(rc.snapshot, rc2.snapshot);
}

TEST(Config, Errors) {
    EXPECT_THROW(config_from_json(json::array()), error);
    EXPECT_THROW(config_from_json(json{{"model", {{"kind", "weird"}}}}), error);
    EXPECT_THROW(config_from_json(json{{"model", {{"kind", "schwarzschild"}}}}), error);
    EXPECT_THROW(config_from_json(json{{"model", {{"kind", "euclidean"}}},
                                       {"quadrature", {{"rel_tol", 0.5}}}}),
                 error);
    try {
        config_from_json(json{{"model", {{"kind", "schwarzschild"}, {"mass", "two"}}}});
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::invalid_config);
    }
}

TEST(RegionLiteral, RoundTrip) {
    const json doc = {{"annulus", 10.0},
                      {"balls", {{{"center", {100.0, 0.0, 0.0}}, {"radius", 5.0}}}}};
    const Region r = region_from_json(doc);
    ASSERT_TRUE(r.centered_annulus.has_value());
    EXPECT_EQ(*r.centered_annulus, 10.0);
    ASSERT_EQ(r.balls.size(), 1u);
    EXPECT_EQ(r.balls[0].center.x, 100.0);
    EXPECT_EQ(region_from_json(region_to_json(r)).balls[0].radius, 5.0);
}

TEST(RegionLiteral, Errors) {
    EXPECT_THROW(region_from_json(json::object()), error);  // no components
    EXPECT_THROW(region_from_json(json{{"balls", {{{"radius", 1.0}}}}}), error);
    EXPECT_THROW(region_from_json(json{{"annulus", "ten"}}), error);
}

TEST(FamilyLiteral, RoundTrip) {
    const json doc = {{"family", "offset_ball"},
                      {"min_gap", 0.1},
                      {"bounds", {{"R", {1.0, 50.0}}, {"d", {10.0, 1e5}}}}};
    const FamilySpec spec = family_from_json(doc);
    EXPECT_EQ(spec.family, FamilyKind::OffsetBall);
    EXPECT_EQ(spec.bounds[1][1], 1e5);
    const FamilySpec spec2 = family_from_json(family_to_json(spec));
    EXPECT_EQ(spec2.bounds, spec.bounds);
}

TEST(FamilyLiteral, KBallsNamesAndErrors) {
    const json doc = {{"family", "k_balls"},
                      {"k", 3},
                      {"bounds",
                       {{"R", {0.5, 2.0}},
                        {"d1", {5.0, 50.0}},
                        {"d2", {5.0, 50.0}},
                        {"d3", {5.0, 50.0}}}}};
    const FamilySpec spec = family_from_json(doc);
    EXPECT_EQ(spec.dim(), 4u);
    EXPECT_THROW(family_from_json(json{{"family", "k_balls"}, {"k", 3}}), error);
    EXPECT_THROW(family_from_json(json{{"family", "nope"}, {"bounds", json::object()}}),
                 error);
}

TEST(Csv, WriteReadRoundTrip) {
    const auto dir = temp_dir();
    const auto path = dir / "t.csv";
    {
        CsvWriter w(path);
        w.row({"R", "mql"});
        w.row({fmt_full(10.0), fmt_full(-1.2609)});
        w.row({fmt_full(20.0), fmt_full(-1.5598)});
    }
    const CsvTable t = read_csv(path);
    ASSERT_EQ(t.header.size(), 2u);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.column("mql"), 1u);
    EXPECT_FALSE(t.column("nope").has_value());
    EXPECT_EQ(std::stod(t.rows[1][1]), -1.5598);
    // LF endings, no CR
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(bytes.find('\r'), std::string::npos);
    fs::remove_all(dir);
}

TEST(Format, FullPrecisionRoundTrip) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 200; ++i) {
        const double v = std::pow(10.0, u(rng) / 1e5) * (u(rng) > 0 ? 1 : -1);
        EXPECT_EQ(std::stod(fmt_full(v)), v);
    }
    EXPECT_EQ(fmt_display(0.0), "0");
}

TEST(Manifest, WriteAndLoad) {
    const auto dir = temp_dir();
    const json cfg = {{"model", {{"kind", "euclidean"}}}};
    write_manifest(dir, "sweep", cfg, json{{"command", "sweep"}, {"rmin", 1.0}},
                   "euclidean", {"sweep.csv"}, json{{"limit", 0.0}});
    const json m = load_manifest(dir / "manifest.json");
    EXPECT_EQ(m["command"], "sweep");
    EXPECT_EQ(m["invocation"]["rmin"], 1.0);
    EXPECT_EQ(m["tool"], "isomass");
    fs::remove_all(dir);
}
