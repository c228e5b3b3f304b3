#include <gtest/gtest.h>

#include "hml/io.hpp"
#include "hml/svg.hpp"

using namespace hml;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("hml_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

int count(const std::string& s, const std::string& needle) {
    int n = 0;
    for (size_t at = s.find(needle); at != std::string::npos; at = s.find(needle, at + 1)) ++n;
    return n;
}

} // namespace

TEST(Io, Sha256KnownVectors) {
    EXPECT_EQ(io::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Io, NumbersRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(io::num(x)), x);
}

TEST(Io, CsvRoundTrip) {
    io::Csv c{"hml.test.v1", {"n", "re", "im"}, {}};
    c.row({"2", io::num(0.25), io::num(-1e-17)}).row({"-2", "1", "0"});
    auto d = io::parse_csv(c.text());
    EXPECT_EQ(d.schema, "hml.test.v1");
    EXPECT_EQ(d.columns, c.columns);
    EXPECT_EQ(d.rows, c.rows);
    EXPECT_EQ(d.col("im"), 2);
    EXPECT_THROW(d.col("nope"), InvalidParameter);
    EXPECT_THROW(c.row({"1"}), InvalidParameter);
    EXPECT_THROW(io::parse_csv("n,re\n1,2\n"), IoError);
    EXPECT_THROW(io::parse_csv("# schema: x\nn,re\n1\n"), IoError);
}

TEST(Io, StateRoundTrip) {
    std::vector<cplx> u = {{0.1, -0.2}, {0.0, 0.0}, {-0.75, 0.5}};
    EXPECT_EQ(io::state_from_json(io::json::parse(io::state_json(u).dump())), u);
    auto j = io::state_json(u);
    j["n_classes"] = 4;
    EXPECT_THROW(io::state_from_json(j), IoError);
}

TEST(Io, MeshDigestIsStable) {
    auto a = build_disk(1, 8, 16), b = build_disk(1, 8, 16), c = build_disk(1, 8, 24);
    EXPECT_EQ(io::mesh_digest(a), io::mesh_digest(b));
    EXPECT_NE(io::mesh_digest(a), io::mesh_digest(c));
}

TEST(Io, RunDirectoryLifecycle) {
    auto dir = scratch("run");
    {
        io::RunWriter w(dir, "scherk", {{"k", 4}});
        EXPECT_THROW(io::RunReader{dir}, IoError); // no manifest yet
        EXPECT_THROW(io::RunWriter(dir, "scherk", {}), IoError); // locked
        w.write("a.txt", "hello");
        w.write_csv("t.csv", io::Csv{"hml.test.v1", {"x"}, {{"1"}}});
        w.manifest()["summary"]["answer"] = 42;
        w.finish();
    }
    EXPECT_FALSE(fs::exists(dir / io::lock_name));
    io::RunReader r(dir);
    EXPECT_EQ(r.subcommand(), "scherk");
    EXPECT_EQ(r.params().at("k"), 4);
    EXPECT_EQ(r.read("a.txt"), "hello");
    EXPECT_EQ(r.read_csv("t.csv").rows.size(), 1u);
    EXPECT_FALSE(r.has("b.txt"));
    EXPECT_THROW(r.read("b.txt"), IoError);

    {
        auto w = io::RunWriter::extend(dir);
        w.write("b.txt", "more");
        w.finish();
    }
    io::RunReader r2(dir);
    EXPECT_EQ(r2.manifest()["summary"]["answer"], 42);
    EXPECT_TRUE(r2.has("a.txt") && r2.has("b.txt"));

    io::write_atomic(dir / "a.txt", "tampered");
    EXPECT_THROW(r2.read("a.txt"), IoError);
    fs::remove_all(dir);
}

TEST(Svg, DivisorMarksCarryMultiplicity) {
    std::vector<svg::ZeroMark> z = {{{0.5, 0.5}, 2}, {{0.0, 0.0}, 2}, {{1.1, 0.0}, 1}};
    auto s = svg::divisor(z, 2.0, 0.5, 1.0);
    EXPECT_EQ(count(s, "class=\"zero-m2\""), 2);
    EXPECT_EQ(count(s, "class=\"zero-m1\""), 1);
    EXPECT_NE(s.find("<metadata>"), std::string::npos);
}

TEST(Svg, CanvasMapsWorldToPixels) {
    svg::Canvas C(-1, 1, -1, 1, 200);
    EXPECT_DOUBLE_EQ(C.X(-1), 0);
    EXPECT_DOUBLE_EQ(C.X(1), 200);
    EXPECT_DOUBLE_EQ(C.Y(1), 0);
    EXPECT_DOUBLE_EQ(C.Y(-1), 200);
}

TEST(Svg, EnergyPlotRejectsMismatchedTables) {
    EXPECT_THROW(svg::energy_plot({1, 2}, {1}, 4), InvalidParameter);
    auto s = svg::energy_plot({1, 2, 4}, {1, 16, 256}, 4);
    EXPECT_NE(s.find("slope 4"), std::string::npos);
}

TEST(Svg, ImageMeshDrawsEachEdgeOnce) {
    auto M = build_disk(1, 8, 16);
    std::vector<cplx> u(M.n_classes);
    for (int c = 0; c < M.n_classes; ++c) u[c] = 0.5 * M.zc(c);
    auto s = svg::image_mesh(M, u, 4);
    std::set<std::pair<int, int>> edges;
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t)
        for (int e = 0; e < 3; ++e) {
            int a = M.tri_cls(t, e), b = M.tri_cls(t, (e + 1) % 3);
            edges.insert({std::min(a, b), std::max(a, b)});
        }
    EXPECT_EQ(count(s, "<line"), static_cast<int>(edges.size()) + 4); // plus the symmetry lines
    EXPECT_EQ(count(s, "<path"), 4);
}
