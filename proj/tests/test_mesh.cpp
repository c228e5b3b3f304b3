#include <gtest/gtest.h>

#include "hml/mesh.hpp"

using namespace hml;

namespace {

double flat_area(const GluedMesh& M) {
    double a = 0;
    for (double x : M.area_z) a += x;
    return a;
}

int count_marker(const GluedMesh& M, Marker mk) {
    return static_cast<int>(std::count(M.marker.begin(), M.marker.end(), mk));
}

int count_tag(const GluedMesh& M, std::uint32_t tg) {
    int n = 0;
    for (auto t : M.tags) n += (t & tg) != 0;
    return n;
}

} // namespace

TEST(Mesh, DiskTopologyAndArea) {
    auto M = build_disk(1.0, 8, 16);
    auto T = topology(M);
    EXPECT_EQ(T.euler, 1);
    EXPECT_TRUE(T.orientable);
    EXPECT_TRUE(T.fans_closed);
    EXPECT_EQ(T.boundary_components, 1);
    EXPECT_EQ(count_marker(M, Marker::dirichlet), 16);
    auto B = build_disk(1.5, 64, 64);
    EXPECT_NEAR(flat_area(B), pi * 1.5 * 1.5, 0.02 * pi * 1.5 * 1.5);
    EXPECT_THROW(build_disk(1.0, 1, 16), InvalidParameter);
    EXPECT_THROW(build_disk(-1.0, 8, 16), InvalidParameter);
}

TEST(Mesh, AnnulusTopologyAndArea) {
    auto M = build_annulus(1, 4, 16, 32, Marker::free);
    auto T = topology(M);
    EXPECT_EQ(T.euler, 0);
    EXPECT_EQ(T.boundary_components, 2);
    EXPECT_EQ(count_marker(M, Marker::free), 32);
    auto A = build_annulus(1, 4, 64, 128, Marker::dirichlet);
    EXPECT_NEAR(flat_area(A), pi * 15, 0.02 * pi * 15);
    EXPECT_THROW(build_annulus(4, 1, 8, 16, Marker::free), InvalidParameter);
    EXPECT_THROW(build_annulus(1, 1, 8, 16, Marker::free), InvalidParameter);
}

TEST(Mesh, DoubledAnnulusInversionPairing) {
    auto M = build_doubled_annulus(3.0, 8, 32);
    auto T = topology(M);
    EXPECT_EQ(T.euler, 0);
    EXPECT_EQ(count_tag(M, tag_core), 32);
    auto p = inversion_pairing(M);
    for (int c = 0; c < M.n_classes; ++c) {
        cplx z = M.zc(c);
        EXPECT_NEAR(std::abs(M.zc(p[c]) - 1.0 / std::conj(z)), 0.0, 1e-12 * std::abs(1.0 / z));
        EXPECT_EQ(p[p[c]], c);
    }
    EXPECT_TRUE(is_automorphism(M, p));
    for (int c = 0; c < M.n_classes; ++c)
        if (M.tags[c] & tag_core) EXPECT_EQ(p[c], c);
    EXPECT_THROW(build_doubled_annulus(1.0, 8, 16), InvalidParameter);
}

TEST(Mesh, DeclaredSymmetriesAreAutomorphisms) {
    auto D = build_disk(1.0, 8, 24);
    for (int k : {4, 6}) {
        cplx rot = std::polar(1.0, 2 * pi / k);
        EXPECT_TRUE(check_symmetry(D, [&](cplx z) { return rot * z; }));
    }
    EXPECT_TRUE(check_symmetry(D, [](cplx z) { return std::conj(z); }));
    auto A = build_doubled_annulus(2.0, 8, 24);
    EXPECT_TRUE(check_symmetry(A, [](cplx z) { return std::conj(z); }));
    EXPECT_TRUE(check_symmetry(A, [](cplx z) { return std::polar(1.0, pi / 2) * z; }));
    EXPECT_TRUE(check_symmetry(A, [](cplx z) { return 1.0 / std::conj(z); }));
    // a generic rotation is not a symmetry
    EXPECT_FALSE(check_symmetry(D, [](cplx z) { return std::polar(1.0, 0.1) * z; }));
}

TEST(Mesh, PuncturedTorusTopology) {
    auto D = build_punctured_torus(3.0, 64);
    auto T = topology(D.mesh);
    EXPECT_EQ(T.euler, -1);
    EXPECT_EQ(T.genus, 1);
    EXPECT_EQ(T.boundary_components, 1);
    EXPECT_TRUE(T.orientable);
    EXPECT_TRUE(T.fans_closed);
    EXPECT_NO_THROW(validate_topology(D.mesh, -1));
    // one cone class of total angle 6 pi
    int cones = 0;
    for (int c = 0; c < D.mesh.n_classes; ++c)
        if (D.mesh.tags[c] & tag_cone) {
            ++cones;
            EXPECT_NEAR(D.mesh.cone_angle[c], 6 * pi, 1e-9);
        }
    EXPECT_EQ(cones, 1);
}

TEST(Mesh, HomologyLoops) {
    auto D = build_punctured_torus(3.0, 64);
    EXPECT_EQ(D.eta_h.classes.front(), D.eta_h.classes.back());
    EXPECT_EQ(D.eta_v.classes.front(), D.eta_v.classes.back());
    EXPECT_TRUE(loop_closed(D.mesh, D.eta_h));
    EXPECT_TRUE(loop_closed(D.mesh, D.eta_v));
    EXPECT_EQ(std::abs(intersection_number(D.mesh, D.eta_h, D.eta_v)), 1);
    EXPECT_EQ(intersection_number(D.mesh, D.eta_h, D.eta_v), -intersection_number(D.mesh, D.eta_v, D.eta_h));
}

TEST(Mesh, TorusDihedralSymmetry) {
    auto D = build_punctured_torus(2.5, 32);
    for (int j = 0; j < 4; ++j) {
        cplx r = std::polar(1.0, pi / 2 * j);
        EXPECT_TRUE(check_symmetry(D.mesh, [&](cplx z) { return r * z; }));
        EXPECT_TRUE(check_symmetry(D.mesh, [&](cplx z) { return r * std::conj(z); }));
    }
}

TEST(Mesh, ExhaustionIsNested) {
    auto E = exhaustion({2.5, 4, 8}, 32);
    ASSERT_EQ(E.size(), 3u);
    for (auto& D : E) EXPECT_EQ(topology(D.mesh).euler, -1);
    for (size_t i = 0; i + 1 < E.size(); ++i) {
        const auto& A = E[i].mesh;
        const auto& B = E[i + 1].mesh;
        ASSERT_LT(A.copies.size(), B.copies.size());
        for (size_t v = 0; v < A.copies.size(); ++v) {
            EXPECT_EQ(A.copies[v].z, B.copies[v].z);
            EXPECT_EQ(A.copies[v].key, B.copies[v].key);
        }
    }
    EXPECT_THROW(exhaustion({4, 2}, 32), InvalidParameter);
    EXPECT_THROW(exhaustion({0.5, 2}, 32), InvalidParameter);
    auto single = exhaustion({3.0}, 32);
    auto direct = build_punctured_torus(3.0, 32);
    EXPECT_EQ(single[0].mesh.copies.size(), direct.mesh.copies.size());
    EXPECT_EQ(single[0].mesh.tris.size(), direct.mesh.tris.size());
}

TEST(Mesh, RefinementKeepsTopology) {
    for (int n : {32, 64}) {
        auto T = topology(build_punctured_torus(3.0, n).mesh);
        EXPECT_EQ(T.euler, -1);
        EXPECT_EQ(T.genus, 1);
        EXPECT_EQ(T.boundary_components, 1);
    }
    for (int n : {16, 32}) {
        auto T = topology(build_annulus(1, 3, n, 2 * n, Marker::free));
        EXPECT_EQ(T.euler, 0);
        EXPECT_EQ(T.boundary_components, 2);
    }
}

TEST(Mesh, TwinDiskMatchesTorusOutsideHole) {
    auto tw = build_twin_disk(3.0, 32);
    auto tr = build_punctured_torus(3.0, 32).mesh;
    EXPECT_EQ(topology(tw).euler, 1);
    size_t hole_tris = 0;
    const double hh = 0.5;
    for (int t = 0; t < static_cast<int>(tw.tris.size()); ++t) {
        cplx g = (tw.copies[tw.tris[t].v[0]].z + tw.copies[tw.tris[t].v[1]].z + tw.copies[tw.tris[t].v[2]].z) / 3.0;
        hole_tris += std::abs(g.real()) < hh && std::abs(g.imag()) < hh;
    }
    EXPECT_EQ(tw.tris.size() - hole_tris, tr.tris.size());
}

TEST(Mesh, RegionsAreUnionsOfTriangles) {
    auto A = build_annulus(1, 4, 12, 32, Marker::dirichlet);
    double s = std::exp(A.rows[6]);
    int inside = 0;
    for (int t = 0; t < static_cast<int>(A.tris.size()); ++t) inside += A.tri_in(t, Region::annulus(1, s));
    EXPECT_EQ(inside, 6 * 32 * 2);
    bool threw = false;
    try {
        for (int t = 0; t < static_cast<int>(A.tris.size()); ++t) A.tri_in(t, Region::annulus(1, 0.5 * (s + std::exp(A.rows[7]))));
    } catch (const InvalidParameter&) {
        threw = true;
    }
    EXPECT_TRUE(threw);
}

TEST(Mesh, DetectsBrokenGluing) {
    auto M = build_disk(1.0, 8, 16);
    std::swap(M.tris[3].v[1], M.tris[3].v[2]); // flip orientation of one triangle without refinalizing
    auto T = topology(M);
    EXPECT_FALSE(T.orientable && T.fans_closed);
    EXPECT_THROW(validate_topology(M, 1), VerificationFailure);
}
