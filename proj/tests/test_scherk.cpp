#include <gtest/gtest.h>

#include "hml/scherk.hpp"

using namespace hml;

namespace {

ScherkRun coarse(int k, double s, int n_r, int n_theta) {
    ScherkOptions o;
    o.n_r = n_r;
    o.n_theta = n_theta;
    return solve_scherk(k, s, o);
}

} // namespace

TEST(ScherkBoundary, SymmetriesOfTheCurve) {
    const int n = 256;
    EXPECT_EQ(scherk_boundary_index(4, 6, 0, n).imag(), 0.0);
    EXPECT_GT(scherk_boundary_index(4, 6, 0, n).real(), 0.0);
    for (int j = 0; j < n; ++j) {
        cplx b = scherk_boundary_index(4, 6, j, n);
        cplx r = scherk_boundary_index(4, 6, j + n / 4, n);
        EXPECT_EQ(r, cplx(-b.imag(), b.real())) << j;
        EXPECT_EQ(scherk_boundary_index(4, 6, -j, n), std::conj(b)) << j;
        EXPECT_NEAR(std::abs(scherk_boundary(4, 6, 2 * pi * j / n) - b), 0.0, 1e-12);
    }
    for (double th : {0.1, 0.7, 2.0}) {
        cplx b = scherk_boundary(6, 6, th);
        EXPECT_NEAR(std::abs(scherk_boundary(6, 6, th + pi / 3) - std::polar(1.0, pi / 3) * b), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(scherk_boundary(6, 6, -th) - std::conj(b)), 0.0, 1e-12);
    }
}

TEST(ScherkBoundary, DistanceGrowsTowardsTheVertex) {
    // nondecreasing along the side; the truncating horocycle is nearest to O at its midpoint, which costs
    // at most a second-order amount in its (tiny) half length
    detail::SectorCurve C(4, 6);
    const double slack = sqr(C.horo);
    EXPECT_LT(slack, 1e-5);
    double prev = -1, top = 0;
    for (int i = 0; i <= 400; ++i) {
        double th = pi / 4 * i / 400;
        double d = dist(0.0, scherk_boundary(4, 6, th));
        EXPECT_GE(d, prev - slack) << th;
        prev = d;
        top = std::max(top, d);
    }
    EXPECT_NEAR(prev, top, slack);
    EXPECT_NEAR(std::arg(scherk_boundary(4, 6, pi / 4)), pi / 4, 1e-12);
}

TEST(ScherkBoundary, CurveLiesOnTheTruncatedPolygon) {
    const int k = 4;
    const double s = 6;
    const double D = truncation_depth(k, s);
    EXPECT_NEAR(D, depth_scale(k) * (2.0 / k) * std::pow(s, 0.5 * k), 1e-12);
    cplx prev = scherk_boundary(k, s, 0);
    double jump = 0;
    for (int i = 1; i <= 8192; ++i) {
        double th = 2 * pi * i / 8192;
        cplx b = scherk_boundary(k, s, th);
        for (int m = 0; m < k; ++m) {
            auto C = side_circle(k, m);
            EXPECT_GE(std::abs(b - C.center), C.radius - 1e-12); // on the polygon side of every geodesic
        }
        // either on a side or on the horocycle at depth D
        jump = std::max(jump, dist(prev, b));
        prev = b;
    }
    EXPECT_LT(jump, 0.05);
    // side point at depth D is the start of the horocycle
    EXPECT_NEAR(dist(side_point(k, 0, D), side_point(k, 0, 0)), D, 1e-9);
}

TEST(ScherkGrowth, SyntheticTable) {
    std::vector<EnergyRow> t;
    for (int i = 0; i < 8; ++i) {
        double r = 0.5 * std::pow(1.4, i);
        t.push_back({r, std::pow(r, 4)});
    }
    EXPECT_NEAR(energy_growth_fit(t).exponent, 4.0, 1e-10);
    t.resize(4);
    EXPECT_THROW(energy_growth_fit(t), InvalidParameter);
}

TEST(Vortex, FlatDifferentialGivesZero) {
    VortexOptions o;
    auto V = vortex_solve_on(build_disk(2, 16, 32), 2, o);
    for (double w : V.W) EXPECT_NEAR(w, 0.0, 1e-12);
}

TEST(Vortex, SupersolutionOrdering) {
    // log r solves the continuous equation away from 0 with the same boundary values; the discrete W may
    // dip below it only by the consistency error of the cotangent Laplacian on log r
    auto deficit = [](int n_r, int n_theta) {
        VortexOptions o;
        o.n_r = n_r;
        o.n_theta = n_theta;
        auto V = vortex_solve(4, 6, o);
        EXPECT_LE(V.residual_sup, 1e-8);
        double d = 0;
        for (int c = 0; c < V.mesh.n_classes; ++c) {
            double r = std::abs(V.mesh.zc(c));
            if (r > 0) d = std::max(d, std::log(r) - V.W[c]);
        }
        return d;
    };
    double a = deficit(48, 64), b = deficit(96, 128);
    EXPECT_LT(a, 1e-6);
    EXPECT_LT(b, a / 3);
}

class ScherkCoarse : public ::testing::Test {
protected:
    static void SetUpTestSuite() { R = new ScherkRun(coarse(4, 6, 48, 64)); }
    static void TearDownTestSuite() { delete R; }
    static ScherkRun* R;
};
ScherkRun* ScherkCoarse::R = nullptr;

TEST_F(ScherkCoarse, SolutionIsEquivariant) {
    const auto& M = R->mesh;
    auto rot = *symmetry_permutation(M, [](cplx z) { return cplx(-z.imag(), z.real()); });
    auto cj = *symmetry_permutation(M, [](cplx z) { return std::conj(z); });
    for (int c = 0; c < M.n_classes; ++c) {
        cplx u = R->state.u[c];
        EXPECT_NEAR(std::abs(R->state.u[rot[c]] - cplx(-u.imag(), u.real())), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(R->state.u[cj[c]] - std::conj(u)), 0.0, 1e-10);
    }
}

TEST_F(ScherkCoarse, SpectrumShape) {
    EXPECT_LT(R->spectrum[2].real(), 0.0); // raw sign
    EXPECT_GT(R->normalized(2).real(), 0.0);
    EXPECT_NEAR(R->normalized(2).imag(), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(R->spectrum[2]), sqr(depth_scale(4)) / 4, 0.1 * sqr(depth_scale(4)) / 4);
    EXPECT_LE(selection_rule_check(R->spectrum, 4).ratio, 1e-10);
    // positive powers beyond z^2 are negligible
    EXPECT_LE(std::abs(R->spectrum[6]), 1e-3 * std::abs(R->spectrum[2]));
}

TEST_F(ScherkCoarse, ImageAreaAndJacobian) {
    EXPECT_NEAR(R->image_area, 2 * pi, 0.05 * 2 * pi);
    Stencils S(R->mesh);
    auto E = energy_decomposition(S, R->state.u);
    for (int c = 0; c < R->mesh.n_classes; ++c)
        if (std::abs(R->mesh.zc(c)) <= 0.5 * R->s) EXPECT_GT(E.J[c], 0.0);
}

TEST_F(ScherkCoarse, VortexCrossCheck) {
    VortexOptions o;
    o.n_r = 48;
    o.n_theta = 64;
    o.coeff = std::abs(R->spectrum[2]);
    auto V = vortex_solve(4, 6, o);
    Stencils S(R->mesh);
    auto E = energy_decomposition(S, R->state.u);
    EXPECT_LE(vortex_cross_check(V, E.H, 3.0), 0.05);
}

TEST(Scherk, HolomorphicResidualIsSecondOrder) {
    auto a = coarse(4, 6, 48, 64), b = coarse(4, 6, 96, 128);
    EXPECT_GE(std::log2(a.residual.sup / b.residual.sup), 1.8) << a.residual.sup << " " << b.residual.sup;
}

TEST(Scherk, InteriorIsStableUnderRadius) {
    auto a = coarse(4, 4, 64, 64), b = coarse(4, 6, 96, 64);
    double worst = 0;
    for (int c = 0; c < a.mesh.n_classes; ++c) {
        cplx z = a.mesh.zc(c);
        if (std::abs(z) > 2.0 + 1e-12) continue;
        int q = find_class_at(b.mesh, z, 1e-9);
        ASSERT_GE(q, 0);
        worst = std::max(worst, dist(a.state.u[c], b.state.u[q]));
    }
    EXPECT_LE(worst, 0.05);
}

TEST(Scherk, Hexagon) {
    auto R = coarse(6, 6, 64, 96);
    EXPECT_NEAR(R.image_area, 4 * pi, 0.05 * 4 * pi);
    EXPECT_LE(selection_rule_check(R.spectrum, 6).ratio, 1e-10);
    EXPECT_GT(R.normalized(4).real(), 0.0);
    EXPECT_GT(energy_growth_fit(R).exponent, 4.0);
}
