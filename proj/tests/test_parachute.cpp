#include <gtest/gtest.h>

#include "hml/parachute.hpp"

using namespace hml;

namespace {

ParachuteOptions grid(int n_theta) {
    ParachuteOptions o;
    o.n_theta = n_theta;
    return o;
}

} // namespace

class Parachute6 : public ::testing::Test {
protected:
    static void SetUpTestSuite() { R = new ParachuteRun(solve_parachute(4, 6, grid(128))); }
    static void TearDownTestSuite() { delete R; }
    static ParachuteRun* R;
};
ParachuteRun* Parachute6::R = nullptr;

TEST_F(Parachute6, FreeAndDoubledAgree) {
    EXPECT_TRUE(R->free_report.converged);
    EXPECT_TRUE(R->doubled_report.converged);
    EXPECT_LE(R->diag.doubling, 10 * 1e-8);
}

TEST_F(Parachute6, CoreIdentityAndVanishingJacobian) {
    EXPECT_LE(R->diag.core_identity, 0.05);
    EXPECT_LE(R->diag.core_identity_doubled, 1e-10);
    EXPECT_LE(R->diag.core_J, 1e-8);
}

TEST_F(Parachute6, ReflectionAndLaurentSymmetry) {
    EXPECT_LE(R->diag.reflection, 1e-8);
    EXPECT_LE(R->diag.laurent_symmetry, 1e-6);
    EXPECT_LE(R->diag.doubled_J_symmetry, 1e-8);
    // only indices allowed by the k-fold symmetry carry weight
    EXPECT_LE(selection_rule_check(R->spectrum, 4).ratio, 1e-10);
}

TEST_F(Parachute6, JacobianIsNonnegativeUpToDiscretization) {
    EXPECT_GE(jacobian_positivity(*R), -0.02 * R->diag.max_e);
}

TEST_F(Parachute6, SolutionIsEquivariant) {
    const auto& M = R->free_mesh;
    auto rot = *symmetry_permutation(M, [](cplx z) { return cplx(-z.imag(), z.real()); });
    auto cj = *symmetry_permutation(M, [](cplx z) { return std::conj(z); });
    for (int c = 0; c < M.n_classes; ++c) {
        cplx u = R->free_state.u[c];
        EXPECT_NEAR(std::abs(R->free_state.u[rot[c]] - cplx(-u.imag(), u.real())), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(R->free_state.u[cj[c]] - std::conj(u)), 0.0, 1e-10);
    }
}

TEST_F(Parachute6, CoreDistanceBoundedByCoreLength) {
    EXPECT_GT(R->diag.core_distance, 0.0);
    EXPECT_LE(R->diag.core_distance, R->diag.core_length);
}

TEST_F(Parachute6, CoreFillSatisfiesIsoEnergy) {
    auto I = iso_energy_check(*R);
    EXPECT_GT(I.e2d, 0.0);
    EXPECT_TRUE(I.holds()) << I.e2d << " " << I.e1d;
}

TEST(Parachute, NaturalConditionConverges) {
    auto a = solve_parachute(4, 6, grid(128)), b = solve_parachute(4, 6, grid(256));
    EXPECT_GE(std::log2(a.diag.normal_derivative / b.diag.normal_derivative), 1.0)
        << a.diag.normal_derivative << " " << b.diag.normal_derivative;
}

TEST(Parachute, RejectsBadParameters) {
    EXPECT_THROW(solve_parachute(5, 6), InvalidParameter);
    EXPECT_THROW(solve_parachute(4, 1.0), InvalidParameter);
    EXPECT_THROW(solve_parachute(4, 6, grid(128), 6.0), InvalidParameter);
    EXPECT_THROW(solve_parachute(4, 6, grid(100)), InvalidParameter);
}

TEST(CoreStudy, SingleEntryHasNoSlope) {
    auto S = core_study_from({{4.0, 0.8, 5.0}});
    EXPECT_EQ(S.rows.size(), 1u);
    EXPECT_FALSE(S.slope_defined);
    EXPECT_DOUBLE_EQ(S.spread, 1.0);
    auto T = core_study_from({{4.0, 0.8, 5.0}, {8.0, 1.0, 5.0}});
    EXPECT_TRUE(T.slope_defined);
    EXPECT_NEAR(T.slope, 0.2 / std::log(2.0), 1e-12);
}

TEST(EnergyGap, ScherkDataIsACompetitor) {
    auto P = solve_parachute(4, 4, grid(128), 2.0);
    auto g = energy_gap(P);
    EXPECT_GE(g.gap, -1e-8);
    EXPECT_GT(g.scherk_energy, 0.0);
}

TEST(EnergyGap, VanishesOnThinAnnuli) {
    // both energies are proportional to the width of the annulus
    auto gap = [](double width) {
        ParachuteOptions o = grid(128);
        o.n_r = 4;
        o.solve.tol = 1e-6; // cells of width 1e-3 put the tension roundoff floor above 1e-8
        return energy_gap(solve_parachute(4, 4, o, 4 - width)).gap;
    };
    double a = gap(0.01), b = gap(0.0025);
    EXPECT_GE(b, -1e-8);
    EXPECT_LT(b, 0.05);
    EXPECT_NEAR(a / b, 4.0, 0.5);
}

TEST(EnergyGap, StudyRejectsBadRadii) {
    EXPECT_THROW(energy_gap_study(4, 1.0, {4}), InvalidParameter);
    EXPECT_THROW(energy_gap_study(4, 4.0, {4}), InvalidParameter);
}

TEST(IsoEnergy, ConstantLoop) {
    std::vector<cplx> loop(64, cplx(0.3, -0.2));
    auto I = iso_energy_fill(loop);
    EXPECT_NEAR(I.e2d, 0.0, 1e-20);
    EXPECT_NEAR(I.e1d, 0.0, 1e-20);
}

TEST(IsoEnergy, GeodesicArcLoop) {
    // out and back along a geodesic segment
    std::vector<cplx> loop(128);
    for (int j = 0; j < 128; ++j) loop[j] = geodesic_point(cplx(-0.5, 0), cplx(0.6, 0.1), 0.5 - 0.5 * std::cos(2 * pi * j / 128));
    auto I = iso_energy_fill(loop);
    EXPECT_GT(I.e2d, 0.0);
    EXPECT_LT(I.e2d, I.e1d);
    EXPECT_THROW(iso_energy_fill(std::vector<cplx>(7, 0.0)), InvalidParameter);
}
