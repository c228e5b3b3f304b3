#include <gtest/gtest.h>

#include "hml/crusher.hpp"

using namespace hml;

namespace {

const double kPi = std::acos(-1.0);

CrusherOptions coarse() {
    CrusherOptions o;
    o.n_theta = 128;
    return o;
}

} // namespace

class Crusher46 : public ::testing::Test {
protected:
    static void SetUpTestSuite() { R = new CrusherRun(solve_crusher({4, 6}, coarse())); }
    static void TearDownTestSuite() { delete R; }
    static CrusherRun* R;
};
CrusherRun* Crusher46::R = nullptr;

TEST_F(Crusher46, CrudeBoundHolds) {
    for (double slack : crude_bound_slack(*R)) EXPECT_GE(slack, 0.0);
    // K only sees the collar, so it barely moves with s
    EXPECT_NEAR(R->levels[0].K, R->levels[1].K, 0.1 * R->levels[0].K);
}

TEST_F(Crusher46, RelaxedConditionAndNoncollapse) {
    for (double slack : relaxed_condition_slack(*R)) EXPECT_GE(slack, 0.0);
    auto m = noncollapse_check(*R);
    EXPECT_GT(m.margin, 0.0);
}

TEST_F(Crusher46, BasepointAndAxisArePinned) {
    for (const auto& L : R->levels) {
        EXPECT_LE(L.basepoint_dist, 1e-10);
        EXPECT_LE(L.axis_im, 1e-10);
    }
}

TEST_F(Crusher46, SolutionIsEquivariant) {
    for (const auto& L : R->levels) EXPECT_LE(L.equivariance, 1e-10);
}

TEST_F(Crusher46, DivisorTotalsSix) {
    EXPECT_EQ(R->divisor.total_multiplicity(), 6);
    EXPECT_TRUE(R->classification.d4_symmetric);
}

TEST_F(Crusher46, ImageIsNondegenerate) {
    EXPECT_GT(R->image_area_core, 0.5);
    EXPECT_TRUE(std::isfinite(R->convergence.at(0)));
}

TEST_F(Crusher46, SmallPerturbationRelaxesBack) {
    auto same = uniqueness_probe(*R, 0.0, 1);
    EXPECT_LE(same.sup_distance, 1e-12);
    auto p = uniqueness_probe(*R, 0.05, 7);
    EXPECT_TRUE(p.report.converged);
    EXPECT_LE(p.sup_distance, 1e-4);
}

TEST(Crusher, SqrtHolonomyOfExponentials) {
    auto T = exhaustion({4}, 128).front();
    auto field = [&](double freq) {
        std::vector<cplx> phi(T.mesh.n_classes);
        for (int c = 0; c < T.mesh.n_classes; ++c) phi[c] = std::polar(1.0, 2 * kPi * freq * T.mesh.zc(c).real());
        return phi;
    };
    EXPECT_EQ(detail::sqrt_holonomy(field(1), T.eta_h), -1);
    EXPECT_EQ(detail::sqrt_holonomy(field(2), T.eta_h), 1);
    EXPECT_EQ(detail::sqrt_holonomy(field(1), T.eta_v), 1);
    std::vector<cplx> one(T.mesh.n_classes, cplx(1, 0));
    EXPECT_EQ(detail::sqrt_holonomy(one, T.eta_v), 1);
}

TEST(Crusher, OddMultiplicityIsNotASquare) {
    auto T = exhaustion({4}, 128).front();
    std::vector<cplx> one(T.mesh.n_classes, cplx(1, 0));
    Divisor D;
    D.zeros.push_back({0, 0.0, 2, -2, true});
    for (int i = 0; i < 4; ++i) D.zeros.push_back({0, 0.0, 1, 1, false});
    auto V = square_verdict(D, one, T);
    EXPECT_FALSE(V.even);
    EXPECT_FALSE(V.is_square);

    Divisor E;
    E.zeros.push_back({0, 0.0, 2, -2, true});
    E.zeros.push_back({0, 0.0, 4, 4, false});
    auto W = square_verdict(E, one, T);
    EXPECT_TRUE(W.even);
    EXPECT_TRUE(W.is_square);
}

TEST(Crusher, RejectsBadRadii) {
    EXPECT_THROW(solve_crusher({}, coarse()), InvalidParameter);
    EXPECT_THROW(solve_crusher({6, 4}, coarse()), InvalidParameter);
    EXPECT_THROW(solve_crusher({2, 4}, coarse()), InvalidParameter);
}

TEST(Crusher, NoncollapseNeedsTwoRadii) {
    CrusherRun R;
    R.levels.resize(1);
    EXPECT_THROW(noncollapse_check(R), InvalidParameter);
}
