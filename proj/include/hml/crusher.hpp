#pragma once

// Dirichlet problems on the punctured square torus with Scherk boundary data, and the analysis of
// the limiting Hopf differential.

#include <unordered_map>

#include "parachute.hpp"

namespace hml {

struct CrusherOptions {
    int n_theta = 384;
    double r_probe = 2.0;
    SolveOptions solve;
    bool link_parachute = true; // solve the parachute at r_probe for each s on matching rows
};

struct CrusherLevel {
    double s = 0;
    TorusDomain domain;
    GluedMesh twin;         // same vertices with the square filled in
    MapState h, w;          // torus solution, Scherk solution on the twin mesh
    SolveReport report, w_report;
    double E_total = 0;     // E(Sigma_s, h)
    double E_core = 0;      // E(Sigma_r, h)
    double E_annulus = 0;   // E(Omega_{r,s}, h)
    double Ew_total = 0;    // E(Omega_s, w)
    double Ew_core = 0;     // E(Omega_r, w)
    double Ew_annulus = 0;  // E(Omega_{r,s}, w)
    double K = 0;           // E(Sigma_s, v) - E(Omega_s, w) for the pinched comparator v
    double K_square = 0;    // 2 E(C, w), C the unit square
    double E_comparator = 0;
    double basepoint_im = 0, basepoint_dist = 0, axis_im = 0;
    double equivariance = 0;
    bool has_gap = false;
    GapRow gap;             // parachute energy gap at (r_probe, s)
};

struct SquareVerdict {
    bool even = false;
    int holonomy_h = 0, holonomy_v = 0; // +1 / -1 sign change of sqrt(phi) around the loops
    bool is_square = false;
    std::string text;
};

struct CrusherRun {
    std::vector<double> s_list;
    CrusherOptions opt;
    std::vector<CrusherLevel> levels;
    std::vector<double> convergence; // sup over Sigma_r of d(h_i, h_{i+1})
    HopfField hopf;                  // of the largest-s state
    Divisor divisor;
    Classification classification;
    std::vector<int> orientation;
    SquareVerdict square;
    double image_area_core = 0;      // hyperbolic area of h(Sigma_r)

    const CrusherLevel& last() const { return levels.back(); }
};

namespace detail {

inline std::unordered_map<long long, int> class_by_key(const GluedMesh& M) {
    std::unordered_map<long long, int> out;
    for (const auto& cp : M.copies) out[cp.key] = cp.cls;
    return out;
}

// Square-radius pinch: the identity outside [-a, a]^2, collapsing the boundary of the hole
// (|z|_inf = hh) to 0, linear in |z|_inf between.
inline cplx pinch(cplx z, double hh = 0.5, double a = 1.0) {
    double r = std::max(std::abs(z.real()), std::abs(z.imag()));
    if (r >= a) return z;
    if (r <= hh) return 0.0;
    return z / r * (a * (r - hh) / (a - hh));
}

// Comparator on the torus: w composed with the pinch. Continuous across the seams since every
// seam point goes to w(0).
inline MapState torus_comparator(const GluedMesh& T, const GluedMesh& twin, const MapState& w) {
    Locator loc(twin);
    MapState u;
    u.u.resize(T.n_classes);
    for (int c = 0; c < T.n_classes; ++c) {
        auto v = loc.interpolate(w.u, pinch(T.zc(c), T.hole_half));
        if (!v) throw DomainError("comparator point outside the twin mesh");
        u.u[c] = *v;
    }
    return u;
}

inline double equivariance_error(const GluedMesh& M, const std::vector<cplx>& u) {
    double worst = 0;
    std::vector<std::function<cplx(cplx)>> gens = {[](cplx z) { return cplx(-z.imag(), z.real()); },
                                                   [](cplx z) { return std::conj(z); }};
    for (auto& g : gens) {
        auto p = symmetry_permutation(M, g);
        if (!p) throw VerificationFailure("torus mesh lost its D4 symmetry");
        for (int c = 0; c < M.n_classes; ++c) worst = std::max(worst, std::abs(u[(*p)[c]] - g(u[c])));
    }
    return worst;
}

// Sign picked up by sqrt(phi) continued along a closed loop of classes.
inline int sqrt_holonomy(const std::vector<cplx>& phi, const HomologyLoop& L) {
    if (L.classes.size() < 2) throw InvalidParameter("loop too short");
    cplx first = std::sqrt(phi[L.classes.front()]), cur = first;
    for (size_t i = 1; i < L.classes.size(); ++i) {
        cplx r = std::sqrt(phi[L.classes[i]]);
        cur = std::abs(r - cur) <= std::abs(r + cur) ? r : -r;
    }
    return std::abs(cur - first) <= std::abs(cur + first) ? 1 : -1;
}

} // namespace detail

inline SquareVerdict square_verdict(const Divisor& D, const std::vector<cplx>& phi, const TorusDomain& T) {
    SquareVerdict V;
    V.even = !D.zeros.empty();
    for (const auto& z : D.zeros) V.even = V.even && z.multiplicity % 2 == 0;
    V.holonomy_h = detail::sqrt_holonomy(phi, T.eta_h);
    V.holonomy_v = detail::sqrt_holonomy(phi, T.eta_v);
    V.is_square = V.even && V.holonomy_h == 1 && V.holonomy_v == 1;
    if (!V.even)
        V.text = "odd multiplicity: not a square";
    else
        V.text = "even-multiplicity, holonomy=(" + std::to_string(V.holonomy_h) + "," + std::to_string(V.holonomy_v) + ")";
    return V;
}

inline void analyze_crusher(CrusherRun& R);

// Solves the Dirichlet problem on each punctured torus of the exhaustion and analyses the last one.
inline CrusherRun solve_crusher(const std::vector<double>& s_list, const CrusherOptions& opt = {}) {
    const int k = 4;
    if (s_list.empty()) throw InvalidParameter("crusher: empty s list");
    for (size_t i = 1; i < s_list.size(); ++i)
        if (!(s_list[i] > s_list[i - 1])) throw InvalidParameter("crusher: s list must increase");
    if (!(s_list.front() > opt.r_probe)) throw InvalidParameter("crusher: every s must exceed r_probe");
    CrusherRun R;
    R.s_list = s_list;
    R.opt = opt;
    const double r = opt.r_probe;
    auto doms = exhaustion(s_list, opt.n_theta, r);
    auto rows = exhaustion_rows(r, s_list, opt.n_theta);
    for (size_t i = 0; i < s_list.size(); ++i) {
        CrusherLevel L;
        L.s = s_list[i];
        L.domain = std::move(doms[i]);
        L.twin = build_hybrid(hybrid_layout(opt.n_theta, r), rows_upto(rows, L.s), HoleMode::filled);
        const GluedMesh& M = L.domain.mesh;
        auto [w, wrep] = solve(L.twin, scherk_initial(L.twin, k, L.s), opt.solve);
        if (!wrep.converged) throw NonConvergence("crusher: scherk solve at s=" + std::to_string(L.s) + ": " + wrep.message);
        L.w = std::move(w);
        L.w_report = wrep;
        auto v = detail::torus_comparator(M, L.twin, L.w);
        L.E_comparator = energy(M, v);
        auto [h, rep] = solve(M, v, opt.solve);
        if (!rep.converged) throw NonConvergence("crusher: torus solve at s=" + std::to_string(L.s) + ": " + rep.message);
        L.h = std::move(h);
        L.report = rep;

        L.E_total = energy(M, L.h);
        L.E_core = energy(M, L.h, Region::disk(r));
        L.E_annulus = energy(M, L.h, Region::annulus(r, L.s));
        L.Ew_total = energy(L.twin, L.w);
        L.Ew_core = energy(L.twin, L.w, Region::disk(r));
        L.Ew_annulus = energy(L.twin, L.w, Region::annulus(r, L.s));
        L.K = L.E_comparator - L.Ew_total;
        L.K_square = 2 * energy(L.twin, L.w, Region::square(0.5));

        int b = find_class_at(M, cplx(0.5, 0));
        if (b < 0) throw Error("crusher: basepoint missing");
        L.basepoint_im = std::abs(L.h.u[b].imag());
        L.basepoint_dist = dist(0.0, L.h.u[b]);
        for (int c = 0; c < M.n_classes; ++c) {
            cplx z = M.zc(c);
            bool on_axis = false;
            for (int cp : M.class_copies[c]) on_axis = on_axis || M.copies[cp].z.imag() == 0.0;
            if (on_axis && std::abs(z) <= r + 1e-12) L.axis_im = std::max(L.axis_im, std::abs(L.h.u[c].imag()));
        }
        L.equivariance = detail::equivariance_error(M, L.h.u);

        if (opt.link_parachute) {
            ParachuteOptions po;
            po.n_theta = opt.n_theta;
            po.solve = opt.solve;
            po.rows = rows_upto(rows, L.s);
            for (double& t : po.rows) t -= std::log(r);
            po.rows.front() = 0.0;
            L.gap = energy_gap(solve_parachute(k, L.s, po, r), opt.solve);
            L.has_gap = true;
        }
        R.levels.push_back(std::move(L));
    }

    for (size_t i = 0; i + 1 < R.levels.size(); ++i) {
        const GluedMesh &A = R.levels[i].domain.mesh, &B = R.levels[i + 1].domain.mesh;
        auto key = detail::class_by_key(B);
        double d = 0;
        for (int c = 0; c < A.n_classes; ++c) {
            if (std::abs(A.zc(c)) > r + 1e-12) continue;
            d = std::max(d, dist(R.levels[i].h.u[c], R.levels[i + 1].h.u[key.at(A.copies[A.rep[c]].key)]));
        }
        R.convergence.push_back(d);
    }

    analyze_crusher(R);
    return R;
}

// Hopf field, divisor, classification and image area of the largest-s level.
inline void analyze_crusher(CrusherRun& R) {
    const int k = 4;
    const double r = R.opt.r_probe;
    const CrusherLevel& L = R.levels.back();
    const GluedMesh& M = L.domain.mesh;
    Stencils S(M);
    R.hopf = hopf(S, L.h.u);
    DivisorOptions dopt;
    dopt.window = 0.5 * L.s;
    for (double t : M.rows)
        if (std::exp(t) >= r - 1e-12 && std::exp(t) <= 0.5 * L.s + 1e-12) dopt.growth_radii.push_back(std::exp(t));
    R.divisor = find_divisor(M, R.hopf, k, 1, dopt);
    R.classification = classify_divisor_d4(R.divisor, M);
    R.orientation = orientation_at_zeros(R.divisor, M, energy_decomposition(S, L.h.u));
    R.square = square_verdict(R.divisor, R.hopf.phi, L.domain);
    R.image_area_core = 0;
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t)
        if (M.tri_in(t, Region::disk(r)))
            R.image_area_core += geodesic_triangle_area(L.h.u[M.tri_cls(t, 0)], L.h.u[M.tri_cls(t, 1)], L.h.u[M.tri_cls(t, 2)]);
}

// ----------------------------------------------------------------------------
// checks
// ----------------------------------------------------------------------------

// E(Sigma_s, h_s) <= E(Omega_s, w) + K; returns the slack per level (>= 0 when it holds).
inline std::vector<double> crude_bound_slack(const CrusherRun& R) {
    std::vector<double> out;
    for (const auto& L : R.levels) out.push_back(L.Ew_total + L.K - L.E_total);
    return out;
}

// E(Sigma_r, h_s) <= E(Omega_{r,s}, w) - E(Omega_{r,s}, u_s) + E(Omega_r, w) + K, as slack per level.
inline std::vector<double> relaxed_condition_slack(const CrusherRun& R) {
    std::vector<double> out;
    for (const auto& L : R.levels) {
        if (!L.has_gap) throw InvalidParameter("relaxed condition needs the linked parachute gap");
        out.push_back(L.gap.gap + L.Ew_core + L.K - L.E_core);
    }
    return out;
}

struct NoncollapseMargin {
    double margin = 0;   // min over s of E(Omega_{r,s}, h) - E(Omega_{r,s}, w) + gap
    double relative = 0; // margin / E(Omega_{r,s}, w) at the minimizing s
};

inline NoncollapseMargin noncollapse_check(const CrusherRun& R) {
    if (R.levels.size() < 2) throw InvalidParameter("noncollapse check needs at least two radii");
    NoncollapseMargin m{std::numeric_limits<double>::infinity(), 0};
    for (const auto& L : R.levels) {
        if (!L.has_gap) throw InvalidParameter("noncollapse check needs the linked parachute gap");
        double v = L.E_annulus - L.Ew_annulus + L.gap.gap;
        if (v < m.margin) m = {v, v / L.Ew_annulus};
    }
    return m;
}

inline bool convergence_decreasing(const CrusherRun& R) {
    for (size_t i = 0; i < R.convergence.size(); ++i) {
        if (!std::isfinite(R.convergence[i])) return false;
        if (i > 0 && !(R.convergence[i] < R.convergence[i - 1])) return false;
    }
    return true;
}

inline ProbeResult uniqueness_probe(const CrusherRun& R, double magnitude, std::uint64_t seed) {
    return stability_probe(R.last().domain.mesh, R.last().h, magnitude, seed, R.opt.solve);
}

} // namespace hml
