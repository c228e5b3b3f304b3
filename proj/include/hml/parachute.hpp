#pragma once

// Parachute problem: harmonic maps of annuli with Scherk data outside and a free inner circle.
// Everything is rescaled so the free circle is |z| = 1; the outer circle is |z| = s / r.

#include <cmath>
#include <limits>

#include "scherk.hpp"

namespace hml {

struct ParachuteOptions {
    int n_r = 0; // rows across [1, s/r]; 0 picks square cells
    int n_theta = 256;
    SolveOptions solve;
    std::vector<double> rows; // explicit log radii from 0 to log(s/r); overrides n_r
};

struct CoreDiagnostics {
    double core_distance = 0;   // sup over the core of d(O, u)
    double core_length = 0;     // hyperbolic length of the core image
    double core_identity = 0;   // sup |e - 2|phi|| / max e on the core, free-mesh stencils
    double core_identity_doubled = 0; // same from the doubled mesh (J = 0 there by symmetry)
    double normal_derivative = 0;
    double min_J = 0, max_e = 0;
    double core_J = 0;          // sup |J| on the core
    double doubled_J_symmetry = 0; // sup |J(z) + |z|^-4 J(1/conj z)| / max e
    double reflection = 0;      // reflection identity violation
    double laurent_symmetry = 0;
    double doubling = 0;        // sup d(u_free, u_doubled)
    int n_r = 0, n_theta = 0;
};

struct ParachuteRun {
    int k = 0;
    double s = 0, r = 1;
    GluedMesh free_mesh, doubled_mesh;
    MapState free_state, doubled_state;
    SolveReport free_report, doubled_report;
    LaurentSpectrum spectrum; // doubled Hopf field on the core
    CoreDiagnostics diag;

    double outer() const { return s / r; }
};

namespace detail {

inline int parachute_rows(const ParachuteOptions& o, double outer) {
    if (o.n_r > 0) return o.n_r;
    return std::max(8, static_cast<int>(std::lround(std::log(outer) / (2 * pi / o.n_theta))));
}

// Radial start: each ray heads to its boundary value, reaching a fraction of its distance.
inline MapState radial_guess(const GluedMesh& M, int k, double s, double outer) {
    MapState u;
    u.u.resize(M.n_classes);
    for (int c = 0; c < M.n_classes; ++c) {
        cplx z = M.zc(c);
        double a = std::abs(z);
        long j = std::lround(std::arg(z) / (2 * pi) * M.n_theta);
        cplx b = scherk_boundary_index(k, s, j, M.n_theta);
        if (a >= outer * (1 - 1e-12) || a <= 1 / outer * (1 + 1e-12)) {
            u.u[c] = b;
            continue;
        }
        double t = std::abs(std::log(a)) / std::log(outer);
        u.u[c] = from_origin(b / std::abs(b), dist(0.0, b) * std::pow(t, 2.0));
    }
    return u;
}

inline std::vector<int> core_classes(const GluedMesh& M) {
    std::vector<int> out;
    for (int c = 0; c < M.n_classes; ++c)
        if (M.tags[c] & tag_core) out.push_back(c);
    return out;
}

} // namespace detail

// Solves the free-boundary problem on {1 <= |z| <= s/r} and the doubled Dirichlet problem on
// {r/s <= |z| <= s/r}, both with outer data equal to the Scherk boundary curve at radius s.
struct ParachuteMeshes {
    std::vector<double> rows;
    GluedMesh free_mesh, doubled_mesh;
};

// Validates the parameters and builds the free annulus and its double.
inline ParachuteMeshes parachute_meshes(int k, double s, const ParachuteOptions& opt = {}, double r = 1.0) {
    check_even_k(k);
    if (!(s > 1)) throw InvalidParameter("parachute: need s > 1");
    if (!(r >= 1) || !(r < s)) throw InvalidParameter("parachute: need 1 <= r < s");
    if (opt.n_theta % (2 * k) != 0) throw InvalidParameter("n_theta must be a multiple of 2k");
    const double outer = s / r;
    ParachuteMeshes P;
    P.rows = opt.rows;
    if (P.rows.empty()) {
        P.rows = uniform_rows(0.0, std::log(outer), detail::parachute_rows(opt, outer));
    } else if (P.rows.front() != 0.0 || std::abs(P.rows.back() - std::log(outer)) > 1e-12) {
        throw InvalidParameter("parachute rows must span [0, log(s/r)]");
    }
    P.free_mesh = build_annulus_rows(P.rows, opt.n_theta, Marker::free);
    P.doubled_mesh = build_doubled_rows(P.rows, opt.n_theta);
    return P;
}

inline ParachuteRun solve_parachute(int k, double s, const ParachuteOptions& opt = {}, double r = 1.0) {
    auto PM = parachute_meshes(k, s, opt, r);
    ParachuteRun R;
    R.k = k;
    R.s = s;
    R.r = r;
    const double outer = s / r;
    const std::vector<double>& rows = PM.rows;
    const int n_r = static_cast<int>(rows.size()) - 1;
    R.free_mesh = std::move(PM.free_mesh);
    R.doubled_mesh = std::move(PM.doubled_mesh);

    auto [uf, rf] = solve(R.free_mesh, detail::radial_guess(R.free_mesh, k, s, outer), opt.solve);
    if (!rf.converged) throw NonConvergence("parachute free solve: " + rf.message);
    auto [ud, rd] = solve(R.doubled_mesh, detail::radial_guess(R.doubled_mesh, k, s, outer), opt.solve);
    if (!rd.converged) throw NonConvergence("parachute doubled solve: " + rd.message);
    R.free_state = std::move(uf);
    R.free_report = rf;
    R.doubled_state = std::move(ud);
    R.doubled_report = rd;

    auto& D = R.diag;
    D.n_r = n_r;
    D.n_theta = opt.n_theta;
    const GluedMesh &Mf = R.free_mesh, &Md = R.doubled_mesh;
    const int n = opt.n_theta;

    // free class i*n + j sits at the doubled class (i + n_r)*n + j
    for (int c = 0; c < Mf.n_classes; ++c) {
        int q = c + n_r * n;
        if (std::abs(Md.zc(q) - Mf.zc(c)) > 1e-9) throw Error("parachute: mesh correspondence broken");
        D.doubling = std::max(D.doubling, dist(R.free_state.u[c], R.doubled_state.u[q]));
    }

    Stencils Sf(Mf);
    auto Ef = energy_decomposition(Sf, R.free_state.u);
    auto Ff = hopf(Sf, R.free_state.u);
    D.min_J = std::numeric_limits<double>::infinity();
    for (int c = 0; c < Mf.n_classes; ++c) {
        D.max_e = std::max(D.max_e, Ef.e[c]);
        if (Mf.marker[c] == Marker::interior) D.min_J = std::min(D.min_J, Ef.J[c]);
    }
    for (int j = 0; j < n; ++j) D.core_identity = std::max(D.core_identity, std::abs(Ef.e[j] - 2 * std::abs(Ff.phi[j])));
    D.core_identity /= D.max_e;

    Stencils Sd(Md);
    auto Ed = energy_decomposition(Sd, R.doubled_state.u);
    auto Fd = hopf(Sd, R.doubled_state.u);
    auto core = detail::core_classes(Md);
    for (size_t i = 0; i < core.size(); ++i) {
        int c = core[i];
        cplx u = R.doubled_state.u[c], v = R.doubled_state.u[core[(i + 1) % core.size()]];
        D.core_distance = std::max(D.core_distance, dist(0.0, u));
        D.core_length += dist(u, v);
        D.core_identity_doubled = std::max(D.core_identity_doubled, std::abs(Ed.e[c] - 2 * std::abs(Fd.phi[c])));
        D.core_J = std::max(D.core_J, std::abs(Ed.J[c]));
    }
    D.core_identity_doubled /= D.max_e;
    D.core_J /= D.max_e;
    auto inv = inversion_pairing(Md);
    for (int c = 0; c < Md.n_classes; ++c) {
        if (Md.is_dirichlet(c) || std::abs(Md.zc(c)) < 1.0) continue;
        double a2 = std::norm(Md.zc(c));
        D.doubled_J_symmetry = std::max(D.doubled_J_symmetry, std::abs(Ed.J[c] + Ed.J[inv[c]] / (a2 * a2)));
    }
    D.doubled_J_symmetry /= D.max_e;
    D.reflection = reflection_identity_check(Md, Fd);
    R.spectrum = laurent(Md, Fd, 1.0, -(k + 10), k + 6);
    D.laurent_symmetry = laurent_symmetry_violation(R.spectrum);

    // second-order one-sided radial derivative on the free circle (in t = log r), hyperbolic norm
    const double dt = rows[1];
    for (int j = 0; j < n; ++j) {
        cplx u0 = R.free_state.u[j];
        cplx v = (4.0 * log_map(u0, R.free_state.u[n + j]) - log_map(u0, R.free_state.u[2 * n + j])) / (2 * dt);
        D.normal_derivative = std::max(D.normal_derivative, std::sqrt(rho(u0)) * std::abs(v));
    }
    return R;
}

// Min of J over the interior of the free annulus.
inline double jacobian_positivity(const ParachuteRun& run) { return run.diag.min_J; }

// ----------------------------------------------------------------------------
// studies
// ----------------------------------------------------------------------------

struct CoreRow {
    double s = 0, distance = 0, length = 0;
};

struct CoreStudy {
    std::vector<CoreRow> rows;
    double slope = 0;        // d(distance) / d(log s)
    bool slope_defined = false;
    double spread = 0;       // max / min distance
};

inline CoreStudy core_study_from(std::vector<CoreRow> rows) {
    CoreStudy S;
    S.rows = std::move(rows);
    if (S.rows.empty()) throw InvalidParameter("core study: empty list");
    double mn = S.rows[0].distance, mx = mn;
    for (auto& r : S.rows) {
        mn = std::min(mn, r.distance);
        mx = std::max(mx, r.distance);
    }
    S.spread = mx / mn;
    if (S.rows.size() >= 2) {
        double n = static_cast<double>(S.rows.size()), ax = 0, ay = 0, sxx = 0, sxy = 0;
        for (auto& r : S.rows) {
            ax += std::log(r.s) / n;
            ay += r.distance / n;
        }
        for (auto& r : S.rows) {
            sxx += sqr(std::log(r.s) - ax);
            sxy += (std::log(r.s) - ax) * (r.distance - ay);
        }
        S.slope = sxy / sxx;
        S.slope_defined = true;
    }
    return S;
}

inline CoreStudy bounded_core_study(int k, const std::vector<double>& s_list, const ParachuteOptions& opt = {}) {
    for (size_t i = 1; i < s_list.size(); ++i)
        if (!(s_list[i] > s_list[i - 1])) throw InvalidParameter("s list must increase");
    std::vector<CoreRow> rows;
    for (double s : s_list) {
        auto R = solve_parachute(k, s, opt);
        rows.push_back({s, R.diag.core_distance, R.diag.core_length});
    }
    return core_study_from(std::move(rows));
}

// Scherk solution on a disk mesh whose log rows over [r, s] coincide (scaled by r) with the
// parachute mesh of P, transplanted onto that mesh. Requires r > 1.
inline MapState scherk_matched(const ParachuteRun& P, const SolveOptions& sopt = {}) {
    if (!(P.r > 1)) throw InvalidParameter("matched scherk data needs r > 1");
    const int n = P.free_mesh.n_theta;
    auto rows = P.free_mesh.rows;
    for (double& t : rows) t += std::log(P.r);
    GluedMesh M = build_hybrid(hybrid_layout(n, P.r, false), rows, HoleMode::none);
    auto [w, rep] = solve(M, scherk_initial(M, P.k, P.s), sopt);
    if (!rep.converged) throw NonConvergence("matched scherk solve: " + rep.message);
    std::unordered_map<long long, int> bypos;
    auto key = [&](cplx z) { return std::llround(std::log(std::abs(z)) * 1e8) * 100003LL + std::llround(std::arg(z) * 1e8); };
    for (int c = 0; c < M.n_classes; ++c)
        if (std::abs(M.zc(c)) >= P.r * (1 - 1e-12)) bypos[key(M.zc(c))] = c;
    MapState u;
    u.u.resize(P.free_mesh.n_classes);
    for (int c = 0; c < P.free_mesh.n_classes; ++c) {
        auto it = bypos.find(key(P.r * P.free_mesh.zc(c)));
        if (it == bypos.end()) throw Error("matched scherk mesh: vertex not found");
        u.u[c] = w.u[it->second];
    }
    return u;
}

struct GapRow {
    double s = 0, gap = 0, scherk_energy = 0, parachute_energy = 0;
};

// E(Omega_{r,s}, w) - E(Omega_{r,s}, u_s) on the parachute mesh (energy is scale invariant).
inline GapRow energy_gap(const ParachuteRun& P, const SolveOptions& sopt = {}) {
    GapRow g;
    g.s = P.s;
    g.scherk_energy = energy(P.free_mesh, scherk_matched(P, sopt));
    g.parachute_energy = energy(P.free_mesh, P.free_state);
    g.gap = g.scherk_energy - g.parachute_energy;
    return g;
}

struct GapStudy {
    std::vector<GapRow> rows;
    double relative_variation = 0; // (max - min) / mean
};

inline GapStudy gap_study_from(std::vector<GapRow> rows) {
    GapStudy G;
    G.rows = std::move(rows);
    if (G.rows.empty()) throw InvalidParameter("gap study: empty list");
    double mn = G.rows[0].gap, mx = mn, mean = 0;
    for (auto& r : G.rows) {
        mn = std::min(mn, r.gap);
        mx = std::max(mx, r.gap);
        mean += r.gap / static_cast<double>(G.rows.size());
    }
    G.relative_variation = mean != 0 ? (mx - mn) / std::abs(mean) : 0.0;
    return G;
}

inline GapStudy energy_gap_study(int k, double r, const std::vector<double>& s_list, const ParachuteOptions& opt = {}) {
    if (!(r > 1)) throw InvalidParameter("energy gap: need r > 1");
    std::vector<GapRow> rows;
    for (double s : s_list) {
        if (!(s > r)) throw InvalidParameter("energy gap: need s > r");
        rows.push_back(energy_gap(solve_parachute(k, s, opt, r), opt.solve));
    }
    return gap_study_from(std::move(rows));
}

// ----------------------------------------------------------------------------
// iso-energy
// ----------------------------------------------------------------------------

struct IsoEnergy {
    double e2d = 0, e1d = 0;
    bool holds() const { return e2d <= e1d; }
};

// Harmonic fill of the unit disk with the given boundary loop (uniform angles), against the loop's
// energy (1/2) sum rho |du|^2 / dtheta.
inline IsoEnergy iso_energy_fill(const std::vector<cplx>& loop, int n_r = 0, const SolveOptions& sopt = {}) {
    const int n = static_cast<int>(loop.size());
    if (n < 8 || n % 2 != 0) throw InvalidParameter("iso-energy: loop needs an even number >= 8 of samples");
    if (n_r == 0) n_r = std::max(8, n / 4);
    GluedMesh M = build_disk(1.0, n_r, n);
    MapState u;
    u.u.assign(M.n_classes, 0.0);
    cplx mean = 0;
    for (cplx b : loop) mean += b / static_cast<double>(n);
    for (int c = 0; c < M.n_classes; ++c) {
        cplx z = M.zc(c);
        if (M.is_dirichlet(c)) {
            long j = std::lround(std::arg(z) / (2 * pi) * n);
            u.u[c] = loop[((j % n) + n) % n];
        } else {
            u.u[c] = mean;
        }
    }
    // blend toward the boundary so the start is inside the disk and close to the fill
    for (int c = 0; c < M.n_classes; ++c) {
        if (M.is_dirichlet(c)) continue;
        cplx z = M.zc(c);
        long j = std::lround(std::arg(z) / (2 * pi) * n);
        cplx b = loop[((j % n) + n) % n];
        u.u[c] = geodesic_point(mean, b, std::abs(z));
    }
    auto [st, rep] = solve(M, u, sopt);
    if (!rep.converged) throw NonConvergence("iso-energy fill: " + rep.message);
    IsoEnergy I;
    I.e2d = energy(M, st);
    const double dth = 2 * pi / n;
    for (int j = 0; j < n; ++j) {
        cplx a = loop[j], b = loop[(j + 1) % n];
        I.e1d += 0.5 * rho(0.5 * (a + b)) * std::norm(b - a) / dth;
    }
    return I;
}

// Fill of the core circle of a parachute run.
inline IsoEnergy iso_energy_check(const ParachuteRun& P, const SolveOptions& sopt = {}) {
    std::vector<cplx> loop(P.free_state.u.begin(), P.free_state.u.begin() + P.free_mesh.n_theta);
    return iso_energy_fill(loop, 0, sopt);
}

} // namespace hml
