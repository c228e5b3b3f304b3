// Acceptance run: one PASS/FAIL line per criterion, detail lines indented above it.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>

#include "hml/suspension.hpp"

using namespace hml;

namespace {

struct Verdict {
    bool pass = true;
    std::string note;
};

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::printf("    ");
    std::vprintf(fmt, ap);
    std::printf("\n");
    va_end(ap);
    std::fflush(stdout);
}

// Records a sub-check and folds it into the verdict.
bool check(Verdict& v, bool ok, const std::string& what) {
    note("[%s] %s", ok ? "ok" : "FAIL", what.c_str());
    v.pass = v.pass && ok;
    return ok;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

cplx gamma_x(double x) { return std::tanh(0.5 * x); }

MapState dirichlet_start(const GluedMesh& M, const std::function<cplx(cplx)>& f) {
    MapState s;
    s.u.resize(M.n_classes);
    for (int c = 0; c < M.n_classes; ++c) s.u[c] = M.is_dirichlet(c) ? f(M.zc(c)) : cplx(0.0);
    return s;
}

double tension_sup_geodesic(int n) {
    auto M = build_square(0, 1, 0, 1, n);
    Stencils S(M);
    std::vector<cplx> u(M.n_classes);
    for (int c = 0; c < M.n_classes; ++c) u[c] = gamma_x(M.zc(c).real());
    auto T = tension(S, u);
    double m = 0;
    for (int c = 0; c < M.n_classes; ++c) {
        cplx z = M.zc(c);
        if (z.real() > 0.1 && z.real() < 0.9 && z.imag() > 0.1 && z.imag() < 0.9) m = std::max(m, std::abs(T.tau[c]));
    }
    return m;
}

// ----------------------------------------------------------------------------

Verdict geodesic_oracle() {
    Verdict v;
    auto M = build_disk(1, 64, 256);
    auto [s, rep] = solve(M, dirichlet_start(M, [](cplx z) { return gamma_x(z.real()); }));
    check(v, rep.converged, "solver converged: " + rep.message);
    double d = 0;
    for (int c = 0; c < M.n_classes; ++c) d = std::max(d, dist(s.u[c], gamma_x(M.zc(c).real())));
    check(v, d <= 1e-3, fmt("sup distance to the exact map %.3e <= 1e-3 (h = 1/64)", d));
    Stencils S(M);
    auto F = energy_decomposition(S, s.u);
    double phi_err = 0, J = 0;
    for (int c = 0; c < M.n_classes; ++c) {
        if (std::abs(M.zc(c)) > 0.8 || !S.usable(c)) continue;
        phi_err = std::max(phi_err, std::abs(F.phi[c] - 0.25) / 0.25);
        J = std::max(J, std::abs(F.J[c]));
    }
    check(v, phi_err <= 1e-2, fmt("phi = 1/4, relative error %.3e <= 1e-2 on |z| <= 0.8", phi_err));
    check(v, J <= 1e-3, fmt("J = 0, sup |J| %.3e <= 1e-3 on |z| <= 0.8", J));
    double t32 = tension_sup_geodesic(32), t64 = tension_sup_geodesic(64);
    double order = std::log2(t32 / t64);
    check(v, order >= 1.8, fmt("tension residual order %.3f >= 1.8 (%.2e, %.2e)", order, t32, t64));
    return v;
}

struct ScherkPair {
    ScherkRun coarse, fine;
};

ScherkPair scherk_runs() {
    ScherkOptions a, b;
    a.n_r = 96;
    a.n_theta = 128;
    b.n_r = 192;
    b.n_theta = 256;
    return {solve_scherk(4, 6, a), solve_scherk(4, 6, b)};
}

Verdict scherk_k4(const ScherkPair& P) {
    Verdict v;
    const ScherkRun& R = P.fine;
    double order = std::log2(P.coarse.residual.sup / R.residual.sup);
    check(v, order >= 1.8,
          fmt("holomorphic residual order %.3f >= 1.8 (%.2e at 96x128, %.2e at 192x256)", order,
              P.coarse.residual.sup, R.residual.sup));
    cplx c2 = R.normalized(2);
    check(v, c2.real() > 0 && std::abs(c2.imag()) <= 1e-6 * std::abs(c2),
          fmt("c_2 real positive: %.6e %+.2e i", c2.real(), c2.imag()));
    check(v, R.spectrum[2].real() < 0, fmt("raw coefficient negative (phi = -|c| z^2): %.6e", R.spectrum[2].real()));
    double worst_pos = 0, worst_neg = 0;
    int at_neg = 0;
    for (int n = R.spectrum.n_min; n <= R.spectrum.n_max; ++n) {
        if (n == 2 || !allowed_index(n, 4)) continue;
        double r = std::abs(R.spectrum[n]) / std::abs(c2);
        if (n >= 0) worst_pos = std::max(worst_pos, r);
        else if (r > worst_neg) worst_neg = r, at_neg = n;
    }
    note("allowed n >= 0: max |c_n|/|c_2| = %.3e", worst_pos);
    check(v, std::max(worst_pos, worst_neg) <= 0.1,
          fmt("|c_n| <= 0.1 |c_2| for all other allowed n in [-14, 10]: worst %.3e at n = %.0f", std::max(worst_pos, worst_neg),
              worst_neg > worst_pos ? at_neg : 0));
    auto sel = selection_rule_check(R.spectrum, 4);
    check(v, sel.ratio <= 1e-10, fmt("forbidden-index mass ratio %.3e <= 1e-10", sel.ratio));
    double area_err = std::abs(R.image_area - 2 * pi) / (2 * pi);
    check(v, area_err <= 0.05, fmt("image area %.5f = 2 pi within %.2f%%", R.image_area, 100 * area_err));
    double e = energy_growth_fit(R).exponent;
    check(v, e >= 3.6 && e <= 4.4, fmt("energy growth exponent %.4f in [3.6, 4.4]", e));
    return v;
}

Verdict vortex(const ScherkPair& P) {
    Verdict v;
    const ScherkRun& R = P.fine;
    VortexOptions o;
    o.n_r = 192;
    o.n_theta = 256;
    o.coeff = std::abs(R.spectrum[2]);
    auto V = vortex_solve(4, 6, o);
    Stencils S(R.mesh);
    auto E = energy_decomposition(S, R.state.u);
    double d = vortex_cross_check(V, E.H, 3.0);
    check(v, d <= 0.05, fmt("sup |W - 1/2 log H| on |z| <= 3: %.4e <= 0.05", d));
    return v;
}

ParachuteOptions para(int n_theta) {
    ParachuteOptions o;
    o.n_theta = n_theta;
    return o;
}

Verdict doubling() {
    Verdict v;
    const double tol = SolveOptions{}.tol;
    for (auto [k, s, n] : std::vector<std::tuple<int, double, int>>{{4, 4, 256}, {4, 8, 256}, {6, 6, 252}}) {
        auto P = solve_parachute(k, s, para(n));
        check(v, P.diag.doubling <= 10 * tol,
              fmt("k = %.0f, s = %.0f: free vs doubled %.3e <= 1e-7", k, s, P.diag.doubling));
    }
    return v;
}

Verdict parachute_identities(const ParachuteRun& P) {
    Verdict v;
    const auto& D = P.diag;
    check(v, D.core_identity <= 0.05, fmt("core identity sup |e - 2|phi|| / max e = %.3e <= 5%%", D.core_identity));
    check(v, D.reflection <= 1e-8, fmt("reflection identity violation %.3e <= 1e-8", D.reflection));
    check(v, D.laurent_symmetry <= 1e-6, fmt("Laurent symmetry c_-(n+2) = c_(n-2): %.3e <= 1e-6", D.laurent_symmetry));
    check(v, D.min_J >= -0.02 * D.max_e, fmt("min J %.3e >= -0.02 max e = %.3e", D.min_J, -0.02 * D.max_e));
    return v;
}

Verdict core_and_gap(const ParachuteRun& P6) {
    Verdict v;
    auto core = bounded_core_study(4, {4, 6, 8}, para(256));
    for (auto& r : core.rows) note("s = %.0f: sup d(O, u) on the core = %.4f", r.s, r.distance);
    check(v, core.spread <= 1.25, fmt("core distance max/min %.4f <= 1.25", core.spread));
    auto gap = energy_gap_study(4, 2.0, {4, 6, 8}, para(256));
    bool nonneg = true;
    for (auto& r : gap.rows) {
        note("s = %.0f: gap %.4f", r.s, r.gap);
        nonneg = nonneg && r.gap >= 0;
    }
    check(v, nonneg, "energy gap E(w) - E(u_s) on the (2, s) annulus is nonnegative");
    check(v, gap.relative_variation <= 0.15, fmt("gap relative variation %.4f <= 0.15", gap.relative_variation));
    auto iso = iso_energy_check(P6);
    check(v, iso.holds(), fmt("iso-energy on the core fill: E_2d %.5f <= E_1d %.5f", iso.e2d, iso.e1d));
    return v;
}

Verdict crusher(const CrusherRun& R) {
    Verdict v;
    double worst_im = 0, worst_d = 0;
    for (auto& L : R.levels) worst_im = std::max({worst_im, L.basepoint_im, L.axis_im}), worst_d = std::max(worst_d, L.basepoint_dist);
    check(v, worst_im <= 1e-8 && worst_d <= std::log(1 + std::sqrt(2.0)),
          fmt("(i) basepoint real: |Im| %.2e <= 1e-8, d(h(R), O) %.3e <= 0.8814", worst_im, worst_d));
    auto crude = crude_bound_slack(R);
    bool ok = true;
    for (size_t i = 0; i < crude.size(); ++i) {
        note("s = %.0f: E(h) %.4f, E(w) %.4f, K %.4f, slack %.4f", R.levels[i].s, R.levels[i].E_total,
               R.levels[i].Ew_total, R.levels[i].K, crude[i]);
        ok = ok && crude[i] >= 0;
    }
    check(v, ok, "(ii) crude bound E(h_s) <= E(w) + K at every s");
    for (size_t i = 0; i < R.convergence.size(); ++i)
        note("sup d(h_%.0f, h_%.0f) on the core = %.4e", R.levels[i].s, R.levels[i + 1].s, R.convergence[i]);
    check(v, convergence_decreasing(R), "(iii) convergence table strictly decreasing");
    auto relaxed = relaxed_condition_slack(R);
    ok = true;
    for (double s : relaxed) ok = ok && s >= 0;
    check(v, ok, fmt("(iv) relaxed sufficient condition at r = 2, min slack %.4f",
                     *std::min_element(relaxed.begin(), relaxed.end())));
    double g = R.divisor.growth_exponent;
    check(v, std::abs(g - 2) <= 0.3, fmt("(v) Hopf growth exponent %.4f in 2 +- 15%%", g));
    static const std::set<std::string> labels = {"a", "b1", "b2", "b3", "c"};
    const auto& C = R.classification;
    check(v, R.divisor.total_multiplicity() == 6 && C.d4_symmetric && labels.count(C.arrangement.label),
          "(vi) total multiplicity " + std::to_string(R.divisor.total_multiplicity()) + ", D4 " +
              (C.d4_symmetric ? "yes" : "no") + ", arrangement " + C.arrangement.label);
    if (C.arrangement.label == "a") {
        std::vector<int> o = R.orientation;
        std::sort(o.begin(), o.end(), std::greater<>());
        check(v, o == std::vector<int>{1, 1, -1}, "(vii) orientation signs (+, +, -)");
    } else {
        note("(vii) not applicable: arrangement %s", C.arrangement.label.c_str());
    }
    return v;
}

Verdict uniqueness(const ParachuteRun& P, const CrusherRun& R) {
    Verdict v;
    auto pp = stability_probe(P.free_mesh, P.free_state, 0.05, 11);
    check(v, pp.report.converged && pp.sup_distance <= 1e-4, fmt("parachute: reflow distance %.3e <= 1e-4", pp.sup_distance));
    auto cp = uniqueness_probe(R, 0.05, 12);
    check(v, cp.report.converged && cp.sup_distance <= 1e-4, fmt("crusher: reflow distance %.3e <= 1e-4", cp.sup_distance));
    auto q = [](int n_r) {
        auto M = build_disk(1, n_r, 2 * n_r);
        auto u = solve(M, dirichlet_start(M, [](cplx z) { return gamma_x(z.real()); })).first;
        auto w = solve(M, dirichlet_start(M, [](cplx z) { return gamma_x(z.real() + 0.1); })).first;
        return q_subharmonicity(M, u, w);
    };
    double a = q(32), b = q(64);
    bool improves = a >= 0 || (b > a && (b >= 0 || a / b >= 3));
    check(v, improves, fmt("min Delta Q: %.3e (h), %.3e (h/2); improves >= 3x", a, b));
    return v;
}

Verdict suspension(const CrusherRun& R) {
    Verdict v;
    auto M = build_square(-1, 1, -1, 1, 32);
    auto omega = [](cplx z) { return z * (z * z - 0.25); };
    std::vector<cplx> phi(M.n_classes), h(M.n_classes);
    for (int c = 0; c < M.n_classes; ++c) phi[c] = -omega(M.zc(c)) * omega(M.zc(c)), h[c] = 0.3 * M.zc(c);
    auto loop = grid_loop(M, {{-0.75, -0.75}, {0.75, -0.75}, {0.75, 0.75}, {-0.75, 0.75}, {-0.75, -0.75}}, 1.0 / 16);
    auto S = build_suspension_field(M, h, phi, find_class_at(M, cplx(0.25, 0.25)), &loop, &loop);
    check(v, S.conformality <= 1e-6, fmt("synthetic double-zero field: conformality residual %.3e <= 1e-6", S.conformality));
    check(v, S.period_h <= 1e-10, fmt("synthetic field: period residual %.3e", S.period_h));
    if (R.square.is_square) {
        auto T = build_suspension(R);
        check(v, T.conformality <= 0.05, fmt("measured field: conformality %.3e <= 5%%", T.conformality));
        check(v, T.periods_ok(), fmt("measured field: periods %.3e, %.3e", T.period_h, T.period_v));
        auto path = std::filesystem::temp_directory_path() / "hml_acceptance.obj";
        export_surface(T, path.string());
        auto O = read_obj(path.string());
        std::filesystem::remove(path);
        check(v, static_cast<int>(O.v.size()) == T.mesh->n_classes && faces_consistently_oriented(O), "OBJ round trip");
    } else {
        bool refused = false;
        try {
            build_suspension(R);
        } catch (const SuspensionRefused&) {
            refused = true;
        }
        check(v, refused, "measured field (" + R.square.text + "): construction refused as required");
    }
    return v;
}

Verdict enumeration() {
    Verdict v;
    auto A = enumerate_arrangements();
    std::map<std::string, std::array<int, 5>> want = {
        {"a", {0, 0, 2, 2, 0}}, {"b1", {0, 0, 0, 2, 1}}, {"b2", {1, 0, 0, 2, 0}}, {"b3", {0, 1, 0, 2, 0}}, {"c", {0, 0, 0, 6, 0}}};
    bool same = A.size() == want.size();
    for (auto& a : A) same = same && want.count(a.label) && want[a.label] == a.tuple && arrangement_weight(a.tuple) == 6;
    check(v, same, "five arrangements (a, b1, b2, b3, c), each of weight 6");
    // the printed b-tuples, with n_R and n_S exchanged
    std::map<std::string, std::array<int, 5>> printed = {{"b1", {0, 0, 2, 0, 1}}, {"b2", {1, 0, 2, 0, 0}}, {"b3", {0, 1, 2, 0, 0}}};
    bool maps = true;
    for (auto& [label, t] : printed) {
        std::array<int, 5> s = t;
        std::swap(s[2], s[3]);
        maps = maps && arrangement_for(s).label == label;
    }
    check(v, maps, "printed (b) tuples map to their labels after exchanging n_R and n_S");
    return v;
}

} // namespace

int main() {
    int failed = 0;
    auto run = [&](int id, const char* name, const std::function<Verdict()>& f) {
        auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = f();
        } catch (const std::exception& e) {
            v.pass = false;
            note("exception: %s", e.what());
        }
        double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %-34s %s (%.1f s)\n", id, name, v.pass ? "PASS" : "FAIL", sec);
        std::fflush(stdout);
        failed += v.pass ? 0 : 1;
    };

    std::optional<ScherkPair> scherk;
    std::optional<ParachuteRun> p6;
    std::optional<CrusherRun> cr;
    auto need_scherk = [&]() -> const ScherkPair& {
        if (!scherk) scherk = scherk_runs();
        return *scherk;
    };
    auto need_p6 = [&]() -> const ParachuteRun& {
        if (!p6) p6 = solve_parachute(4, 6, para(256));
        return *p6;
    };
    auto need_crusher = [&]() -> const CrusherRun& {
        if (!cr) cr = solve_crusher({4, 6, 8}, CrusherOptions{});
        return *cr;
    };

    run(1, "geodesic-model oracle", geodesic_oracle);
    run(2, "Scherk k=4, s=6", [&] { return scherk_k4(need_scherk()); });
    run(3, "vortex cross-check", [&] { return vortex(need_scherk()); });
    run(4, "doubling", doubling);
    run(5, "parachute identities", [&] { return parachute_identities(need_p6()); });
    run(6, "bounded core and energy gap", [&] { return core_and_gap(need_p6()); });
    run(7, "crusher g=1", [&] { return crusher(need_crusher()); });
    run(8, "uniqueness as stability", [&] { return uniqueness(need_p6(), need_crusher()); });
    run(9, "suspension", [&] { return suspension(need_crusher()); });
    run(10, "arrangement enumeration", enumeration);
    std::printf("%d of 10 criteria failed\n", failed);
    return failed;
}
