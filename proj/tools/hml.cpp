// hml: command line front end. Every subcommand writes a run directory whose manifest is written last.
//
// exit codes: 0 ok, 2 invalid parameters, 3 solver non-convergence, 4 verification failure, 5 I/O

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "hml/io.hpp"
#include "hml/suspension.hpp"
#include "hml/svg.hpp"

using namespace hml;
using io::json;
using io::num;

namespace {

std::string str(int x) { return std::to_string(x); }

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw InvalidParameter("bad number in list: '" + tok + "'");
        }
    }
    if (out.empty()) throw InvalidParameter("empty list");
    return out;
}

std::pair<int, int> parse_range(const std::string& s) {
    auto p = s.find("..");
    if (p == std::string::npos) throw InvalidParameter("range must look like a..b: " + s);
    try {
        int a = std::stoi(s.substr(0, p)), b = std::stoi(s.substr(p + 2));
        if (a > b) throw InvalidParameter("empty range " + s);
        return {a, b};
    } catch (const std::logic_error&) {
        throw InvalidParameter("bad range " + s);
    }
}

SolveOptions solve_opts(double tol, int max_iter) {
    SolveOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return o;
}

io::Csv spectrum_csv(const LaurentSpectrum& L, int k, int n_min, int n_max) {
    io::Csv c{"hml.spectrum.v1", {"n", "re", "im", "abs", "allowed"}, {}};
    for (int n = n_min; n <= n_max; ++n) {
        cplx v = L[n];
        c.row({str(n), num(v.real()), num(v.imag()), num(std::abs(v)), allowed_index(n, k) ? "1" : "0"});
    }
    return c;
}

std::string site_name(const GluedMesh& M, int cls) {
    if (M.kind != "torus") return "-";
    return std::string(1, site_of(M, cls, 1e-9).site);
}

io::Csv divisor_csv(const GluedMesh& M, const Divisor& D, const std::vector<int>& orientation) {
    io::Csv c{"hml.divisor.v1", {"x", "y", "multiplicity", "winding", "at_cone", "site", "orientation"}, {}};
    for (size_t i = 0; i < D.zeros.size(); ++i) {
        const auto& z = D.zeros[i];
        c.row({num(z.z.real()), num(z.z.imag()), str(z.multiplicity), str(z.winding), z.at_cone ? "1" : "0",
               site_name(M, z.cls), i < orientation.size() ? str(orientation[i]) : "0"});
    }
    return c;
}

// ----------------------------------------------------------------------------
// reading runs back
// ----------------------------------------------------------------------------

struct Source {
    std::string kind;
    int k = 4;
    double s = 0;
    GluedMesh mesh;
    std::vector<cplx> u;
    double hole_half = 0, r_probe = 0;
    std::optional<CrusherRun> crush;
    json manifest;
    std::string manifest_hash;
};

Source load(const std::string& dir) {
    io::RunReader rd(dir);
    Source S;
    S.kind = rd.subcommand();
    S.manifest = rd.manifest();
    S.manifest_hash = io::sha256_file(rd.dir() / io::manifest_name);
    const json& p = rd.params();
    std::string state_file;
    if (S.kind == "scherk") {
        S.k = p.at("k");
        S.s = p.at("s");
        S.mesh = build_disk(S.s, p.at("n_r"), p.at("n_theta"));
        state_file = "state.json";
    } else if (S.kind == "parachute") {
        S.k = p.at("k");
        S.s = p.at("s");
        ParachuteOptions po;
        po.n_theta = p.at("n_theta");
        po.n_r = p.at("n_r");
        S.mesh = parachute_meshes(S.k, S.s, po, p.at("r").get<double>()).doubled_mesh;
        state_file = "doubled_state.json";
    } else if (S.kind == "crush") {
        auto s_list = p.at("s_list").get<std::vector<double>>();
        CrusherRun R;
        R.s_list = s_list;
        R.opt.n_theta = p.at("n_theta");
        R.opt.r_probe = p.at("r_probe");
        R.opt.link_parachute = p.at("link_parachute");
        CrusherLevel L;
        L.s = s_list.back();
        L.domain = std::move(exhaustion(s_list, R.opt.n_theta, R.opt.r_probe).back());
        state_file = "h_" + str(static_cast<int>(s_list.size()) - 1) + ".json";
        L.h.u = io::state_from_json(rd.read_json(state_file));
        R.levels.push_back(std::move(L));
        S.s = s_list.back();
        S.mesh = R.levels.back().domain.mesh;
        S.u = R.levels.back().h.u;
        S.hole_half = S.mesh.hole_half;
        S.r_probe = R.opt.r_probe;
        S.crush = std::move(R);
    } else {
        throw InvalidParameter("run " + dir + " is a '" + S.kind + "' run, which has no map state");
    }
    if (S.u.empty()) S.u = io::state_from_json(rd.read_json(state_file));
    if (static_cast<int>(S.u.size()) != S.mesh.n_classes) throw VerificationFailure("state does not fit the rebuilt mesh");
    auto want = S.manifest.at("summary").value("mesh_digest", std::string());
    if (want != io::mesh_digest(S.mesh)) throw VerificationFailure("rebuilt mesh differs from the run's mesh");
    return S;
}

HopfField hopf_of(const Source& S) {
    Stencils St(S.mesh);
    return hopf(St, S.u);
}

Divisor divisor_of(const Source& S, const HopfField& F) {
    DivisorOptions o;
    if (S.kind == "scherk") o.window = 0.5 * S.s;
    if (S.kind == "crush") o.window = 0.5 * S.s;
    return find_divisor(S.mesh, F, S.k, S.kind == "crush" ? 1 : 0, o);
}

double domain_extent(const Source& S) {
    if (S.kind == "scherk") return S.s;
    if (S.kind == "parachute") return 2.0;
    return 0.5 * S.s;
}

// ----------------------------------------------------------------------------
// subcommands
// ----------------------------------------------------------------------------

struct Common {
    std::string out;
    double tol = 1e-8;
    int max_iter = 200;
};

int run_scherk(const Common& C, int k, double s, int n_r, int n_theta) {
    json params = {{"k", k}, {"s", s}, {"n_r", n_r}, {"n_theta", n_theta}, {"tol", C.tol}, {"max_iter", C.max_iter}};
    check_even_k(k);
    io::RunWriter w(C.out, "scherk", params);
    ScherkOptions o;
    o.n_r = n_r;
    o.n_theta = n_theta;
    o.solve = solve_opts(C.tol, C.max_iter);
    auto R = solve_scherk(k, s, o);
    w.write("mesh.json", io::mesh_json(R.mesh).dump());
    w.write_json("state.json", io::state_json(R.state.u));
    io::Csv e{"hml.energy.v1", {"r", "energy"}, {}};
    for (auto& row : R.energy_table) e.row({num(row.r), num(row.energy)});
    w.write_csv("energy.csv", e);
    w.write_csv("spectrum.csv", spectrum_csv(R.spectrum, k, o.n_min, o.n_max));
    auto fit = energy_growth_fit(R);
    auto sel = selection_rule_check(R.spectrum, k);
    w.manifest()["summary"] = {{"mesh_digest", io::mesh_digest(R.mesh)},
                               {"iterations", R.report.iterations},
                               {"tension_sup", R.report.tension_sup},
                               {"image_area", R.image_area},
                               {"jacobian_area", R.jacobian_area},
                               {"growth_exponent", fit.exponent},
                               {"holomorphic_residual_sup", R.residual.sup},
                               {"selection_ratio", sel.ratio},
                               {"spectrum_radius", R.spectrum.radius}};
    w.finish();
    std::cout << "scherk k=" << k << " s=" << s << ": area " << R.image_area << ", growth exponent " << fit.exponent
              << "\n";
    return 0;
}

int run_parachute(const Common& C, int k, double s, double r, int n_r, int n_theta) {
    json params = {{"k", k}, {"s", s}, {"r", r}, {"n_r", n_r}, {"n_theta", n_theta}, {"tol", C.tol}, {"max_iter", C.max_iter}};
    ParachuteOptions o;
    o.n_r = n_r;
    o.n_theta = n_theta;
    o.solve = solve_opts(C.tol, C.max_iter);
    parachute_meshes(k, s, o, r); // parameter checks before the directory exists
    io::RunWriter w(C.out, "parachute", params);
    auto R = solve_parachute(k, s, o, r);
    w.write("mesh.json", io::mesh_json(R.doubled_mesh).dump());
    w.write_json("free_state.json", io::state_json(R.free_state.u));
    w.write_json("doubled_state.json", io::state_json(R.doubled_state.u));
    const auto& D = R.diag;
    io::Csv d{"hml.parachute-diagnostics.v1", {"quantity", "value"}, {}};
    for (auto& [name, v] : std::vector<std::pair<std::string, double>>{
             {"core_distance", D.core_distance},   {"core_length", D.core_length},
             {"core_identity", D.core_identity},   {"core_identity_doubled", D.core_identity_doubled},
             {"normal_derivative", D.normal_derivative}, {"min_J", D.min_J},
             {"max_e", D.max_e},                   {"core_J", D.core_J},
             {"doubled_J_symmetry", D.doubled_J_symmetry}, {"reflection", D.reflection},
             {"laurent_symmetry", D.laurent_symmetry}, {"doubling", D.doubling}})
        d.row({name, num(v)});
    w.write_csv("diagnostics.csv", d);
    w.write_csv("spectrum.csv", spectrum_csv(R.spectrum, k, R.spectrum.n_min, R.spectrum.n_max));
    w.manifest()["summary"] = {{"mesh_digest", io::mesh_digest(R.doubled_mesh)},
                               {"free_iterations", R.free_report.iterations},
                               {"doubled_iterations", R.doubled_report.iterations},
                               {"doubling", D.doubling},
                               {"core_identity", D.core_identity},
                               {"n_r", D.n_r}};
    w.finish();
    std::cout << "parachute k=" << k << " s=" << s << " r=" << r << ": core distance " << D.core_distance
              << ", doubling " << D.doubling << "\n";
    return 0;
}

int run_crush(const Common& C, const std::string& s_list_text, int n_theta, double r_probe, bool no_parachute) {
    auto s_list = parse_list(s_list_text);
    CrusherOptions o;
    o.n_theta = n_theta;
    o.r_probe = r_probe;
    o.link_parachute = !no_parachute;
    o.solve = solve_opts(C.tol, C.max_iter);
    json params = {{"s_list", s_list},     {"n_theta", n_theta}, {"r_probe", r_probe},
                   {"link_parachute", o.link_parachute}, {"tol", C.tol}, {"max_iter", C.max_iter}};
    exhaustion(s_list, n_theta, r_probe); // parameter checks
    io::RunWriter w(C.out, "crush", params);
    auto R = solve_crusher(s_list, o);
    auto crude = crude_bound_slack(R);
    io::Csv lv{"hml.crusher-levels.v1",
               {"s", "E_total", "E_core", "E_annulus", "Ew_total", "Ew_core", "Ew_annulus", "K", "K_square",
                "E_comparator", "gap", "crude_slack", "relaxed_slack", "basepoint_im", "basepoint_dist", "axis_im",
                "equivariance", "iterations", "tension_sup"},
               {}};
    for (size_t i = 0; i < R.levels.size(); ++i) {
        const auto& L = R.levels[i];
        w.write_json("h_" + str(static_cast<int>(i)) + ".json", io::state_json(L.h.u));
        double relaxed = L.has_gap ? L.gap.gap + L.Ew_core + L.K - L.E_core : std::nan("");
        lv.row({num(L.s), num(L.E_total), num(L.E_core), num(L.E_annulus), num(L.Ew_total), num(L.Ew_core),
                num(L.Ew_annulus), num(L.K), num(L.K_square), num(L.E_comparator),
                L.has_gap ? num(L.gap.gap) : "nan", num(crude[i]), num(relaxed), num(L.basepoint_im),
                num(L.basepoint_dist), num(L.axis_im), num(L.equivariance), str(L.report.iterations),
                num(L.report.tension_sup)});
    }
    w.write("mesh.json", io::mesh_json(R.last().domain.mesh).dump());
    w.write_csv("levels.csv", lv);
    io::Csv cv{"hml.convergence.v1", {"s_from", "s_to", "sup_dist"}, {}};
    for (size_t i = 0; i < R.convergence.size(); ++i)
        cv.row({num(R.levels[i].s), num(R.levels[i + 1].s), num(R.convergence[i])});
    w.write_csv("convergence.csv", cv);
    w.write_csv("divisor.csv", divisor_csv(R.last().domain.mesh, R.divisor, R.orientation));
    json summary = {{"mesh_digest", io::mesh_digest(R.last().domain.mesh)},
                    {"classification", R.classification.arrangement.label},
                    {"d4_symmetric", R.classification.d4_symmetric},
                    {"total_multiplicity", R.divisor.total_multiplicity()},
                    {"growth_exponent", R.divisor.growth_exponent},
                    {"square", R.square.text},
                    {"image_area_core", R.image_area_core},
                    {"convergence_decreasing", convergence_decreasing(R)}};
    if (o.link_parachute && R.levels.size() >= 2) summary["noncollapse_margin"] = noncollapse_check(R).margin;
    w.manifest()["summary"] = summary;
    w.finish();
    std::cout << "crush: arrangement " << R.classification.arrangement.label << ", total multiplicity "
              << R.divisor.total_multiplicity() << ", " << R.square.text << "\n";
    return 0;
}

int run_suspend(const std::string& run, const std::string& out) {
    Source S = load(run);
    if (S.kind != "crush") throw InvalidParameter("suspend needs a crush run");
    CrusherRun& R = *S.crush;
    analyze_crusher(R);
    auto w = io::RunWriter::extend(run);
    try {
        auto sr = build_suspension(R);
        export_surface(sr, out);
        auto back = read_obj(out);
        if (static_cast<int>(back.v.size()) != S.mesh.n_classes || !faces_consistently_oriented(back))
            throw VerificationFailure("exported surface does not read back");
        w.manifest()["suspension"] = {{"status", "built"},
                                      {"obj", out},
                                      {"obj_sha256", io::sha256_file(out)},
                                      {"embedding", "v = (Re h, Im h, f), h in the Poincare disk"},
                                      {"period_h", sr.period_h},
                                      {"period_v", sr.period_v},
                                      {"f_span", sr.f_span},
                                      {"conformality", sr.conformality},
                                      {"laplacian", sr.laplacian},
                                      {"flipped", sr.flipped}};
        w.finish();
        std::cout << "suspension: conformality " << sr.conformality << ", periods " << sr.period_h << ", "
                  << sr.period_v << "\n";
        return 0;
    } catch (const SuspensionRefused& e) {
        w.manifest()["suspension"] = {{"status", "refused"}, {"reason", e.what()}};
        w.finish();
        throw;
    }
}

struct AnalyzeFlags {
    std::string laurent;
    double circle = 0;
    bool hopf = false, divisor = false, foliation = false;
    int seeds = 16;
};

int run_analyze(const std::string& run, const std::string& out, const AnalyzeFlags& A) {
    if (A.laurent.empty() && !A.hopf && !A.divisor && !A.foliation)
        throw InvalidParameter("analyze: choose at least one of --laurent, --hopf, --divisor, --foliation");
    std::optional<std::pair<int, int>> range;
    if (!A.laurent.empty()) {
        range = parse_range(A.laurent);
        if (!(A.circle > 0)) throw InvalidParameter("--laurent needs --circle R > 0");
    }
    Source S = load(run);
    json params = {{"run", run},         {"laurent", A.laurent}, {"circle", A.circle},  {"hopf", A.hopf},
                   {"divisor", A.divisor}, {"foliation", A.foliation}, {"seeds", A.seeds}};
    io::RunWriter w(out, "analyze", params);
    w.manifest()["inputs"]["run_manifest"] = S.manifest_hash;
    auto F = hopf_of(S);
    json summary = json::object();
    if (range) {
        auto L = laurent(S.mesh, F, A.circle, range->first, range->second);
        w.write_csv("spectrum.csv", spectrum_csv(L, S.k, range->first, range->second));
        summary["spectrum_rows"] = range->second - range->first + 1;
    }
    if (A.hopf) {
        io::Csv h{"hml.hopf.v1", {"class", "x", "y", "re", "im", "abs", "flag"}, {}};
        for (int c = 0; c < S.mesh.n_classes; ++c) {
            cplx z = S.mesh.zc(c);
            h.row({str(c), num(z.real()), num(z.imag()), num(F.phi[c].real()), num(F.phi[c].imag()),
                   num(std::abs(F.phi[c])), str(F.flag[c])});
        }
        w.write_csv("hopf.csv", h);
    }
    if (A.divisor) {
        auto D = divisor_of(S, F);
        std::vector<int> orient;
        if (S.crush) {
            analyze_crusher(*S.crush);
            D = S.crush->divisor;
            orient = S.crush->orientation;
            summary["classification"] = S.crush->classification.arrangement.label;
        }
        w.write_csv("divisor.csv", divisor_csv(S.mesh, D, orient));
        summary["total_multiplicity"] = D.total_multiplicity();
    }
    if (A.foliation) {
        io::Csv f{"hml.foliation.v1", {"trajectory", "direction", "i", "x", "y", "stop"}, {}};
        auto seeds = svg::ring_seeds(0.6 * domain_extent(S), A.seeds);
        int id = 0;
        for (auto dir : {Foliation::horizontal, Foliation::vertical}) {
            for (auto& T : trace_foliation(S.mesh, F, seeds, dir)) {
                for (size_t i = 0; i < T.points.size(); ++i)
                    f.row({str(id), dir == Foliation::horizontal ? "h" : "v", str(static_cast<int>(i)),
                           num(T.points[i].real()), num(T.points[i].imag()), T.stop});
                ++id;
            }
        }
        w.write_csv("foliation.csv", f);
    }
    w.manifest()["summary"] = summary;
    w.finish();
    return 0;
}

struct DiagnoseFlags {
    std::string what, run, s_list = "4,6,8";
    int k = 4, n_theta = 256;
    double r = 2.0;
};

int run_diagnose(const Common& C, const DiagnoseFlags& D) {
    json params = {{"what", D.what}, {"run", D.run}, {"k", D.k}, {"s_list", D.s_list},
                   {"n_theta", D.n_theta}, {"r", D.r}, {"tol", C.tol}, {"max_iter", C.max_iter}};
    ParachuteOptions po;
    po.n_theta = D.n_theta;
    po.solve = solve_opts(C.tol, C.max_iter);
    if (D.what == "energy") {
        if (D.run.empty()) throw InvalidParameter("diagnose energy needs --run");
        io::RunReader rd(D.run);
        io::RunWriter w(C.out, "diagnose", params);
        w.manifest()["inputs"]["run_manifest"] = io::sha256_file(rd.dir() / io::manifest_name);
        if (rd.subcommand() == "scherk") {
            auto c = rd.read_csv("energy.csv");
            std::vector<EnergyRow> t;
            for (auto& row : c.rows) t.push_back({std::stod(row[0]), std::stod(row[1])});
            auto fit = energy_growth_fit(t);
            w.write_csv("energy.csv", c);
            w.manifest()["summary"] = {{"growth_exponent", fit.exponent}, {"stderr", fit.stderr_}};
        } else if (rd.subcommand() == "crush") {
            auto c = rd.read_csv("levels.csv");
            io::Csv e{"hml.crusher-energy.v1", {"s", "E_total", "Ew_total", "K", "crude_slack"}, {}};
            for (auto& row : c.rows)
                e.row({row[c.col("s")], row[c.col("E_total")], row[c.col("Ew_total")], row[c.col("K")],
                       row[c.col("crude_slack")]});
            w.write_csv("energy.csv", e);
        } else {
            throw InvalidParameter("diagnose energy needs a scherk or crush run");
        }
        w.finish();
        return 0;
    }
    auto s_list = parse_list(D.s_list);
    if (D.what == "core") {
        check_even_k(D.k);
        io::RunWriter w(C.out, "diagnose", params);
        auto st = bounded_core_study(D.k, s_list, po);
        io::Csv c{"hml.core-study.v1", {"s", "distance", "length"}, {}};
        for (auto& r : st.rows) c.row({num(r.s), num(r.distance), num(r.length)});
        w.write_csv("core.csv", c);
        w.manifest()["summary"] = {{"spread", st.spread}, {"slope", st.slope_defined ? json(st.slope) : json(nullptr)}};
        w.finish();
        std::cout << "core study: spread " << st.spread << "\n";
        return 0;
    }
    if (D.what == "gap") {
        check_even_k(D.k);
        io::RunWriter w(C.out, "diagnose", params);
        auto g = energy_gap_study(D.k, D.r, s_list, po);
        io::Csv c{"hml.gap-study.v1", {"s", "gap", "scherk_energy", "parachute_energy"}, {}};
        for (auto& r : g.rows) c.row({num(r.s), num(r.gap), num(r.scherk_energy), num(r.parachute_energy)});
        w.write_csv("gap.csv", c);
        w.manifest()["summary"] = {{"relative_variation", g.relative_variation}};
        w.finish();
        std::cout << "gap study: relative variation " << g.relative_variation << "\n";
        return 0;
    }
    throw InvalidParameter("diagnose --what must be energy, core or gap");
}

struct EmitFlags {
    std::string run, figure, synthetic;
    int seeds = 16;
};

int run_emit(const std::string& out, const EmitFlags& E) {
    static const std::set<std::string> kinds = {"image-mesh", "foliation", "divisor", "energy-plot"};
    if (!kinds.count(E.figure)) throw InvalidParameter("unknown figure kind " + E.figure);
    json params = {{"run", E.run}, {"figure", E.figure}, {"synthetic", E.synthetic}, {"seeds", E.seeds}};
    if (!E.synthetic.empty()) {
        if (E.figure != "divisor" || E.synthetic != "a") throw InvalidParameter("only --synthetic a for the divisor figure");
        io::RunWriter w(out, "emit", params);
        // double zeros at the two seam midpoints and the corner cone point
        std::vector<svg::ZeroMark> Z = {{{0.5, 0.0}, 2}, {{0.0, 0.5}, 2}, {{0.5, 0.5}, 2}};
        w.write("divisor.svg", svg::divisor(Z, 2.0, 0.5, 2.0));
        w.finish();
        return 0;
    }
    if (E.run.empty()) throw InvalidParameter("emit needs --run or --synthetic");
    if (E.figure == "energy-plot") {
        io::RunReader rd(E.run);
        std::vector<double> r, en;
        std::string file = rd.subcommand() == "crush" ? "levels.csv" : "energy.csv";
        auto c = rd.read_csv(file);
        int cr = c.col(rd.subcommand() == "crush" ? "s" : "r"), ce = c.col(rd.subcommand() == "crush" ? "E_total" : "energy");
        std::vector<EnergyRow> t;
        for (auto& row : c.rows) r.push_back(std::stod(row[cr])), en.push_back(std::stod(row[ce])), t.push_back({r.back(), en.back()});
        double slope = t.size() >= 5 ? energy_growth_fit(t).exponent
                                     : (std::log(en.back()) - std::log(en.front())) / (std::log(r.back()) - std::log(r.front()));
        io::RunWriter w(out, "emit", params);
        w.manifest()["inputs"]["run_manifest"] = io::sha256_file(rd.dir() / io::manifest_name);
        w.write("energy-plot.svg", svg::energy_plot(r, en, slope));
        w.finish();
        return 0;
    }
    Source S = load(E.run);
    io::RunWriter w(out, "emit", params);
    w.manifest()["inputs"]["run_manifest"] = S.manifest_hash;
    if (E.figure == "image-mesh") {
        w.write("image-mesh.svg", svg::image_mesh(S.mesh, S.u, S.k));
    } else {
        auto F = hopf_of(S);
        Divisor D = divisor_of(S, F);
        if (S.crush) {
            analyze_crusher(*S.crush);
            D = S.crush->divisor;
        }
        std::vector<svg::ZeroMark> Z;
        for (auto& z : D.zeros) Z.push_back({z.z, z.multiplicity});
        double ext = domain_extent(S);
        if (E.figure == "divisor") {
            w.write("divisor.svg", svg::divisor(Z, ext, S.hole_half, S.r_probe));
        } else {
            auto seeds = svg::ring_seeds(0.6 * ext, E.seeds);
            auto h = trace_foliation(S.mesh, F, seeds, Foliation::horizontal);
            auto v = trace_foliation(S.mesh, F, seeds, Foliation::vertical);
            w.write("foliation.svg", svg::foliation(h, v, Z, ext, S.hole_half, S.r_probe));
        }
    }
    w.finish();
    return 0;
}

// "--laurent -14..10" would otherwise parse the value as a short flag.
std::vector<std::string> glue_negative_values(int argc, char** argv) {
    std::vector<std::string> a(argv + 1, argv + argc);
    std::vector<std::string> out;
    for (size_t i = 0; i < a.size(); ++i) {
        if ((a[i] == "--laurent" || a[i] == "--s-list") && i + 1 < a.size()) {
            out.push_back(a[i] + "=" + a[i + 1]);
            ++i;
        } else {
            out.push_back(a[i]);
        }
    }
    std::reverse(out.begin(), out.end()); // CLI11 takes the vector in reverse order
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Harmonic maps into the hyperbolic disk: Scherk, parachute and crusher pipelines"};
    app.set_config("--config", "", "key = value config file, one [section] per subcommand; flags win");
    app.require_subcommand(1);

    Common C;
    auto add_common = [&](CLI::App* sub, bool with_out = true) {
        if (with_out) sub->add_option("--out", C.out, "run directory to create")->required();
        sub->add_option("--tol", C.tol, "tension tolerance")->capture_default_str();
        sub->add_option("--max-iter", C.max_iter, "solver iteration cap")->capture_default_str();
    };

    int k = 4, n_r = 192, n_theta = 256;
    double s = 6, r = 1;
    auto* scherk = app.add_subcommand("scherk", "Dirichlet problem on the disk with Scherk boundary data");
    scherk->add_option("--k", k)->capture_default_str();
    scherk->add_option("--s", s)->capture_default_str();
    scherk->add_option("--n-r", n_r)->capture_default_str();
    scherk->add_option("--n-theta", n_theta)->capture_default_str();
    add_common(scherk);

    int p_n_r = 0, p_n_theta = 256;
    auto* para = app.add_subcommand("parachute", "free-boundary annulus and its double");
    para->add_option("--k", k)->capture_default_str();
    para->add_option("--s", s)->capture_default_str();
    para->add_option("--r", r, "inner radius")->capture_default_str();
    para->add_option("--n-r", p_n_r, "rows (0: square cells)")->capture_default_str();
    para->add_option("--n-theta", p_n_theta)->capture_default_str();
    add_common(para);

    std::string s_list = "4,6,8";
    int c_n_theta = 384;
    double r_probe = 2.0;
    bool no_parachute = false;
    auto* crush = app.add_subcommand("crush", "punctured torus exhaustion and Hopf field analysis");
    crush->add_option("--s-list", s_list)->capture_default_str();
    crush->add_option("--n-theta", c_n_theta)->capture_default_str();
    crush->add_option("--r-probe", r_probe)->capture_default_str();
    crush->add_flag("--no-parachute", no_parachute, "skip the linked parachute energy gaps");
    add_common(crush);

    std::string run, obj_out;
    auto* suspend = app.add_subcommand("suspend", "height function and surface export for a crush run");
    suspend->add_option("--run", run)->required();
    suspend->add_option("--out", obj_out, "OBJ path")->required();

    AnalyzeFlags A;
    auto* analyze = app.add_subcommand("analyze", "Hopf field, Laurent spectrum, divisor, foliation of a run");
    analyze->add_option("--run", run)->required();
    analyze->add_option("--out", C.out)->required();
    analyze->add_option("--laurent", A.laurent, "index range a..b");
    analyze->add_option("--circle", A.circle, "contour radius");
    analyze->add_flag("--hopf", A.hopf);
    analyze->add_flag("--divisor", A.divisor);
    analyze->add_flag("--foliation", A.foliation);
    analyze->add_option("--seeds", A.seeds)->capture_default_str();

    DiagnoseFlags D;
    auto* diagnose = app.add_subcommand("diagnose", "energy tables, bounded-core and energy-gap studies");
    diagnose->add_option("--what", D.what, "energy | core | gap")->required();
    diagnose->add_option("--run", D.run);
    diagnose->add_option("--k", D.k)->capture_default_str();
    diagnose->add_option("--s-list", D.s_list)->capture_default_str();
    diagnose->add_option("--n-theta", D.n_theta)->capture_default_str();
    diagnose->add_option("--r", D.r)->capture_default_str();
    add_common(diagnose);

    EmitFlags E;
    auto* emit = app.add_subcommand("emit", "SVG figures");
    emit->add_option("--run", E.run);
    emit->add_option("--figure", E.figure, "image-mesh | foliation | divisor | energy-plot")->required();
    emit->add_option("--synthetic", E.synthetic, "draw a synthetic arrangement instead of a run (a)");
    emit->add_option("--seeds", E.seeds)->capture_default_str();
    emit->add_option("--out", C.out)->required();

    try {
        auto args = glue_negative_values(argc, argv);
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*scherk) return run_scherk(C, k, s, n_r, n_theta);
        if (*para) return run_parachute(C, k, s, r, p_n_r, p_n_theta);
        if (*crush) return run_crush(C, s_list, c_n_theta, r_probe, no_parachute);
        if (*suspend) return run_suspend(run, obj_out);
        if (*analyze) return run_analyze(run, C.out, A);
        if (*diagnose) return run_diagnose(C, D);
        if (*emit) return run_emit(C.out, E);
    } catch (const InvalidParameter& e) {
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return 2;
    } catch (const NonConvergence& e) {
        std::cerr << "no convergence: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o: " << e.what() << "\n";
        return 5;
    } catch (const Error& e) {
        std::cerr << "verification failure: " << e.what() << "\n";
        return 4;
    } catch (const json::exception& e) {
        std::cerr << "i/o: malformed json: " << e.what() << "\n";
        return 5;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o: " << e.what() << "\n";
        return 5;
    }
    return 0;
}
