#pragma once

// The height function f with (f_z)^2 = -phi, and export of the suspended surface (h, f).

#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "crusher.hpp"

namespace hml {

struct SuspensionRefused : VerificationFailure {
    using VerificationFailure::VerificationFailure;
};

struct SuspensionOptions {
    int interior_depth = 3; // rings kept away from the boundary in the conformality residual
};

struct SuspensionRun {
    const GluedMesh* mesh = nullptr;
    std::vector<cplx> h;
    std::vector<cplx> phi;   // Hopf field of h
    std::vector<cplx> omega; // branch of sqrt(-phi)
    std::vector<double> f;
    int base = -1;
    double period_h = 0, period_v = 0; // |Re closed integral of 2 omega dz|
    double f_span = 0;
    double conformality = 0;           // ||Phi^f + Phi^h|| / ||Phi^h||, interior classes
    double laplacian = 0;              // max |cot-Laplacian f| / area
    int conflicts = 0;                 // reliable non-tree edges where the branch disagrees
    bool flipped = false;              // sign of omega reversed to make f increase along eta_h

    bool periods_ok(double frac = 0.05) const { return period_h <= frac * f_span && period_v <= frac * f_span; }
};

namespace detail {

struct ClassEdge {
    int a, b;
    cplx dz; // z_b - z_a inside a common triangle
};

inline std::vector<ClassEdge> class_edges(const GluedMesh& M) {
    std::map<std::pair<int, int>, cplx> seen;
    for (const auto& T : M.tris)
        for (int k = 0; k < 3; ++k) {
            const auto& p = M.copies[T.v[k]];
            const auto& q = M.copies[T.v[(k + 1) % 3]];
            int a = p.cls, b = q.cls;
            cplx dz = q.z - p.z;
            if (a > b) std::swap(a, b), dz = -dz;
            seen.emplace(std::make_pair(a, b), dz);
        }
    std::vector<ClassEdge> out;
    out.reserve(seen.size());
    for (auto& [k, dz] : seen) out.push_back({k.first, k.second, dz});
    return out;
}

// Integral of omega along the straight segment, exact for cubic omega.
inline cplx segment_integral(cplx wa, cplx wb, cplx da, cplx db, cplx dz) {
    return 0.5 * dz * (wa + wb) + dz * dz / 12.0 * (da - db);
}

// Same with the derivative known only at a; exact for quadratic omega.
inline cplx segment_integral_one_sided(cplx wa, cplx wb, cplx da, cplx dz) {
    return 0.5 * dz * (wa + wb) - dz / 6.0 * (wb - wa - da * dz);
}

inline std::vector<int> boundary_depth(const GluedMesh& M, const std::vector<ClassEdge>& E) {
    std::vector<std::vector<int>> adj(M.n_classes);
    for (auto& e : E) adj[e.a].push_back(e.b), adj[e.b].push_back(e.a);
    std::vector<int> d(M.n_classes, -1);
    std::queue<int> q;
    for (int c = 0; c < M.n_classes; ++c)
        if (M.marker[c] != Marker::interior) d[c] = 0, q.push(c);
    while (!q.empty()) {
        int c = q.front();
        q.pop();
        for (int n : adj[c])
            if (d[n] < 0) d[n] = d[c] + 1, q.push(n);
    }
    for (int& x : d)
        if (x < 0) x = std::numeric_limits<int>::max();
    return d;
}

} // namespace detail

// Builds f = 2 Re int omega dz, omega^2 = -phi, by continuation from `base`. Loops may be empty.
inline SuspensionRun build_suspension_field(const GluedMesh& M, const std::vector<cplx>& h, const std::vector<cplx>& phi,
                                            int base, const HomologyLoop* eta_h = nullptr,
                                            const HomologyLoop* eta_v = nullptr, const SuspensionOptions& opt = {}) {
    const int n = M.n_classes;
    if (static_cast<int>(phi.size()) != n || static_cast<int>(h.size()) != n)
        throw InvalidParameter("suspension: field size does not match the mesh");
    if (base < 0 || base >= n) throw InvalidParameter("suspension: bad basepoint");
    SuspensionRun S;
    S.mesh = &M;
    S.h = h;
    S.phi = phi;
    S.base = base;

    auto E = detail::class_edges(M);
    std::vector<std::vector<std::pair<int, int>>> adj(n); // (neighbor, edge)
    for (int i = 0; i < static_cast<int>(E.size()); ++i) {
        adj[E[i].a].push_back({E[i].b, i});
        adj[E[i].b].push_back({E[i].a, i});
    }
    auto jump = [&](int a, int b) {
        if (phi[a] == 0.0 || phi[b] == 0.0) return pi;
        return std::abs(std::arg(phi[b] / phi[a]));
    };
    Stencils St(M);
    std::vector<char> full(n);
    for (int c = 0; c < n; ++c) full[c] = St.usable(c) && !(St.flag(c) & sf_reduced);
    auto cost = [&](int a, int b) { return jump(a, b) + (full[a] && full[b] ? 0.0 : 10.0); };

    // Prim on the phase jump: the tree crosses zeros of phi, and reaches reduced stencils, last.
    S.omega.assign(n, 0.0);
    std::vector<char> done(n, 0), tree_edge(E.size(), 0);
    using Item = std::tuple<double, int, int>; // jump, edge, from
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    std::vector<int> order;
    auto visit = [&](int c) {
        done[c] = 1;
        order.push_back(c);
        for (auto [m, e] : adj[c])
            if (!done[m]) pq.push({cost(c, m), e, c});
    };
    S.omega[base] = std::sqrt(-phi[base]);
    visit(base);
    std::vector<std::pair<int, int>> parent(n, {-1, -1}); // (class, edge)
    while (!pq.empty()) {
        auto [j, e, from] = pq.top();
        pq.pop();
        int to = E[e].a == from ? E[e].b : E[e].a;
        if (done[to]) continue;
        cplx r = std::sqrt(-phi[to]);
        S.omega[to] = std::abs(r - S.omega[from]) <= std::abs(r + S.omega[from]) ? r : -r;
        tree_edge[e] = 1;
        parent[to] = {from, e};
        visit(to);
    }
    if (static_cast<int>(order.size()) != n) throw DomainError("suspension: mesh is not connected");

    for (size_t i = 0; i < E.size(); ++i) {
        if (tree_edge[i] || jump(E[i].a, E[i].b) >= 0.5 * pi) continue;
        cplx a = S.omega[E[i].a], b = S.omega[E[i].b];
        if (std::abs(a - b) > std::abs(a + b)) ++S.conflicts;
    }
    if (S.conflicts > 0)
        throw SuspensionRefused("suspension: sqrt(-phi) has sign holonomy (" + std::to_string(S.conflicts) +
                                " inconsistent edges)");

    std::vector<cplx> dw(n, 0.0);
    for (int c = 0; c < n; ++c)
        if (full[c]) dw[c] = St.zderiv(c, S.omega).dz;
    auto edge_int = [&](int a, int b, int e) {
        cplx dz = E[e].a == a ? E[e].dz : -E[e].dz;
        const auto& w = S.omega;
        if (full[a] && full[b]) return 2.0 * detail::segment_integral(w[a], w[b], dw[a], dw[b], dz).real();
        if (full[a]) return 2.0 * detail::segment_integral_one_sided(w[a], w[b], dw[a], dz).real();
        if (full[b]) return -2.0 * detail::segment_integral_one_sided(w[b], w[a], dw[b], -dz).real();
        return (dz * (w[a] + w[b])).real();
    };

    S.f.assign(n, 0.0);
    for (int c : order)
        if (parent[c].first >= 0) S.f[c] = S.f[parent[c].first] + edge_int(parent[c].first, c, parent[c].second);

    std::map<std::pair<int, int>, int> eidx;
    for (int i = 0; i < static_cast<int>(E.size()); ++i) eidx[{E[i].a, E[i].b}] = i;
    auto loop_integral = [&](const HomologyLoop& L) {
        double s = 0;
        for (size_t i = 0; i + 1 < L.classes.size(); ++i) {
            int a = L.classes[i], b = L.classes[i + 1];
            auto it = eidx.find({std::min(a, b), std::max(a, b)});
            if (it == eidx.end()) throw DomainError("suspension: loop step is not a mesh edge");
            s += edge_int(a, b, it->second);
        }
        return s;
    };

    if (eta_h && eta_h->classes.size() >= 2) {
        int a = eta_h->classes[0], b = eta_h->classes[1];
        auto it = eidx.find({std::min(a, b), std::max(a, b)});
        if (it != eidx.end() && edge_int(a, b, it->second) < 0) S.flipped = true;
    } else if (S.omega[base].real() < 0) {
        S.flipped = true;
    }
    if (S.flipped) {
        for (auto& w : S.omega) w = -w;
        for (auto& w : dw) w = -w;
        for (auto& x : S.f) x = -x;
    }
    if (eta_h) S.period_h = std::abs(loop_integral(*eta_h));
    if (eta_v) S.period_v = std::abs(loop_integral(*eta_v));
    auto [lo, hi] = std::minmax_element(S.f.begin(), S.f.end());
    S.f_span = *hi - *lo;

    auto depth = detail::boundary_depth(M, E);
    std::vector<cplx> fc(S.f.begin(), S.f.end());
    double num = 0, den = 0;
    for (int c = 0; c < n; ++c) {
        if (!St.usable(c) || depth[c] < opt.interior_depth) continue;
        cplx fz = St.zderiv(c, fc).dz;
        num += M.mass_z[c] * std::norm(fz * fz + phi[c]);
        den += M.mass_z[c] * std::norm(phi[c]);
    }
    S.conformality = den > 0 ? std::sqrt(num / den) : 0.0;

    std::vector<double> lap(n, 0.0), area(n, 0.0);
    for (size_t t = 0; t < M.tris.size(); ++t)
        for (int k = 0; k < 3; ++k) {
            int i = M.tri_cls(t, (k + 1) % 3), j = M.tri_cls(t, (k + 2) % 3);
            double w = 0.5 * M.cotw[t][k];
            lap[i] += w * (S.f[j] - S.f[i]);
            lap[j] += w * (S.f[i] - S.f[j]);
            area[M.tri_cls(t, k)] += M.area[t] / 3.0;
        }
    for (int c = 0; c < n; ++c)
        if (M.marker[c] == Marker::interior && St.usable(c) && area[c] > 0)
            S.laplacian = std::max(S.laplacian, std::abs(lap[c]) / area[c]);
    return S;
}

// The suspension of the largest-s crusher state. Refuses unless phi is a square.
inline SuspensionRun build_suspension(const CrusherRun& R, const SuspensionOptions& opt = {}) {
    if (R.levels.empty()) throw InvalidParameter("suspension: empty crusher run");
    if (!R.square.even) {
        std::ostringstream os;
        os << "suspension refused: " << R.square.text << "; divisor";
        for (const auto& z : R.divisor.zeros) os << " (" << z.z.real() << "," << z.z.imag() << ")x" << z.multiplicity;
        throw SuspensionRefused(os.str());
    }
    if (!R.square.is_square) throw SuspensionRefused("suspension refused: " + R.square.text);
    const auto& L = R.last();
    const GluedMesh& M = L.domain.mesh;
    int base = find_class_at(M, cplx(0.5, 0));
    if (base < 0) throw Error("suspension: basepoint missing");
    return build_suspension_field(M, L.h.u, R.hopf.phi, base, &L.domain.eta_h, &L.domain.eta_v, opt);
}

// ----------------------------------------------------------------------------
// OBJ
// ----------------------------------------------------------------------------

struct ObjSurface {
    std::vector<std::array<double, 3>> v;
    std::vector<std::array<int, 3>> f; // zero-based
};

// One vertex per class, faces turned so the z-parametrization is positively oriented.
inline ObjSurface surface_of(const SuspensionRun& S) {
    const GluedMesh& M = *S.mesh;
    ObjSurface O;
    for (int c = 0; c < M.n_classes; ++c) O.v.push_back({S.h[c].real(), S.h[c].imag(), S.f[c]});
    for (const auto& T : M.tris) {
        cplx a = M.copies[T.v[0]].z, b = M.copies[T.v[1]].z, c = M.copies[T.v[2]].z;
        std::array<int, 3> t{M.copies[T.v[0]].cls, M.copies[T.v[1]].cls, M.copies[T.v[2]].cls};
        if (std::imag(std::conj(b - a) * (c - a)) < 0) std::swap(t[1], t[2]);
        O.f.push_back(t);
    }
    return O;
}

inline void write_obj(const ObjSurface& O, std::ostream& os) {
    os << "# hml suspension: v = (Re h, Im h, f), h in the Poincare disk\n";
    os.precision(17);
    for (auto& p : O.v) os << "v " << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
    for (auto& t : O.f) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

inline void export_surface(const SuspensionRun& S, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path);
    write_obj(surface_of(S), os);
    if (!os) throw IoError("write failed: " + path);
}

// Minimal reader for v/f records (f entries may carry /vt/vn suffixes).
inline ObjSurface read_obj(std::istream& is) {
    ObjSurface O;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            std::array<double, 3> p;
            if (!(ls >> p[0] >> p[1] >> p[2])) throw IoError("obj: bad vertex at line " + std::to_string(lineno));
            O.v.push_back(p);
        } else if (tag == "f") {
            std::array<int, 3> t;
            for (int& x : t) {
                std::string tok;
                if (!(ls >> tok)) throw IoError("obj: short face at line " + std::to_string(lineno));
                x = std::stoi(tok.substr(0, tok.find('/'))) - 1;
                if (x < 0 || x >= static_cast<int>(O.v.size()))
                    throw IoError("obj: face index out of range at line " + std::to_string(lineno));
            }
            O.f.push_back(t);
        }
    }
    return O;
}

inline ObjSurface read_obj(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    return read_obj(is);
}

// Every directed edge is used at most once: no two faces disagree across a shared edge.
inline bool faces_consistently_oriented(const ObjSurface& O) {
    std::set<std::pair<int, int>> dir;
    for (auto& t : O.f)
        for (int k = 0; k < 3; ++k)
            if (!dir.insert({t[k], t[(k + 1) % 3]}).second) return false;
    return true;
}

} // namespace hml
