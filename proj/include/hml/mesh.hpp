#pragma once

// Glued triangle meshes over flat charts.
//
// A mesh is a list of vertex copies (chart coordinate z) grouped into classes by the
// gluing; triangles reference copies so that every triangle lives in one chart frame.
// Annulus charts additionally carry log-polar coordinates (t = log r, angular index j)
// and use w = log z as their conformal coordinate.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace hml {

enum class Marker : std::uint8_t { interior = 0, dirichlet = 1, free = 2 };

enum class ChartKind { disk_polar, annulus_polar, square_cartesian, plane_hybrid };

inline const char* to_string(ChartKind k) {
    switch (k) {
    case ChartKind::disk_polar: return "disk-polar";
    case ChartKind::annulus_polar: return "annulus-polar";
    case ChartKind::square_cartesian: return "square-cartesian";
    case ChartKind::plane_hybrid: return "plane-hybrid";
    }
    return "?";
}

inline ChartKind chart_kind_from(const std::string& s) {
    if (s == "disk-polar") return ChartKind::disk_polar;
    if (s == "annulus-polar") return ChartKind::annulus_polar;
    if (s == "square-cartesian") return ChartKind::square_cartesian;
    if (s == "plane-hybrid") return ChartKind::plane_hybrid;
    throw InvalidParameter("unknown chart kind " + s);
}

struct Chart {
    int id = 0;
    ChartKind kind = ChartKind::disk_polar;
    double r_in = 0, r_out = 0;
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    int n_r = 0, n_theta = 0;
};

enum Tag : std::uint32_t {
    tag_core = 1u,      // reflection-fixed circle of a doubled annulus
    tag_inner = 2u,     // inner boundary circle
    tag_outer = 4u,     // outer boundary circle
    tag_seam = 8u,      // glued edge of the square hole
    tag_cone = 16u,     // cone vertex (total angle != 2 pi)
    tag_probe = 32u,    // circle of radius r_probe in hybrid meshes
    tag_hole = 64u,     // inside the filled square of a twin mesh
};

struct VertexCopy {
    int chart = 0;
    int index = 0;
    cplx z{};
    int cls = 0;
    long long key = 0; // structural id shared between related meshes
};

struct LogCoord {
    double t = 0;
    int j = 0;
    int n = 0; // n == 0: not a log-polar vertex
};

struct Triangle {
    std::array<int, 3> v{}; // vertex copies
    int chart = 0;
    bool log = false;
};

struct Region {
    enum class Kind { all, disk, annulus, square } kind = Kind::all;
    double a = 0, b = 0;

    static Region everything() { return {}; }
    static Region disk(double r) { return {Kind::disk, 0.0, r}; }
    static Region annulus(double r, double s) { return {Kind::annulus, r, s}; }
    static Region square(double half) { return {Kind::square, 0.0, half}; }
};

struct GluedMesh {
    std::string kind;
    std::vector<Chart> charts;
    std::vector<VertexCopy> copies;
    std::vector<LogCoord> logc;
    std::vector<Triangle> tris;

    int n_classes = 0;
    std::vector<Marker> marker;
    std::vector<std::uint32_t> tags;
    std::vector<int> rep;

    // declared symmetries
    int rot_order = 0;      // rotation by 2 pi / rot_order
    bool conj_sym = false;  // z -> conj z
    bool inversion_sym = false; // z -> 1 / conj z
    bool d4_sym = false;

    int n_theta = 0;           // angular samples on circles
    std::vector<double> rows;  // log radii of annulus rows (if any)
    double r_probe = 0;        // hybrid meshes: inner circle radius
    double hole_half = 0;      // hybrid meshes: half side of the square hole
    double h = 0;              // mean edge length

    // derived
    std::vector<std::array<cplx, 3>> tw;   // conformal coordinates of triangle corners
    std::vector<std::array<double, 3>> cotw; // cot of angle at corner c
    std::vector<double> area;              // conformal area
    std::vector<double> area_z;            // chord area in z
    std::vector<double> mass_z;            // lumped z-area per class
    std::vector<double> dual_z;            // 1/4 sum_j w_ij |z_j - z_i|^2 per class
    std::vector<double> hloc;              // mean incident edge length per class
    std::vector<std::vector<int>> class_copies;
    std::vector<std::vector<std::pair<int, int>>> incident; // (triangle, corner) per class
    std::vector<double> cone_angle;        // total angle per class (interior classes)

    int cls(int copy) const { return copies[copy].cls; }
    int tri_cls(int t, int c) const { return copies[tris[t].v[c]].cls; }
    cplx zc(int c) const { return copies[rep[c]].z; }
    bool is_dirichlet(int c) const { return marker[c] == Marker::dirichlet; }

    bool tri_in(int t, const Region& R) const;
    void finalize();
};

namespace detail {

inline double wrap_index(int d, int n) {
    int m = ((d % n) + n) % n;
    if (m > n / 2) m -= n;
    return static_cast<double>(m);
}

} // namespace detail

inline bool GluedMesh::tri_in(int t, const Region& R) const {
    if (R.kind == Region::Kind::all) return true;
    const double eps = 1e-9;
    // classify each corner: -1 strictly inside, 0 on the region boundary, +1 strictly outside
    auto side = [&](double v, double lim) { return v < lim - eps * std::max(1.0, lim) ? -1 : (v > lim + eps * std::max(1.0, lim) ? 1 : 0); };
    int n_in = 0, n_out = 0;
    for (int c = 0; c < 3; ++c) {
        cplx z = copies[tris[t].v[c]].z;
        int s = 0;
        switch (R.kind) {
        case Region::Kind::disk: s = side(std::abs(z), R.b); break;
        case Region::Kind::annulus: {
            int so = side(std::abs(z), R.b), si = -side(std::abs(z), R.a);
            s = std::max(so, si);
            if (s == 0 && (so == 1 || si == 1)) s = 1;
            break;
        }
        case Region::Kind::square:
            s = std::max(side(std::abs(z.real()), R.b), side(std::abs(z.imag()), R.b));
            break;
        default: s = -1;
        }
        n_in += s < 0;
        n_out += s > 0;
    }
    if (n_in > 0 && n_out > 0)
        throw InvalidParameter("invalid-region: region is not a union of whole triangles");
    if (n_out > 0) return false;
    if (n_in > 0) return true;
    // all corners on the region boundary: decide by the centroid
    cplx g = (copies[tris[t].v[0]].z + copies[tris[t].v[1]].z + copies[tris[t].v[2]].z) / 3.0;
    switch (R.kind) {
    case Region::Kind::disk: return std::abs(g) <= R.b;
    case Region::Kind::annulus: return std::abs(g) >= R.a && std::abs(g) <= R.b;
    case Region::Kind::square: return std::abs(g.real()) <= R.b && std::abs(g.imag()) <= R.b;
    default: return true;
    }
}

inline void GluedMesh::finalize() {
    const int nt = static_cast<int>(tris.size());
    tw.assign(nt, {});
    cotw.assign(nt, {});
    area.assign(nt, 0.0);
    area_z.assign(nt, 0.0);
    for (int t = 0; t < nt; ++t) {
        auto& T = tris[t];
        std::array<cplx, 3> w;
        std::array<cplx, 3> z;
        for (int c = 0; c < 3; ++c) z[c] = copies[T.v[c]].z;
        if (T.log) {
            const LogCoord& L0 = logc[T.v[0]];
            for (int c = 0; c < 3; ++c) {
                const LogCoord& L = logc[T.v[c]];
                double dth = 2.0 * pi * detail::wrap_index(L.j - L0.j, L0.n) / L0.n;
                w[c] = cplx(L.t, dth);
            }
        } else {
            w = z;
        }
        double cr = std::imag(std::conj(w[1] - w[0]) * (w[2] - w[0]));
        if (cr < 0) {
            std::swap(T.v[1], T.v[2]);
            std::swap(w[1], w[2]);
            std::swap(z[1], z[2]);
            cr = -cr;
        }
        if (!(cr > 0)) throw InvalidParameter("degenerate triangle in mesh");
        tw[t] = w;
        area[t] = 0.5 * cr;
        area_z[t] = 0.5 * std::abs(std::imag(std::conj(z[1] - z[0]) * (z[2] - z[0])));
        for (int c = 0; c < 3; ++c) {
            cplx e1 = w[(c + 1) % 3] - w[c], e2 = w[(c + 2) % 3] - w[c];
            cplx q = std::conj(e1) * e2;
            cotw[t][c] = q.real() / q.imag();
        }
    }
    class_copies.assign(n_classes, {});
    for (int i = 0; i < static_cast<int>(copies.size()); ++i) class_copies[copies[i].cls].push_back(i);
    incident.assign(n_classes, {});
    for (int t = 0; t < nt; ++t)
        for (int c = 0; c < 3; ++c) incident[tri_cls(t, c)].push_back({t, c});
    mass_z.assign(n_classes, 0.0);
    dual_z.assign(n_classes, 0.0);
    hloc.assign(n_classes, 0.0);
    cone_angle.assign(n_classes, 0.0);
    std::vector<int> hcount(n_classes, 0);
    double hsum = 0;
    long hn = 0;
    for (int t = 0; t < nt; ++t) {
        for (int c = 0; c < 3; ++c) {
            int k = tri_cls(t, c);
            mass_z[k] += area_z[t] / 3.0;
            cplx za = copies[tris[t].v[c]].z, zb = copies[tris[t].v[(c + 1) % 3]].z;
            double len = std::abs(zb - za);
            hloc[k] += len;
            hloc[tri_cls(t, (c + 1) % 3)] += len;
            hcount[k]++;
            hcount[tri_cls(t, (c + 1) % 3)]++;
            hsum += len;
            ++hn;
            cplx e1 = copies[tris[t].v[(c + 1) % 3]].z - za, e2 = copies[tris[t].v[(c + 2) % 3]].z - za;
            cone_angle[k] += std::arg(std::conj(e1) * e2);
            double de = 0.125 * cotw[t][c] * std::norm(e2 - e1);
            dual_z[tri_cls(t, (c + 1) % 3)] += de;
            dual_z[tri_cls(t, (c + 2) % 3)] += de;
        }
    }
    for (int k = 0; k < n_classes; ++k)
        if (hcount[k]) hloc[k] /= hcount[k];
    h = hn ? hsum / hn : 0.0;
    for (int k = 0; k < n_classes; ++k)
        if (marker[k] == Marker::interior && std::abs(cone_angle[k] - 2 * pi) > 1e-6) tags[k] |= tag_cone;
}

// ============================================================================
// construction helpers
// ============================================================================

class MeshBuilder {
public:
    GluedMesh m;

    int add_class(cplx z, Marker mk, std::uint32_t tg, long long key, int chart = 0, int index = 0,
                  LogCoord lc = {}) {
        int c = m.n_classes++;
        m.marker.push_back(mk);
        m.tags.push_back(tg);
        m.rep.push_back(static_cast<int>(m.copies.size()));
        m.copies.push_back({chart, index, z, c, key});
        m.logc.push_back(lc);
        return static_cast<int>(m.copies.size()) - 1;
    }

    int add_copy(int cls, cplx z, long long key, int chart = 0, int index = 0, LogCoord lc = {}) {
        m.copies.push_back({chart, index, z, cls, key});
        m.logc.push_back(lc);
        return static_cast<int>(m.copies.size()) - 1;
    }

    void add_tri(int a, int b, int c, int chart, bool log) { m.tris.push_back({{a, b, c}, chart, log}); }

    // Quad with corners c00=(i,j), c10=(i+1,j), c01=(i,j+1), c11=(i+1,j+1).
    void add_quad(int c00, int c10, int c01, int c11, bool typeA, int chart, bool log) {
        if (typeA) {
            add_tri(c00, c10, c11, chart, log);
            add_tri(c00, c11, c01, chart, log);
        } else {
            add_tri(c00, c10, c01, chart, log);
            add_tri(c10, c11, c01, chart, log);
        }
    }

    GluedMesh finish() {
        m.finalize();
        return std::move(m);
    }
};

// Rows of log-polar vertices. rows[i] = t_i; row_keys offset the structural key.
// If first_row is non-empty it supplies the copies of row 0.
inline std::vector<std::vector<int>> add_log_rows(MeshBuilder& B, const std::vector<double>& rows, int n_theta,
                                                  std::vector<int> first_row, int chart, long long key_base,
                                                  int key_row0, const std::function<Marker(int)>& row_marker,
                                                  const std::function<std::uint32_t(int)>& row_tags) {
    std::vector<std::vector<int>> ids(rows.size(), std::vector<int>(n_theta));
    for (size_t i = 0; i < rows.size(); ++i) {
        if (i == 0 && !first_row.empty()) {
            ids[0] = first_row;
            for (int j = 0; j < n_theta; ++j) B.m.logc[first_row[j]] = {rows[0], j, n_theta};
            continue;
        }
        double r = std::exp(rows[i]);
        for (int j = 0; j < n_theta; ++j) {
            double th = 2.0 * pi * j / n_theta;
            long long key = key_base + static_cast<long long>(key_row0 + static_cast<int>(i)) * n_theta + j;
            ids[i][j] = B.add_class(std::polar(r, th), row_marker(static_cast<int>(i)), row_tags(static_cast<int>(i)),
                                    key, chart, static_cast<int>(i) * n_theta + j,
                                    {rows[i], j, n_theta});
        }
    }
    for (size_t i = 0; i + 1 < rows.size(); ++i) {
        for (int j = 0; j < n_theta; ++j) {
            int jn = (j + 1) % n_theta;
            bool typeA = ((static_cast<int>(i) + key_row0 + j) % 2 + 2) % 2 == 0;
            B.add_quad(ids[i][j], ids[i + 1][j], ids[i][jn], ids[i + 1][jn], typeA, chart, true);
        }
    }
    return ids;
}

inline void check_resolution(int n_r, int n_theta, int min_r = 8) {
    if (n_r < min_r || n_theta < 8 || n_theta % 2 != 0)
        throw InvalidParameter("degenerate resolution (need n_r >= " + std::to_string(min_r) +
                               ", n_theta >= 8 and even)");
}

// ============================================================================
// builders
// ============================================================================

inline GluedMesh build_square(double x0, double x1, double y0, double y1, int n) {
    if (n < 2 || !(x1 > x0) || !(y1 > y0)) throw InvalidParameter("build_square: bad extents or resolution");
    MeshBuilder B;
    B.m.kind = "square";
    B.m.charts.push_back({0, ChartKind::square_cartesian, 0, 0, x0, x1, y0, y1, n, n});
    std::vector<int> id((n + 1) * (n + 1));
    for (int q = 0; q <= n; ++q)
        for (int p = 0; p <= n; ++p) {
            bool bd = p == 0 || q == 0 || p == n || q == n;
            cplx z(x0 + (x1 - x0) * p / n, y0 + (y1 - y0) * q / n);
            id[q * (n + 1) + p] = B.add_class(z, bd ? Marker::dirichlet : Marker::interior, bd ? tag_outer : 0u,
                                              q * (n + 1) + p, 0, q * (n + 1) + p);
        }
    for (int q = 0; q < n; ++q)
        for (int p = 0; p < n; ++p)
            B.add_quad(id[q * (n + 1) + p], id[q * (n + 1) + p + 1], id[(q + 1) * (n + 1) + p],
                       id[(q + 1) * (n + 1) + p + 1], (p + q) % 2 == 0, 0, false);
    B.m.conj_sym = std::abs(y0 + y1) < 1e-14;
    return B.finish();
}

inline GluedMesh build_disk(double s, int n_r, int n_theta) {
    if (!(s > 0)) throw InvalidParameter("build_disk: radius must be positive");
    check_resolution(n_r, n_theta);
    MeshBuilder B;
    B.m.kind = "disk";
    B.m.charts.push_back({0, ChartKind::disk_polar, 0, s, 0, 0, 0, 0, n_r, n_theta});
    B.m.n_theta = n_theta;
    int c0 = B.add_class({0, 0}, Marker::interior, 0u, 0, 0, 0);
    std::vector<std::vector<int>> id(n_r + 1, std::vector<int>(n_theta, c0));
    for (int i = 1; i <= n_r; ++i) {
        double r = s * i / n_r;
        for (int j = 0; j < n_theta; ++j) {
            bool bd = i == n_r;
            id[i][j] = B.add_class(std::polar(r, 2.0 * pi * j / n_theta), bd ? Marker::dirichlet : Marker::interior,
                                   bd ? tag_outer : 0u, 1 + static_cast<long long>(i - 1) * n_theta + j, 0,
                                   1 + (i - 1) * n_theta + j);
        }
    }
    for (int j = 0; j < n_theta; ++j) B.add_tri(c0, id[1][j], id[1][(j + 1) % n_theta], 0, false);
    for (int i = 1; i < n_r; ++i)
        for (int j = 0; j < n_theta; ++j) {
            int jn = (j + 1) % n_theta;
            B.add_quad(id[i][j], id[i + 1][j], id[i][jn], id[i + 1][jn], (i + j) % 2 == 0, 0, false);
        }
    B.m.rot_order = n_theta;
    B.m.conj_sym = true;
    return B.finish();
}

// Annulus with explicit log-radius rows (strictly increasing).
inline GluedMesh build_annulus_rows(const std::vector<double>& rows, int n_theta, Marker inner_marker,
                                    int key_row0 = 0) {
    check_resolution(static_cast<int>(rows.size()) - 1, n_theta, 2);
    for (size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i] > rows[i - 1])) throw InvalidParameter("annulus rows must increase");
    MeshBuilder B;
    B.m.kind = "annulus";
    B.m.charts.push_back({0, ChartKind::annulus_polar, std::exp(rows.front()), std::exp(rows.back()), 0, 0, 0, 0,
                          static_cast<int>(rows.size()) - 1, n_theta});
    B.m.n_theta = n_theta;
    B.m.rows = rows;
    const int last = static_cast<int>(rows.size()) - 1;
    add_log_rows(
        B, rows, n_theta, {}, 0, 0, key_row0,
        [&](int i) { return i == 0 ? inner_marker : (i == last ? Marker::dirichlet : Marker::interior); },
        [&](int i) { return i == 0 ? tag_inner : (i == last ? tag_outer : 0u); });
    B.m.rot_order = n_theta;
    B.m.conj_sym = true;
    return B.finish();
}

inline std::vector<double> uniform_rows(double t0, double t1, int n) {
    std::vector<double> r(n + 1);
    double dt = (t1 - t0) / n;
    for (int i = 0; i <= n; ++i) r[i] = t0 + i * dt;
    r[n] = t1;
    return r;
}

inline GluedMesh build_annulus(double r, double s, int n_r, int n_theta, Marker inner_marker) {
    if (!(r > 0) || !(r < s)) throw InvalidParameter("build_annulus: need 0 < r < s");
    if (inner_marker == Marker::interior) throw InvalidParameter("inner marker must be free or dirichlet");
    check_resolution(n_r, n_theta);
    return build_annulus_rows(uniform_rows(std::log(r), std::log(s), n_r), n_theta, inner_marker);
}

// Doubled annulus from the nonnegative rows 0 = t_0 < t_1 < ... < t_m (mirrored to negative t).
inline GluedMesh build_doubled_rows(const std::vector<double>& half_rows, int n_theta) {
    if (half_rows.size() < 2 || half_rows.front() != 0.0) throw InvalidParameter("doubled rows must start at 0");
    const int m = static_cast<int>(half_rows.size()) - 1;
    std::vector<double> rows(2 * m + 1);
    for (int i = 0; i <= m; ++i) {
        rows[m + i] = half_rows[i];
        rows[m - i] = -half_rows[i];
    }
    check_resolution(2 * m, n_theta, 2);
    MeshBuilder B;
    B.m.kind = "doubled_annulus";
    B.m.charts.push_back({0, ChartKind::annulus_polar, std::exp(rows.front()), std::exp(rows.back()), 0, 0, 0, 0,
                          2 * m, n_theta});
    B.m.n_theta = n_theta;
    B.m.rows = rows;
    add_log_rows(
        B, rows, n_theta, {}, 0, 0, -m,
        [&](int i) { return (i == 0 || i == 2 * m) ? Marker::dirichlet : Marker::interior; },
        [&](int i) {
            if (i == m) return static_cast<std::uint32_t>(tag_core);
            if (i == 0) return static_cast<std::uint32_t>(tag_inner);
            if (i == 2 * m) return static_cast<std::uint32_t>(tag_outer);
            return 0u;
        });
    B.m.rot_order = n_theta;
    B.m.conj_sym = true;
    B.m.inversion_sym = true;
    return B.finish();
}

inline GluedMesh build_doubled_annulus(double s, int n_r, int n_theta) {
    if (!(s > 1)) throw InvalidParameter("build_doubled_annulus: need s > 1");
    check_resolution(n_r, n_theta);
    std::vector<double> half(n_r + 1);
    double dt = std::log(s) / n_r;
    for (int i = 0; i <= n_r; ++i) half[i] = i * dt;
    half[n_r] = std::log(s);
    return build_doubled_rows(half, n_theta);
}

// Class index of the mirrored vertex under z -> 1/conj(z) (same angle, negated row).
inline std::vector<int> inversion_pairing(const GluedMesh& M) {
    if (!M.inversion_sym) throw InvalidParameter("mesh has no inversion symmetry");
    std::unordered_map<long long, int> bykey;
    for (int c = 0; c < M.n_classes; ++c) bykey[M.copies[M.rep[c]].key] = c;
    const int n = M.n_theta;
    std::vector<int> p(M.n_classes, -1);
    for (int c = 0; c < M.n_classes; ++c) {
        long long key = M.copies[M.rep[c]].key;
        long long row = (key >= 0) ? key / n : -((-key + n - 1) / n);
        long long j = key - row * n;
        p[c] = bykey.at(-row * n + j);
    }
    return p;
}

// ----------------------------------------------------------------------------
// hybrid disk: Cartesian core [-a,a]^2, O-grid to the circle r_probe, log annulus beyond.
// hole = filled (twin disk), glued (punctured torus), or none (plain disk).
// ----------------------------------------------------------------------------

enum class HoleMode { none, filled, glued };

struct HybridLayout {
    int n_theta = 256;
    double r_probe = 2.0;
    double hole_half = 0.5;
    int n_cart = 0; // cells per side of the Cartesian core
    int n_o = 0;    // O-grid cells
    double hc = 0;
};

inline HybridLayout hybrid_layout(int n_theta, double r_probe, bool with_hole = true) {
    HybridLayout L;
    L.n_theta = n_theta;
    L.r_probe = r_probe;
    double a = 0.5 * r_probe;
    if (n_theta % 16 != 0) throw InvalidParameter("hybrid mesh: n_theta must be a multiple of 16");
    if (!(r_probe > 1.0)) throw InvalidParameter("hybrid mesh: r_probe must exceed 1");
    L.n_cart = n_theta / 4;
    L.hc = 2.0 * a / L.n_cart;
    double cells_half = L.hole_half / L.hc;
    if (with_hole && std::abs(cells_half - std::round(cells_half)) > 1e-9)
        throw InvalidParameter("hybrid mesh: square hole not aligned with the core grid");
    L.n_o = std::max(4, static_cast<int>(std::lround(n_theta * (r_probe - a) / 10.0)));
    return L;
}

// Log rows from r_probe outward, with every radius of s_list present as a row.
inline std::vector<double> exhaustion_rows(double r_probe, const std::vector<double>& s_list, int n_theta) {
    std::vector<double> rows{std::log(r_probe)};
    double target = 2.0 * pi / n_theta;
    double t0 = std::log(r_probe);
    for (double s : s_list) {
        double t1 = std::log(s);
        if (!(t1 > t0)) throw InvalidParameter("exhaustion radii must increase and exceed r_probe");
        int n = std::max(1, static_cast<int>(std::lround((t1 - t0) / target)));
        for (int i = 1; i <= n; ++i) rows.push_back(i == n ? t1 : t0 + (t1 - t0) * i / n);
        t0 = t1;
    }
    return rows;
}

inline GluedMesh build_hybrid(const HybridLayout& L, const std::vector<double>& rows, HoleMode hole) {
    if (rows.size() < 2) throw InvalidParameter("hybrid mesh needs an outer annulus");
    MeshBuilder B;
    B.m.kind = hole == HoleMode::glued ? "torus" : (hole == HoleMode::filled ? "twin_disk" : "hybrid_disk");
    const int N = L.n_cart;
    const double a = 0.5 * L.r_probe;
    const double hc = L.hc;
    const int ph = static_cast<int>(std::lround(L.hole_half / hc));
    const int lo = N / 2 - ph, hi = N / 2 + ph;
    B.m.charts.push_back({0, ChartKind::plane_hybrid, 0, L.r_probe, -a, a, -a, a, N, L.n_theta});
    B.m.charts.push_back({1, ChartKind::annulus_polar, L.r_probe, std::exp(rows.back()), 0, 0, 0, 0,
                          static_cast<int>(rows.size()) - 1, L.n_theta});
    B.m.n_theta = L.n_theta;
    B.m.rows = rows;
    B.m.r_probe = L.r_probe;
    B.m.hole_half = hole == HoleMode::none ? 0.0 : L.hole_half;

    auto key_c = [&](int p, int q) { return static_cast<long long>(q) * (N + 1) + p; };
    const long long base_o = 10'000'000LL, base_a = 20'000'000LL;
    auto in_hole_open = [&](int p, int q) { return p > lo && p < hi && q > lo && q < hi; };
    auto on_hole_bd = [&](int p, int q) {
        return (p >= lo && p <= hi && q >= lo && q <= hi) && !in_hole_open(p, q);
    };

    std::vector<int> id((N + 1) * (N + 1), -1);
    int corner_cls = -1;
    // first pass: hole boundary copies (glued mode) so that classes are merged
    for (int q = 0; q <= N; ++q)
        for (int p = 0; p <= N; ++p) {
            if (hole == HoleMode::glued && in_hole_open(p, q)) continue;
            cplx z(-a + p * hc, -a + q * hc);
            if (hole == HoleMode::glued && on_hole_bd(p, q)) {
                bool corner = (p == lo || p == hi) && (q == lo || q == hi);
                int partner = -1;
                if (corner) {
                    if (corner_cls >= 0) partner = corner_cls;
                } else if (q == hi && id[key_c(p, lo)] >= 0) {
                    partner = B.m.copies[id[key_c(p, lo)]].cls;
                } else if (p == hi && id[key_c(lo, q)] >= 0) {
                    partner = B.m.copies[id[key_c(lo, q)]].cls;
                }
                if (partner >= 0) {
                    id[key_c(p, q)] = B.add_copy(partner, z, key_c(p, q), 0, static_cast<int>(key_c(p, q)));
                } else {
                    std::uint32_t tg = tag_seam;
                    id[key_c(p, q)] = B.add_class(z, Marker::interior, tg, key_c(p, q), 0,
                                                  static_cast<int>(key_c(p, q)));
                    if (corner) corner_cls = B.m.copies[id[key_c(p, q)]].cls;
                }
                continue;
            }
            std::uint32_t tg = 0;
            if (hole == HoleMode::filled && p >= lo && p <= hi && q >= lo && q <= hi) tg |= tag_hole;
            id[key_c(p, q)] = B.add_class(z, Marker::interior, tg, key_c(p, q), 0, static_cast<int>(key_c(p, q)));
        }
    for (int q = 0; q < N; ++q)
        for (int p = 0; p < N; ++p) {
            if (hole == HoleMode::glued && p >= lo && p < hi && q >= lo && q < hi) continue;
            B.add_quad(id[key_c(p, q)], id[key_c(p + 1, q)], id[key_c(p, q + 1)], id[key_c(p + 1, q + 1)],
                       (p + q) % 2 == 0, 0, false);
        }

    // perimeter of the core square, counter-clockwise from (a, 0)
    const int nt = L.n_theta;
    std::vector<int> perim(nt);
    for (int l = 0; l < nt; ++l) {
        int s = (l + N / 2) % nt; // position along the perimeter starting at corner (a,-a)
        int side = s / N, off = s % N;
        int p = 0, q = 0;
        switch (side) {
        case 0: p = N; q = off; break;
        case 1: p = N - off; q = N; break;
        case 2: p = 0; q = N - off; break;
        default: p = off; q = 0; break;
        }
        perim[l] = id[key_c(p, q)];
    }
    // O-grid
    std::vector<std::vector<int>> og(L.n_o + 1, std::vector<int>(nt));
    og[0] = perim;
    for (int m = 1; m <= L.n_o; ++m) {
        double lam = static_cast<double>(m) / L.n_o;
        for (int l = 0; l < nt; ++l) {
            cplx P = B.m.copies[perim[l]].z;
            cplx C = std::polar(L.r_probe, 2.0 * pi * l / nt);
            cplx z = (m == L.n_o) ? C : (1.0 - lam) * P + lam * C;
            std::uint32_t tg = (m == L.n_o) ? static_cast<std::uint32_t>(tag_probe) : 0u;
            bool outer = (m == L.n_o) && rows.size() == 1;
            og[m][l] = B.add_class(z, outer ? Marker::dirichlet : Marker::interior, tg,
                                   base_o + static_cast<long long>(m) * nt + l, 0, m * nt + l);
        }
    }
    for (int m = 0; m < L.n_o; ++m)
        for (int l = 0; l < nt; ++l) {
            int ln = (l + 1) % nt;
            B.add_quad(og[m][l], og[m + 1][l], og[m][ln], og[m + 1][ln], (m + l) % 2 == 0, 0, false);
        }
    const int last = static_cast<int>(rows.size()) - 1;
    add_log_rows(
        B, rows, nt, og[L.n_o], 1, base_a, 0,
        [&](int i) { return i == last ? Marker::dirichlet : Marker::interior; },
        [&](int i) { return i == last ? static_cast<std::uint32_t>(tag_outer) : 0u; });
    B.m.rot_order = 4;
    B.m.conj_sym = true;
    B.m.d4_sym = true;
    return B.finish();
}

struct HomologyLoop {
    std::vector<int> classes; // closed: front() == back()
};

struct TorusDomain {
    GluedMesh mesh;
    HomologyLoop eta_h, eta_v;
};

// Class of the vertex at position z (copy-exact), or -1.
inline int find_class_at(const GluedMesh& M, cplx z, double tol = 1e-9) {
    for (size_t i = 0; i < M.copies.size(); ++i)
        if (std::abs(M.copies[i].z - z) <= tol) return M.copies[i].cls;
    return -1;
}

// Edge loop through the listed corner points, walking along grid lines of the core.
inline HomologyLoop grid_loop(const GluedMesh& M, const std::vector<cplx>& pts, double hc) {
    std::unordered_map<long long, int> bypos;
    auto pkey = [&](cplx z) {
        long long x = std::llround(z.real() / hc), y = std::llround(z.imag() / hc);
        return x * 1000003LL + y;
    };
    for (size_t i = 0; i < M.copies.size(); ++i) bypos[pkey(M.copies[i].z)] = M.copies[i].cls;
    HomologyLoop L;
    for (size_t s = 0; s + 1 < pts.size(); ++s) {
        cplx a = pts[s], b = pts[s + 1];
        int n = static_cast<int>(std::lround(std::abs(b - a) / hc));
        for (int i = 0; i < n; ++i) {
            cplx z = a + (b - a) * (static_cast<double>(i) / n);
            auto it = bypos.find(pkey(z));
            if (it == bypos.end()) throw InvalidParameter("homology loop leaves the mesh");
            L.classes.push_back(it->second);
        }
    }
    auto it = bypos.find(pkey(pts.back()));
    if (it == bypos.end()) throw InvalidParameter("homology loop leaves the mesh");
    L.classes.push_back(it->second);
    return L;
}

inline TorusDomain build_punctured_torus_rows(int n_theta, double r_probe, const std::vector<double>& rows) {
    HybridLayout L = hybrid_layout(n_theta, r_probe);
    TorusDomain D{build_hybrid(L, rows, HoleMode::glued), {}, {}};
    double hh = L.hole_half;
    // loop offsets on the grid, between the hole and the edge of the core square
    double a1 = hh + std::max(1.0, std::round(0.25 / L.hc)) * L.hc;
    double a2 = a1 + std::max(1.0, std::round(0.125 / L.hc)) * L.hc;
    if (a2 > 0.5 * r_probe + 1e-12) throw InvalidParameter("core square too small for homology loops");
    D.eta_h = grid_loop(D.mesh, {cplx(hh, 0), cplx(a1, 0), cplx(a1, a1), cplx(-a1, a1), cplx(-a1, 0), cplx(-hh, 0)},
                        L.hc);
    D.eta_v = grid_loop(D.mesh, {cplx(0, hh), cplx(0, a2), cplx(-a2, a2), cplx(-a2, -a2), cplx(0, -a2), cplx(0, -hh)},
                        L.hc);
    return D;
}

inline TorusDomain build_punctured_torus(double s, int n_theta, double r_probe = 2.0) {
    if (!(s > r_probe)) throw InvalidParameter("build_punctured_torus: need s > r_probe");
    return build_punctured_torus_rows(n_theta, r_probe, exhaustion_rows(r_probe, {s}, n_theta));
}

inline GluedMesh build_twin_disk(double s, int n_theta, double r_probe = 2.0) {
    return build_hybrid(hybrid_layout(n_theta, r_probe), exhaustion_rows(r_probe, {s}, n_theta), HoleMode::filled);
}

inline std::vector<double> rows_upto(const std::vector<double>& rows, double s) {
    std::vector<double> out;
    for (double t : rows)
        if (t <= std::log(s) + 1e-12) out.push_back(t);
    return out;
}

inline std::vector<TorusDomain> exhaustion(const std::vector<double>& s_list, int n_theta, double r_probe = 2.0) {
    if (s_list.empty()) throw InvalidParameter("exhaustion: empty list");
    for (size_t i = 1; i < s_list.size(); ++i)
        if (!(s_list[i] > s_list[i - 1])) throw InvalidParameter("exhaustion: s_list must be strictly increasing");
    if (!(s_list.front() > 1.0)) throw InvalidParameter("exhaustion: min s must exceed 1");
    auto rows = exhaustion_rows(r_probe, s_list, n_theta);
    std::vector<TorusDomain> out;
    for (double s : s_list) out.push_back(build_punctured_torus_rows(n_theta, r_probe, rows_upto(rows, s)));
    return out;
}

// ============================================================================
// topology
// ============================================================================

struct TopologyReport {
    int V = 0, E = 0, F = 0;
    int euler = 0;
    int boundary_components = 0;
    int genus = 0;
    bool orientable = true;
    bool fans_closed = true;
    std::string problem;
};

inline TopologyReport topology(const GluedMesh& M) {
    TopologyReport R;
    R.V = M.n_classes;
    R.F = static_cast<int>(M.tris.size());
    std::map<std::pair<int, int>, int> directed;
    for (int t = 0; t < R.F; ++t)
        for (int c = 0; c < 3; ++c) {
            int a = M.tri_cls(t, c), b = M.tri_cls(t, (c + 1) % 3);
            if (a == b) {
                R.fans_closed = false;
                R.problem = "triangle with repeated class";
            }
            if (++directed[{a, b}] > 1) {
                R.orientable = false;
                R.problem = "directed edge used twice (inconsistent orientation) at classes " + std::to_string(a) +
                            "," + std::to_string(b);
            }
        }
    std::set<std::pair<int, int>> und;
    std::map<int, std::vector<int>> bnext;
    for (auto& [e, n] : directed) {
        und.insert({std::min(e.first, e.second), std::max(e.first, e.second)});
        if (!directed.count({e.second, e.first})) bnext[e.first].push_back(e.second);
    }
    R.E = static_cast<int>(und.size());
    R.euler = R.V - R.E + R.F;
    // boundary cycles
    std::set<int> seen;
    for (auto& [v, nx] : bnext) {
        if (nx.size() != 1) {
            R.fans_closed = false;
            R.problem = "boundary vertex with " + std::to_string(nx.size()) + " outgoing boundary edges: class " +
                        std::to_string(v);
        }
        if (seen.count(v)) continue;
        ++R.boundary_components;
        int cur = v;
        while (!seen.count(cur)) {
            seen.insert(cur);
            auto it = bnext.find(cur);
            if (it == bnext.end()) break;
            cur = it->second.front();
        }
    }
    // interior fans: every interior class must have a closed link
    for (int k = 0; k < M.n_classes; ++k) {
        if (M.marker[k] != Marker::interior) continue;
        std::map<int, int> nxt;
        for (auto [t, c] : M.incident[k]) nxt[M.tri_cls(t, (c + 1) % 3)] = M.tri_cls(t, (c + 2) % 3);
        if (nxt.empty()) continue;
        int start = nxt.begin()->first, cur = start, steps = 0;
        do {
            auto it = nxt.find(cur);
            if (it == nxt.end()) {
                R.fans_closed = false;
                R.problem = "open fan at interior vertex class " + std::to_string(k);
                break;
            }
            cur = it->second;
            ++steps;
        } while (cur != start && steps <= static_cast<int>(nxt.size()));
        if (cur == start && steps != static_cast<int>(nxt.size())) {
            R.fans_closed = false;
            R.problem = "fan with several cycles at class " + std::to_string(k);
        }
    }
    R.genus = (2 - R.boundary_components - R.euler) / 2;
    return R;
}

inline void validate_topology(const GluedMesh& M, int expected_euler) {
    auto R = topology(M);
    if (!R.fans_closed || !R.orientable) throw VerificationFailure("gluing table inconsistency: " + R.problem);
    if (R.euler != expected_euler)
        throw VerificationFailure("Euler characteristic " + std::to_string(R.euler) + ", expected " +
                                  std::to_string(expected_euler));
}

// Cyclic (counter-clockwise) neighbour order around a class.
inline std::vector<int> neighbour_cycle(const GluedMesh& M, int k) {
    std::map<int, int> nxt;
    std::set<int> targets;
    for (auto [t, c] : M.incident[k]) {
        int a = M.tri_cls(t, (c + 1) % 3), b = M.tri_cls(t, (c + 2) % 3);
        nxt[a] = b;
        targets.insert(b);
    }
    int start = nxt.begin()->first;
    for (auto& [a, b] : nxt)
        if (!targets.count(a)) start = a; // boundary: begin at the open end
    std::vector<int> cyc;
    int cur = start;
    for (size_t i = 0; i <= nxt.size(); ++i) {
        cyc.push_back(cur);
        auto it = nxt.find(cur);
        if (it == nxt.end()) break;
        cur = it->second;
        if (cur == start) break;
    }
    return cyc;
}

inline bool loop_closed(const GluedMesh& M, const HomologyLoop& L) {
    if (L.classes.size() < 3 || L.classes.front() != L.classes.back()) return false;
    std::set<std::pair<int, int>> edges;
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t)
        for (int c = 0; c < 3; ++c) edges.insert({M.tri_cls(t, c), M.tri_cls(t, (c + 1) % 3)});
    for (size_t i = 0; i + 1 < L.classes.size(); ++i) {
        int a = L.classes[i], b = L.classes[i + 1];
        if (!edges.count({a, b}) && !edges.count({b, a})) return false;
    }
    return true;
}

// Algebraic intersection number of two closed edge loops meeting transversally at vertices.
inline int intersection_number(const GluedMesh& M, const HomologyLoop& A, const HomologyLoop& B) {
    const size_t na = A.classes.size() - 1, nb = B.classes.size() - 1;
    int total = 0;
    for (size_t i = 0; i < na; ++i) {
        int v = A.classes[i];
        for (size_t j = 0; j < nb; ++j) {
            if (B.classes[j] != v) continue;
            int ap = A.classes[(i + na - 1) % na], an = A.classes[(i + 1) % na];
            int bp = B.classes[(j + nb - 1) % nb], bn = B.classes[(j + 1) % nb];
            auto cyc = neighbour_cycle(M, v);
            auto pos = [&](int x) {
                auto it = std::find(cyc.begin(), cyc.end(), x);
                if (it == cyc.end()) throw InvalidParameter("loop edge not in vertex fan");
                return static_cast<int>(it - cyc.begin());
            };
            int n = static_cast<int>(cyc.size());
            int p_an = pos(an), p_ap = pos(ap);
            // left side of A: strictly between an and ap going counter-clockwise
            auto left = [&](int x) {
                int px = pos(x);
                int d1 = ((px - p_an) % n + n) % n, d2 = ((p_ap - p_an) % n + n) % n;
                return d1 > 0 && d1 < d2;
            };
            bool lb = left(bp), ln = left(bn);
            if (lb != ln) total += ln ? 1 : -1;
        }
    }
    return total;
}

// ============================================================================
// symmetry
// ============================================================================

// Map each class to the class at the image of its representative position.
inline std::optional<std::vector<int>> symmetry_permutation(const GluedMesh& M, const std::function<cplx(cplx)>& g,
                                                            double tol = 1e-9) {
    const double q = std::max(M.h * 1e-3, 1e-9);
    std::unordered_map<long long, std::vector<int>> grid;
    auto key = [&](cplx z) {
        return std::llround(z.real() / q) * 2000003LL + std::llround(z.imag() / q);
    };
    for (size_t i = 0; i < M.copies.size(); ++i) grid[key(M.copies[i].z)].push_back(static_cast<int>(i));
    std::vector<int> perm(M.n_classes, -1);
    for (int c = 0; c < M.n_classes; ++c) {
        cplx w = g(M.zc(c));
        int found = -1;
        long long kx = std::llround(w.real() / q), ky = std::llround(w.imag() / q);
        for (long long dx = -1; dx <= 1 && found < 0; ++dx)
            for (long long dy = -1; dy <= 1 && found < 0; ++dy) {
                auto it = grid.find((kx + dx) * 2000003LL + (ky + dy));
                if (it == grid.end()) continue;
                for (int i : it->second)
                    if (std::abs(M.copies[i].z - w) <= tol * std::max(1.0, std::abs(w))) {
                        found = M.copies[i].cls;
                        break;
                    }
            }
        if (found < 0) return std::nullopt;
        perm[c] = found;
    }
    return perm;
}

// True if the class permutation maps triangles to triangles.
inline bool is_automorphism(const GluedMesh& M, const std::vector<int>& perm) {
    std::set<std::array<int, 3>> tris;
    auto canon = [](std::array<int, 3> a) {
        std::sort(a.begin(), a.end());
        return a;
    };
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t)
        tris.insert(canon({M.tri_cls(t, 0), M.tri_cls(t, 1), M.tri_cls(t, 2)}));
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t) {
        auto im = canon({perm[M.tri_cls(t, 0)], perm[M.tri_cls(t, 1)], perm[M.tri_cls(t, 2)]});
        if (!tris.count(im)) return false;
    }
    return true;
}

inline bool check_symmetry(const GluedMesh& M, const std::function<cplx(cplx)>& g) {
    auto p = symmetry_permutation(M, g);
    return p && is_automorphism(M, *p);
}

} // namespace hml
