#pragma once

// Hopf differential phi dz^2 of a map and its complex-analytic diagnostics.

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "locate.hpp"
#include "solver.hpp"

namespace hml {

// phi in the global chart coordinate z (log-polar charts are converted by (dw/dz)^2).
struct HopfField {
    std::vector<cplx> phi;
    std::vector<std::uint8_t> flag;

    // values in the coordinate z' with dz/dz' = dzdzp (constant)
    std::vector<cplx> in_chart(cplx dzdzp) const {
        std::vector<cplx> out(phi.size());
        for (size_t i = 0; i < phi.size(); ++i) out[i] = phi[i] * dzdzp * dzdzp;
        return out;
    }
};

inline HopfField hopf(const Stencils& S, const std::vector<cplx>& u) {
    const GluedMesh& M = S.mesh();
    HopfField F;
    F.phi.resize(M.n_classes);
    F.flag.resize(M.n_classes);
    for (int c = 0; c < M.n_classes; ++c) {
        ZDerivs d = S.zderiv(c, u);
        F.phi[c] = rho(u[c]) * d.dz * std::conj(d.dzb);
        F.flag[c] = S.flag(c);
    }
    return F;
}

inline HopfField hopf_from_values(const Stencils& S, std::vector<cplx> phi) {
    HopfField F;
    F.phi = std::move(phi);
    F.flag.resize(F.phi.size());
    for (size_t c = 0; c < F.phi.size(); ++c) F.flag[c] = S.flag(static_cast<int>(c));
    return F;
}

// ----------------------------------------------------------------------------
// holomorphicity
// ----------------------------------------------------------------------------

struct ResidualNorms {
    double sup = 0;
    double l2 = 0;
    int count = 0;
};

// Norms of phi_zbar over unflagged, non-boundary classes (optionally inside a region filter).
inline ResidualNorms holomorphic_residual(const Stencils& S, const HopfField& F,
                                          const std::function<bool(cplx)>& keep = nullptr) {
    const GluedMesh& M = S.mesh();
    ResidualNorms r;
    double acc = 0;
    for (int c = 0; c < M.n_classes; ++c) {
        if (F.flag[c] & (sf_cone | sf_near_cone | sf_boundary)) continue;
        if (keep && !keep(M.zc(c))) continue;
        double v = std::abs(S.zderiv(c, F.phi).dzb);
        r.sup = std::max(r.sup, v);
        acc += v * v * M.mass_z[c];
        ++r.count;
    }
    r.l2 = std::sqrt(acc);
    return r;
}

// ----------------------------------------------------------------------------
// Laurent spectra
// ----------------------------------------------------------------------------

struct LaurentSpectrum {
    double radius = 0;
    int n_min = 0, n_max = 0;
    std::vector<cplx> c; // c[n - n_min]
    int samples = 0;

    cplx operator[](int n) const {
        if (n < n_min || n > n_max) throw InvalidParameter("Laurent index out of range");
        return c[n - n_min];
    }
};

// Trapezoidal Cauchy integrals over N equally spaced samples of a sampled function on |z| = R.
inline LaurentSpectrum laurent_from_samples(const std::vector<cplx>& vals, double R, int n_min, int n_max) {
    const int N = static_cast<int>(vals.size());
    LaurentSpectrum L{R, n_min, n_max, std::vector<cplx>(n_max - n_min + 1), N};
    for (int n = n_min; n <= n_max; ++n) {
        cplx s = 0;
        for (int j = 0; j < N; ++j) {
            long long m = ((static_cast<long long>(n) * j) % N + N) % N;
            s += vals[j] * std::polar(1.0, -2.0 * pi * static_cast<double>(m) / N);
        }
        L.c[n - n_min] = s / static_cast<double>(N) * std::pow(R, -n);
    }
    return L;
}

inline LaurentSpectrum laurent(const Locator& loc, const HopfField& F, double R, int n_min, int n_max, int N) {
    if (N < 8) throw InvalidParameter("laurent: too few samples");
    std::vector<cplx> vals(N);
    for (int j = 0; j < N; ++j) {
        auto v = loc.interpolate(F.phi, std::polar(R, 2.0 * pi * j / N));
        if (!v) throw DomainError("laurent: contour exits the mesh");
        vals[j] = *v;
    }
    return laurent_from_samples(vals, R, n_min, n_max);
}

inline LaurentSpectrum laurent(const GluedMesh& M, const HopfField& F, double R, int n_min, int n_max) {
    Locator loc(M);
    return laurent(loc, F, R, n_min, n_max, M.n_theta > 0 ? M.n_theta : 256);
}

inline bool allowed_index(int n, int k) { return ((n + 2) % k + k) % k == 0; }

struct SelectionReport {
    double forbidden = 0, allowed = 0, ratio = 0;
};

inline SelectionReport selection_rule_check(const LaurentSpectrum& L, int k) {
    SelectionReport r;
    for (int n = L.n_min; n <= L.n_max; ++n) (allowed_index(n, k) ? r.allowed : r.forbidden) += std::abs(L[n]);
    r.ratio = r.allowed > 0 ? r.forbidden / r.allowed : (r.forbidden > 0 ? INFINITY : 0.0);
    return r;
}

// c_{-(n+2)} = c_{n-2}: worst relative violation over the indices covered by the spectrum.
inline double laurent_symmetry_violation(const LaurentSpectrum& L) {
    double scale = 0;
    for (auto v : L.c) scale = std::max(scale, std::abs(v));
    double worst = 0;
    for (int n = L.n_min; n <= L.n_max; ++n) {
        int a = n, b = -n - 4; // c_{n-2} pairs with c_{-(n+2)}
        if (b < L.n_min || b > L.n_max) continue;
        worst = std::max(worst, std::abs(L[a] - L[b]) / scale);
    }
    return worst;
}

// phi(z) vs phi(1/z) / z^4 at every vertex of a doubled annulus, relative to max |phi|.
inline double reflection_identity_check(const GluedMesh& M, const HopfField& F) {
    auto inv = inversion_pairing(M);
    auto conj = symmetry_permutation(M, [](cplx z) { return std::conj(z); });
    if (!conj) throw InvalidParameter("mesh not closed under conjugation");
    double mx = 0;
    for (auto v : F.phi) mx = std::max(mx, std::abs(v));
    if (mx == 0) return 0;
    double worst = 0;
    for (int c = 0; c < M.n_classes; ++c) {
        if (M.is_dirichlet(c)) continue;
        int q = (*conj)[inv[c]]; // vertex at 1/z
        cplx z = M.zc(c);
        worst = std::max(worst, std::abs(F.phi[c] - F.phi[q] / std::pow(z, 4)) / mx);
    }
    return worst;
}

// ----------------------------------------------------------------------------
// divisors
// ----------------------------------------------------------------------------

struct Zero {
    int cls = -1;
    cplx z;
    int multiplicity = 0;
    int winding = 0;
    bool at_cone = false;
};

struct Divisor {
    std::vector<Zero> zeros;
    double growth_exponent = 0;
    double growth_stderr = 0;
    int pole_order = 0;
    int total_multiplicity() const {
        int s = 0;
        for (auto& z : zeros) s += z.multiplicity;
        return s;
    }
};

namespace detail {

inline std::vector<int> ring_distances(const GluedMesh& M, int c, int R) {
    std::vector<int> out{c};
    std::map<int, int> d{{c, 0}};
    std::vector<int> frontier{c};
    for (int r = 1; r <= R; ++r) {
        std::vector<int> next;
        for (int v : frontier)
            for (auto [t, cv] : M.incident[v])
                for (int q = 0; q < 3; ++q) {
                    int w = M.tri_cls(t, q);
                    if (!d.count(w)) {
                        d[w] = r;
                        next.push_back(w);
                        out.push_back(w);
                    }
                }
        frontier.swap(next);
    }
    return out;
}

// Ordered boundary cycle of the triangles whose corners all lie in the class set.
inline std::optional<std::vector<int>> patch_boundary(const GluedMesh& M, const std::set<int>& S, int seed) {
    std::set<int> tris;
    for (int v : S)
        for (auto [t, cv] : M.incident[v]) {
            bool all = true;
            for (int q = 0; q < 3; ++q) all = all && S.count(M.tri_cls(t, q));
            if (all) tris.insert(t);
        }
    std::map<std::pair<int, int>, int> cnt;
    for (int t : tris)
        for (int q = 0; q < 3; ++q) cnt[{M.tri_cls(t, q), M.tri_cls(t, (q + 1) % 3)}]++;
    std::map<int, int> nxt;
    for (auto& [e, n] : cnt)
        if (!cnt.count({e.second, e.first})) {
            if (nxt.count(e.first)) return std::nullopt; // pinched patch
            nxt[e.first] = e.second;
        }
    if (nxt.empty() || !S.count(seed)) return std::nullopt;
    std::vector<int> cyc;
    int start = nxt.begin()->first, cur = start;
    do {
        cyc.push_back(cur);
        auto it = nxt.find(cur);
        if (it == nxt.end()) return std::nullopt;
        cur = it->second;
        if (cyc.size() > nxt.size()) return std::nullopt;
    } while (cur != start);
    if (cyc.size() != nxt.size()) return std::nullopt; // several boundary components
    return cyc;
}

} // namespace detail

// Winding number of phi along the boundary of the graph ball of radius R around c.
inline std::optional<int> winding_around(const GluedMesh& M, const std::vector<cplx>& phi, int c, int R) {
    auto ball = detail::ring_distances(M, c, R);
    std::set<int> S(ball.begin(), ball.end());
    auto cyc = detail::patch_boundary(M, S, c);
    if (!cyc) return std::nullopt;
    double tot = 0, mn = 1e300;
    for (size_t i = 0; i < cyc->size(); ++i) {
        cplx a = phi[(*cyc)[i]], b = phi[(*cyc)[(i + 1) % cyc->size()]];
        mn = std::min(mn, std::abs(a));
        if (a == 0.0 || b == 0.0) return std::nullopt;
        tot += std::arg(b / a);
    }
    return static_cast<int>(std::lround(tot / (2 * pi)));
}

struct DivisorOptions {
    double threshold = 0.1; // fraction of the local median
    int median_rings = 8;
    int winding_rings = 4;
    std::vector<double> growth_radii; // radii for the pole-order fit
    bool include_boundary = false;
    double window = 0; // only classes with |z| <= window (0: everywhere)
};

inline Divisor find_divisor(const GluedMesh& M, const HopfField& F, int k, int g, const DivisorOptions& opt = {}) {
    (void)k;
    (void)g;
    Divisor D;
    const int n = M.n_classes;
    std::vector<double> a(n);
    for (int c = 0; c < n; ++c) a[c] = std::abs(F.phi[c]);
    // candidates: local minima of |phi| below the local threshold
    std::vector<int> cand;
    for (int c = 0; c < n; ++c) {
        if (!opt.include_boundary && M.marker[c] != Marker::interior) continue;
        if (opt.window > 0 && std::abs(M.zc(c)) > opt.window) continue;
        bool is_min = true;
        for (auto [t, cv] : M.incident[c])
            for (int q = 0; q < 3 && is_min; ++q) {
                int w = M.tri_cls(t, q);
                if (w != c && (a[w] < a[c] || (a[w] == a[c] && w < c))) is_min = false;
            }
        if (!is_min) continue;
        auto ball = detail::ring_distances(M, c, opt.median_rings);
        std::vector<double> vals;
        for (int w : ball) vals.push_back(a[w]);
        std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
        double med = vals[vals.size() / 2];
        if (a[c] < opt.threshold * med || (M.tags[c] & tag_cone)) cand.push_back(c);
    }
    // the cone is always examined: its conformal order is at least 2 (alpha - 1)
    std::sort(cand.begin(), cand.end(), [&](int x, int y) { return a[x] < a[y]; });
    std::vector<int> kept;
    for (int c : cand) {
        bool near = false;
        auto ball = detail::ring_distances(M, c, opt.winding_rings);
        std::set<int> S(ball.begin(), ball.end());
        for (int d : kept) near = near || S.count(d);
        if (!near) kept.push_back(c);
    }
    for (int c : kept) {
        std::optional<int> w;
        int used = 0;
        for (int R : {opt.winding_rings, opt.winding_rings - 1, opt.winding_rings + 1}) {
            w = winding_around(M, F.phi, c, R);
            if (w) {
                used = R;
                break;
            }
        }
        if (!w) throw VerificationFailure("winding loop failed around class " + std::to_string(c));
        (void)used;
        Zero z;
        z.cls = c;
        z.z = M.zc(c);
        z.winding = *w;
        z.at_cone = (M.tags[c] & tag_cone) != 0;
        double alpha = M.cone_angle[c] / (2 * pi);
        z.multiplicity = *w + (z.at_cone ? static_cast<int>(std::lround(2 * (alpha - 1))) : 0);
        if (z.multiplicity > 0) D.zeros.push_back(z);
    }
    // pole order at the puncture from the growth of max |phi| on outer circles
    if (!opt.growth_radii.empty()) {
        Locator loc(M);
        std::vector<double> X, Y;
        for (double R : opt.growth_radii) {
            double mx = 0;
            int N = std::max(M.n_theta, 64);
            for (int j = 0; j < N; ++j) {
                auto v = loc.interpolate(F.phi, std::polar(R, 2 * pi * j / N));
                if (!v) throw DomainError("growth circle exits the mesh");
                mx = std::max(mx, std::abs(*v));
            }
            X.push_back(std::log(R));
            Y.push_back(std::log(mx));
        }
        const double m = static_cast<double>(X.size());
        double mx = std::accumulate(X.begin(), X.end(), 0.0) / m, my = std::accumulate(Y.begin(), Y.end(), 0.0) / m;
        double sxx = 0, sxy = 0;
        for (size_t i = 0; i < X.size(); ++i) {
            sxx += (X[i] - mx) * (X[i] - mx);
            sxy += (X[i] - mx) * (Y[i] - my);
        }
        D.growth_exponent = sxy / sxx;
        double res = 0;
        for (size_t i = 0; i < X.size(); ++i) res += sqr(Y[i] - my - D.growth_exponent * (X[i] - mx));
        D.growth_stderr = X.size() > 2 ? std::sqrt(res / (m - 2) / sxx) : 0.0;
        D.pole_order = static_cast<int>(std::lround(D.growth_exponent)) + 4;
    }
    return D;
}

// ----------------------------------------------------------------------------
// D4 arrangements on the punctured square torus
// ----------------------------------------------------------------------------

struct Arrangement {
    std::string label;             // a, b1, b2, b3, c, other
    std::array<int, 5> tuple{};    // (n_P, n_Q, n_R, n_S, n_T)
};

inline int arrangement_weight(const std::array<int, 5>& t) { return 4 * t[0] + 4 * t[1] + 2 * t[2] + t[3] + 4 * t[4]; }

// Nonnegative solutions of 4 n_P + 4 n_Q + 2 n_R + n_S + 4 n_T = 6 subject to the local rotation
// constraints at the fixed points: n_S = 2 mod 4 (the corner cone) and n_R even.
inline std::vector<Arrangement> enumerate_arrangements() {
    std::vector<Arrangement> out;
    for (int nS = 0; nS <= 6; ++nS) {
        if ((nS + 2) % 4 != 0) continue;
        for (int nR = 0; 2 * nR + nS <= 6; ++nR) {
            if (nR % 2 != 0) continue;
            int rest = 6 - nS - 2 * nR;
            if (rest % 4 != 0) continue;
            int q4 = rest / 4;
            for (int nP = 0; nP <= q4; ++nP)
                for (int nQ = 0; nP + nQ <= q4; ++nQ) {
                    int nT = q4 - nP - nQ;
                    out.push_back({"", {nP, nQ, nR, nS, nT}});
                }
        }
    }
    for (auto& A : out) {
        const auto& t = A.tuple;
        if (t == std::array<int, 5>{0, 0, 2, 2, 0}) A.label = "a";
        else if (t == std::array<int, 5>{0, 0, 0, 2, 1}) A.label = "b1";
        else if (t == std::array<int, 5>{1, 0, 0, 2, 0}) A.label = "b2";
        else if (t == std::array<int, 5>{0, 1, 0, 2, 0}) A.label = "b3";
        else if (t == std::array<int, 5>{0, 0, 0, 6, 0}) A.label = "c";
        else A.label = "other";
    }
    std::sort(out.begin(), out.end(), [](const Arrangement& x, const Arrangement& y) { return x.label < y.label; });
    return out;
}

inline Arrangement arrangement_for(const std::array<int, 5>& t) {
    for (auto& A : enumerate_arrangements())
        if (A.tuple == t) return A;
    return {"other", t};
}

struct SiteLabel {
    char site = '?'; // P Q R S T, or '?' for a generic point
    int orbit_size = 0;
};

// Site of a point of the square-hole model (hole half side hh) within tolerance tol.
inline SiteLabel site_of(const GluedMesh& M, int cls, double tol) {
    if (M.tags[cls] & tag_cone) return {'S', 1};
    const double hh = M.hole_half;
    if (M.tags[cls] & tag_seam) {
        // positions of all copies: seam midpoint copies sit at (+-hh, 0) or (0, +-hh)
        for (int cp : M.class_copies[cls]) {
            cplx z = M.copies[cp].z;
            if (std::abs(std::abs(z.real()) - hh) <= tol && std::abs(z.imag()) <= tol) return {'R', 2};
            if (std::abs(std::abs(z.imag()) - hh) <= tol && std::abs(z.real()) <= tol) return {'R', 2};
        }
        return {'P', 4};
    }
    cplx z = M.zc(cls);
    if (std::abs(z.imag()) <= tol || std::abs(z.real()) <= tol) return {'T', 4};
    if (std::abs(std::abs(z.real()) - std::abs(z.imag())) <= tol) return {'Q', 4};
    return {'?', 8};
}

struct Classification {
    Arrangement arrangement;
    std::vector<SiteLabel> sites; // per zero
    bool d4_symmetric = false;
    std::string diagnostics;
};

inline Classification classify_divisor_d4(const Divisor& D, const GluedMesh& M) {
    Classification C;
    const double tol = 2.0 * M.h;
    std::array<int, 5> sum{0, 0, 0, 0, 0};
    bool generic = false;
    const std::string order = "PQRST";
    for (const auto& z : D.zeros) {
        auto s = site_of(M, z.cls, tol);
        C.sites.push_back(s);
        auto pos = order.find(s.site);
        if (pos == std::string::npos) {
            generic = true;
            C.diagnostics += "zero off all symmetry lines at (" + std::to_string(z.z.real()) + ", " +
                             std::to_string(z.z.imag()) + "); ";
            continue;
        }
        sum[pos] += z.multiplicity;
    }
    // symmetry: every D4 image of a zero must be (near) a zero of the same multiplicity
    C.d4_symmetric = true;
    std::vector<std::function<cplx(cplx)>> gens = {[](cplx z) { return cplx(-z.imag(), z.real()); },
                                                   [](cplx z) { return std::conj(z); }};
    std::vector<std::vector<int>> perms;
    for (auto& g : gens) {
        auto p = symmetry_permutation(M, g);
        if (!p) {
            C.d4_symmetric = false;
            C.diagnostics += "mesh is not D4 invariant; ";
            break;
        }
        perms.push_back(*p);
    }
    if (C.d4_symmetric) {
        for (const auto& z : D.zeros)
            for (auto& p : perms) {
                int img = p[z.cls];
                auto ball = detail::ring_distances(M, img, 2);
                std::set<int> S(ball.begin(), ball.end());
                bool found = false;
                for (const auto& w : D.zeros) found = found || (S.count(w.cls) && w.multiplicity == z.multiplicity);
                if (!found) {
                    C.d4_symmetric = false;
                    C.diagnostics += "zero at class " + std::to_string(z.cls) + " has no symmetric partner; ";
                }
            }
    }
    std::array<int, 5> tuple{};
    const int orbit[5] = {4, 4, 2, 1, 4};
    bool integral = true;
    for (int i = 0; i < 5; ++i) {
        if (sum[i] % orbit[i] != 0) integral = false;
        tuple[i] = sum[i] / orbit[i];
    }
    if (generic || !integral || !C.d4_symmetric) {
        C.arrangement = {"other", tuple};
        if (!integral) C.diagnostics += "site multiplicities not a union of whole orbits; ";
    } else {
        C.arrangement = arrangement_for(tuple);
    }
    return C;
}

// Sign of the mean J on rings 1..rings around each zero; 0 when below the noise floor.
inline std::vector<int> orientation_at_zeros(const Divisor& D, const GluedMesh& M, const EnergyDensityField& F,
                                             int rings = 3, double noise = 1e-6) {
    double emax = 0;
    for (int c = 0; c < M.n_classes; ++c)
        if (!(F.flag[c] & (sf_cone | sf_near_cone))) emax = std::max(emax, F.e[c]);
    std::vector<int> out;
    for (const auto& z : D.zeros) {
        auto ball = detail::ring_distances(M, z.cls, rings);
        double s = 0;
        int n = 0;
        for (int w : ball) {
            if (w == z.cls) continue;
            s += F.J[w];
            ++n;
        }
        double avg = n ? s / n : 0.0;
        out.push_back(std::abs(avg) <= noise * std::max(emax, 1e-300) ? 0 : (avg > 0 ? 1 : -1));
    }
    return out;
}

// ----------------------------------------------------------------------------
// foliations
// ----------------------------------------------------------------------------

enum class Foliation { horizontal, vertical };

struct Trajectory {
    std::vector<cplx> points;
    std::string stop; // budget, zero, boundary, underflow
};

struct FoliationOptions {
    double arclength = 2.0; // in the flat metric |phi|^{1/2} |dz|
    double step = 0.01;     // initial and maximal step
    double tol = 1e-10;     // local error per step (step doubling), in z units
    double min_step = 1e-12;
    double zero_tol = 1e-8;
    int max_steps = 200000;
};

// Integrates dz/dt = e^{i alpha} / sqrt(phi(z)) with adaptive RK4; phi is any evaluator returning nullopt
// outside the domain. `wrap` maps a step that left the chart across a gluing (identity if none).
// The branch of sqrt(phi) follows the previous heading (or `initial_heading` if nonzero).
inline Trajectory trace_trajectory(const std::function<std::optional<cplx>(cplx)>& phi, cplx seed, Foliation dir,
                                   const FoliationOptions& opt,
                                   const std::function<std::optional<cplx>(cplx, cplx)>& wrap = nullptr,
                                   cplx initial_heading = 0.0) {
    const cplx rot = dir == Foliation::horizontal ? cplx(1, 0) : cplx(0, 1);
    enum Fail { ok, outside, zero };
    auto field = [&](cplx p, cplx heading, cplx& v) {
        auto f = phi(p);
        if (!f) return outside;
        if (std::abs(*f) < opt.zero_tol) return zero;
        v = rot / std::sqrt(*f);
        if (heading != 0.0 && std::real(v * std::conj(heading)) < 0) v = -v;
        return ok;
    };
    auto rk4 = [&](cplx z, cplx heading, double h, cplx& out) {
        cplx k1, k2, k3, k4;
        Fail f;
        if ((f = field(z, heading, k1)) != ok) return f;
        if ((f = field(z + 0.5 * h * k1, k1, k2)) != ok) return f;
        if ((f = field(z + 0.5 * h * k2, k1, k3)) != ok) return f;
        if ((f = field(z + h * k3, k1, k4)) != ok) return f;
        out = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        return ok;
    };

    Trajectory T;
    T.points.push_back(seed);
    cplx z = seed, heading = initial_heading;
    {
        cplx v;
        Fail f = field(z, heading, v);
        if (f != ok) {
            T.stop = f == zero ? "zero" : "boundary";
            return T;
        }
        heading = v;
    }
    double s = 0, h = opt.step;
    Fail last = ok;
    for (int it = 0; it < opt.max_steps; ++it) {
        if (s >= opt.arclength * (1 - 1e-14)) {
            T.stop = "budget";
            return T;
        }
        h = std::min(h, opt.arclength - s);
        if (h < opt.min_step) {
            T.stop = last == outside ? "boundary" : (last == zero ? "zero" : "underflow");
            return T;
        }
        cplx full, half, two;
        Fail f = rk4(z, heading, h, full);
        if (f == ok) f = rk4(z, heading, 0.5 * h, half);
        if (f == ok) {
            cplx hd;
            field(half, heading, hd);
            f = rk4(half, hd, 0.5 * h, two);
        }
        if (f != ok) {
            last = f;
            h *= 0.5;
            continue;
        }
        double err = std::abs(two - full) / 15.0;
        if (err > opt.tol) {
            last = ok;
            h *= std::max(0.2, 0.9 * std::pow(opt.tol / err, 0.2));
            continue;
        }
        cplx zn = two + (two - full) / 15.0;
        if (wrap) {
            auto w = wrap(z, zn);
            if (!w) {
                last = outside;
                h *= 0.5;
                continue;
            }
            zn = *w;
        }
        cplx v;
        if (field(zn, heading, v) == ok) heading = v;
        z = zn;
        s += h;
        T.points.push_back(z);
        last = ok;
        h = std::min(opt.step, h * std::min(2.0, 0.9 * std::pow(opt.tol / std::max(err, 1e-300), 0.2)));
    }
    T.stop = "budget";
    return T;
}

// Gluing for the square-hole torus: a step that enters the open hole continues from the opposite side.
inline std::function<std::optional<cplx>(cplx, cplx)> square_hole_wrap(double hh) {
    return [hh](cplx from, cplx to) -> std::optional<cplx> {
        if (!(std::abs(to.real()) < hh && std::abs(to.imag()) < hh)) return to;
        if (from.real() >= hh) return to - cplx(2 * hh, 0);
        if (from.real() <= -hh) return to + cplx(2 * hh, 0);
        if (from.imag() >= hh) return to - cplx(0, 2 * hh);
        if (from.imag() <= -hh) return to + cplx(0, 2 * hh);
        return std::nullopt;
    };
}

inline std::vector<Trajectory> trace_foliation(const GluedMesh& M, const HopfField& F, const std::vector<cplx>& seeds,
                                               Foliation dir, const FoliationOptions& opt = {}) {
    Locator loc(M);
    auto eval = [&](cplx z) { return loc.interpolate(F.phi, z); };
    std::function<std::optional<cplx>(cplx, cplx)> wrap;
    if (M.kind == "torus") wrap = square_hole_wrap(M.hole_half);
    std::vector<Trajectory> out;
    for (cplx s : seeds) out.push_back(trace_trajectory(eval, s, dir, opt, wrap));
    return out;
}

} // namespace hml
