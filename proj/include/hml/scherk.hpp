#pragma once

// Scherk-type maps onto ideal polygons, and the scalar vortex equation for log H.

#include <Eigen/SparseCholesky>

#include "hopf.hpp"

namespace hml {

// Sign relating raw Laurent coefficients to the normalized ones (c~_{k-2} > 0).
inline constexpr int hopf_sign = -1;

// Depth of the horocyclic truncation at each ideal vertex: kappa_k (2/k) s^{k/2}, with kappa_k fixed so the
// depth is 7.2 at s = 6 (kappa_4 = 0.4). The resulting map has |c_{k-2}| close to kappa_k^2 / 4.
inline double truncation_depth(int k, double s) {
    check_even_k(k);
    if (!(s > 1)) throw InvalidParameter("scherk: radius must exceed 1");
    return 7.2 * std::pow(s / 6.0, 0.5 * k);
}

inline double depth_scale(int k) { return 7.2 / ((2.0 / k) * std::pow(6.0, 0.5 * k)); }

namespace detail {

// Disk -> upper half plane sending the ideal point xi to infinity and 0 to i.
inline cplx to_uhp(cplx xi, cplx z) { return cplx(0, 1) * (xi + z) / (xi - z); }
inline cplx from_uhp(cplx xi, cplx w) { return xi * (w - cplx(0, 1)) / (w + cplx(0, 1)); }

struct SectorCurve {
    int k;
    double depth;   // hyperbolic length along a side, midpoint to truncation
    double horo;    // half length of the truncating horocycle
    double y0;      // height of that horocycle in the half plane at xi_0
    cplx xi0;

    SectorCurve(int k_, double s) : k(k_), depth(truncation_depth(k_, s)) {
        xi0 = std::polar(1.0, pi / k);
        cplx P = to_uhp(xi0, side_point(k, 0, depth));
        y0 = P.imag();
        horo = std::abs(P.real()) / y0;
    }

    // theta in [0, pi/k]: side 0 from its midpoint, then the horocycle to the bisector of xi_0
    cplx half(double lambda) const {
        double pos = lambda * (depth + horo);
        if (pos <= depth) return side_point(k, 0, pos);
        double a = depth + horo - pos; // horocyclic distance from the bisector
        cplx P = to_uhp(xi0, side_point(k, 0, depth));
        double sgn = P.real() < 0 ? -1.0 : 1.0;
        return from_uhp(xi0, cplx(sgn * a * y0, y0));
    }
};

inline cplx scherk_sector(const SectorCurve& C, double phi) {
    // phi in [-pi/k, pi/k]
    double lam = std::sin(0.5 * C.k * std::abs(phi));
    cplx b = C.half(std::min(1.0, lam));
    return phi < 0 ? std::conj(b) : b;
}

} // namespace detail

// Boundary value at angle theta on |z| = s.
inline cplx scherk_boundary(int k, double s, double theta) {
    detail::SectorCurve C(k, s);
    const double sector = 2 * pi / k;
    double m = std::round(theta / sector);
    double phi = theta - m * sector;
    return std::polar(1.0, m * sector) * detail::scherk_sector(C, phi);
}

// Same curve at theta = 2 pi j / n; exact rotation and conjugation symmetry when k | n.
inline cplx scherk_boundary_index(int k, double s, long j, long n) {
    detail::SectorCurve C(k, s);
    if (n % k != 0) return scherk_boundary(k, s, 2 * pi * j / n);
    const long per = n / k;
    long jj = ((j % n) + n) % n;
    long m = (jj + per / 2) / per; // nearest side direction
    long r = jj - m * per;         // in [-per/2, per/2)
    if (2 * r == -per) {           // vertex direction: take it from the side before
        r = -r;
        m = (m + k - 1) % k;
    }
    cplx b = detail::scherk_sector(C, 2 * pi * static_cast<double>(std::labs(r)) / n);
    if (r < 0) b = std::conj(b);
    if (2 * r == per && k == 4) b = cplx(1, 1) * (0.5 * (b.real() + b.imag())); // exactly on the diagonal
    int q = static_cast<int>(m % k);
    if (k == 4) { // quarter turns without rounding
        for (int i = 0; i < q; ++i) b = cplx(-b.imag(), b.real());
        return b;
    }
    return std::polar(1.0, 2 * pi * q / k) * b;
}

// Radial initial guess: along the ray to each boundary value, at a fraction of its distance.
inline MapState scherk_initial(const GluedMesh& M, int k, double s) {
    MapState u;
    u.u.resize(M.n_classes);
    for (int c = 0; c < M.n_classes; ++c) {
        cplx z = M.zc(c);
        double r = std::abs(z), th = std::arg(z);
        if (M.is_dirichlet(c)) {
            long j = std::lround(th / (2 * pi) * M.n_theta);
            u.u[c] = M.n_theta ? scherk_boundary_index(k, s, j, M.n_theta) : scherk_boundary(k, s, th);
            continue;
        }
        if (r == 0) {
            u.u[c] = 0;
            continue;
        }
        cplx b = scherk_boundary(k, s, th);
        double d = dist(0.0, b) * std::pow(r / s, 0.5 * k);
        u.u[c] = from_origin(b / std::abs(b), d);
    }
    return u;
}

struct EnergyRow {
    double r = 0, energy = 0;
};

struct ScherkRun {
    int k = 0;
    double s = 0;
    GluedMesh mesh;
    MapState state;
    SolveReport report;
    LaurentSpectrum spectrum; // raw coefficients at radius s/2
    double image_area = 0;    // sum of signed geodesic triangle areas
    double jacobian_area = 0; // lumped integral of J over the disk
    std::vector<EnergyRow> energy_table;
    ResidualNorms residual;

    cplx normalized(int n) const { return static_cast<double>(hopf_sign) * spectrum[n]; }
};

inline double image_area(const GluedMesh& M, const std::vector<cplx>& u) {
    double a = 0;
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t)
        a += geodesic_triangle_area(u[M.tri_cls(t, 0)], u[M.tri_cls(t, 1)], u[M.tri_cls(t, 2)]);
    return a;
}

// Radii of a disk mesh's rows that lie closest to a logarithmic grid on [s/8, s].
inline std::vector<double> energy_radii(double s, int n_r, int count = 10) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        double r = s * std::pow(8.0, -1.0 + static_cast<double>(i) / (count - 1));
        int row = std::clamp(static_cast<int>(std::lround(r / s * n_r)), 1, n_r);
        double rr = s * row / n_r;
        if (out.empty() || rr > out.back()) out.push_back(rr);
    }
    return out;
}

struct ScherkOptions {
    int n_r = 192;
    int n_theta = 256;
    SolveOptions solve;
    int n_min = -14, n_max = 10;
};

inline ScherkRun solve_scherk(int k, double s, const ScherkOptions& opt = {}) {
    check_even_k(k);
    if (opt.n_theta % (2 * k) != 0) throw InvalidParameter("n_theta must be a multiple of 2k");
    ScherkRun R;
    R.k = k;
    R.s = s;
    R.mesh = build_disk(s, opt.n_r, opt.n_theta);
    const GluedMesh& M = R.mesh;
    auto [st, rep] = solve(M, scherk_initial(M, k, s), opt.solve);
    R.state = std::move(st);
    R.report = rep;
    if (!rep.converged) throw NonConvergence("scherk solve did not converge: " + rep.message);

    Stencils S(M);
    auto F = hopf(S, R.state.u);
    R.spectrum = laurent(M, F, s / 2, opt.n_min, opt.n_max);
    R.residual = holomorphic_residual(S, F, [&](cplx z) { return std::abs(z) <= 0.75 * s; });
    R.image_area = image_area(M, R.state.u);
    auto E = energy_decomposition(S, R.state.u);
    R.jacobian_area = integrate(M, E.J);
    for (double r : energy_radii(s, opt.n_r)) R.energy_table.push_back({r, energy(M, R.state, Region::disk(r))});
    return R;
}

struct GrowthFit {
    double exponent = 0;
    double stderr_ = 0;
};

// Least-squares slope of log E against log r over the outer half of the table.
inline GrowthFit energy_growth_fit(const std::vector<EnergyRow>& table) {
    if (table.size() < 5) throw InvalidParameter("energy table needs at least 5 radii");
    std::vector<double> X, Y;
    for (size_t i = table.size() / 2; i < table.size(); ++i) {
        if (!(table[i].energy > 0) || !(table[i].r > 0)) throw InvalidParameter("energy table entries must be positive");
        X.push_back(std::log(table[i].r));
        Y.push_back(std::log(table[i].energy));
    }
    const double n = static_cast<double>(X.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < X.size(); ++i) {
        mx += X[i] / n;
        my += Y[i] / n;
    }
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < X.size(); ++i) {
        sxx += sqr(X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
    }
    GrowthFit g;
    g.exponent = sxy / sxx;
    double res = 0;
    for (size_t i = 0; i < X.size(); ++i) res += sqr(Y[i] - my - g.exponent * (X[i] - mx));
    g.stderr_ = X.size() > 2 ? std::sqrt(res / (n - 2) / sxx) : 0.0;
    return g;
}

inline GrowthFit energy_growth_fit(const ScherkRun& run) { return energy_growth_fit(run.energy_table); }

// ----------------------------------------------------------------------------
// vortex equation  Lap W = e^{2W} - |Phi|^2 e^{-2W}
// ----------------------------------------------------------------------------

struct VortexField {
    GluedMesh mesh;
    std::vector<double> W;
    double residual_sup = 0;
    int iterations = 0;
    std::vector<double> trace; // residual per Newton step
};

struct VortexOptions {
    int n_r = 192;
    int n_theta = 256;
    double coeff = 1.0; // |Phi| = coeff |z|^{k-2}
    double tol = 1e-8;
    int max_iter = 100;
};

namespace detail {

inline std::vector<double> vortex_residual(const GluedMesh& M, const std::vector<double>& W,
                                           const std::vector<double>& phi2) {
    std::vector<double> L(M.n_classes, 0.0);
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t)
        for (int i = 0; i < 3; ++i) {
            int a = M.tri_cls(t, (i + 1) % 3), b = M.tri_cls(t, (i + 2) % 3);
            double w = 0.5 * M.cotw[t][i];
            L[a] += w * (W[b] - W[a]);
            L[b] += w * (W[a] - W[b]);
        }
    std::vector<double> r(M.n_classes, 0.0);
    for (int c = 0; c < M.n_classes; ++c) {
        if (M.is_dirichlet(c)) continue;
        r[c] = L[c] / M.dual_z[c] - (std::exp(2 * W[c]) - phi2[c] * std::exp(-2 * W[c]));
    }
    return r;
}

} // namespace detail

inline VortexField vortex_solve_on(const GluedMesh& M, int k, const VortexOptions& opt) {
    VortexField V;
    V.mesh = M;
    const int n = M.n_classes;
    std::vector<double> phi2(n);
    V.W.assign(n, 0.0);
    for (int c = 0; c < n; ++c) {
        double a = opt.coeff * std::pow(std::abs(M.zc(c)), k - 2);
        phi2[c] = a * a;
        if (M.is_dirichlet(c)) V.W[c] = 0.5 * std::log(a);
    }
    // start from the boundary mean plus the balance level where it is finite
    for (int c = 0; c < n; ++c)
        if (!M.is_dirichlet(c)) V.W[c] = phi2[c] > 0 ? 0.25 * std::log(phi2[c]) : 0.0;
    std::vector<int> idx(n, -1);
    int m = 0;
    for (int c = 0; c < n; ++c)
        if (!M.is_dirichlet(c)) idx[c] = m++;
    auto sup = [&](const std::vector<double>& r) {
        double s = 0;
        for (double v : r) s = std::max(s, std::abs(v));
        return s;
    };
    auto res = detail::vortex_residual(M, V.W, phi2);
    double rs = sup(res);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    for (int it = 0; it < opt.max_iter && rs > opt.tol; ++it) {
        // Newton on the scaled system  -A W + D (f(W)) = 0, symmetric positive definite
        std::vector<Eigen::Triplet<double>> T;
        Eigen::VectorXd rhs(m);
        for (int t = 0; t < static_cast<int>(M.tris.size()); ++t)
            for (int i = 0; i < 3; ++i) {
                int a = M.tri_cls(t, (i + 1) % 3), b = M.tri_cls(t, (i + 2) % 3);
                double w = 0.5 * M.cotw[t][i];
                if (idx[a] >= 0) T.emplace_back(idx[a], idx[a], w);
                if (idx[b] >= 0) T.emplace_back(idx[b], idx[b], w);
                if (idx[a] >= 0 && idx[b] >= 0) {
                    T.emplace_back(idx[a], idx[b], -w);
                    T.emplace_back(idx[b], idx[a], -w);
                }
            }
        for (int c = 0; c < n; ++c) {
            if (idx[c] < 0) continue;
            double fp = 2 * std::exp(2 * V.W[c]) + 2 * phi2[c] * std::exp(-2 * V.W[c]);
            T.emplace_back(idx[c], idx[c], M.dual_z[c] * fp);
            rhs(idx[c]) = M.dual_z[c] * res[c];
        }
        Eigen::SparseMatrix<double> A(m, m);
        A.setFromTriplets(T.begin(), T.end());
        if (!analyzed) {
            ldlt.analyzePattern(A);
            analyzed = true;
        }
        ldlt.factorize(A);
        if (ldlt.info() != Eigen::Success) throw NonConvergence("vortex: factorization failed");
        Eigen::VectorXd d = ldlt.solve(rhs);
        double step = 1.0;
        for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
            auto W2 = V.W;
            for (int c = 0; c < n; ++c)
                if (idx[c] >= 0) W2[c] += step * d(idx[c]);
            auto r2 = detail::vortex_residual(M, W2, phi2);
            double s2 = sup(r2);
            if (s2 < rs || ls == 29) {
                V.W = std::move(W2);
                res = std::move(r2);
                rs = s2;
                break;
            }
        }
        V.trace.push_back(rs);
        V.iterations = it + 1;
    }
    V.residual_sup = rs;
    if (rs > opt.tol) throw NonConvergence("vortex Newton did not reach tolerance (residual " + std::to_string(rs) + ")");
    return V;
}

inline VortexField vortex_solve(int k, double s, const VortexOptions& opt = {}) {
    check_even_k(k);
    return vortex_solve_on(build_disk(s, opt.n_r, opt.n_theta), k, opt);
}

// sup over |z| <= r of |W - (1/2) log H| for a map on the same mesh.
inline double vortex_cross_check(const VortexField& V, const std::vector<double>& H, double r) {
    double worst = 0;
    for (int c = 0; c < V.mesh.n_classes; ++c) {
        if (std::abs(V.mesh.zc(c)) > r + 1e-12) continue;
        worst = std::max(worst, std::abs(V.W[c] - 0.5 * std::log(H[c])));
    }
    return worst;
}

} // namespace hml
