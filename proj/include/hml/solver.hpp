#pragma once

// Discrete harmonic maps into the Poincare disk.
//
// Energy of a piecewise-linear map: per triangle, 1/4 sum_e cot * rho(edge midpoint) * |du_e|^2.
// Evaluating rho at edge midpoints (rather than once per triangle) keeps the discrete
// Euler-Lagrange equation pointwise consistent on meshes with alternating diagonals.
// The solver minimizes it over interior and free classes with a damped Newton method
// (exact Hessian, Levenberg-Marquardt shift, energy line search) or a tension flow.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <chrono>
#include <cstdio>
#include <limits>
#include <random>
#include <vector>

#include "hyperbolic.hpp"
#include "mesh.hpp"
#include "stencil.hpp"

namespace hml {

struct MapState {
    std::vector<cplx> u; // per vertex class
};

inline void check_state(const GluedMesh& M, const MapState& s) {
    if (static_cast<int>(s.u.size()) != M.n_classes) throw InvalidParameter("map state size does not match mesh");
    for (cplx z : s.u)
        if (!(std::abs(z) < 1.0)) throw DomainError("map value outside the open disk");
}

// ----------------------------------------------------------------------------
// energy
// ----------------------------------------------------------------------------

inline double triangle_energy(const GluedMesh& M, int t, const std::vector<cplx>& u) {
    const auto& ct = M.cotw[t];
    double E = 0;
    for (int c = 0; c < 3; ++c) {
        cplx a = u[M.tri_cls(t, (c + 1) % 3)], b = u[M.tri_cls(t, (c + 2) % 3)];
        E += ct[c] * rho(0.5 * (a + b)) * std::norm(a - b);
    }
    return 0.25 * E;
}

inline double energy(const GluedMesh& M, const std::vector<cplx>& u, const Region& R = Region::everything()) {
    double E = 0;
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t)
        if (M.tri_in(t, R)) E += triangle_energy(M, t, u);
    return E;
}

inline double energy(const GluedMesh& M, const MapState& s, const Region& R = Region::everything()) {
    return energy(M, s.u, R);
}

// Gradient of the energy with respect to (Re u_i, Im u_i), packed as a complex number.
inline std::vector<cplx> energy_gradient(const GluedMesh& M, const std::vector<cplx>& u) {
    std::vector<cplx> g(M.n_classes, 0.0);
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t) {
        const auto& ct = M.cotw[t];
        for (int c = 0; c < 3; ++c) {
            int ka = M.tri_cls(t, (c + 1) % 3), kb = M.tri_cls(t, (c + 2) % 3);
            cplx d = u[ka] - u[kb], m = 0.5 * (u[ka] + u[kb]);
            double q = one_minus_abs2(m);
            double r = 4.0 / (q * q);
            cplx grho = r * 4.0 * m / q;
            double w = 0.25 * ct[c];
            cplx common = w * std::norm(d) * 0.5 * grho;
            g[ka] += w * 2.0 * r * d + common;
            g[kb] += -w * 2.0 * r * d + common;
        }
    }
    return g;
}

// Variational tension: minus the energy gradient over 4 rho A (A = dual area in z units).
// Inside the core of a doubled annulus A is measured in the reflected coordinate 1/conj(z).
inline std::vector<cplx> variational_tension(const GluedMesh& M, const std::vector<cplx>& u,
                                             const std::vector<cplx>* grad = nullptr) {
    std::vector<cplx> g = grad ? *grad : energy_gradient(M, u);
    std::vector<cplx> tau(M.n_classes, 0.0);
    for (int c = 0; c < M.n_classes; ++c) {
        if (M.is_dirichlet(c) || M.dual_z[c] <= 0) continue;
        double A = M.dual_z[c];
        if (M.inversion_sym) {
            double a2 = std::norm(M.zc(c));
            if (a2 < 1) A /= a2 * a2;
        }
        tau[c] = -g[c] / (4.0 * rho(u[c]) * A);
    }
    return tau;
}

// sup over non-dirichlet classes of the hyperbolic norm sqrt(rho) |tau|
inline double tension_sup(const GluedMesh& M, const std::vector<cplx>& u, const std::vector<cplx>& tau) {
    double s = 0;
    for (int c = 0; c < M.n_classes; ++c)
        if (!M.is_dirichlet(c)) s = std::max(s, std::sqrt(rho(u[c])) * std::abs(tau[c]));
    return s;
}

// Pointwise tension tau = u_{z zbar} + (log rho)_zeta u_z u_zbar from the fitted stencils.
struct TensionField {
    std::vector<cplx> tau;
    std::vector<std::uint8_t> flag;
};

inline TensionField tension(const Stencils& S, const std::vector<cplx>& u) {
    const GluedMesh& M = S.mesh();
    TensionField T{std::vector<cplx>(M.n_classes, 0.0), std::vector<std::uint8_t>(M.n_classes, 0)};
    for (int c = 0; c < M.n_classes; ++c) {
        T.flag[c] = S.flag(c);
        if (M.is_dirichlet(c)) continue;
        ZDerivs d = S.zderiv(c, u);
        T.tau[c] = d.dzzb + dlogrho(u[c]) * d.dz * d.dzb;
    }
    return T;
}

// ----------------------------------------------------------------------------
// energy densities
// ----------------------------------------------------------------------------

struct EnergyDensityField {
    std::vector<double> H, L, e, J;
    std::vector<cplx> phi;
    std::vector<std::uint8_t> flag;
};

inline EnergyDensityField energy_decomposition(const Stencils& S, const std::vector<cplx>& u) {
    const GluedMesh& M = S.mesh();
    const int n = M.n_classes;
    EnergyDensityField F;
    F.H.resize(n);
    F.L.resize(n);
    F.e.resize(n);
    F.J.resize(n);
    F.phi.resize(n);
    F.flag.resize(n);
    for (int c = 0; c < n; ++c) {
        ZDerivs d = S.zderiv(c, u);
        double r = rho(u[c]);
        F.H[c] = r * std::norm(d.dz);
        F.L[c] = r * std::norm(d.dzb);
        F.e[c] = F.H[c] + F.L[c];
        F.J[c] = F.H[c] - F.L[c];
        F.phi[c] = r * d.dz * std::conj(d.dzb);
        F.flag[c] = S.flag(c);
    }
    return F;
}

// Lumped integral of a per-class density over z-area.
inline double integrate(const GluedMesh& M, const std::vector<double>& f, const Region& R = Region::everything()) {
    double s = 0;
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t) {
        if (!M.tri_in(t, R)) continue;
        s += M.area_z[t] / 3.0 * (f[M.tri_cls(t, 0)] + f[M.tri_cls(t, 1)] + f[M.tri_cls(t, 2)]);
    }
    return s;
}

// ----------------------------------------------------------------------------
// solve
// ----------------------------------------------------------------------------

enum class Scheme { flow, newton };

struct SolveOptions {
    double tol = 1e-8;
    int max_iter = 200;
    Scheme scheme = Scheme::newton;
    bool verbose = false;
};

struct TraceRow {
    int iter = 0;
    double energy = 0;
    double tension_sup = 0;
    double dt = 0;
};

struct SolveReport {
    int iterations = 0;
    double tension_sup = 0;
    std::vector<TraceRow> trace;
    bool converged = false;
    int clamp_events = 0;
    std::string message;
};

namespace detail {

constexpr double disk_clamp = 1.0 - 1e-12;

inline void assemble_hessian(const GluedMesh& M, const std::vector<cplx>& u, const std::vector<int>& idx,
                             std::vector<Eigen::Triplet<double>>& trip) {
    trip.clear();
    trip.reserve(M.tris.size() * 3 * 16);
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t) {
        const auto& ct = M.cotw[t];
        for (int c = 0; c < 3; ++c) {
            int k[2] = {M.tri_cls(t, (c + 1) % 3), M.tri_cls(t, (c + 2) % 3)};
            if (idx[k[0]] < 0 && idx[k[1]] < 0) continue;
            cplx dz = u[k[0]] - u[k[1]], m = 0.5 * (u[k[0]] + u[k[1]]);
            double q = one_minus_abs2(m);
            double r = 4.0 / (q * q);
            double gr[2] = {r * 4.0 * m.real() / q, r * 4.0 * m.imag() / q};
            double h0 = 16.0 / (q * q * q);
            double hr[2][2] = {{h0 * (1 + 6 * m.real() * m.real() / q), h0 * 6 * m.real() * m.imag() / q},
                               {h0 * 6 * m.real() * m.imag() / q, h0 * (1 + 6 * m.imag() * m.imag() / q)}};
            double d[2] = {dz.real(), dz.imag()};
            double d2 = std::norm(dz);
            double w = 0.25 * ct[c];
            // f = rho(m) |d|^2 with d = u_a - u_b, m = (u_a + u_b) / 2
            for (int i = 0; i < 2; ++i) {
                if (idx[k[i]] < 0) continue;
                double si = i == 0 ? 1.0 : -1.0;
                for (int j = 0; j < 2; ++j) {
                    if (idx[k[j]] < 0) continue;
                    double sj = j == 0 ? 1.0 : -1.0;
                    for (int p = 0; p < 2; ++p)
                        for (int s = 0; s < 2; ++s) {
                            double val = 2.0 * r * si * sj * (p == s ? 1.0 : 0.0) + si * d[p] * gr[s] +
                                         sj * gr[p] * d[s] + 0.25 * d2 * hr[p][s];
                            trip.emplace_back(2 * idx[k[i]] + p, 2 * idx[k[j]] + s, w * val);
                        }
                }
            }
        }
    }
}

} // namespace detail

inline std::pair<MapState, SolveReport> solve(const GluedMesh& M, const MapState& u0, const SolveOptions& opt = {}) {
    check_state(M, u0);
    SolveReport rep;
    std::vector<cplx> u = u0.u;
    std::vector<int> idx(M.n_classes, -1);
    int nf = 0;
    for (int c = 0; c < M.n_classes; ++c)
        if (!M.is_dirichlet(c)) idx[c] = nf++;

    auto record = [&](int it, double E, double ts, double dt) {
        rep.trace.push_back({it, E, ts, dt});
        if (opt.verbose) std::fprintf(stderr, "iter %d  E=%.15g  |tau|=%.3e  dt=%.3e\n", it, E, ts, dt);
    };

    double E = energy(M, u);
    std::vector<cplx> g = energy_gradient(M, u);
    double ts = tension_sup(M, u, variational_tension(M, u, &g));
    record(0, E, ts, 0.0);
    if (nf == 0 || ts < opt.tol) {
        rep.converged = true;
        rep.tension_sup = ts;
        return {MapState{u}, rep};
    }

    if (opt.scheme == Scheme::flow) {
        double hmin = std::numeric_limits<double>::max();
        for (int c = 0; c < M.n_classes; ++c)
            if (M.hloc[c] > 0) hmin = std::min(hmin, M.hloc[c]);
        double dt = 0.5 * hmin * hmin;
        for (int it = 1; it <= opt.max_iter; ++it) {
            auto tau = variational_tension(M, u, &g);
            std::vector<cplx> un;
            double En = 0;
            for (;;) {
                un = u;
                bool clamped = false;
                for (int c = 0; c < M.n_classes; ++c) {
                    if (idx[c] < 0) continue;
                    un[c] = exp_map(u[c], dt * tau[c]);
                    if (std::abs(un[c]) > detail::disk_clamp) {
                        un[c] *= detail::disk_clamp / std::abs(un[c]);
                        clamped = true;
                    }
                }
                rep.clamp_events += clamped;
                En = energy(M, un);
                if (En < E - 1e-13 * std::abs(E)) break;
                if (En <= E + 1e-13 * std::max(1.0, std::abs(E))) {
                    // below energy resolution: require the tension to drop as well
                    auto gn = energy_gradient(M, un);
                    if (tension_sup(M, un, variational_tension(M, un, &gn)) < ts) break;
                }
                dt *= 0.5;
                if (dt < 1e-300) throw NonConvergence("flow step underflow");
            }
            u.swap(un);
            E = En;
            g = energy_gradient(M, u);
            ts = tension_sup(M, u, variational_tension(M, u, &g));
            rep.iterations = it;
            record(it, E, ts, dt);
            dt *= 1.2;
            if (ts < opt.tol) {
                rep.converged = true;
                break;
            }
        }
        rep.tension_sup = ts;
        if (!rep.converged) rep.message = "max_iter reached";
        return {MapState{u}, rep};
    }

    // damped Newton
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::SparseMatrix<double> H(2 * nf, 2 * nf);
    double mu = 0.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        detail::assemble_hessian(M, u, idx, trip);
        H.setFromTriplets(trip.begin(), trip.end());
        Eigen::VectorXd diag = H.diagonal();
        double dscale = diag.cwiseAbs().mean();
        Eigen::VectorXd rhs(2 * nf);
        for (int c = 0; c < M.n_classes; ++c)
            if (idx[c] >= 0) {
                rhs(2 * idx[c]) = -g[c].real();
                rhs(2 * idx[c] + 1) = -g[c].imag();
            }
        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
            Eigen::SparseMatrix<double> A = H;
            if (mu > 0)
                for (int i = 0; i < 2 * nf; ++i) A.coeffRef(i, i) += mu * dscale;
            if (!analyzed) {
                ldlt.analyzePattern(A);
                analyzed = true;
            }
            ldlt.factorize(A);
            bool ok = ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0).all();
            Eigen::VectorXd d;
            if (ok) {
                d = ldlt.solve(rhs);
                ok = d.allFinite() && d.dot(rhs) > 0;
            }
            if (!ok) {
                mu = std::max(mu * 4.0, 1e-8);
                continue;
            }
            double slope = -d.dot(rhs);
            double alpha = 1.0;
            while (alpha > 1e-12) {
                std::vector<cplx> un = u;
                bool outside = false;
                for (int c = 0; c < M.n_classes; ++c) {
                    if (idx[c] < 0) continue;
                    un[c] += alpha * cplx(d(2 * idx[c]), d(2 * idx[c] + 1));
                    if (!(std::abs(un[c]) < detail::disk_clamp)) outside = true;
                }
                if (outside) {
                    ++rep.clamp_events;
                    alpha *= 0.5;
                    continue;
                }
                double En = energy(M, un);
                bool armijo = En <= E + 1e-4 * alpha * slope;
                bool flat = false;
                std::vector<cplx> gn;
                double tsn = 0;
                if (!armijo && En <= E + 1e-12 * std::max(1.0, std::abs(E))) {
                    // energy resolution exhausted: accept if the tension drops
                    gn = energy_gradient(M, un);
                    tsn = tension_sup(M, un, variational_tension(M, un, &gn));
                    flat = tsn < ts;
                }
                if (armijo || flat) {
                    u.swap(un);
                    E = En;
                    g = flat ? gn : energy_gradient(M, u);
                    ts = flat ? tsn : tension_sup(M, u, variational_tension(M, u, &g));
                    accepted = true;
                    if (alpha == 1.0) mu = mu > 1e-8 ? mu / 4.0 : 0.0;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) mu = std::max(mu * 4.0, 1e-8);
            rep.iterations = it;
            if (accepted) record(it, E, ts, alpha);
        }
        if (!accepted) {
            rep.message = "line search failed";
            break;
        }
        if (ts < opt.tol) {
            rep.converged = true;
            break;
        }
        // tension not halving while the energy no longer moves: the roundoff floor
        const auto& tr = rep.trace;
        if (tr.size() > 6 && ts > 0.5 * tr[tr.size() - 6].tension_sup &&
            std::abs(E - tr[tr.size() - 6].energy) <= 1e-12 * std::max(1.0, std::abs(E))) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "stagnated at tension %.3e (roundoff floor)", ts);
            rep.message = buf;
            break;
        }
    }
    rep.tension_sup = ts;
    if (!rep.converged && rep.message.empty()) rep.message = "max_iter reached";
    return {MapState{u}, rep};
}

// ----------------------------------------------------------------------------
// stability and uniqueness probes
// ----------------------------------------------------------------------------

// Deterministic uniform double in [0, 1) from 53 random bits.
inline double unit_uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

struct ProbeResult {
    MapState state;
    double sup_distance = 0;
    SolveReport report;
};

inline ProbeResult stability_probe(const GluedMesh& M, const MapState& uh, double magnitude, std::uint64_t seed,
                                   const SolveOptions& opt = {}) {
    if (magnitude < 0) throw InvalidParameter("magnitude must be nonnegative");
    std::mt19937_64 g(seed);
    MapState p = uh;
    if (magnitude > 0)
        for (int c = 0; c < M.n_classes; ++c) {
            if (M.is_dirichlet(c)) continue;
            double len = magnitude * unit_uniform(g);
            double ang = 2 * pi * unit_uniform(g);
            p.u[c] = exp_map(uh.u[c], std::polar(len / std::sqrt(rho(uh.u[c])), ang));
        }
    auto [s, rep] = solve(M, p, opt);
    double d = 0;
    for (int c = 0; c < M.n_classes; ++c) d = std::max(d, dist(s.u[c], uh.u[c]));
    return {s, d, rep};
}

// Q = cosh(d(u, v)) - 1 and its cotangent Laplacian (dual-area normalization).
inline std::vector<double> q_laplacian(const GluedMesh& M, const std::vector<cplx>& u, const std::vector<cplx>& v) {
    std::vector<double> Q(M.n_classes), L(M.n_classes, 0.0);
    for (int c = 0; c < M.n_classes; ++c) Q[c] = std::cosh(dist(u[c], v[c])) - 1.0;
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t)
        for (int i = 0; i < 3; ++i) {
            int a = M.tri_cls(t, (i + 1) % 3), b = M.tri_cls(t, (i + 2) % 3);
            double w = 0.5 * M.cotw[t][i];
            L[a] += w * (Q[b] - Q[a]);
            L[b] += w * (Q[a] - Q[b]);
        }
    for (int c = 0; c < M.n_classes; ++c) L[c] = M.dual_z[c] > 0 ? L[c] / M.dual_z[c] : 0.0;
    return L;
}

inline double q_subharmonicity(const GluedMesh& M, const MapState& u, const MapState& v) {
    auto L = q_laplacian(M, u.u, v.u);
    double worst = std::numeric_limits<double>::infinity();
    bool any = false;
    for (int c = 0; c < M.n_classes; ++c) {
        if (M.marker[c] != Marker::interior || (M.tags[c] & tag_cone)) continue;
        worst = std::min(worst, L[c]);
        any = true;
    }
    return any ? worst : 0.0;
}

struct MaxPrinciple {
    double interior_max = 0, boundary_max = 0;
};

inline MaxPrinciple max_principle(const GluedMesh& M, const MapState& u, cplx p = 0.0) {
    MaxPrinciple r;
    for (int c = 0; c < M.n_classes; ++c) {
        double d = dist(u.u[c], p);
        if (M.is_dirichlet(c))
            r.boundary_max = std::max(r.boundary_max, d);
        else
            r.interior_max = std::max(r.interior_max, d);
    }
    return r;
}

} // namespace hml
