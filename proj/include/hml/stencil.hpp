#pragma once

// Least-squares derivative stencils on glued meshes.
//
// For every class a cubic polynomial in the local conformal coordinate is fitted to the
// differences f_k - f_c over the 2-ring (3-ring where the 2-ring is too small). Log-polar
// classes fit in w = log z; everything else fits in z, with neighbour offsets unfolded across
// gluings by walking triangle frames.

#include <Eigen/Dense>

#include <array>
#include <unordered_map>
#include <vector>

#include "mesh.hpp"

namespace hml {

enum StencilFlag : std::uint8_t {
    sf_cone = 1,
    sf_near_cone = 2,
    sf_boundary = 4,
    sf_reduced = 8,      // fit degree lowered (rank deficient)
    sf_inconsistent = 16 // unfolding found two positions for one class
};

struct FitDerivs {
    cplx fx, fy, fxx, fxy, fyy;
};

struct ZDerivs {
    cplx dz;   // f_z
    cplx dzb;  // f_zbar
    cplx dzzb; // f_{z zbar}
};

class Stencils {
public:
    Stencils() = default;

    explicit Stencils(const GluedMesh& M) : M_(&M) {
        const int n = M.n_classes;
        start_.assign(n + 1, 0);
        flag_.assign(n, 0);
        logmode_.assign(n, false);
        jac_.assign(n, cplx(1.0, 0.0));
        mark_near_cone(M);
        for (int c = 0; c < n; ++c) {
            build_class(M, c);
            start_[c + 1] = static_cast<int>(nb_.size());
        }
    }

    const GluedMesh& mesh() const { return *M_; }
    std::uint8_t flag(int c) const { return flag_[c]; }
    bool usable(int c) const { return (flag_[c] & (sf_cone | sf_near_cone)) == 0; }
    bool log_mode(int c) const { return logmode_[c]; }
    cplx jacobian(int c) const { return jac_[c]; }
    int size(int c) const { return start_[c + 1] - start_[c]; }

    FitDerivs fit(int c, const std::vector<cplx>& f) const {
        FitDerivs d{};
        cplx fc = f[c];
        for (int k = start_[c]; k < start_[c + 1]; ++k) {
            cplx df = f[nb_[k]] - fc;
            const auto& w = wt_[k];
            d.fx += w[0] * df;
            d.fy += w[1] * df;
            d.fxx += w[2] * df;
            d.fxy += w[3] * df;
            d.fyy += w[4] * df;
        }
        return d;
    }

    ZDerivs zderiv(int c, const std::vector<cplx>& f) const {
        FitDerivs d = fit(c, f);
        cplx j = jac_[c];
        ZDerivs r;
        r.dz = 0.5 * (d.fx - cplx(0, 1) * d.fy) * j;
        r.dzb = 0.5 * (d.fx + cplx(0, 1) * d.fy) * std::conj(j);
        r.dzzb = 0.25 * (d.fxx + d.fyy) * std::norm(j);
        return r;
    }

private:
    const GluedMesh* M_ = nullptr;
    std::vector<int> start_, nb_;
    std::vector<std::array<double, 5>> wt_;
    std::vector<std::uint8_t> flag_;
    std::vector<bool> logmode_;
    std::vector<cplx> jac_;

    void mark_near_cone(const GluedMesh& M) {
        std::vector<int> depth(M.n_classes, -1);
        std::vector<int> frontier;
        for (int c = 0; c < M.n_classes; ++c)
            if (M.tags[c] & tag_cone) {
                depth[c] = 0;
                frontier.push_back(c);
                flag_[c] |= sf_cone;
            }
        for (int d = 1; d <= 4 && !frontier.empty(); ++d) {
            std::vector<int> next;
            for (int v : frontier)
                for (auto [t, cc] : M.incident[v])
                    for (int q = 0; q < 3; ++q) {
                        int w = M.tri_cls(t, q);
                        if (depth[w] < 0) {
                            depth[w] = d;
                            flag_[w] |= sf_near_cone;
                            next.push_back(w);
                        }
                    }
            frontier.swap(next);
        }
    }

    // Unfolded neighbourhood of c up to the given ring; returns false if log mode hit a plane triangle.
    bool gather(const GluedMesh& M, int c, int rings, bool logm, std::vector<std::pair<int, cplx>>& pts,
                bool& inconsistent) const {
        std::unordered_map<int, cplx> off;
        off[c] = 0.0;
        std::vector<int> frontier{c};
        pts.clear();
        const double tol = 1e-9 * std::max(M.hloc[c], 1e-12);
        for (int r = 1; r <= rings; ++r) {
            std::vector<int> next;
            for (int v : frontier) {
                if (v != c && (M.tags[v] & tag_cone)) continue;
                cplx ov = off[v];
                for (auto [t, cv] : M.incident[v]) {
                    if (logm && !M.tris[t].log) return false;
                    auto pos = [&](int q) { return logm ? M.tw[t][q] : M.copies[M.tris[t].v[q]].z; };
                    for (int q = 0; q < 3; ++q) {
                        if (q == cv) continue;
                        int w = M.tri_cls(t, q);
                        cplx ow = ov + (pos(q) - pos(cv));
                        auto it = off.find(w);
                        if (it == off.end()) {
                            off[w] = ow;
                            next.push_back(w);
                            pts.push_back({w, ow});
                        } else if (std::abs(it->second - ow) > tol * (logm ? 1.0 / std::abs(M.zc(c)) : 1.0) &&
                                   w != c) {
                            inconsistent = true;
                        }
                    }
                }
            }
            frontier.swap(next);
        }
        return true;
    }

    void build_class(const GluedMesh& M, int c) {
        if (M.marker[c] != Marker::interior) flag_[c] |= sf_boundary;
        bool logm = true;
        for (auto [t, cv] : M.incident[c]) logm = logm && M.tris[t].log;
        std::vector<std::pair<int, cplx>> pts;
        bool inconsistent = false;
        const int max_ring = (flag_[c] & sf_cone) ? 1 : 4;
        int rings = (flag_[c] & sf_cone) ? 1 : 2;
        for (;;) {
            inconsistent = false;
            if (!gather(M, c, rings, logm, pts, inconsistent)) {
                logm = false;
                continue;
            }
            if (static_cast<int>(pts.size()) >= 12 || rings >= max_ring) break;
            ++rings;
        }
        if (inconsistent) flag_[c] |= sf_inconsistent;
        logmode_[c] = logm;
        jac_[c] = logm ? 1.0 / M.zc(c) : cplx(1.0, 0.0);

        const int m = static_cast<int>(pts.size());
        double hs = 0;
        for (auto& p : pts) hs += std::norm(p.second);
        hs = std::sqrt(hs / std::max(m, 1));
        if (!(hs > 0)) hs = 1.0;

        auto basis = [&](cplx o, int nb) {
            double x = o.real() / hs, y = o.imag() / hs;
            Eigen::RowVectorXd r(nb);
            double all[9] = {x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y};
            for (int i = 0; i < nb; ++i) r(i) = all[i];
            return r;
        };
        int nb = 9;
        Eigen::MatrixXd P;
        for (int nbasis : {9, 5, 2}) {
            if (m < nbasis) continue;
            Eigen::MatrixXd A(m, nbasis);
            for (int i = 0; i < m; ++i) A.row(i) = basis(pts[i].second, nbasis);
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
            cod.setThreshold(1e-10);
            if (cod.rank() == nbasis) {
                P = cod.pseudoInverse();
                nb = nbasis;
                break;
            }
        }
        if (nb < 9) flag_[c] |= sf_reduced;
        for (int i = 0; i < m; ++i) {
            std::array<double, 5> w{0, 0, 0, 0, 0};
            if (P.size() > 0) {
                w[0] = P(0, i) / hs;
                w[1] = P(1, i) / hs;
                if (nb >= 5) {
                    w[2] = 2.0 * P(2, i) / (hs * hs);
                    w[3] = P(3, i) / (hs * hs);
                    w[4] = 2.0 * P(4, i) / (hs * hs);
                }
            }
            nb_.push_back(pts[i].first);
            wt_.push_back(w);
        }
    }
};

} // namespace hml
