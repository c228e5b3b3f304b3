#pragma once

// Point location in the chart plane: bucket grid over triangle bounding boxes.

#include <optional>
#include <vector>

#include "mesh.hpp"

namespace hml {

struct Location {
    int tri = -1;
    std::array<double, 3> bary{};
};

class Locator {
public:
    explicit Locator(const GluedMesh& M, int target_per_bucket = 4) : M_(&M) {
        const int nt = static_cast<int>(M.tris.size());
        x0_ = y0_ = 1e300;
        double x1 = -1e300, y1 = -1e300;
        for (const auto& c : M.copies) {
            x0_ = std::min(x0_, c.z.real());
            y0_ = std::min(y0_, c.z.imag());
            x1 = std::max(x1, c.z.real());
            y1 = std::max(y1, c.z.imag());
        }
        int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(nt) / target_per_bucket)));
        nx_ = ny_ = side;
        dx_ = (x1 - x0_) / nx_ * (1 + 1e-12) + 1e-300;
        dy_ = (y1 - y0_) / ny_ * (1 + 1e-12) + 1e-300;
        buckets_.assign(static_cast<size_t>(nx_) * ny_, {});
        for (int t = 0; t < nt; ++t) {
            double bx0 = 1e300, by0 = 1e300, bx1 = -1e300, by1 = -1e300;
            for (int c = 0; c < 3; ++c) {
                cplx z = M.copies[M.tris[t].v[c]].z;
                bx0 = std::min(bx0, z.real());
                by0 = std::min(by0, z.imag());
                bx1 = std::max(bx1, z.real());
                by1 = std::max(by1, z.imag());
            }
            for (int i = cell_x(bx0); i <= cell_x(bx1); ++i)
                for (int j = cell_y(by0); j <= cell_y(by1); ++j) buckets_[static_cast<size_t>(j) * nx_ + i].push_back(t);
        }
    }

    std::optional<Location> locate(cplx z, double tol = 1e-12) const {
        int i = cell_x(z.real()), j = cell_y(z.imag());
        if (z.real() < x0_ - dx_ || z.imag() < y0_ - dy_ || i < 0 || j < 0 || i >= nx_ || j >= ny_) return std::nullopt;
        std::optional<Location> best;
        double best_min = -1e300;
        for (int t : buckets_[static_cast<size_t>(j) * nx_ + i]) {
            auto b = bary(t, z);
            double mn = std::min({b[0], b[1], b[2]});
            if (mn >= -tol && mn > best_min) {
                best_min = mn;
                best = Location{t, b};
            }
        }
        return best;
    }

    template <class T>
    std::optional<T> interpolate(const std::vector<T>& f, cplx z) const {
        auto L = locate(z);
        if (!L) return std::nullopt;
        T v{};
        for (int c = 0; c < 3; ++c) v += L->bary[c] * f[M_->tri_cls(L->tri, c)];
        return v;
    }

private:
    const GluedMesh* M_;
    double x0_, y0_, dx_, dy_;
    int nx_, ny_;
    std::vector<std::vector<int>> buckets_;

    int cell_x(double x) const { return std::clamp(static_cast<int>((x - x0_) / dx_), 0, nx_ - 1); }
    int cell_y(double y) const { return std::clamp(static_cast<int>((y - y0_) / dy_), 0, ny_ - 1); }

    std::array<double, 3> bary(int t, cplx z) const {
        cplx a = M_->copies[M_->tris[t].v[0]].z, b = M_->copies[M_->tris[t].v[1]].z, c = M_->copies[M_->tris[t].v[2]].z;
        double det = std::imag(std::conj(b - a) * (c - a));
        double l1 = std::imag(std::conj(z - a) * (c - a)) / det;
        double l2 = std::imag(std::conj(b - a) * (z - a)) / det;
        return {1.0 - l1 - l2, l1, l2};
    }
};

} // namespace hml
