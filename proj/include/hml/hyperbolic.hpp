#pragma once

// Poincare disk geometry. Metric rho(z)|dz|^2 with rho = 4/(1-|z|^2)^2.

#include <array>
#include <cmath>
#include <vector>

#include "common.hpp"

namespace hml {

inline constexpr double target_curvature = -1.0;

// 1 - |z|^2 without cancellation near the ideal boundary.
inline double one_minus_abs2(cplx z) {
    double r = std::abs(z);
    return (1.0 - r) * (1.0 + r);
}

struct HPoint {
    cplx zeta{};

    HPoint() = default;
    explicit HPoint(cplx z) : zeta(z) {
        if (!(std::abs(z) < 1.0)) throw DomainError("HPoint outside the open disk");
    }
};

struct IdealPoint {
    cplx zeta{1.0, 0.0};

    IdealPoint() = default;
    explicit IdealPoint(cplx z) : zeta(z) {
        if (std::abs(std::abs(z) - 1.0) > 1e-12) throw DomainError("IdealPoint off the unit circle");
    }
};

inline double rho(cplx z) {
    double q = one_minus_abs2(z);
    return 4.0 / (q * q);
}

inline double conformal_factor(HPoint p) { return rho(p.zeta); }

inline double conformal_factor(cplx z) {
    if (!(std::abs(z) < 1.0)) throw DomainError("conformal_factor: |zeta| >= 1");
    return rho(z);
}

// (log rho)_zeta = 2 conj(z) / (1 - |z|^2)
inline cplx dlogrho(cplx z) { return 2.0 * std::conj(z) / one_minus_abs2(z); }

inline double dist(cplx a, cplx b) {
    if (!(std::abs(a) < 1.0) || !(std::abs(b) < 1.0)) throw DomainError("dist: point outside the open disk");
    double num = std::abs(a - b);
    double den = std::sqrt(one_minus_abs2(a) * one_minus_abs2(b));
    return 2.0 * std::asinh(num / den);
}

inline double dist(HPoint a, HPoint b) { return dist(a.zeta, b.zeta); }

// Disk automorphism sending 0 to a.
inline cplx mobius_from_origin(cplx a, cplx z) { return (z + a) / (1.0 + std::conj(a) * z); }
inline cplx mobius_to_origin(cplx a, cplx z) { return (z - a) / (1.0 - std::conj(a) * z); }

// Point at hyperbolic distance d from the origin in direction u (|u| = 1).
inline cplx from_origin(cplx dir, double d) { return std::tanh(0.5 * d) * dir; }

// Exponential map at p applied to a Euclidean tangent vector v (disk coordinates).
inline cplx exp_map(cplx p, cplx v) {
    double len = std::abs(v);
    if (len == 0.0) return p;
    double hl = len * std::sqrt(rho(p));
    // at the origin rho = 4, so the Euclidean direction is unchanged under pullback
    cplx w = std::tanh(0.5 * hl) * (v / len);
    return mobius_from_origin(p, w);
}

// Tangent vector at p pointing to q with hyperbolic length dist(p, q).
inline cplx log_map(cplx p, cplx q) {
    cplx w = mobius_to_origin(p, q);
    double r = std::abs(w);
    if (r == 0.0) return {0.0, 0.0};
    double d = 2.0 * std::atanh(r);
    // derivative of mobius_from_origin at 0 is (1 - |p|^2)
    return (w / r) * (d / std::sqrt(rho(p)));
}

// Geodesic interpolation: t = 0 gives a, t = 1 gives b.
inline cplx geodesic_point(cplx a, cplx b, double t) {
    cplx w = mobius_to_origin(a, b);
    double r = std::abs(w);
    if (r == 0.0) return a;
    double d = 2.0 * std::atanh(r);
    return mobius_from_origin(a, std::tanh(0.5 * t * d) * (w / r));
}

struct IdealPolygon {
    int k = 0;
    std::vector<IdealPoint> vertices;
};

inline void check_even_k(int k) {
    if (k < 4 || k % 2 != 0) throw InvalidParameter("k must be an even integer >= 4");
}

inline IdealPolygon polygon(int k) {
    check_even_k(k);
    IdealPolygon P;
    P.k = k;
    for (int j = 0; j < k; ++j) {
        double a = pi / k + 2.0 * pi * j / k;
        P.vertices.emplace_back(cplx(std::cos(a), std::sin(a)));
    }
    return P;
}

inline double x_axis_chord(int k) {
    check_even_k(k);
    return 1.0 / std::cos(pi / k) - std::tan(pi / k);
}

inline double origin_bound(int k) {
    check_even_k(k);
    double sc = 1.0 / std::cos(pi / k), tn = std::tan(pi / k);
    return std::log((1.0 + sc - tn) / (1.0 - sc + tn));
}

// Element of D_k: z -> e^{2 pi i j / k} * (reflect ? conj(z) : z).
struct DihedralElement {
    int k = 4;
    int j = 0;
    bool reflect = false;

    cplx operator()(cplx z) const {
        cplx w = reflect ? std::conj(z) : z;
        double a = 2.0 * pi * j / k;
        return std::polar(1.0, a) * w;
    }

    // (this o other)
    DihedralElement compose(const DihedralElement& o) const {
        DihedralElement r{k, 0, reflect != o.reflect};
        int oj = reflect ? -o.j : o.j;
        r.j = ((j + oj) % k + k) % k;
        return r;
    }
};

inline HPoint apply_symmetry(HPoint p, const DihedralElement& g) { return HPoint(g(p.zeta)); }

// Geodesic side of P_k facing direction 2 pi m / k: Euclidean circle data.
struct SideCircle {
    cplx center;
    double radius;
    cplx midpoint; // point of the side nearest O
};

inline SideCircle side_circle(int k, int m) {
    check_even_k(k);
    cplx u = std::polar(1.0, 2.0 * pi * m / k);
    double sc = 1.0 / std::cos(pi / k), tn = std::tan(pi / k);
    return {sc * u, tn, (sc - tn) * u};
}

// Point on side m at signed hyperbolic distance ell from its midpoint; positive ell moves
// counter-clockwise (towards vertex xi_m).
inline cplx side_point(int k, int m, double ell) {
    double c = x_axis_chord(k);
    // geodesic through c perpendicular to the real axis is the image of the imaginary axis
    cplx w(0.0, std::tanh(0.5 * ell));
    cplx p = (w + c) / (1.0 + c * w);
    return std::polar(1.0, 2.0 * pi * m / k) * p;
}

// Horocycle at ideal point xi passing through p: Euclidean center and radius.
inline std::pair<cplx, double> horocycle_through(cplx xi, cplx p) {
    double re = std::real(p * std::conj(xi));
    double R = std::norm(p - xi) / (2.0 * (1.0 - re));
    return {(1.0 - R) * xi, R};
}

// Hyperbolic area of the geodesic triangle with the given vertices (signed by orientation).
inline double geodesic_triangle_area(cplx a, cplx b, cplx c) {
    // move a to the origin; then sides from the origin are straight
    cplx B = mobius_to_origin(a, b), C = mobius_to_origin(a, c);
    // area = pi - angles; use the formula tan(A/2) = Im(B conj C)/(1 + ... ) for triangles at origin
    // with vertices 0, B, C: tan(area/2) = |Im(conj(B) C)| / (1 - Re(conj(B) C))
    cplx q = std::conj(B) * C;
    double ar = 2.0 * std::atan2(std::imag(q), 1.0 - std::real(q));
    return ar;
}

} // namespace hml
