#pragma once

// Static SVG figures: image meshes in the disk, foliations, divisors, energy growth.

#include <sstream>

#include "hopf.hpp"

namespace hml::svg {

// World window [x0, x1] x [y0, y1] mapped to a size x size picture, y up.
class Canvas {
public:
    Canvas(double x0, double x1, double y0, double y1, int size = 800) : x0_(x0), y1_(y1), size_(size) {
        scale_ = size / std::max(x1 - x0, y1 - y0);
    }

    double X(double x) const { return (x - x0_) * scale_; }
    double Y(double y) const { return (y1_ - y) * scale_; }
    double scale() const { return scale_; }

    void line(cplx a, cplx b, const std::string& style) {
        body_ << "<line x1=\"" << X(a.real()) << "\" y1=\"" << Y(a.imag()) << "\" x2=\"" << X(b.real()) << "\" y2=\""
              << Y(b.imag()) << "\" style=\"" << style << "\"/>\n";
    }
    void polyline(const std::vector<cplx>& p, const std::string& style) {
        if (p.size() < 2) return;
        body_ << "<polyline fill=\"none\" style=\"" << style << "\" points=\"";
        for (cplx z : p) body_ << X(z.real()) << ',' << Y(z.imag()) << ' ';
        body_ << "\"/>\n";
    }
    void circle(cplx c, double r, const std::string& style) {
        body_ << "<circle cx=\"" << X(c.real()) << "\" cy=\"" << Y(c.imag()) << "\" r=\"" << r * scale_
              << "\" style=\"" << style << "\"/>\n";
    }
    void dot(cplx c, double px, const std::string& style, const std::string& cls = "") {
        body_ << "<circle" << (cls.empty() ? "" : " class=\"" + cls + "\"") << " cx=\"" << X(c.real()) << "\" cy=\""
              << Y(c.imag()) << "\" r=\"" << px << "\" style=\"" << style << "\"/>\n";
    }
    // Circular arc from a to b with the given radius, sweep per SVG conventions.
    void arc(cplx a, cplx b, double r, bool sweep, const std::string& style) {
        body_ << "<path fill=\"none\" style=\"" << style << "\" d=\"M " << X(a.real()) << ' ' << Y(a.imag()) << " A "
              << r * scale_ << ' ' << r * scale_ << " 0 0 " << (sweep ? 1 : 0) << ' ' << X(b.real()) << ' '
              << Y(b.imag()) << "\"/>\n";
    }
    void text(cplx at, const std::string& s, int px = 14) {
        body_ << "<text x=\"" << X(at.real()) << "\" y=\"" << Y(at.imag()) << "\" font-size=\"" << px
              << "\" font-family=\"sans-serif\">" << s << "</text>\n";
    }

    std::string str(const std::string& title, const std::string& transform_note) const {
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size_ << "\" height=\"" << size_ << "\">\n";
        os << "<title>" << title << "</title>\n";
        os << "<metadata>" << transform_note << "; svg_x = (x - " << x0_ << ") * " << scale_ << ", svg_y = (" << y1_
           << " - y) * " << scale_ << "</metadata>\n";
        os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" << body_.str() << "</svg>\n";
        return os.str();
    }

private:
    double x0_, y1_, scale_;
    int size_;
    std::ostringstream body_;
};

// Geodesic between ideal points a, b (|a| = |b| = 1, not antipodal).
inline void ideal_side(Canvas& C, cplx a, cplx b, const std::string& style) {
    double half = 0.5 * std::abs(std::arg(b / a));
    double r = std::tan(half);
    bool ccw = std::arg(b / a) > 0;
    C.arc(a, b, r, !ccw, style);
}

inline void symmetry_lines(Canvas& C, int k, double R) {
    for (int j = 0; j < k; ++j) {
        cplx d = std::polar(R, pi * j / k);
        C.line(-d, d, "stroke:#999;stroke-width:0.6;stroke-dasharray:4,3");
    }
}

// Image of every mesh edge under u, with the unit circle, the ideal k-gon and its symmetry lines.
inline std::string image_mesh(const GluedMesh& M, const std::vector<cplx>& u, int k) {
    Canvas C(-1.05, 1.05, -1.05, 1.05);
    C.circle(0.0, 1.0, "fill:none;stroke:black;stroke-width:1.2");
    symmetry_lines(C, k, 1.0);
    for (int m = 0; m < k; ++m)
        ideal_side(C, std::polar(1.0, pi * (2 * m - 1) / k), std::polar(1.0, pi * (2 * m + 1) / k),
                   "stroke:#c03;stroke-width:1");
    std::set<std::pair<int, int>> drawn;
    for (int t = 0; t < static_cast<int>(M.tris.size()); ++t)
        for (int e = 0; e < 3; ++e) {
            int a = M.tri_cls(t, e), b = M.tri_cls(t, (e + 1) % 3);
            if (!drawn.insert({std::min(a, b), std::max(a, b)}).second) continue;
            C.line(u[a], u[b], "stroke:#247;stroke-width:0.3");
        }
    return C.str("image mesh", "Poincare disk model, x = Re u, y = Im u; ideal vertices at exp(i pi (2m+1)/k)");
}

inline void torus_outline(Canvas& C, double hole_half, double r_probe) {
    double h = hole_half;
    C.polyline({{-h, -h}, {h, -h}, {h, h}, {-h, h}, {-h, -h}}, "stroke:black;stroke-width:1.2");
    C.circle(0.0, r_probe, "fill:none;stroke:#999;stroke-width:0.8");
}

struct ZeroMark {
    cplx z;
    int multiplicity;
};

// Zeros of a Hopf field in the domain: even multiplicities red, odd blue, labelled.
inline std::string divisor(const std::vector<ZeroMark>& zeros, double extent, double hole_half, double r_probe) {
    Canvas C(-extent, extent, -extent, extent);
    symmetry_lines(C, 4, extent);
    if (hole_half > 0) torus_outline(C, hole_half, r_probe);
    for (auto& m : zeros) {
        std::string style = m.multiplicity % 2 == 0 ? "fill:#c03" : "fill:#247";
        std::string cls = "zero-m" + std::to_string(m.multiplicity);
        C.dot(m.z, 4 + 2 * m.multiplicity, style, cls);
        C.text(m.z + cplx(0.03 * extent, 0.03 * extent), std::to_string(m.multiplicity), 12);
    }
    return C.str("divisor", "domain coordinate z, x = Re z, y = Im z; label = multiplicity");
}

inline std::string foliation(const std::vector<Trajectory>& horizontal, const std::vector<Trajectory>& vertical,
                             const std::vector<ZeroMark>& zeros, double extent, double hole_half, double r_probe) {
    Canvas C(-extent, extent, -extent, extent);
    if (hole_half > 0) torus_outline(C, hole_half, r_probe);
    // wrapped trajectories jump across the hole; split polylines there
    auto draw = [&](const Trajectory& T, const std::string& style) {
        std::vector<cplx> piece;
        for (cplx z : T.points) {
            if (!piece.empty() && std::abs(z - piece.back()) > 0.5 * std::max(hole_half, 0.05) + 0.05) {
                C.polyline(piece, style);
                piece.clear();
            }
            piece.push_back(z);
        }
        C.polyline(piece, style);
    };
    for (auto& T : horizontal) draw(T, "stroke:#247;stroke-width:0.8");
    for (auto& T : vertical) draw(T, "stroke:#c63;stroke-width:0.8");
    for (auto& m : zeros) C.dot(m.z, 3 + m.multiplicity, "fill:black");
    return C.str("foliation", "domain coordinate z; blue horizontal, orange vertical trajectories");
}

// Seeds on a circle, n per direction.
inline std::vector<cplx> ring_seeds(double radius, int n = 16) {
    std::vector<cplx> s;
    for (int i = 0; i < n; ++i) s.push_back(std::polar(radius, 2 * pi * (i + 0.5) / n));
    return s;
}

// log-log energy against radius with the fitted slope printed on the plot.
inline std::string energy_plot(const std::vector<double>& r, const std::vector<double>& E, double slope) {
    if (r.size() != E.size() || r.size() < 2) throw InvalidParameter("energy plot needs matching tables");
    double lx0 = std::log10(r.front()), lx1 = std::log10(r.back());
    double ly0 = std::log10(*std::min_element(E.begin(), E.end()));
    double ly1 = std::log10(*std::max_element(E.begin(), E.end()));
    double pad = 0.1 * std::max(lx1 - lx0, ly1 - ly0);
    double span = std::max(lx1 - lx0, ly1 - ly0) + 2 * pad;
    Canvas C(lx0 - pad, lx0 - pad + span, ly0 - pad, ly0 - pad + span);
    C.line({lx0 - pad, ly0}, {lx0 - pad + span, ly0}, "stroke:black");
    C.line({lx0, ly0 - pad}, {lx0, ly0 - pad + span}, "stroke:black");
    std::vector<cplx> pts;
    for (size_t i = 0; i < r.size(); ++i) pts.emplace_back(std::log10(r[i]), std::log10(E[i]));
    C.polyline(pts, "stroke:#247;stroke-width:1.5");
    for (cplx p : pts) C.dot(p, 3, "fill:#247");
    std::ostringstream s;
    s.precision(4);
    s << "slope " << slope;
    C.text({lx0 + 0.05 * span, ly0 + 0.85 * span - pad}, s.str(), 16);
    return C.str("energy growth", "x = log10 r, y = log10 E(Omega_r)");
}

} // namespace hml::svg
