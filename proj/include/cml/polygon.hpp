#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "cml/common.hpp"

namespace cml {

struct Pt {
    double x = 0.0;
    double y = 0.0;

    friend Pt operator+(Pt a, Pt b) { return {a.x + b.x, a.y + b.y}; }
    friend Pt operator-(Pt a, Pt b) { return {a.x - b.x, a.y - b.y}; }
    friend Pt operator*(double s, Pt p) { return {s * p.x, s * p.y}; }
    friend bool operator==(Pt a, Pt b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Pt a, Pt b) { return a.x * b.x + a.y * b.y; }
inline double cross(Pt a, Pt b) { return a.x * b.y - a.y * b.x; }
inline double norm(Pt a) { return std::hypot(a.x, a.y); }
inline double dist(Pt a, Pt b) { return norm(a - b); }

/// Counterclockwise vertex list of a convex polygon.
using Polygon = std::vector<Pt>;

namespace detail {
// Shewchuk-style static filter for the 2x2 orientation determinant.
inline constexpr double kOrientFilter = 3.3306690738754716e-16;

inline int orient_exactish(Pt a, Pt b, Pt c) {
    using Wide = boost::multiprecision::cpp_bin_float_50;
    // Expanded form: products of doubles are exact in the wide type, and the
    // six-term sum is evaluated at ~166 bits.
    const Wide r = Wide(b.x) * Wide(c.y) - Wide(b.x) * Wide(a.y) - Wide(a.x) * Wide(c.y) -
                   Wide(b.y) * Wide(c.x) + Wide(b.y) * Wide(a.x) + Wide(a.y) * Wide(c.x);
    if (r > 0) return 1;
    if (r < 0) return -1;
    return 0;
}
}  // namespace detail

/// Sign of the signed area of triangle (a,b,c): +1 for a left turn.
/// Filtered double evaluation with a high-precision fallback, so component
/// counts do not flip on near-degenerate inputs.
inline int orient(Pt a, Pt b, Pt c) {
    const double detl = (b.x - a.x) * (c.y - a.y);
    const double detr = (b.y - a.y) * (c.x - a.x);
    const double det = detl - detr;
    const double bound = detail::kOrientFilter * (std::abs(detl) + std::abs(detr));
    if (det > bound) return 1;
    if (det < -bound) return -1;
    if (bound == 0.0) return 0;  // exact zero (collinear with exact arithmetic)
    return detail::orient_exactish(a, b, c);
}

/// Signed shoelace area; positive for counterclockwise order.
inline double signed_area(const Polygon& p) {
    double acc = 0.0;
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Pt& u = p[i];
        const Pt& v = p[(i + 1) % n];
        acc += u.x * v.y - v.x * u.y;
    }
    return 0.5 * acc;
}

inline double area(const Polygon& p) { return std::abs(signed_area(p)); }

/// Drops exact consecutive duplicates (clipping artifacts).
inline void dedupe(Polygon& p) {
    Polygon out;
    out.reserve(p.size());
    for (const Pt& v : p)
        if (out.empty() || !(out.back() == v)) out.push_back(v);
    while (out.size() > 1 && out.front() == out.back()) out.pop_back();
    p.swap(out);
}

inline bool is_convex_ccw(const Polygon& p, double tol = 0.0) {
    const std::size_t n = p.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Pt a = p[i], b = p[(i + 1) % n], c = p[(i + 2) % n];
        if (cross(b - a, c - b) < -tol) return false;
    }
    return true;
}

/// Keeps the part of a convex polygon with coordinate <= cut (keep_le) or
/// >= cut (otherwise) along the given axis (0 = x, 1 = y). Intersection
/// vertices land exactly on the cut line.
inline Polygon clip_axis(const Polygon& poly, int axis, double cut, bool keep_le) {
    Polygon out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    out.reserve(n + 2);
    auto coord = [axis](const Pt& p) { return axis == 0 ? p.x : p.y; };
    auto inside = [&](const Pt& p) { return keep_le ? coord(p) <= cut : coord(p) >= cut; };
    auto intersect = [&](const Pt& a, const Pt& b) {
        const double da = coord(a), db = coord(b);
        const double t = (cut - da) / (db - da);
        Pt r;
        if (axis == 0) {
            r.x = cut;
            r.y = a.y + t * (b.y - a.y);
        } else {
            r.x = a.x + t * (b.x - a.x);
            r.y = cut;
        }
        return r;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const Pt& a = poly[i];
        const Pt& b = poly[(i + 1) % n];
        const bool ia = inside(a), ib = inside(b);
        if (ia) out.push_back(a);
        if (ia != ib) out.push_back(intersect(a, b));
    }
    dedupe(out);
    if (out.size() < 3) out.clear();
    return out;
}

/// Keeps {p : a*x + b*y <= rhs} of a convex polygon.
inline Polygon clip_halfplane(const Polygon& poly, double a, double b, double rhs) {
    Polygon out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    out.reserve(n + 2);
    auto side = [&](const Pt& p) { return a * p.x + b * p.y - rhs; };
    for (std::size_t i = 0; i < n; ++i) {
        const Pt& u = poly[i];
        const Pt& v = poly[(i + 1) % n];
        const double su = side(u), sv = side(v);
        if (su <= 0.0) out.push_back(u);
        if ((su < 0.0 && sv > 0.0) || (su > 0.0 && sv <= 0.0)) {
            const double t = su / (su - sv);
            out.push_back(u + t * (v - u));
        }
    }
    dedupe(out);
    if (out.size() < 3) out.clear();
    return out;
}

inline bool point_in_convex(const Polygon& poly, Pt q) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i)
        if (orient(poly[i], poly[(i + 1) % n], q) < 0) return false;
    return true;
}

/// Convex hull (monotone chain), CCW. Used by the randomized generators.
inline Polygon convex_hull(std::vector<Pt> pts) {
    std::sort(pts.begin(), pts.end(), [](Pt a, Pt b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end(), [](Pt a, Pt b) { return a == b; }), pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return {};
    std::vector<Pt> h(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && orient(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && orient(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

/// Longest distance between boundary points. Vertex counts here are tiny,
/// so the pairwise scan is the whole algorithm.
inline std::pair<Pt, Pt> polygon_diameter(const Polygon& p) {
    double best = -1.0;
    std::pair<Pt, Pt> ends{p[0], p[0]};
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            const double d = dist(p[i], p[j]);
            if (d > best) {
                best = d;
                ends = {p[i], p[j]};
            }
        }
    return ends;
}

/// Oriented rectangle: center, unit axis of the long side, and extents.
struct OrientedRect {
    Pt center;
    Pt axis;  // unit vector along the long side
    double length = 0.0;
    double width = 0.0;

    double rect_area() const { return length * width; }

    Polygon to_polygon() const {
        const Pt u = axis;
        const Pt v{-axis.y, axis.x};
        const Pt hl = 0.5 * length * u;
        const Pt hw = 0.5 * width * v;
        return {center - hl - hw, center + hl - hw, center + hl + hw, center - hl + hw};
    }
};

struct Segment {
    Pt p, q;

    double length() const { return dist(p, q); }
    /// dy/dx; +inf for vertical segments.
    double slope() const {
        const double dx = q.x - p.x;
        if (dx == 0.0) return std::numeric_limits<double>::infinity();
        return (q.y - p.y) / dx;
    }
    Pt at(double t) const { return p + t * (q - p); }
};

}  // namespace cml
