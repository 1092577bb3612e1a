#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "cml/common.hpp"
#include "cml/lattice.hpp"
#include "cml/polygon.hpp"

namespace cml {

// ---------------------------------------------------------------------------
// Partition of [0,1]^2 by the branch lines
// ---------------------------------------------------------------------------

/// Cells Q_J of the unit square cut by the map's branch lines on both axes
/// ({1/2} for the slope-2 maps, {1/3, 2/3} for the slope-3 maps). Cells are
/// numbered row-major from the bottom-left: cell = iy * ncols + ix.
struct Partition2D {
    std::vector<double> cuts;

    static Partition2D for_map(const PiecewiseLinearMap& m) { return {m.breakpoints()}; }

    int per_axis() const { return static_cast<int>(cuts.size()) + 1; }
    int cell_count() const { return per_axis() * per_axis(); }
    int cell_id(int ix, int iy) const { return iy * per_axis() + ix; }

    /// Interval index along one axis; cut points go right (matching the
    /// left-closed convention of the positive-slope branch tables).
    int interval_of(double v) const {
        int i = 0;
        for (double c : cuts)
            if (v >= c) ++i;
            else break;
        return i;
    }
    int cell_of(Pt p) const { return cell_id(interval_of(p.x), interval_of(p.y)); }

    double lo(int idx) const { return idx == 0 ? 0.0 : cuts[static_cast<std::size_t>(idx) - 1]; }
    double hi(int idx) const {
        return idx == static_cast<int>(cuts.size()) ? 1.0 : cuts[static_cast<std::size_t>(idx)];
    }
};

// ---------------------------------------------------------------------------
// Components and forests
// ---------------------------------------------------------------------------

using Shape = std::variant<Polygon, Segment>;

inline double measure_of(const Shape& s) {
    if (std::holds_alternative<Polygon>(s)) return area(std::get<Polygon>(s));
    return std::get<Segment>(s).length();
}

/// A maximal convex piece of an iterated set inside one partition cell.
struct Component {
    Shape shape;
    int cell = 0;
    int depth = 0;
    int parent = -1;  // index into the previous depth layer, -1 at depth 0
};

/// Components by depth, with per-depth totals and a conservation ledger of
/// dropped sliver measure.
struct ComponentForest {
    std::vector<std::vector<Component>> levels;
    std::vector<double> dropped;  // sliver measure discarded per depth
    bool capped = false;          // component cap was hit; forest is partial

    int depth() const { return static_cast<int>(levels.size()) - 1; }
    std::size_t count(int d) const { return levels[static_cast<std::size_t>(d)].size(); }
    double total_measure(int d) const {
        KahanSum s;
        for (const Component& c : levels[static_cast<std::size_t>(d)]) s.add(measure_of(c.shape));
        return s.value();
    }
};

namespace detail {
inline constexpr double kMinArea = 1e-15;
inline constexpr double kMinLength = 1e-12;
}  // namespace detail

/// Splits a convex polygon into its per-cell pieces. Pieces are pairwise
/// interior-disjoint and together carry the full input measure; slivers
/// below the area floor are dropped and tallied in *dropped.
inline std::vector<Component> clip_to_cells(const Polygon& poly, const Partition2D& part,
                                            double* dropped = nullptr) {
    std::vector<Component> out;
    const int m = part.per_axis();
    for (int ix = 0; ix < m; ++ix) {
        Polygon slab = poly;
        if (ix > 0) slab = clip_axis(slab, 0, part.lo(ix), false);
        if (ix < m - 1) slab = clip_axis(slab, 0, part.hi(ix), true);
        if (slab.empty()) continue;
        for (int iy = 0; iy < m; ++iy) {
            Polygon piece = slab;
            if (iy > 0) piece = clip_axis(piece, 1, part.lo(iy), false);
            if (iy < m - 1) piece = clip_axis(piece, 1, part.hi(iy), true);
            if (piece.empty()) continue;
            const double a = area(piece);
            if (a < detail::kMinArea) {
                if (dropped) *dropped += a;
                continue;
            }
            Component c;
            c.shape = std::move(piece);
            c.cell = part.cell_id(ix, iy);
            out.push_back(std::move(c));
        }
    }
    return out;
}

/// Splits a segment into its per-cell pieces (parametric cuts at the branch
/// lines). Cell membership of a piece is decided at its midpoint.
inline std::vector<Component> clip_to_cells(const Segment& seg, const Partition2D& part,
                                            double* dropped = nullptr) {
    std::vector<double> ts = {0.0, 1.0};
    const double dx = seg.q.x - seg.p.x;
    const double dy = seg.q.y - seg.p.y;
    for (double cut : part.cuts) {
        if (dx != 0.0) {
            const double t = (cut - seg.p.x) / dx;
            if (t > 0.0 && t < 1.0) ts.push_back(t);
        }
        if (dy != 0.0) {
            const double t = (cut - seg.p.y) / dy;
            if (t > 0.0 && t < 1.0) ts.push_back(t);
        }
    }
    std::sort(ts.begin(), ts.end());
    std::vector<Component> out;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        if (ts[i + 1] <= ts[i]) continue;
        Segment piece{seg.at(ts[i]), seg.at(ts[i + 1])};
        const double len = piece.length();
        if (len < detail::kMinLength) {
            if (dropped) *dropped += len;
            continue;
        }
        Component c;
        c.shape = piece;
        c.cell = part.cell_of(piece.at(0.5));
        out.push_back(std::move(c));
    }
    return out;
}

inline std::vector<Component> clip_to_cells(const Shape& s, const Partition2D& part,
                                            double* dropped = nullptr) {
    if (std::holds_alternative<Polygon>(s)) return clip_to_cells(std::get<Polygon>(s), part, dropped);
    return clip_to_cells(std::get<Segment>(s), part, dropped);
}

// ---------------------------------------------------------------------------
// The affine action of T on one cell
// ---------------------------------------------------------------------------

/// p' = L p + t, the restriction of T to a partition cell (one affine branch
/// per coordinate followed by the coupling matrix).
struct CellAffine {
    double l00, l01, l10, l11;
    double tx, ty;

    Pt apply(Pt p) const { return {l00 * p.x + l01 * p.y + tx, l10 * p.x + l11 * p.y + ty}; }
    double det() const { return l00 * l11 - l01 * l10; }
};

inline CellAffine cell_affine(const Lattice& lat, const Partition2D& part, int cell) {
    if (lat.n() != 2) throw usage_error("geometry engine is two-dimensional");
    const int m = part.per_axis();
    const int ix = cell % m, iy = cell / m;
    const Branch& bx = lat.map.branches[static_cast<std::size_t>(ix)];
    const Branch& by = lat.map.branches[static_cast<std::size_t>(iy)];
    const double m00 = lat.mix.at(0, 0), m01 = lat.mix.at(0, 1);
    const double m10 = lat.mix.at(1, 0), m11 = lat.mix.at(1, 1);
    CellAffine A;
    A.l00 = m00 * bx.slope;
    A.l01 = m01 * by.slope;
    A.l10 = m10 * bx.slope;
    A.l11 = m11 * by.slope;
    A.tx = m00 * bx.intercept + m01 * by.intercept;
    A.ty = m10 * bx.intercept + m11 * by.intercept;
    return A;
}

/// Image of a single-cell component under T: one affine map, convexity
/// preserved, area scaled by exactly |det(mix)| * k^2.
inline Shape map_component(const Component& comp, const Lattice& lat, const Partition2D& part) {
    const CellAffine A = cell_affine(lat, part, comp.cell);
    if (std::holds_alternative<Polygon>(comp.shape)) {
        const Polygon& src = std::get<Polygon>(comp.shape);
        Polygon img;
        img.reserve(src.size());
        for (const Pt& v : src) img.push_back(A.apply(v));
        if (A.det() < 0.0) std::reverse(img.begin(), img.end());
        return img;
    }
    const Segment& s = std::get<Segment>(comp.shape);
    return Segment{A.apply(s.p), A.apply(s.q)};
}

// ---------------------------------------------------------------------------
// Forest iteration
// ---------------------------------------------------------------------------

/// Iterates a shape k steps, tracking every component at every depth.
/// Depth 0 holds the components of the input itself. If a depth would exceed
/// cap components the forest is returned truncated with `capped` set.
inline ComponentForest iterate_components(const Shape& shape, const Lattice& lat, int k,
                                          std::size_t cap = 1000000) {
    const Partition2D part = Partition2D::for_map(lat.map);
    ComponentForest forest;
    forest.dropped.assign(static_cast<std::size_t>(k) + 1, 0.0);
    forest.levels.emplace_back(clip_to_cells(shape, part, &forest.dropped[0]));
    for (int d = 0; d < k; ++d) {
        const auto& cur = forest.levels.back();
        std::vector<Component> next;
        double* drop = &forest.dropped[static_cast<std::size_t>(d) + 1];
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const Shape img = map_component(cur[i], lat, part);
            for (Component& piece : clip_to_cells(img, part, drop)) {
                piece.depth = d + 1;
                piece.parent = static_cast<int>(i);
                next.push_back(std::move(piece));
                if (next.size() > cap) {
                    forest.capped = true;
                    forest.levels.push_back(std::move(next));
                    return forest;
                }
            }
        }
        forest.levels.push_back(std::move(next));
    }
    return forest;
}

inline ComponentForest segment_iterate(const Segment& seg, const Lattice& lat, int k,
                                       std::size_t cap = 1000000) {
    return iterate_components(Shape{seg}, lat, k, cap);
}

// ---------------------------------------------------------------------------
// Slope transform and strip geometry
// ---------------------------------------------------------------------------

/// Action of T on line slopes: k -> (c + (1-c)k) / ((1-c) + ck), with the
/// vertical line treated as the limit (1-c)/c. Fixed points at k = +-1.
inline double slope_transform(double k, double c) {
    if (std::isinf(k)) {
        if (c == 0.0) return std::numeric_limits<double>::infinity();
        return (1.0 - c) / c;
    }
    const double num = c + (1.0 - c) * k;
    const double den = (1.0 - c) + c * k;
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

/// Area of poly inside O_eps = {dist(p, diagonal) <= eps}, i.e.
/// |x1 - x2| <= sqrt(2) * eps, via two half-plane clips.
inline double strip_area(const Polygon& poly, double eps) {
    if (!(eps > 0.0)) throw usage_error("strip_area: eps must be positive");
    const double w = std::sqrt(2.0) * eps;
    Polygon p = clip_halfplane(poly, 1.0, -1.0, w);
    p = clip_halfplane(p, -1.0, 1.0, w);
    return p.empty() ? 0.0 : area(p);
}

/// Length of the part of a segment inside O_r0 (same strip form).
inline double strip_length(const Segment& seg, double r0) {
    const double w = std::sqrt(2.0) * r0;
    auto side = [&](Pt p, double s) { return s * (p.x - p.y) - w; };
    double t0 = 0.0, t1 = 1.0;
    for (double s : {1.0, -1.0}) {
        const double fa = side(seg.p, s), fb = side(seg.q, s);
        if (fa > 0.0 && fb > 0.0) return 0.0;
        if (fa > 0.0 || fb > 0.0) {
            const double t = fa / (fa - fb);
            if (fa > 0.0) t0 = std::max(t0, t);
            else t1 = std::min(t1, t);
        }
    }
    if (t1 <= t0) return 0.0;
    return (t1 - t0) * seg.length();
}

// ---------------------------------------------------------------------------
// Lemma-level checkers
// ---------------------------------------------------------------------------

/// Oriented bounding rectangle whose long side is parallel to the polygon
/// diameter and has its length; the area sandwich
/// 0.5 * rect <= area(poly) <= rect holds for convex input.
inline OrientedRect bounding_rectangle(const Polygon& poly) {
    const auto [a, b] = polygon_diameter(poly);
    OrientedRect r;
    const double len = dist(a, b);
    if (len == 0.0) {
        r.center = a;
        r.axis = {1.0, 0.0};
        return r;
    }
    const Pt u = (1.0 / len) * (b - a);
    const Pt v{-u.y, u.x};
    double loU = std::numeric_limits<double>::infinity(), hiU = -loU;
    double loV = loU, hiV = -loU;
    for (const Pt& p : poly) {
        loU = std::min(loU, dot(p, u));
        hiU = std::max(hiU, dot(p, u));
        loV = std::min(loV, dot(p, v));
        hiV = std::max(hiV, dot(p, v));
    }
    r.length = hiU - loU;
    r.width = hiV - loV;
    const double cu = 0.5 * (loU + hiU), cv = 0.5 * (loV + hiV);
    r.center = {cu * u.x + cv * v.x, cu * u.y + cv * v.y};
    r.axis = u;
    return r;
}

struct CenterCaptureReport {
    bool applicable = false;  // image touches every cell
    bool captured = false;    // (1/2,1/2) lies in T(omega)
    double ratio = 0.0;       // area(T(omega) cap O_eps) / area(T(omega))
};

/// Checks the center-capture claim on one convex set contained in a single
/// cell: if its one-branch image meets every cell, the center (1/2,1/2)
/// belongs to the image and the O_eps mass ratio is at least eps^2/2.
inline CenterCaptureReport check_center_capture(const Polygon& omega, const Lattice& lat, double eps) {
    const Partition2D part = Partition2D::for_map(lat.map);
    const auto pieces0 = clip_to_cells(omega, part);
    if (pieces0.size() != 1) throw usage_error("check_center_capture: omega must lie in a single cell");
    const Shape img = map_component(pieces0[0], lat, part);
    const Polygon& image = std::get<Polygon>(img);

    std::vector<bool> seen(static_cast<std::size_t>(part.cell_count()), false);
    int touched = 0;
    for (const Component& piece : clip_to_cells(image, part)) {
        if (!seen[static_cast<std::size_t>(piece.cell)]) {
            seen[static_cast<std::size_t>(piece.cell)] = true;
            ++touched;
        }
    }
    CenterCaptureReport rep;
    rep.applicable = touched == part.cell_count();
    if (!rep.applicable) return rep;
    rep.captured = point_in_convex(image, {0.5, 0.5});
    rep.ratio = strip_area(image, eps) / area(image);
    return rep;
}

/// Fraction of a slope -1 segment outside O_r0. Distances are Euclidean
/// point-to-diagonal; a slope -1 line crosses the strip in a chord of
/// length exactly 2*r0, so segments of length >= 3*r0 keep at least a third
/// of their length outside.
inline double segment_outside_fraction(const Segment& seg, double r0) {
    const double len = seg.length();
    const double dx = seg.q.x - seg.p.x, dy = seg.q.y - seg.p.y;
    if (std::abs(dx + dy) > 1e-9 * (std::abs(dx) + std::abs(dy)))
        throw usage_error("segment_outside_fraction: segment must have slope -1");
    if (!(len >= 3.0 * r0)) throw usage_error("segment_outside_fraction: segment shorter than 3*r0");
    return 1.0 - strip_length(seg, r0) / len;
}

/// Number of depth-d components whose shape meets O_r0.
inline int components_in_strip(const ComponentForest& forest, int d, double r0) {
    const double w = std::sqrt(2.0) * r0;
    int count = 0;
    for (const Component& c : forest.levels[static_cast<std::size_t>(d)]) {
        if (std::holds_alternative<Polygon>(c.shape)) {
            if (strip_area(std::get<Polygon>(c.shape), r0) > 0.0) ++count;
        } else {
            const Segment& s = std::get<Segment>(c.shape);
            const double sp = s.p.x - s.p.y, sq = s.q.x - s.q.y;
            if (std::min(std::abs(sp), std::abs(sq)) <= w || sp * sq < 0.0) ++count;
        }
    }
    return count;
}

struct GoodSetViolation {
    int depth = 0;
    std::size_t component = 0;
    std::size_t offspring = 0;
};

struct GoodSetReport {
    bool good = true;
    std::size_t checked = 0;
    bool capped = false;
    std::optional<GoodSetViolation> first_violation;
};

/// Verifies the (delta, m0, a)-goodness hypothesis over a finite horizon:
/// every component with measure <= delta * D_measure spawns at most `a`
/// components m0 steps later.
inline GoodSetReport good_set_check(const Shape& shape, double D_measure, double delta, int m0, int a,
                                    int horizon, const Lattice& lat, std::size_t cap = 1000000) {
    if (measure_of(shape) > delta * D_measure * (1.0 + 1e-12))
        throw usage_error("good_set_check: M(shape) must be <= delta * M(D)");
    const Partition2D part = Partition2D::for_map(lat.map);
    {
        const auto pieces = clip_to_cells(shape, part);
        if (pieces.size() != 1) throw usage_error("good_set_check: shape must lie in a single cell");
    }
    const ComponentForest forest = iterate_components(shape, lat, horizon, cap);
    GoodSetReport rep;
    rep.capped = forest.capped;

    // children[d][i] -> indices of depth-(d+1) components with parent i
    const int top = forest.depth();
    std::vector<std::vector<std::vector<std::size_t>>> children(static_cast<std::size_t>(top));
    for (int d = 1; d <= top; ++d) {
        auto& lists = children[static_cast<std::size_t>(d) - 1];
        lists.assign(forest.count(d - 1), {});
        const auto& level = forest.levels[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < level.size(); ++i)
            lists[static_cast<std::size_t>(level[i].parent)].push_back(i);
    }

    for (int d = 0; d + m0 <= top; ++d) {
        const auto& level = forest.levels[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < level.size(); ++i) {
            if (measure_of(level[i].shape) > delta * D_measure) continue;
            std::vector<std::size_t> front = {i};
            for (int step_down = 0; step_down < m0; ++step_down) {
                std::vector<std::size_t> nxt;
                for (std::size_t v : front) {
                    const auto& kids = children[static_cast<std::size_t>(d + step_down)][v];
                    nxt.insert(nxt.end(), kids.begin(), kids.end());
                }
                front.swap(nxt);
            }
            ++rep.checked;
            if (front.size() > static_cast<std::size_t>(a)) {
                rep.good = false;
                if (!rep.first_violation)
                    rep.first_violation = GoodSetViolation{d, i, front.size()};
                return rep;
            }
        }
    }
    return rep;
}

}  // namespace cml
