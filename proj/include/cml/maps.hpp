#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cml/common.hpp"

namespace cml {

/// One affine branch of a piecewise linear interval map.
/// f(x) = slope*x + intercept on [lo,hi] with the stated endpoint
/// conventions; the branch interval is mapped into [0,1].
struct Branch {
    double lo = 0.0;
    double hi = 1.0;
    bool lo_closed = true;
    bool hi_closed = true;
    double slope = 2.0;
    double intercept = 0.0;

    bool contains(double x) const {
        const bool above = lo_closed ? x >= lo : x > lo;
        const bool below = hi_closed ? x <= hi : x < hi;
        return above && below;
    }
};

enum class MapKind { doubling2, triple3, neg_triple3, tent2 };

inline const char* to_string(MapKind k) {
    switch (k) {
        case MapKind::doubling2:   return "doubling2";
        case MapKind::triple3:     return "triple3";
        case MapKind::neg_triple3: return "neg_triple3";
        case MapKind::tent2:       return "tent2";
    }
    return "?";
}

/// A piecewise linear expanding map of [0,1]. Branch intervals partition
/// [0,1]; overlapping closed endpoints are resolved by ordered first match.
/// All branches share |slope| = k with k in {2,3}.
struct PiecewiseLinearMap {
    MapKind kind = MapKind::doubling2;
    std::vector<Branch> branches;

    /// |f'| -- constant across branches for the maps supported here.
    double slope_magnitude() const { return std::abs(branches.front().slope); }

    /// Interior branch boundaries ({1/2} or {1/3, 2/3}).
    std::vector<double> breakpoints() const {
        std::vector<double> cuts;
        for (std::size_t i = 1; i < branches.size(); ++i) cuts.push_back(branches[i].lo);
        return cuts;
    }

    /// True when every branch slope is an integer (e.g. 2x mod 1, +-3x mod 1,
    /// and the tent map); enables the exact digit-stream orbit at c = 0.
    bool integer_slopes() const {
        for (const Branch& b : branches)
            if (b.slope != std::nearbyint(b.slope)) return false;
        return true;
    }
};

inline PiecewiseLinearMap make_standard_map(MapKind kind) {
    PiecewiseLinearMap m;
    m.kind = kind;
    const double third = 1.0 / 3.0, two_thirds = 2.0 / 3.0;
    switch (kind) {
        case MapKind::doubling2:
            m.branches = {{0.0, 0.5, true, false, 2.0, 0.0},
                          {0.5, 1.0, true, true, 2.0, -1.0}};
            break;
        case MapKind::triple3:
            m.branches = {{0.0, third, true, false, 3.0, 0.0},
                          {third, two_thirds, true, false, 3.0, -1.0},
                          {two_thirds, 1.0, true, true, 3.0, -2.0}};
            break;
        case MapKind::neg_triple3:
            m.branches = {{0.0, third, true, true, -3.0, 1.0},
                          {third, two_thirds, false, true, -3.0, 2.0},
                          {two_thirds, 1.0, false, true, -3.0, 3.0}};
            break;
        case MapKind::tent2:
            m.branches = {{0.0, 0.5, true, false, 2.0, 0.0},
                          {0.5, 1.0, true, true, -2.0, 2.0}};
            break;
    }
    return m;
}

inline PiecewiseLinearMap make_standard_map(const std::string& name) {
    if (name == "doubling2") return make_standard_map(MapKind::doubling2);
    if (name == "triple3") return make_standard_map(MapKind::triple3);
    if (name == "neg_triple3") return make_standard_map(MapKind::neg_triple3);
    if (name == "tent2") return make_standard_map(MapKind::tent2);
    throw config_error("unknown map kind: " + name);
}

/// Index of the branch containing x (ordered first match at breakpoints).
inline int branch_index(const PiecewiseLinearMap& m, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw domain_error("branch_index: x outside [0,1]");
    for (std::size_t i = 0; i < m.branches.size(); ++i)
        if (m.branches[i].contains(x)) return static_cast<int>(i);
    throw internal_error("branch_index: no branch contains x");
}

inline double derivative(const PiecewiseLinearMap& m, double x) {
    return m.branches[static_cast<std::size_t>(branch_index(m, x))].slope;
}

namespace detail {
// Clamp tolerance for branch-edge rounding: 4 ulps at unit scale.
inline constexpr double kEvalSlack = 4.0 * std::numeric_limits<double>::epsilon();
}  // namespace detail

/// Evaluates the map at x. Works for double and extended-precision reals;
/// results that overshoot [0,1] by more than an edge-rounding tolerance
/// indicate a broken branch table and raise internal_error.
template <class Real>
Real evaluate(const PiecewiseLinearMap& m, const Real& x) {
    if (!(x >= Real(0) && x <= Real(1))) throw domain_error("evaluate: x outside [0,1]");
    // Branch selection happens at double resolution; branch parameters are
    // exact small integers/halves so the affine step itself is exact in Real.
    const int bi = branch_index(m, static_cast<double>(x));
    const Branch& b = m.branches[static_cast<std::size_t>(bi)];
    Real y = Real(b.slope) * x + Real(b.intercept);
    if (y < Real(0)) {
        if (y < Real(-detail::kEvalSlack)) throw internal_error("evaluate: result underflows [0,1]");
        y = Real(0);
    } else if (y > Real(1)) {
        if (y > Real(1) + Real(detail::kEvalSlack)) throw internal_error("evaluate: result overflows [0,1]");
        y = Real(1);
    }
    return y;
}

inline double evaluate(const PiecewiseLinearMap& m, double x) {
    return evaluate<double>(m, x);
}

}  // namespace cml
