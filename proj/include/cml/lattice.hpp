#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cml/common.hpp"
#include "cml/digit_orbit.hpp"
#include "cml/maps.hpp"
#include "cml/metrics.hpp"
#include "cml/rng.hpp"

namespace cml {

enum class Topology { two_node, ring, global };

inline const char* to_string(Topology t) {
    switch (t) {
        case Topology::two_node: return "two_node";
        case Topology::ring:     return "ring";
        case Topology::global:   return "global";
    }
    return "?";
}

struct CouplingTopology {
    Topology kind = Topology::two_node;
    int n = 2;
};

inline CouplingTopology parse_topology(const std::string& kind, int n) {
    CouplingTopology t;
    t.n = n;
    if (kind == "two_node") t.kind = Topology::two_node;
    else if (kind == "ring") t.kind = Topology::ring;
    else if (kind == "global") t.kind = Topology::global;
    else throw config_error("unknown topology: " + kind);
    return t;
}

/// Dense square matrix, row-major. Sizes here are tiny (n <= a few dozen).
struct Matrix {
    int n = 0;
    std::vector<double> a;

    explicit Matrix(int dim = 0) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}
    double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

/// Coupling matrix A with A*e = 0 for the given topology.
inline Matrix coupling_matrix(const CouplingTopology& topo) {
    Matrix A(topo.n);
    switch (topo.kind) {
        case Topology::two_node:
            A.at(0, 0) = -1; A.at(0, 1) = 1;
            A.at(1, 0) = 1;  A.at(1, 1) = -1;
            break;
        case Topology::ring:
            for (int i = 0; i < topo.n; ++i) {
                A.at(i, i) = -2;
                A.at(i, (i + 1) % topo.n) += 1;
                A.at(i, (i + topo.n - 1) % topo.n) += 1;
            }
            break;
        case Topology::global:
            for (int i = 0; i < topo.n; ++i)
                for (int j = 0; j < topo.n; ++j)
                    A.at(i, j) = (i == j) ? -(topo.n - 1) : 1;
            break;
    }
    return A;
}

/// The CML: x(n+1) = (I + cA) f(x(n)) applied coordinatewise.
/// Immutable after build; safe to share across workers.
struct Lattice {
    CouplingTopology topology;
    double c = 0.0;
    PiecewiseLinearMap map;
    Matrix mix;  // I + cA

    int n() const { return topology.n; }
    double det_mix() const {
        // |det(I+cA)| per topology; used by the geometry module (n = 2).
        if (topology.kind == Topology::two_node) return std::abs(1.0 - 2.0 * c);
        throw usage_error("det_mix: only defined for the two-node lattice");
    }
};

/// Validates admissibility and assembles I + cA. Inadmissible coupling is a
/// configuration error, never a silent clamp. The two-node matrix is the
/// explicit 2x2 form, not the ring row specialized to n = 2 (that row would
/// double-count the single neighbor), and ring with n = 2 is rejected.
inline Lattice build_lattice(const CouplingTopology& topo, double c, PiecewiseLinearMap map,
                             std::vector<std::string>* warnings = nullptr) {
    switch (topo.kind) {
        case Topology::two_node:
            if (topo.n != 2) throw config_error("two_node topology requires n = 2");
            if (!(c >= 0.0 && c <= 1.0)) throw config_error("two_node coupling must satisfy 0 <= c <= 1");
            break;
        case Topology::ring:
            if (topo.n < 3) throw config_error("ring topology requires n >= 3 (use two_node for n = 2)");
            if (!(c >= 0.0 && c <= 0.5)) throw config_error("ring coupling must satisfy 0 <= c <= 1/2");
            break;
        case Topology::global:
            if (topo.n < 2) throw config_error("global topology requires n >= 2");
            if (!(c >= 0.0 && c <= 1.0 / (topo.n - 1)))
                throw config_error("global coupling must satisfy 0 <= c <= 1/(n-1)");
            break;
    }
    Lattice lat;
    lat.topology = topo;
    lat.c = c;
    lat.map = std::move(map);
    lat.mix = coupling_matrix(topo);
    for (int i = 0; i < topo.n; ++i)
        for (int j = 0; j < topo.n; ++j)
            lat.mix.at(i, j) = (i == j ? 1.0 : 0.0) + c * lat.mix.at(i, j);
    if (warnings && c == 0.0 && lat.map.integer_slopes())
        warnings->push_back("c = 0: orbits use the exact digit-stream representation "
                            "(fixed-mantissa floats collapse to 0 under the uncoupled shift map)");
    return lat;
}

namespace detail {
// Out-of-range coordinates within this tolerance of [0,1] are clamped;
// anything worse means a matrix/branch bug.
inline constexpr double kStateSlack = 1e-12;

template <class Real>
void clamp_coordinate(Real& v) {
    if (v < Real(0)) {
        if (v < Real(-kStateSlack)) throw internal_error("step: coordinate escaped [0,1]");
        v = Real(0);
    } else if (v > Real(1)) {
        if (v > Real(1) + Real(kStateSlack)) throw internal_error("step: coordinate escaped [0,1]");
        v = Real(1);
    }
}
}  // namespace detail

/// One synchronous update x -> (I + cA) f(x), computed row by row as
/// x_i' = sum_j mix_ij f_j. The row products re-round every step, which
/// keeps long orbits of the dyadic-slope maps from collapsing onto
/// finite-entropy (eventually dyadic) states. Equal map values short-circuit
/// to f itself, so states on the diagonal stay on the diagonal bit-exactly.
template <class Real>
void step_in_place(const Lattice& lat, std::vector<Real>& x, std::vector<Real>& fbuf) {
    const int n = lat.n();
    fbuf.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        fbuf[static_cast<std::size_t>(i)] = evaluate<Real>(lat.map, x[static_cast<std::size_t>(i)]);
    bool all_equal = true;
    for (int i = 1; i < n && all_equal; ++i) all_equal = fbuf[static_cast<std::size_t>(i)] == fbuf[0];
    if (all_equal) {
        for (auto& v : x) v = fbuf[0];
        return;
    }
    for (int i = 0; i < n; ++i) {
        Real acc(0);
        for (int j = 0; j < n; ++j) {
            const double m = lat.mix.at(i, j);
            if (m != 0.0) acc += Real(m) * fbuf[static_cast<std::size_t>(j)];
        }
        x[static_cast<std::size_t>(i)] = acc;
    }
    for (auto& v : x) detail::clamp_coordinate(v);
}

template <class Real>
std::vector<Real> step(const Lattice& lat, std::vector<Real> x) {
    std::vector<Real> fbuf;
    step_in_place(lat, x, fbuf);
    return x;
}

inline std::vector<double> step(const Lattice& lat, const std::vector<double>& x) {
    return step<double>(lat, x);
}

/// Orbit engine: steps a state and exposes snapshots. When c = 0 and the map
/// has integer slopes it switches to the exact digit-stream representation,
/// seeding the unread tail deterministically from the initial state.
template <class Real>
class OrbitEngine {
public:
    OrbitEngine(const Lattice& lat, const std::vector<double>& s0) : lat_(&lat) {
        if (static_cast<int>(s0.size()) != lat.n())
            throw usage_error("initial state dimension does not match lattice");
        for (double v : s0)
            if (!(v >= 0.0 && v <= 1.0)) throw domain_error("initial coordinate outside [0,1]");
        if (lat.c == 0.0 && lat.map.integer_slopes()) {
            digit_.emplace(lat.map, s0, hash_doubles(s0.data(), s0.size()));
        } else {
            x_.assign(s0.begin(), s0.end());
        }
    }

    bool digit_mode() const { return digit_.has_value(); }

    void advance() {
        if (digit_) digit_->advance();
        else step_in_place(*lat_, x_, fbuf_);
    }

    /// Current state as doubles (always available).
    std::vector<double> snapshot() const {
        if (digit_) return digit_->values();
        std::vector<double> v(x_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(x_[i]);
        return v;
    }

    double coordinate(std::size_t i) const {
        return digit_ ? digit_->value(i) : static_cast<double>(x_[i]);
    }

    /// Distance to the diagonal of the current state, computed in working
    /// precision without materializing a snapshot.
    double distance(DistanceMetric metric) const {
        if (digit_) {
            scratch_.resize(digit_->size());
            for (std::size_t i = 0; i < scratch_.size(); ++i) scratch_[i] = digit_->value(i);
            return diagonal_distance(scratch_, metric);
        }
        return diagonal_distance(x_, metric);
    }

    const Lattice& lattice() const { return *lat_; }

private:
    const Lattice* lat_;
    std::vector<Real> x_, fbuf_;
    mutable std::vector<double> scratch_;
    std::optional<DigitOrbit> digit_;
};

/// Sampled orbit with per-step diagnostics.
struct TrajectoryRecord {
    std::vector<std::vector<double>> states;
    std::vector<double> distances;
    std::vector<std::vector<int>> itinerary;  // per recorded step, branch index per coordinate
    long long steps = 0;
    int sample_every = 1;
    std::uint64_t seed = 0;
    bool digit_mode = false;
    std::vector<std::string> notes;
};

/// Jacobian of the update at s: J_ij = mix_ij * f'(s_j). If a coordinate sits
/// exactly on a breakpoint the one-sided branch convention applies and
/// *at_breakpoint is set.
inline Matrix jacobian_at(const Lattice& lat, const std::vector<double>& s, bool* at_breakpoint = nullptr) {
    const int n = lat.n();
    if (at_breakpoint) *at_breakpoint = false;
    std::vector<double> slopes(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double xj = s[static_cast<std::size_t>(j)];
        slopes[static_cast<std::size_t>(j)] = derivative(lat.map, xj);
        if (at_breakpoint)
            for (double cut : lat.map.breakpoints())
                if (xj == cut) *at_breakpoint = true;
    }
    Matrix J(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            J.at(i, j) = lat.mix.at(i, j) * slopes[static_cast<std::size_t>(j)];
    return J;
}

/// Full spectrum of slope * (I + cA). The eigenvalue along e = (1,..,1)
/// comes first; the rest are the transverse ones.
inline std::vector<double> coupling_eigenvalues(const CouplingTopology& topo, double c, double slope_magnitude) {
    std::vector<double> ev;
    switch (topo.kind) {
        case Topology::two_node:
            ev = {slope_magnitude, slope_magnitude * (1.0 - 2.0 * c)};
            break;
        case Topology::ring:
            for (int k = 0; k < topo.n; ++k)
                ev.push_back(slope_magnitude *
                             (1.0 - 2.0 * c + 2.0 * c * std::cos(2.0 * std::numbers::pi * k / topo.n)));
            break;
        case Topology::global:
            ev.push_back(slope_magnitude);
            for (int k = 1; k < topo.n; ++k) ev.push_back(slope_magnitude * (1.0 - topo.n * c));
            break;
    }
    return ev;
}

struct StabilityReport {
    double max_transverse = 0.0;
    bool sync_possible = false;
};

/// Largest |eigenvalue| transverse to the diagonal; synchronization is
/// spectrally possible only when it is below 1.
inline StabilityReport transverse_stability(const CouplingTopology& topo, double c, double slope_magnitude) {
    const std::vector<double> ev = coupling_eigenvalues(topo, c, slope_magnitude);
    StabilityReport r;
    for (std::size_t i = 1; i < ev.size(); ++i) r.max_transverse = std::max(r.max_transverse, std::abs(ev[i]));
    r.sync_possible = r.max_transverse < 1.0;
    return r;
}

}  // namespace cml
