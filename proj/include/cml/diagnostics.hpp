#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cml/common.hpp"
#include "cml/lattice.hpp"
#include "cml/rng.hpp"

namespace cml {

// ---------------------------------------------------------------------------
// Lyapunov exponents
// ---------------------------------------------------------------------------

struct LyapunovPair {
    double parallel = 0.0;
    double transverse = 0.0;
};

/// (ln k, ln|k(1-2c)|) for the two-node lattice with constant slope k.
/// At c = 1/2 the transverse exponent is reported as -inf.
inline LyapunovPair lyapunov_analytic(double slope_magnitude, double c) {
    LyapunovPair p;
    p.parallel = std::log(slope_magnitude);
    const double factor = std::abs(slope_magnitude * (1.0 - 2.0 * c));
    p.transverse = factor == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(factor);
    return p;
}

/// Time averages of ln|f'| and ln|(1-2c) f'| along an orbit. The maps here
/// have constant |f'|, so every summand is identical and the averages agree
/// with the analytic values to rounding; compensated summation keeps the
/// accumulated error at eps level.
inline LyapunovPair lyapunov_empirical(const Lattice& lat, const std::vector<double>& s0, long long steps) {
    if (lat.topology.kind != Topology::two_node)
        throw usage_error("lyapunov_empirical: two-node lattices only");
    if (steps < 1000) throw usage_error("lyapunov_empirical: needs steps >= 1e3");
    OrbitEngine<double> engine(lat, s0);
    const double tf = std::abs(1.0 - 2.0 * lat.c);
    KahanSum par, perp;
    for (long long i = 0; i < steps; ++i) {
        const double fp = std::abs(derivative(lat.map, engine.coordinate(0)));
        par.add(std::log(fp));
        perp.add(std::log(tf * fp));
        engine.advance();
    }
    return {par.value() / static_cast<double>(steps), perp.value() / static_cast<double>(steps)};
}

// ---------------------------------------------------------------------------
// Regime classification
// ---------------------------------------------------------------------------

struct RegimeParams {
    double eps_enter = 1e-3;   // near-synchrony entry threshold
    double r0 = 0.05;          // desynchronization threshold
    double sync_tol = 1e-12;
    long long transient = 1000;
    long long horizon = 1000000;
    int min_alternations = 5;

    void validate() const {
        if (!(eps_enter > 0.0 && eps_enter < r0 && r0 < 1.0))
            throw usage_error("regime params must satisfy 0 < eps_enter < r0 < 1");
        if (!(sync_tol < eps_enter)) throw usage_error("regime params must satisfy sync_tol < eps_enter");
        if (transient < 0 || horizon < 1 || min_alternations < 1)
            throw usage_error("regime params out of range");
    }
};

enum class Regime { Synchronized, Intermittent, Undetermined };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::Synchronized:  return "Synchronized";
        case Regime::Intermittent:  return "Intermittent";
        case Regime::Undetermined:  return "Undetermined";
    }
    return "?";
}

struct RegimeReport {
    Regime regime = Regime::Undetermined;
    int alternations = 0;        // completed enter/exit cycles after the transient
    double min_dist = 0.0;       // extremes after the transient
    double max_dist = 0.0;
    double final_dist = 0.0;
    long long trailing_sync = 0; // consecutive final steps below sync_tol
    long long steps_run = 0;
    double transverse_factor = 0.0;  // |k(1-2c)|
    bool gate_sync = false;          // analytic gate: transverse_factor < 1
};

/// Classifies an orbit as Synchronized / Intermittent / Undetermined.
///
/// Synchronized: distance below sync_tol for the final 100 steps of the
/// horizon, and the analytic gate |k(1-2c)| < 1 agrees (this blocks
/// floating-point pseudo-synchronization of expanding regimes).
/// Intermittent: after the transient, at least min_alternations cycles of
/// entering O_{eps_enter} and later exiting past r0; the verdict is final as
/// soon as the count is reached.
template <class Real = double>
RegimeReport classify_regime(const Lattice& lat, const std::vector<double>& s0,
                             const RegimeParams& p, DistanceMetric metric = DistanceMetric::pairwise_max) {
    p.validate();
    OrbitEngine<Real> engine(lat, s0);
    RegimeReport rep;
    rep.transverse_factor = lat.map.slope_magnitude() * std::abs(1.0 - 2.0 * lat.c);
    rep.gate_sync = rep.transverse_factor < 1.0;

    double dist = engine.distance(metric);
    rep.min_dist = std::numeric_limits<double>::infinity();
    rep.max_dist = 0.0;
    bool inside = false;
    long long step_idx = 0;
    for (; step_idx < p.horizon; ++step_idx) {
        engine.advance();
        dist = engine.distance(metric);
        if (step_idx + 1 > p.transient) {
            rep.min_dist = std::min(rep.min_dist, dist);
            rep.max_dist = std::max(rep.max_dist, dist);
            if (!inside && dist < p.eps_enter) inside = true;
            else if (inside && dist >= p.r0) {
                inside = false;
                if (++rep.alternations >= p.min_alternations) {
                    rep.regime = Regime::Intermittent;
                    rep.final_dist = dist;
                    rep.steps_run = step_idx + 1;
                    return rep;
                }
            }
        }
        if (dist < p.sync_tol) ++rep.trailing_sync;
        else rep.trailing_sync = 0;
    }
    rep.final_dist = dist;
    rep.steps_run = step_idx;
    if (rep.trailing_sync >= 100) rep.regime = rep.gate_sync ? Regime::Synchronized : Regime::Undetermined;
    return rep;
}

// ---------------------------------------------------------------------------
// Escape times
// ---------------------------------------------------------------------------

/// Uniform draw carrying the full mantissa width of Real. The starting point
/// must be random in every representable bit: orbit entropy is consumed at
/// one bit per step by the expanding maps, and per-step rounding noise only
/// reaches the leading digits after (mantissa width) steps. Specialized for
/// BigFloat in precision.hpp.
template <class Real>
Real uniform01_real(Rng& rng) {
    return Real(uniform01(rng));
}

struct EscapeStats {
    double c = 0.0;
    int trials = 0;
    double mean_steps = 0.0;
    double stddev = 0.0;
    double theoretical = 0.0;  // ln(outer/inner) / lambda_perp
    int excluded = 0;          // trials that never escaped within the step cap
};

/// Mean time for an orbit started a transverse offset `inner` from the
/// diagonal to exceed distance `outer` (pairwise metric). Trials start at
/// (u, u + delta) with u uniform and |delta| = inner, random sign: the
/// transverse direction is the unstable one, so offsets are placed there.
/// Run with Real = BigFloat for offsets near 1e-12.
template <class Real>
EscapeStats escape_time(const Lattice& lat, double inner, double outer, int trials,
                        std::uint64_t seed, long long max_steps = 10000000) {
    if (lat.topology.kind != Topology::two_node) throw usage_error("escape_time: two-node lattices only");
    if (!(inner > 0.0 && inner < outer && outer < 1.0)) throw usage_error("escape_time: need 0 < inner < outer < 1");
    EscapeStats st;
    st.c = lat.c;
    const LyapunovPair lam = lyapunov_analytic(lat.map.slope_magnitude(), lat.c);
    if (!(lam.transverse > 0.0))
        throw usage_error("escape_time: requires an intermittent-regime coupling (|k(1-2c)| > 1)");
    st.theoretical = std::log(outer / inner) / lam.transverse;

    double mean = 0.0, m2 = 0.0;
    int done = 0;
    std::vector<Real> x(2), fbuf;
    for (int t = 0; t < trials; ++t) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
        const Real u = Real(inner) + uniform01_real<Real>(rng) * Real(1.0 - 2.0 * inner);
        const double sign = (rng() & 1) ? 1.0 : -1.0;
        x[0] = u;
        x[1] = u + Real(sign * inner);
        long long n = 0;
        bool escaped = false;
        while (n < max_steps) {
            step_in_place(lat, x, fbuf);
            ++n;
            using std::abs;
            if (static_cast<double>(abs(x[0] - x[1])) > outer) {
                escaped = true;
                break;
            }
        }
        if (!escaped) {
            ++st.excluded;
            continue;
        }
        ++done;
        const double d = static_cast<double>(n) - mean;
        mean += d / done;
        m2 += d * (static_cast<double>(n) - mean);
    }
    st.trials = done;
    st.mean_steps = mean;
    st.stddev = done > 1 ? std::sqrt(m2 / (done - 1)) : 0.0;
    return st;
}

// ---------------------------------------------------------------------------
// Empirical densities
// ---------------------------------------------------------------------------

/// Normalized 2-D occupation histogram of an orbit.
struct DensityHistogram {
    int bins_per_axis = 0;
    std::vector<long long> counts;  // row-major, rows indexed by x2 from the bottom
    long long total = 0;

    long long at(int ix, int iy) const {
        return counts[static_cast<std::size_t>(iy) * bins_per_axis + ix];
    }
    double mass(int ix, int iy) const {
        return static_cast<double>(at(ix, iy)) / static_cast<double>(total);
    }
};

template <class Real = double>
DensityHistogram empirical_density(const Lattice& lat, const std::vector<double>& s0,
                                   long long steps, long long burn_in, int bins) {
    if (lat.topology.kind != Topology::two_node) throw usage_error("empirical_density: two-node lattices only");
    if (bins < 1 || steps < 1) throw usage_error("empirical_density: bad bin or step count");
    OrbitEngine<Real> engine(lat, s0);
    for (long long i = 0; i < burn_in; ++i) engine.advance();
    DensityHistogram h;
    h.bins_per_axis = bins;
    h.counts.assign(static_cast<std::size_t>(bins) * bins, 0);
    for (long long i = 0; i < steps; ++i) {
        const double x = engine.coordinate(0);
        const double y = engine.coordinate(1);
        const int ix = std::min(bins - 1, static_cast<int>(x * bins));
        const int iy = std::min(bins - 1, static_cast<int>(y * bins));
        ++h.counts[static_cast<std::size_t>(iy) * bins + ix];
        engine.advance();
    }
    h.total = steps;
    return h;
}

/// L1 distance between normalized histograms; lies in [0,2].
inline double density_distance(const DensityHistogram& a, const DensityHistogram& b) {
    if (a.bins_per_axis != b.bins_per_axis) throw usage_error("density_distance: bin grids differ");
    KahanSum acc;
    for (std::size_t i = 0; i < a.counts.size(); ++i)
        acc.add(std::abs(static_cast<double>(a.counts[i]) / a.total -
                         static_cast<double>(b.counts[i]) / b.total));
    return acc.value();
}

// ---------------------------------------------------------------------------
// Orbits
// ---------------------------------------------------------------------------

/// Runs `steps` iterations, recording every sample_every-th state (step 0
/// included) with its diagonal distance and, optionally, the branch index of
/// every coordinate.
template <class Real = double>
TrajectoryRecord orbit(const Lattice& lat, const std::vector<double>& s0, long long steps,
                       int sample_every = 1, DistanceMetric metric = DistanceMetric::pairwise_max,
                       bool with_itinerary = false) {
    if (steps < 0 || sample_every < 1) throw usage_error("orbit: bad steps or sampling stride");
    OrbitEngine<Real> engine(lat, s0);
    TrajectoryRecord rec;
    rec.steps = steps;
    rec.sample_every = sample_every;
    rec.digit_mode = engine.digit_mode();
    if (rec.digit_mode)
        rec.notes.push_back("c = 0: exact digit-stream orbit of a generic point seeded from s0");
    for (long long i = 0;; ++i) {
        if (i % sample_every == 0 || i == steps) {
            std::vector<double> s = engine.snapshot();
            rec.distances.push_back(diagonal_distance(s, metric));
            if (with_itinerary) {
                std::vector<int> cells(s.size());
                for (std::size_t k = 0; k < s.size(); ++k) cells[k] = branch_index(lat.map, s[k]);
                rec.itinerary.push_back(std::move(cells));
            }
            rec.states.push_back(std::move(s));
        }
        if (i == steps) break;
        engine.advance();
    }
    return rec;
}

}  // namespace cml
