#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "cml/common.hpp"

namespace cml {

enum class SetKind { measurable, curve };

inline const char* to_string(SetKind k) { return k == SetKind::measurable ? "measurable" : "curve"; }

inline SetKind parse_set_kind(const std::string& s) {
    if (s == "measurable") return SetKind::measurable;
    if (s == "curve") return SetKind::curve;
    throw config_error("unknown set kind: " + s);
}

/// Per-step measure (or length) expansion rates of T on one cell.
/// Measurable sets: E+ = E- = k^2 |1-2c|; simple curves: E+ = k,
/// E- = k |1-2c| (the extreme singular values of the cell Jacobian).
struct ExpansionRates {
    double e_plus = 0.0;
    double e_minus = 0.0;
    SetKind set_kind = SetKind::measurable;
    bool contracting_warning = false;  // e_minus <= 1: iterative lemma inapplicable
};

inline ExpansionRates expansion_rates(double slope_magnitude, double c, SetKind kind) {
    if (!(slope_magnitude > 1.0)) throw usage_error("expansion_rates: need |slope| > 1");
    const double shear = std::abs(1.0 - 2.0 * c);
    ExpansionRates r;
    r.set_kind = kind;
    if (kind == SetKind::measurable) {
        r.e_plus = r.e_minus = slope_magnitude * slope_magnitude * shear;
    } else {
        r.e_plus = slope_magnitude;
        r.e_minus = slope_magnitude * shear;
    }
    r.contracting_warning = !(r.e_minus > 1.0);
    return r;
}

namespace detail {
inline void require_feasible(const ExpansionRates& rates, int a, int m0) {
    if (a < 1 || m0 < 1) throw usage_error("lemma params: need a >= 1 and m0 >= 1");
    if (!(static_cast<double>(a) < std::pow(rates.e_minus, m0)))
        throw feasibility_error("iterative lemma requires a < E-(c)^m0 (component growth must lose "
                                "to expansion)");
}
}  // namespace detail

/// Upper bound (1 - log_{E+}(E-/a^{1/m0}))^{-1} for the admissible mu;
/// +inf when the log term reaches 1 (E+ = E- and a = 1).
inline double mu_upper_bound(const ExpansionRates& rates, int a, int m0) {
    detail::require_feasible(rates, a, m0);
    const double L = log_base(rates.e_plus, rates.e_minus / std::pow(a, 1.0 / m0));
    const double denom = 1.0 - L;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / denom;
}

struct LemmaParams {
    int a = 2;
    int m0 = 1;
    double delta1 = 0.25;
    double mu = 1.5;
};

struct LemmaReport {
    double e_plus = 0.0;
    double e_minus = 0.0;
    double mu_upper = 0.0;
    double d = 0.0;
    double F = 0.0;
    long long N0 = 0;
    bool N0_clamped = false;  // raw value was negative (vacuously easy regime)
    double mu1_bound = 0.0;   // mu -> 1 corollary bound for 2^{-mu^N0}
    double c1 = 0.0;          // prod_{j>N0} (1 - F 2^{-d mu^j}), evaluated to convergence
};

/// Evaluates the iterative-lemma constants:
///   d  = 1 - (1 - log_{E+}(E-/a^{1/m0})) mu,
///   F  = a (E-/a^{1/m0})^{1 - log_{E+} delta1},
///   N0 = floor(log_mu(d^{-1} log_2 F)).
/// The infinite product for c1 starts at j = N0 + 1: by the definition of
/// N0 the j = N0 factor is <= 0, so the product as printed would vanish;
/// the recursion only ever uses levels above N0.
inline LemmaReport iterative_constants(const ExpansionRates& rates, const LemmaParams& p) {
    detail::require_feasible(rates, p.a, p.m0);
    if (!(p.delta1 > 0.0 && p.delta1 < 1.0)) throw usage_error("lemma params: need 0 < delta1 < 1");
    LemmaReport rep;
    rep.e_plus = rates.e_plus;
    rep.e_minus = rates.e_minus;
    rep.mu_upper = mu_upper_bound(rates, p.a, p.m0);
    if (!(p.mu > 1.0 && p.mu < rep.mu_upper))
        throw usage_error("lemma params: mu must satisfy 1 < mu < " + std::to_string(rep.mu_upper));

    const double L = log_base(rates.e_plus, rates.e_minus / std::pow(p.a, 1.0 / p.m0));
    rep.d = 1.0 - (1.0 - L) * p.mu;
    if (!(rep.d > 0.0))
        throw usage_error("lemma params: d = 1 - (1 - log_{E+}(E-/a^{1/m0})) mu must be positive");
    rep.F = p.a * std::pow(rates.e_minus / std::pow(p.a, 1.0 / p.m0), 1.0 - log_base(rates.e_plus, p.delta1));

    const double raw = log_base(p.mu, std::log2(rep.F) / rep.d);
    if (raw < 0.0) {
        rep.N0 = 0;
        rep.N0_clamped = true;
    } else {
        rep.N0 = static_cast<long long>(std::floor(raw));
    }
    rep.mu1_bound = L / rep.F;

    double prod = 1.0;
    double mu_pow = std::pow(p.mu, static_cast<double>(rep.N0));
    for (int j = 0; j < 100000; ++j) {
        mu_pow *= p.mu;
        const double term = rep.F * std::exp2(-rep.d * mu_pow);
        prod *= std::max(0.0, 1.0 - term);
        if (term < 1e-16 || prod == 0.0) break;
    }
    rep.c1 = prod;
    return rep;
}

/// k(N) = floor(-log_{E+}(M(Omega) / (delta1 M(D)))) for a measure ratio
/// M(Omega)/M(D) <= delta1.
inline long long k_of_N(double measure_ratio, const ExpansionRates& rates, double delta1) {
    if (!(measure_ratio > 0.0 && measure_ratio <= delta1))
        throw usage_error("k_of_N: measure ratio must lie in (0, delta1]");
    const double v = -log_base(rates.e_plus, measure_ratio / delta1);
    return static_cast<long long>(std::floor(v));
}

/// The coupling where |k(1-2c)| crosses 1: the synchronization /
/// intermittent-synchronization threshold (1/4 for slope 2, 1/3 for 3).
inline double critical_coupling(double slope_magnitude) {
    if (!(slope_magnitude > 1.0)) throw usage_error("critical_coupling: need slope > 1");
    return 0.5 * (1.0 - 1.0 / slope_magnitude);
}

/// Coupling threshold below which the n-node coupled tent lattice stays
/// intermittent: 1/2 - (2^n - 1)^{1/n} / 4. Strictly decreasing, limit 0.
/// Written as -expm1(log1p(-2^-n) / n) / 2, which is the same expression
/// without the catastrophic cancellation near 1/2 - 1/2.
inline double tent_lattice_threshold(int n) {
    if (n < 2) throw usage_error("tent_lattice_threshold: need n >= 2");
    return -std::expm1(std::log1p(-std::exp2(-static_cast<double>(n))) / n) / 2.0;
}

}  // namespace cml
