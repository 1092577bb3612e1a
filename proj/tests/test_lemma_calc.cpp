#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cml/diagnostics.hpp"
#include "cml/lemma_calc.hpp"

using namespace cml;
using Catch::Approx;

namespace {
// Independent long-double evaluation of the constants chain, kept separate
// from the implementation path on purpose.
struct ChainOracle {
    long double d, F, mu_upper;
    long long N0;
};

ChainOracle chain_oracle(long double ep, long double em, int a, int m0, long double delta1, long double mu) {
    const long double L = std::log(em / std::pow((long double)a, 1.0L / m0)) / std::log(ep);
    ChainOracle o{};
    o.mu_upper = 1.0L / (1.0L - L);
    o.d = 1.0L - (1.0L - L) * mu;
    o.F = a * std::pow(em / std::pow((long double)a, 1.0L / m0),
                       1.0L - std::log(delta1) / std::log(ep));
    o.N0 = static_cast<long long>(std::floor(std::log(std::log2(o.F) / o.d) / std::log(mu)));
    return o;
}
}  // namespace

TEST_CASE("expansion rates") {
    auto r = expansion_rates(2.0, 0.1, SetKind::measurable);
    CHECK(r.e_plus == Approx(3.2));
    CHECK(r.e_minus == Approx(3.2));
    CHECK_FALSE(r.contracting_warning);

    r = expansion_rates(3.0, 0.3, SetKind::curve);
    CHECK(r.e_plus == Approx(3.0));
    CHECK(r.e_minus == Approx(1.2));

    r = expansion_rates(2.0, 0.0, SetKind::measurable);
    CHECK(r.e_plus == Approx(4.0));
    r = expansion_rates(2.0, 0.0, SetKind::curve);
    CHECK(r.e_plus == Approx(2.0));
    CHECK(r.e_minus == Approx(2.0));

    // measurable rate = product of the curve rates, both slope families
    for (double slope : {2.0, 3.0})
        for (double c = 0.0; c < 0.5; c += 0.025) {
            const auto m = expansion_rates(slope, c, SetKind::measurable);
            const auto cv = expansion_rates(slope, c, SetKind::curve);
            CHECK(m.e_plus == Approx(cv.e_plus * cv.e_minus).margin(1e-12));
        }

    // a contracting rate is flagged
    CHECK(expansion_rates(2.0, 0.4, SetKind::measurable).contracting_warning);
}

TEST_CASE("mu upper bound") {
    ExpansionRates r;
    r.e_plus = r.e_minus = 4.0;
    CHECK(mu_upper_bound(r, 2, 1) == Approx(2.0));
    CHECK(std::isinf(mu_upper_bound(r, 1, 1)));  // log term reaches 1

    const auto curve = expansion_rates(2.0, 0.1, SetKind::curve);  // (2, 1.6)
    const double bound = mu_upper_bound(curve, 3, 3);              // 3 < 1.6^3 = 4.096
    CHECK(bound > 1.0);
    CHECK(std::isfinite(bound));

    CHECK_THROWS_AS(mu_upper_bound(curve, 5, 3), feasibility_error);  // 5 > 4.096
    CHECK_THROWS_WITH(mu_upper_bound(curve, 5, 3), Catch::Matchers::ContainsSubstring("a < E-(c)^m0"));
}

TEST_CASE("iterative constants") {
    SECTION("worked chain d=0.25, F=8, N0=6") {
        ExpansionRates r;
        r.e_plus = r.e_minus = 4.0;
        const auto rep = iterative_constants(r, {2, 1, 0.25, 1.5});
        CHECK(rep.mu_upper == Approx(2.0));
        CHECK(rep.d == Approx(0.25).margin(1e-15));
        CHECK(rep.F == Approx(8.0).margin(1e-12));
        CHECK(rep.N0 == 6);
        CHECK_FALSE(rep.N0_clamped);
        CHECK(rep.mu1_bound == Approx(0.0625).margin(1e-15));
        // frozen from an independent high-precision evaluation of the product
        CHECK(rep.c1 == Approx(0.5249311071799817).epsilon(1e-12));

        const auto o = chain_oracle(4.0L, 4.0L, 2, 1, 0.25L, 1.5L);
        CHECK(rep.d == Approx(static_cast<double>(o.d)).margin(1e-14));
        CHECK(rep.F == Approx(static_cast<double>(o.F)).margin(1e-12));
        CHECK(rep.N0 == o.N0);
    }
    SECTION("oracle agreement on a parameter grid") {
        for (double slope : {2.0, 3.0})
            for (double c : {0.0, 0.05, 0.1})
                for (int a : {2, 3, 5})
                    for (int m0 : {1, 2, 3}) {
                        const auto rates = expansion_rates(slope, c, SetKind::measurable);
                        if (!(a < std::pow(rates.e_minus, m0))) continue;
                        const double mu_up = mu_upper_bound(rates, a, m0);
                        const double mu = 1.0 + 0.5 * (std::min(mu_up, 3.0) - 1.0);
                        LemmaReport rep;
                        try {
                            rep = iterative_constants(rates, {a, m0, 0.25, mu});
                        } catch (const usage_error&) {
                            continue;  // d <= 0 for this mu
                        }
                        const auto o = chain_oracle(rates.e_plus, rates.e_minus, a, m0, 0.25L, mu);
                        REQUIRE(rep.d == Approx(static_cast<double>(o.d)).margin(1e-12));
                        REQUIRE(rep.F == Approx(static_cast<double>(o.F)).epsilon(1e-12));
                        REQUIRE(rep.N0 == o.N0);
                        REQUIRE(rep.d > 0.0);
                        REQUIRE(rep.F > 1.0);
                        REQUIRE(rep.mu_upper > 1.0);
                        REQUIRE(rep.c1 > 0.0);
                        REQUIRE(rep.c1 < 1.0);
                    }
    }
    SECTION("infeasible a is rejected with the bound named") {
        ExpansionRates r;
        r.e_plus = r.e_minus = 4.0;
        CHECK_THROWS_AS(iterative_constants(r, {4, 1, 0.25, 1.5}), feasibility_error);
        CHECK_THROWS_AS(iterative_constants(r, {5, 1, 0.25, 1.5}), feasibility_error);
    }
    SECTION("N0 clamps at zero in the strong-expansion regime") {
        // large E, tiny F: raw N0 < 0
        ExpansionRates r;
        r.e_plus = r.e_minus = 64.0;
        const auto rep = iterative_constants(r, {2, 1, 0.9, 1.01});
        if (rep.N0 == 0) CHECK((rep.N0_clamped || std::log2(rep.F) / rep.d >= 1.0));
    }
    SECTION("monotonicity of N0 in d and F") {
        // N0 = floor(log_mu(d^-1 log2 F)) is nonincreasing in d, nondecreasing in F
        const double mu = 1.5;
        auto n0 = [&](double d, double F) {
            return std::floor(std::log(std::log2(F) / d) / std::log(mu));
        };
        for (double F : {4.0, 8.0, 32.0, 1024.0}) {
            double prev = 1e9;
            for (double d = 0.05; d < 1.0; d += 0.05) {
                const double v = n0(d, F);
                REQUIRE(v <= prev);
                prev = v;
            }
        }
        for (double d : {0.1, 0.25, 0.6}) {
            double prev = -1e9;
            for (double F = 2.0; F < 4000.0; F *= 2.0) {
                const double v = n0(d, F);
                REQUIRE(v >= prev);
                prev = v;
            }
        }
    }
}

TEST_CASE("k_of_N") {
    ExpansionRates r4;
    r4.e_plus = r4.e_minus = 4.0;
    CHECK(k_of_N(0.25, r4, 0.25) == 0);
    CHECK(k_of_N(1.0 / 64.0, r4, 0.25) == 2);  // floor(-log4(1/16))

    ExpansionRates r2;
    r2.e_plus = r2.e_minus = 2.0;
    CHECK(k_of_N(1.0 / 1024.0, r2, 0.5) == 9);  // floor(-log2(1/512))

    CHECK_THROWS_AS(k_of_N(0.3, r4, 0.25), usage_error);
}

TEST_CASE("critical coupling") {
    CHECK(critical_coupling(2.0) == Approx(0.25));
    CHECK(critical_coupling(3.0) == Approx(1.0 / 3.0));
    CHECK(critical_coupling(1.0 + 1e-9) == Approx(0.0).margin(1e-9));

    // bisection on the analytic transverse exponent agrees to 1e-12
    for (double slope : {2.0, 3.0}) {
        double lo = 0.0, hi = 0.5;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (lyapunov_analytic(slope, mid).transverse > 0.0) lo = mid;
            else hi = mid;
        }
        CHECK(critical_coupling(slope) == Approx(0.5 * (lo + hi)).margin(1e-12));
    }
}

TEST_CASE("tent lattice threshold") {
    // frozen from a 40-digit evaluation
    const double expected[] = {
        0.066987298107780677,   // n=2
        0.021767204306902725,   // n=3
        0.0080025821836423954,  // n=4
        0.0031648113338855104,  // n=5
        0.0013106422896870248,  // n=6
        0.00055991322444036971, // n=7
        0.00024455887901611381, // n=8
        0.000108601250493808,   // n=9
        4.8849595952869209e-05, // n=10
    };
    for (int n = 2; n <= 10; ++n)
        CHECK(tent_lattice_threshold(n) == Approx(expected[n - 2]).epsilon(1e-13));

    double prev = tent_lattice_threshold(2);
    for (int n = 3; n <= 20; ++n) {
        const double v = tent_lattice_threshold(n);
        CHECK(v < prev);
        CHECK(v > 0.0);
        prev = v;
    }
    CHECK_THROWS_AS(tent_lattice_threshold(1), usage_error);
}
