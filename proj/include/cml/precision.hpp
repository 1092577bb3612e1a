#pragma once

#include <cmath>
#include <string>

#include <boost/multiprecision/mpfr.hpp>

#include "cml/common.hpp"
#include "cml/diagnostics.hpp"

namespace cml {

/// Extended-precision real with a runtime-configurable mantissa width.
using BigFloat = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                               boost::multiprecision::et_off>;

/// Arithmetic mode for orbit stepping: plain doubles or BigFloat with the
/// given mantissa width in bits. Selected as "f64" or "big:<bits>".
struct PrecisionMode {
    bool big = false;
    unsigned bits = 128;

    std::string label() const { return big ? "big:" + std::to_string(bits) : "f64"; }

    static PrecisionMode parse(const std::string& s) {
        PrecisionMode m;
        if (s == "f64") return m;
        if (s.rfind("big:", 0) == 0) {
            const std::string tail = s.substr(4);
            try {
                const long v = std::stol(tail);
                if (v < 24 || v > 1000000) throw config_error("precision bits out of range: " + s);
                m.big = true;
                m.bits = static_cast<unsigned>(v);
                return m;
            } catch (const config_error&) {
                throw;
            } catch (...) {
                throw config_error("bad precision spec: " + s);
            }
        }
        throw config_error("bad precision spec (want f64 or big:<bits>): " + s);
    }

    /// Applies the mantissa width to newly constructed BigFloat values.
    void activate() const {
        if (big) {
            const unsigned digits10 = static_cast<unsigned>(std::ceil(bits * 0.30102999566398119521)) + 1;
            BigFloat::default_precision(digits10);
        }
    }
};

/// Fills every bit of the current BigFloat precision with random data.
template <>
inline BigFloat uniform01_real<BigFloat>(Rng& rng) {
    const unsigned digits10 = BigFloat::default_precision();
    const unsigned bits = static_cast<unsigned>(digits10 * 3.3219280948873623) + 64;
    BigFloat v(0);
    BigFloat scale = ldexp(BigFloat(1), -64);
    for (unsigned got = 0; got < bits; got += 64) {
        v += BigFloat(rng()) * scale;
        scale = ldexp(scale, -64);
    }
    if (v >= 1) v = BigFloat(0.5);  // cannot happen; belt against rounding up
    return v;
}

}  // namespace cml
