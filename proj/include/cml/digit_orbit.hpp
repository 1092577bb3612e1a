#pragma once

#include <cstdint>
#include <vector>

#include "cml/maps.hpp"
#include "cml/rng.hpp"

namespace cml {

/// Exact orbit sampler for the uncoupled (c = 0) integer-slope maps.
///
/// A coordinate is represented as x = (u + t) / 2^64 where u is a 64-bit
/// register and t in [0,1) is the unread tail of the binary expansion,
/// modeled as uniform. For f(x) = frac(k*x) with integer k >= 2 the tail
/// contributes floor(k*t), which is uniform on {0..k-1} and independent of
/// the new tail {k*t}, so
///     u' = k*u + r,   r ~ U{0..k-1}
/// advances the register exactly. Branches of the form 1 - frac(k*x)
/// (negative slopes, falling tent branch) complement the register bitwise.
///
/// This reproduces the statistics of a Lebesgue-generic initial point for
/// arbitrarily many steps; a fixed-mantissa float would reach 0 after
/// (mantissa width) iterations of the shift map and stay there.
class DigitOrbit {
public:
    DigitOrbit(const PiecewiseLinearMap& map, const std::vector<double>& s0, std::uint64_t tail_seed)
        : map_(&map), rng_(tail_seed) {
        regs_.reserve(s0.size());
        for (double x : s0) {
            if (x < 0.0) x = 0.0;
            if (x >= 1.0) x = 0.9999999999999999;  // largest double below 1
            regs_.push_back(static_cast<std::uint64_t>(x * 0x1.0p64));
        }
    }

    std::size_t size() const { return regs_.size(); }

    double value(std::size_t i) const {
        return static_cast<double>(regs_[i] >> 11) * 0x1.0p-53;
    }

    std::vector<double> values() const {
        std::vector<double> v(regs_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = value(i);
        return v;
    }

    void advance() {
        for (std::uint64_t& u : regs_) u = step_register(u);
    }

private:
    std::uint64_t step_register(std::uint64_t u) {
        switch (map_->kind) {
            case MapKind::doubling2:
                return 2 * u + draw(2);
            case MapKind::triple3:
                return 3 * u + draw(3);
            case MapKind::neg_triple3:
                return ~(3 * u + draw(3));
            case MapKind::tent2:
                // Rising branch below 1/2 (top bit clear), falling branch above.
                if (u >> 63)
                    return ~(2 * u + draw(2));
                return 2 * u + draw(2);
        }
        return u;
    }

    std::uint64_t draw(std::uint64_t k) {
        if (k == 2) return rng_() >> 63;
        // k == 3: rejection from 2 random bits
        for (;;) {
            const std::uint64_t r = rng_() >> 62;
            if (r < 3) return r;
        }
    }

    const PiecewiseLinearMap* map_;
    std::vector<std::uint64_t> regs_;
    Rng rng_;
};

}  // namespace cml
