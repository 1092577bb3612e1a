#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace cml {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy. The CLI maps config_error to exit code 2 and
// cap_exceeded to exit code 3; everything else is a hard failure.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct feasibility_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Signals a bug (state escaped its invariant), not bad user input.
struct internal_error : std::logic_error {
    using std::logic_error::logic_error;
};
// A configured runtime cap was hit; partial results may still be usable.
struct cap_exceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Compensated (Kahan) accumulator for long sums of small terms.
class KahanSum {
public:
    void add(double v) {
        const double y = v - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double log_base(double base, double x) {
    return std::log(x) / std::log(base);
}

}  // namespace cml
