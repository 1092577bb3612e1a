#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cml/common.hpp"

namespace cml {

/// pairwise_max is |x1 - x2| for two nodes (the form the transition results
/// are stated in); euclidean_to_diagonal is the straight-line distance to
/// the synchronization set {x1 = ... = xn}.
enum class DistanceMetric { pairwise_max, euclidean_to_diagonal };

inline const char* to_string(DistanceMetric m) {
    return m == DistanceMetric::pairwise_max ? "pairwise_max" : "euclidean_to_diagonal";
}

inline DistanceMetric parse_metric(const std::string& s) {
    if (s == "pairwise_max") return DistanceMetric::pairwise_max;
    if (s == "euclidean_to_diagonal") return DistanceMetric::euclidean_to_diagonal;
    throw config_error("unknown distance metric: " + s);
}

template <class Real>
double diagonal_distance(const std::vector<Real>& x, DistanceMetric metric) {
    if (metric == DistanceMetric::pairwise_max) {
        Real lo = x[0], hi = x[0];
        for (const Real& v : x) {
            if (v < lo) lo = v;
            if (v > hi) hi = v;
        }
        return static_cast<double>(hi - lo);
    }
    Real mean(0);
    for (const Real& v : x) mean += v;
    mean /= Real(static_cast<double>(x.size()));
    Real ss(0);
    for (const Real& v : x) {
        const Real d = v - mean;
        ss += d * d;
    }
    using std::sqrt;
    return static_cast<double>(sqrt(ss));
}

inline double diagonal_distance(const std::vector<double>& x, DistanceMetric metric) {
    return diagonal_distance<double>(x, metric);
}

}  // namespace cml
