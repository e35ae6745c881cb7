#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ecg/errors.hpp"

namespace ecg::stats {

/// Median with the mean of the two middle values for even sizes.
inline double median(std::vector<double> v) {
    if (v.empty()) throw InvalidInput("median of an empty sequence");
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    return m;
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw InvalidInput("mean of an empty sequence");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double population_std(const std::vector<double>& v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace ecg::stats
