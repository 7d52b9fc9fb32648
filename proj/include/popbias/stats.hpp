#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "popbias/error.hpp"

namespace popbias {

inline double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Pearson product-moment correlation. Throws UndefinedCorrelationError when
/// either input has zero variance, since the coefficient is 0/0 there.
inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("pearson: length mismatch");
    if (x.size() < 2) throw UndefinedCorrelationError("pearson: need at least two observations");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = x[k] - mx;
        const double dy = y[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw UndefinedCorrelationError(sxx == 0.0 && syy == 0.0 ? "pearson: both inputs are constant"
                                                                 : "pearson: one input is constant");
    }
    return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

struct FiveNumberSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

namespace detail {
inline double sorted_median(std::span<const double> s) {
    const std::size_t n = s.size();
    return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}
}  // namespace detail

/// Tukey hinges: q1/q3 are medians of the lower/upper halves, with the middle
/// observation belonging to both halves when n is odd.
inline FiveNumberSummary five_number_summary(std::span<const double> values) {
    if (values.empty()) throw DataError("five-number summary of an empty sample");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    const std::size_t half = (n + 1) / 2;
    const std::span<const double> all(s);
    FiveNumberSummary out;
    out.min = s.front();
    out.max = s.back();
    out.median = detail::sorted_median(all);
    out.q1 = detail::sorted_median(all.first(half));
    out.q3 = detail::sorted_median(all.last(half));
    out.mean = mean(all);
    return out;
}

}  // namespace popbias
