#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "smoothcp/error.hpp"

namespace smoothcp {

// Tail bounds ---------------------------------------------------------------

/// P(|N| > x) <= 2 exp(-x^2/2) for standard normal N, capped at 1.
inline double gaussian_tail_bound(double x) {
    detail::require(x >= 0.0, "gaussian_tail_bound: x must be >= 0");
    return std::min(1.0, 2.0 * std::exp(-x * x / 2.0));
}

/// P(U >= u^2) <= exp(-u^2/8) for U ~ chi^2_k; only claimed for u^2 >= 4k.
inline double chi_square_tail_bound(int k, double u_sq) {
    detail::require(k >= 1, "chi_square_tail_bound: k must be >= 1");
    detail::require(u_sq >= 4.0 * k, "chi_square_tail_bound: bound only holds for u^2 >= 4k");
    return std::exp(-u_sq / 8.0);
}

/// P(U - k > z) <= exp(-z^2/(16k)) for U ~ chi^2_k.
inline double chi_square_moderate_bound(int k, double z) {
    detail::require(k >= 1, "chi_square_moderate_bound: k must be >= 1");
    detail::require(z > 0.0, "chi_square_moderate_bound: z must be > 0");
    return std::exp(-z * z / (16.0 * k));
}

// Descriptive statistics ----------------------------------------------------

struct SummaryStats {
    double mean = 0.0;
    double median = 0.0;
    double variance = 0.0;  // unbiased; 0 for a single value
    double std_dev = 0.0;
    std::size_t count = 0;
};

inline SummaryStats summarize(std::span<const double> values) {
    detail::require(!values.empty(), "summarize: empty input");
    SummaryStats out;
    out.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(out.count);
    if (out.count > 1) {
        double acc = 0.0;
        for (double v : values) acc += (v - out.mean) * (v - out.mean);
        out.variance = acc / static_cast<double>(out.count - 1);
    }
    out.std_dev = std::sqrt(out.variance);

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = out.count / 2;
    out.median = out.count % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    return out;
}

/// Standard error of the mean.
inline double standard_error(const SummaryStats& s) {
    return s.std_dev / std::sqrt(static_cast<double>(s.count));
}

// Regression ----------------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    detail::require(xs.size() == ys.size(), "fit_line: xs and ys differ in length");
    detail::require(xs.size() >= 2, "fit_line: need at least two points");
    detail::require(std::any_of(xs.begin(), xs.end(), [&](double x) { return x != xs.front(); }),
                    "fit_line: xs are all identical");
    const auto count = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= count;
    my /= count;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    detail::require(sxx > 0.0, "fit_line: xs are all identical");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

} // namespace smoothcp
