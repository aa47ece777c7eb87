#pragma once

// Selection of the truncation level T.
//
// The off-line surrogate Z_j = mean_j(all rows) - (2/n) sum_{i <= n/2} Y_ij is a
// Gaussian sequence with signal proportional to theta_plus - theta_minus and
// per-coordinate noise variance sigma^2/n. Lepski's rule picks the smallest k
// such that every window sum_{m..j} Z_l^2 with k <= m <= j stays under
// C_L * j * (sigma^2/n) * ln(max(d, n)). Two data-driven alternatives are
// provided: a two-regime split of Z (method 1) and the T minimising the
// subsampling variance of tau_hat (method 2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "smoothcp/error.hpp"
#include "smoothcp/estimator.hpp"
#include "smoothcp/model.hpp"
#include "smoothcp/random.hpp"

namespace smoothcp {

struct SurrogateVector {
    std::vector<double> z;
    /// Noise variance of each coordinate, sigma^2 / n.
    double nu_sq = 0.0;
};

struct LepskiConfig {
    static constexpr double default_c_lepski = 16.0;

    double c_lepski = default_c_lepski;

    explicit LepskiConfig(double c = default_c_lepski) : c_lepski(c) {
        detail::require(std::isfinite(c) && c > 0.0, "LepskiConfig: c_lepski must be positive");
    }

    /// ln(max(d, n)).
    static double log_scale(std::size_t n, std::size_t d) {
        return std::log(static_cast<double>(std::max(n, d)));
    }

    /// Right-hand side of the window condition at upper index j (one-based).
    double threshold(std::size_t j, double nu_sq, std::size_t n, std::size_t d) const {
        return c_lepski * static_cast<double>(j) * nu_sq * log_scale(n, d);
    }
};

/// For odd n the first floor(n/2) rows are used with the same 2/n weight.
inline SurrogateVector surrogate(const SignalMatrix& Y, double sigma) {
    detail::require(std::isfinite(sigma) && sigma >= 0.0, "surrogate: sigma must be >= 0");
    const std::size_t n = Y.rows();
    const std::size_t d = Y.cols();
    const std::size_t half = n / 2;
    const double inv_n = 1.0 / static_cast<double>(n);
    SurrogateVector out;
    out.z.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double first = 0.0, second = 0.0;
        for (std::size_t i = 0; i < half; ++i) first += Y(i, j);
        for (std::size_t i = half; i < n; ++i) second += Y(i, j);
        // (1/n) sum_all - (2/n) sum_first == (1/n) (sum_second - sum_first)
        out.z[j] = (second - first) * inv_n;
    }
    out.nu_sq = sigma * sigma * inv_n;
    return out;
}

/// Lepski's truncation level in O(d).
///
/// With C[k] = sum_{l <= k} Z_l^2 the widest window for a fixed j starts at m = k,
/// so k is admissible iff C[k-1] >= max_{j >= k} (C[j] - thr(j)). Returns d when no
/// k in 1..d is admissible.
inline std::size_t lepski_select(const SurrogateVector& z, const LepskiConfig& config, std::size_t n,
                                 std::size_t d) {
    detail::require(d == z.z.size() && d >= 1, "lepski_select: d must equal the surrogate length");
    std::vector<double> cumulative(d + 1, 0.0);
    for (std::size_t j = 1; j <= d; ++j) cumulative[j] = cumulative[j - 1] + z.z[j - 1] * z.z[j - 1];

    std::size_t best = d + 1;
    double suffix_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = d; k >= 1; --k) {
        suffix_max = std::max(suffix_max, cumulative[k] - config.threshold(k, z.nu_sq, n, d));
        if (cumulative[k - 1] >= suffix_max) best = k;
    }
    return best <= d ? best : d;
}

/// Smallest minimiser of the two-regime within-group dispersion V(T), T in 1..d.
inline std::size_t method1_select(const SurrogateVector& z) {
    const std::size_t d = z.z.size();
    detail::require(d >= 1, "method1_select: empty surrogate");
    // Deviations are taken relative to the segment's first entry so that a
    // constant segment contributes exactly zero.
    auto dispersion = [&](std::size_t begin, std::size_t end) {
        if (begin >= end) return 0.0;
        const double anchor = z.z[begin];
        double mean = 0.0;
        for (std::size_t j = begin; j < end; ++j) mean += z.z[j] - anchor;
        mean /= static_cast<double>(end - begin);
        double acc = 0.0;
        for (std::size_t j = begin; j < end; ++j) {
            const double dev = z.z[j] - anchor - mean;
            acc += dev * dev;
        }
        return acc;
    };
    std::size_t best_T = 1;
    double best_V = std::numeric_limits<double>::infinity();
    for (std::size_t T = 1; T <= d; ++T) {
        const double V = dispersion(0, T) + dispersion(T, d);
        if (V < best_V) {
            best_V = V;
            best_T = T;
        }
    }
    return best_T;
}

/// `count` sorted subsets of {0, ..., n-1}, each of size `size`, drawn without replacement.
inline std::vector<std::vector<std::size_t>> draw_subsets(std::size_t n, std::size_t size, std::size_t count,
                                                          std::uint64_t seed) {
    detail::require(size <= n, "draw_subsets: subset larger than population");
    Engine rng = make_engine(seed);
    std::vector<std::size_t> pool(n);
    std::vector<std::vector<std::size_t>> subsets;
    subsets.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < size; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));
        std::sort(chosen.begin(), chosen.end());
        subsets.push_back(std::move(chosen));
    }
    return subsets;
}

/// Unbiased sample variance. Deviations are measured from the first value so
/// identical inputs yield exactly zero.
inline double sample_variance(std::span<const double> values) {
    detail::require(values.size() >= 2, "sample_variance: need at least two values");
    const double anchor = values.front();
    double mean = 0.0;
    for (double v : values) mean += v - anchor;
    mean /= static_cast<double>(values.size());
    double acc = 0.0;
    for (double v : values) acc += (v - anchor - mean) * (v - anchor - mean);
    return acc / static_cast<double>(values.size() - 1);
}

struct SubsamplingSettings {
    std::size_t n_sub = 100;
    double frac = 0.8;
};

namespace detail {

inline std::size_t subsample_size(std::size_t n, const SubsamplingSettings& settings) {
    require(settings.n_sub >= 2, "method2: need n_sub >= 2");
    require(std::isfinite(settings.frac) && settings.frac > 0.0 && settings.frac < 1.0,
            "method2: frac must lie in (0, 1)");
    const auto m = static_cast<std::size_t>(std::floor(settings.frac * static_cast<double>(n)));
    require(m >= 4, "method2: subsample must contain at least 4 rows");
    return m;
}

} // namespace detail

/// Variance of tau_hat(T) across the subsamples, for T = 1..d (element T-1).
/// The same subsets serve every T.
inline std::vector<double> method2_variances(const SignalMatrix& Y, const SubsamplingSettings& settings,
                                             std::uint64_t seed) {
    const std::size_t n = Y.rows();
    const std::size_t d = Y.cols();
    const std::size_t m = detail::subsample_size(n, settings);
    const auto subsets = draw_subsets(n, m, settings.n_sub, seed);

    std::vector<std::size_t> all_T(d);
    std::iota(all_T.begin(), all_T.end(), std::size_t{1});

    // estimates[T-1][s]
    std::vector<std::vector<double>> estimates(d, std::vector<double>(subsets.size(), 0.0));
    for (std::size_t s = 0; s < subsets.size(); ++s) {
        const auto fits = sweep_estimate(Y.select_rows(subsets[s]), all_T);
        for (std::size_t t = 0; t < d; ++t) estimates[t][s] = fits[t].tau_hat;
    }

    std::vector<double> variances(d);
    for (std::size_t t = 0; t < d; ++t) variances[t] = sample_variance(estimates[t]);
    return variances;
}

/// Smallest T minimising the subsampling variance of tau_hat.
/// `sigma` is accepted for symmetry with the other selectors; the criterion does not use it.
inline std::size_t method2_select(const SignalMatrix& Y, [[maybe_unused]] double sigma, std::size_t n_sub,
                                  double frac, std::uint64_t seed) {
    const auto variances = method2_variances(Y, SubsamplingSettings{n_sub, frac}, seed);
    std::size_t best = 0;
    for (std::size_t t = 1; t < variances.size(); ++t)
        if (variances[t] < variances[best]) best = t;
    return best + 1;
}

/// tau_hat at Lepski's truncation level of the surrogate.
inline ChangePointFit estimate_adaptive(const SignalMatrix& Y, double sigma, const LepskiConfig& config) {
    const auto T = lepski_select(surrogate(Y, sigma), config, Y.rows(), Y.cols());
    return estimate_tau(Y, T);
}

} // namespace smoothcp
