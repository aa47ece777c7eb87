#pragma once

// Independent reference computations used only by the tests. None of these
// share code paths with the library routines they check.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "smoothcp/model.hpp"

namespace oracle {

/// Definitional Lepski rule: smallest k such that every window sum over
/// k <= m <= j <= d stays below c * j * nu_sq * ln(max(d, n)); d if none.
inline std::size_t lepski_triple_loop(std::span<const double> z, double c, double nu_sq, std::size_t n) {
    const std::size_t d = z.size();
    const double log_scale = std::log(static_cast<double>(std::max(n, d)));
    for (std::size_t k = 1; k <= d; ++k) {
        bool ok = true;
        for (std::size_t j = k; j <= d && ok; ++j)
            for (std::size_t m = k; m <= j && ok; ++m) {
                double window = 0.0;
                for (std::size_t l = m; l <= j; ++l) window += z[l - 1] * z[l - 1];
                if (window > c * static_cast<double>(j) * nu_sq * log_scale) ok = false;
            }
        if (ok) return k;
    }
    return d;
}

/// V(T) for T = 1..d by plain means.
inline std::vector<double> method1_criterion(std::span<const double> z) {
    const std::size_t d = z.size();
    std::vector<double> V(d);
    for (std::size_t T = 1; T <= d; ++T) {
        double head = 0.0, tail = 0.0;
        for (std::size_t j = 0; j < T; ++j) head += z[j];
        head /= static_cast<double>(T);
        for (std::size_t j = T; j < d; ++j) tail += z[j];
        if (T < d) tail /= static_cast<double>(d - T);
        double v = 0.0;
        for (std::size_t j = 0; j < T; ++j) v += (z[j] - head) * (z[j] - head);
        for (std::size_t j = T; j < d; ++j) v += (z[j] - tail) * (z[j] - tail);
        V[T - 1] = v;
    }
    return V;
}

inline std::size_t argmin_first(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[best]) best = i;
    return best;
}

/// Smallest k in {2..n-2} minimising the two-segment SSE over the first T columns,
/// evaluated by explicit loops.
inline std::size_t kmeans_split(const smoothcp::SignalMatrix& Y, std::size_t T) {
    const std::size_t n = Y.rows();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 2; k + 2 <= n; ++k) {
        double sse = 0.0;
        for (std::size_t j = 0; j < T; ++j) {
            for (auto [lo, hi] : {std::pair{std::size_t{0}, k}, std::pair{k, n}}) {
                double mean = 0.0;
                for (std::size_t i = lo; i < hi; ++i) mean += Y(i, j);
                mean /= static_cast<double>(hi - lo);
                for (std::size_t i = lo; i < hi; ++i) sse += (Y(i, j) - mean) * (Y(i, j) - mean);
            }
        }
        if (best_k == 0 || sse < best - 1e-9 * std::max(1.0, std::abs(best))) {
            best = sse;
            best_k = k;
        }
    }
    return best_k;
}

struct Line {
    double slope;
    double intercept;
};

/// Solves the 2x2 normal equations by Cramer's rule on raw moments.
inline Line normal_equations(std::span<const double> xs, std::span<const double> ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double det = n * sxx - sx * sx;
    return {(n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det};
}

/// Sum of k squared standard normals.
template <typename Rng>
double chi_square_draw(int k, Rng& rng) {
    std::normal_distribution<double> g;
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
        const double x = g(rng);
        s += x * x;
    }
    return s;
}

/// Uniform random matrix with entries in [-scale, scale].
template <typename Rng>
smoothcp::SignalMatrix random_matrix(std::size_t n, std::size_t d, double scale, Rng& rng) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n * d);
    for (auto& x : v) x = u(rng);
    return smoothcp::SignalMatrix(n, d, std::move(v));
}

} // namespace oracle
