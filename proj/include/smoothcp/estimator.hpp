#pragma once

// Two-class k-means change-point estimator restricted to the first T coordinates.
//
//   k_hat(T) = argmin_{2 <= k <= n-2}  SSE(rows 1..k) + SSE(rows k+1..n)
//   tau_hat(T) = k_hat(T) / n
//
// Per coordinate j the two-segment SSE is
//   SS_j - A_j(k)^2 / k - (A_j(n) - A_j(k))^2 / (n - k)
// where A_j are prefix sums. Columns are centred before accumulation so the
// identity does not lose digits to a large common offset.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "smoothcp/error.hpp"
#include "smoothcp/model.hpp"

namespace smoothcp {

struct ChangePointFit {
    std::size_t k_hat = 0;
    double tau_hat = 0.0;
    std::size_t T_used = 0;
    /// objective[i] is the criterion at split k = i + 2, for k in {2, ..., n-2}.
    std::vector<double> objective;

    static constexpr std::size_t first_split = 2;

    double objective_at(std::size_t k) const { return objective.at(k - first_split); }

    friend bool operator==(const ChangePointFit&, const ChangePointFit&) = default;
};

/// Column-wise prefix sums of the centred matrix, built once per Y.
class PrefixSums {
public:
    explicit PrefixSums(const SignalMatrix& Y) : PrefixSums(Y, Y.cols()) {}

    /// Only the leading `columns` coordinates are accumulated.
    PrefixSums(const SignalMatrix& Y, std::size_t columns)
        : n_(Y.rows()), d_(columns), mean_(columns, 0.0), sum_sq_(columns, 0.0),
          prefix_((Y.rows() + 1) * columns, 0.0) {
        detail::require(columns >= 1 && columns <= Y.cols(), "PrefixSums: column count out of range");
        for (std::size_t j = 0; j < d_; ++j) {
            double s = 0.0, comp = 0.0;
            for (std::size_t i = 0; i < n_; ++i) neumaier_add(s, comp, Y(i, j));
            mean_[j] = (s + comp) / static_cast<double>(n_);
        }
        for (std::size_t j = 0; j < d_; ++j) {
            double* col = prefix_.data() + j * (n_ + 1);
            double s = 0.0, comp = 0.0, sq = 0.0, sq_comp = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                const double v = Y(i, j) - mean_[j];
                neumaier_add(s, comp, v);
                neumaier_add(sq, sq_comp, v * v);
                col[i + 1] = s + comp;
            }
            sum_sq_[j] = sq + sq_comp;
        }
    }

    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return d_; }

    /// Sum of the first `i` centred entries of column j.
    double centred_prefix(std::size_t i, std::size_t j) const noexcept { return prefix_[j * (n_ + 1) + i]; }

    double column_mean(std::size_t j) const noexcept { return mean_[j]; }

    /// Raw column sum, recovered from the centred prefix.
    double column_sum(std::size_t j) const noexcept {
        return centred_prefix(n_, j) + static_cast<double>(n_) * mean_[j];
    }

    /// Centred sum of squares of column j.
    double centred_sum_sq(std::size_t j) const noexcept { return sum_sq_[j]; }

    /// Two-segment SSE of column j for a split after row k (1 <= k <= n-1).
    double column_cost(std::size_t j, std::size_t k) const noexcept {
        const double head = centred_prefix(k, j);
        const double tail = centred_prefix(n_, j) - head;
        return sum_sq_[j] - head * head / static_cast<double>(k) -
               tail * tail / static_cast<double>(n_ - k);
    }

private:
    static void neumaier_add(double& sum, double& comp, double x) noexcept {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }

    std::size_t n_;
    std::size_t d_;
    std::vector<double> mean_;
    std::vector<double> sum_sq_;
    std::vector<double> prefix_;
};

namespace detail {

inline void check_split_args(std::size_t n, std::size_t d, std::size_t T, std::size_t k) {
    require(T >= 1 && T <= d, "T must lie in [1, d]");
    require(k >= 2 && k + 2 <= n, "k must lie in [2, n-2]");
}

inline ChangePointFit fit_from_trace(std::vector<double> trace, std::size_t n, std::size_t T) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] < trace[best]) best = i;
    ChangePointFit fit;
    fit.k_hat = best + ChangePointFit::first_split;
    fit.tau_hat = static_cast<double>(fit.k_hat) / static_cast<double>(n);
    fit.T_used = T;
    fit.objective = std::move(trace);
    return fit;
}

inline void accumulate_column(const PrefixSums& P, std::size_t j, std::vector<double>& trace) {
    for (std::size_t i = 0; i < trace.size(); ++i)
        trace[i] += P.column_cost(j, i + ChangePointFit::first_split);
}

} // namespace detail

/// Criterion at split k using precomputed prefix sums (coordinates summed in order 1..T).
inline double objective(const PrefixSums& P, std::size_t T, std::size_t k) {
    detail::check_split_args(P.rows(), P.cols(), T, k);
    double acc = 0.0;
    for (std::size_t j = 0; j < T; ++j) acc += P.column_cost(j, k);
    return acc;
}

inline double objective(const SignalMatrix& Y, std::size_t T, std::size_t k) {
    detail::check_split_args(Y.rows(), Y.cols(), T, k);
    return objective(PrefixSums(Y, T), T, k);
}

/// Same criterion by explicit segment means and squared deviations.
inline double objective_bruteforce(const SignalMatrix& Y, std::size_t T, std::size_t k) {
    const std::size_t n = Y.rows();
    detail::check_split_args(n, Y.cols(), T, k);
    double total = 0.0;
    for (std::size_t j = 0; j < T; ++j) {
        double head_mean = 0.0, tail_mean = 0.0;
        for (std::size_t i = 0; i < k; ++i) head_mean += Y(i, j);
        for (std::size_t i = k; i < n; ++i) tail_mean += Y(i, j);
        head_mean /= static_cast<double>(k);
        tail_mean /= static_cast<double>(n - k);
        for (std::size_t i = 0; i < k; ++i) total += (Y(i, j) - head_mean) * (Y(i, j) - head_mean);
        for (std::size_t i = k; i < n; ++i) total += (Y(i, j) - tail_mean) * (Y(i, j) - tail_mean);
    }
    return total;
}

inline ChangePointFit estimate_tau(const PrefixSums& P, std::size_t T) {
    detail::require(T >= 1 && T <= P.cols(), "estimate_tau: T must lie in [1, d]");
    const std::size_t n = P.rows();
    std::vector<double> trace(n - 3, 0.0);
    for (std::size_t j = 0; j < T; ++j) detail::accumulate_column(P, j, trace);
    return detail::fit_from_trace(std::move(trace), n, T);
}

/// k_hat is the smallest minimiser over {2, ..., n-2}.
inline ChangePointFit estimate_tau(const SignalMatrix& Y, std::size_t T) {
    detail::require(T >= 1 && T <= Y.cols(), "estimate_tau: T must lie in [1, d]");
    return estimate_tau(PrefixSums(Y, T), T);
}

/// One fit per entry of T_list, sharing a single pass over the coordinates.
/// Each element is bit-identical to estimate_tau(Y, T_list[t]).
inline std::vector<ChangePointFit> sweep_estimate(const PrefixSums& P, std::span<const std::size_t> T_list) {
    detail::require(!T_list.empty(), "sweep_estimate: T_list must be non-empty");
    for (std::size_t T : T_list)
        detail::require(T >= 1 && T <= P.cols(), "sweep_estimate: every T must lie in [1, d]");

    std::vector<std::size_t> order(T_list.begin(), T_list.end());
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());

    const std::size_t n = P.rows();
    std::vector<double> trace(n - 3, 0.0);
    std::map<std::size_t, ChangePointFit> by_T;
    std::size_t done = 0;
    for (std::size_t T : order) {
        for (; done < T; ++done) detail::accumulate_column(P, done, trace);
        by_T.emplace(T, detail::fit_from_trace(trace, n, T));
    }

    std::vector<ChangePointFit> fits;
    fits.reserve(T_list.size());
    for (std::size_t T : T_list) fits.push_back(by_T.at(T));
    return fits;
}

inline std::vector<ChangePointFit> sweep_estimate(const SignalMatrix& Y, std::span<const std::size_t> T_list) {
    detail::require(!T_list.empty(), "sweep_estimate: T_list must be non-empty");
    const std::size_t max_T = *std::max_element(T_list.begin(), T_list.end());
    detail::require(max_T >= 1 && max_T <= Y.cols(), "sweep_estimate: every T must lie in [1, d]");
    return sweep_estimate(PrefixSums(Y, max_T), T_list);
}

} // namespace smoothcp
