#pragma once

// Two-segment Gaussian signal model: Y_i = theta_i + eta_i with
// theta_i = theta_minus for i <= c and theta_plus afterwards,
// eta_i ~ N(0, sigma^2 I_d).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "smoothcp/error.hpp"
#include "smoothcp/random.hpp"

namespace smoothcp {

/// Dense n x d observation matrix, row i holds the i-th signal.
class SignalMatrix {
public:
    SignalMatrix(std::size_t n, std::size_t d, std::vector<double> values)
        : n_(n), d_(d), values_(std::move(values)) {
        detail::require(n_ >= 4, "SignalMatrix: need n >= 4 rows");
        detail::require(d_ >= 1, "SignalMatrix: need d >= 1 columns");
        detail::require(values_.size() == n_ * d_, "SignalMatrix: value count must equal n*d");
        detail::require(std::all_of(values_.begin(), values_.end(),
                                    [](double v) { return std::isfinite(v); }),
                        "SignalMatrix: entries must be finite");
    }

    static SignalMatrix zeros(std::size_t n, std::size_t d) {
        return SignalMatrix(n, d, std::vector<double>(n * d, 0.0));
    }

    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return d_; }

    /// Zero-based access.
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * d_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * d_, d_};
    }

    std::span<const double> values() const noexcept { return values_; }

    /// Rows listed in `indices` (zero-based), in the given order.
    SignalMatrix select_rows(std::span<const std::size_t> indices) const {
        std::vector<double> out;
        out.reserve(indices.size() * d_);
        for (std::size_t i : indices) {
            detail::require(i < n_, "select_rows: index out of range");
            auto r = row(i);
            out.insert(out.end(), r.begin(), r.end());
        }
        return SignalMatrix(indices.size(), d_, std::move(out));
    }

    friend bool operator==(const SignalMatrix&, const SignalMatrix&) = default;

private:
    std::size_t n_;
    std::size_t d_;
    std::vector<double> values_;
};

struct ModelSpec {
    std::size_t n = 0;
    std::size_t d = 0;
    double tau = 0.5;
    std::vector<double> theta_minus;
    std::vector<double> theta_plus;
    double sigma = 1.0;
};

struct SobolevClass {
    double s;
    double L;

    SobolevClass(double smoothness, double radius) : s(smoothness), L(radius) {
        detail::require(s > 0.0 && L > 0.0, "SobolevClass: need s > 0 and L > 0");
    }
};

/// Number of rows drawn from theta_minus: round(n * tau). Throws unless it lies in [1, n-1].
inline std::size_t change_index(std::size_t n, double tau) {
    detail::require(std::isfinite(tau) && tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
    const double c = std::round(static_cast<double>(n) * tau);
    detail::require(c >= 1.0 && c <= static_cast<double>(n) - 1.0,
                    "change index round(n*tau) must lie in [1, n-1]");
    return static_cast<std::size_t>(c);
}

inline void validate(const ModelSpec& spec) {
    detail::require(spec.n >= 4, "ModelSpec: need n >= 4");
    detail::require(spec.d >= 1, "ModelSpec: need d >= 1");
    detail::require(spec.theta_minus.size() == spec.d && spec.theta_plus.size() == spec.d,
                    "ModelSpec: theta_minus and theta_plus must have length d");
    detail::require(std::isfinite(spec.sigma) && spec.sigma >= 0.0, "ModelSpec: need sigma >= 0");
    auto finite = [](double v) { return std::isfinite(v); };
    detail::require(std::all_of(spec.theta_minus.begin(), spec.theta_minus.end(), finite) &&
                        std::all_of(spec.theta_plus.begin(), spec.theta_plus.end(), finite),
                    "ModelSpec: means must be finite");
    (void)change_index(spec.n, spec.tau);
}

inline std::size_t change_index(const ModelSpec& spec) { return change_index(spec.n, spec.tau); }

/// Draws one sample. Identical (spec, seed) pairs give bit-identical matrices.
inline SignalMatrix generate_sample(const ModelSpec& spec, std::uint64_t seed) {
    validate(spec);
    const std::size_t c = change_index(spec);
    Engine rng = make_engine(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> values(spec.n * spec.d);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const auto& mean = i < c ? spec.theta_minus : spec.theta_plus;
        for (std::size_t j = 0; j < spec.d; ++j) {
            double v = mean[j];
            if (spec.sigma > 0.0) v += spec.sigma * noise(rng);
            values[i * spec.d + j] = v;
        }
    }
    return SignalMatrix(spec.n, spec.d, std::move(values));
}

/// Squared gap over the first T coordinates; T = d gives the full squared distance.
inline double gap_squared(const ModelSpec& spec, std::size_t T) {
    detail::require(spec.theta_minus.size() == spec.theta_plus.size(),
                    "gap_squared: mean vectors differ in length");
    detail::require(T >= 1 && T <= spec.theta_minus.size(), "gap_squared: need 1 <= T <= d");
    double acc = 0.0;
    for (std::size_t j = 0; j < T; ++j) {
        const double diff = spec.theta_minus[j] - spec.theta_plus[j];
        acc += diff * diff;
    }
    return acc;
}

/// sigma^2/(n gap) * max(1, sigma^2 T/(n gap)). +inf for a zero gap with noise, 0 without noise.
inline double rate_psi(std::size_t n, std::size_t T, double delta_T_sq, double sigma) {
    detail::require(n >= 1 && T >= 1, "rate_psi: need n >= 1 and T >= 1");
    detail::require(delta_T_sq >= 0.0 && sigma >= 0.0, "rate_psi: need gap >= 0 and sigma >= 0");
    if (sigma == 0.0) return 0.0;
    if (delta_T_sq == 0.0) return std::numeric_limits<double>::infinity();
    const double base = sigma * sigma / (static_cast<double>(n) * delta_T_sq);
    return base * std::max(1.0, base * static_cast<double>(T));
}

/// max over K in 1..d of K^{2s} * sum_{k >= K} theta_k^2 (one-based K).
/// theta is in the Sobolev ball of radius L iff the result is <= L^2.
inline double sobolev_sup(std::span<const double> theta, double s) {
    detail::require(s > 0.0, "sobolev_sup: need s > 0");
    double tail = 0.0;
    double best = 0.0;
    for (std::size_t k = theta.size(); k-- > 0;) {
        tail += theta[k] * theta[k];
        best = std::max(best, std::pow(static_cast<double>(k + 1), 2.0 * s) * tail);
    }
    return best;
}

inline bool in_sobolev_class(std::span<const double> theta, const SobolevClass& cls) {
    return sobolev_sup(theta, cls.s) <= cls.L * cls.L;
}

} // namespace smoothcp
