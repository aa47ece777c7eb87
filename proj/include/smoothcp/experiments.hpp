#pragma once

// Monte Carlo studies of the truncated k-means change-point estimator.
//
// Every trial is keyed by derive_trial_seed(base_seed, trial, n, T, selector),
// so trials can run on any number of workers and the ordered reduction always
// produces the same records.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "smoothcp/error.hpp"
#include "smoothcp/estimator.hpp"
#include "smoothcp/model.hpp"
#include "smoothcp/random.hpp"
#include "smoothcp/smoothing.hpp"
#include "smoothcp/stats.hpp"

namespace smoothcp {

enum class MeanCase { RateModel, CaseA, CaseB };

enum class Selector { FixedT, Lepski, Method1, Method2, Oracle };

inline std::string_view to_string(MeanCase c) {
    switch (c) {
    case MeanCase::RateModel: return "rate";
    case MeanCase::CaseA: return "caseA";
    case MeanCase::CaseB: return "caseB";
    }
    return "?";
}

inline std::string_view to_string(Selector s) {
    switch (s) {
    case Selector::FixedT: return "fixed-T";
    case Selector::Lepski: return "lepski";
    case Selector::Method1: return "method1";
    case Selector::Method2: return "method2";
    case Selector::Oracle: return "oracle";
    }
    return "?";
}

inline MeanCase parse_mean_case(std::string_view text) {
    if (text == "rate" || text == "RATE_MODEL") return MeanCase::RateModel;
    if (text == "caseA" || text == "CASE_A") return MeanCase::CaseA;
    if (text == "caseB" || text == "CASE_B") return MeanCase::CaseB;
    throw ValidationError("unknown mean case: " + std::string(text));
}

struct ExperimentConfig {
    std::uint64_t base_seed = 0;
    std::size_t trials = 1;
    std::vector<std::size_t> n_grid;
    std::size_t d = 1;
    double sigma = 1.0;
    double tau = 0.3;
    MeanCase mean_case = MeanCase::RateModel;
    std::vector<std::size_t> t_grid;
    std::size_t n_sub = 100;
    double frac = 0.8;
    double c_lepski = LepskiConfig::default_c_lepski;
    /// Worker threads; 0 means one per hardware thread.
    std::size_t workers = 1;

    /// Rate study at desk scale: d=20, T=10, sigma=1, tau=0.3.
    static ExperimentConfig rate_study_defaults() {
        ExperimentConfig c;
        c.trials = 200;
        c.n_grid = {500, 1000, 2000, 4000};
        c.d = 20;
        c.t_grid = {10};
        c.mean_case = MeanCase::RateModel;
        return c;
    }

    /// Selection study: d=200, n=100, sigma=1, tau=0.3, T in 1..200.
    static ExperimentConfig selection_study_defaults(MeanCase c) {
        ExperimentConfig cfg;
        cfg.trials = 500;
        cfg.n_grid = {100};
        cfg.d = 200;
        cfg.mean_case = c;
        cfg.t_grid.resize(cfg.d);
        std::iota(cfg.t_grid.begin(), cfg.t_grid.end(), std::size_t{1});
        return cfg;
    }
};

inline void validate(const ExperimentConfig& c) {
    detail::require(c.trials >= 1, "ExperimentConfig: trials must be >= 1");
    detail::require(!c.n_grid.empty(), "ExperimentConfig: n_grid must be non-empty");
    detail::require(c.d >= 1, "ExperimentConfig: d must be >= 1");
    detail::require(std::isfinite(c.sigma) && c.sigma >= 0.0, "ExperimentConfig: sigma must be >= 0");
    detail::require(c.tau > 0.0 && c.tau < 1.0, "ExperimentConfig: tau must lie in (0, 1)");
    for (std::size_t n : c.n_grid) {
        detail::require(n >= 4, "ExperimentConfig: every n must be >= 4");
        const double nt = static_cast<double>(n) * c.tau;
        detail::require(std::abs(nt - std::round(nt)) < 1e-9, "ExperimentConfig: n*tau must be integral");
        (void)change_index(n, c.tau);
    }
    for (std::size_t T : c.t_grid)
        detail::require(T >= 1 && T <= c.d, "ExperimentConfig: every T must lie in [1, d]");
    if (c.mean_case == MeanCase::CaseB)
        detail::require(c.d >= 21, "ExperimentConfig: case B needs d >= 21");
}

struct TrialRecord {
    std::size_t trial_index = 0;
    std::size_t n = 0;
    std::size_t T = 0;
    double tau_true = 0.0;
    double tau_hat = 0.0;
    double abs_error = 0.0;
    Selector selector = Selector::FixedT;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct MeanPair {
    std::vector<double> theta_minus;
    std::vector<double> theta_plus;
};

// Mean generators -------------------------------------------------------------

/// theta_minus_j ~ N(0, 1/(20 j^2)), theta_plus_j ~ N(-theta_minus_j, 1e-4).
inline MeanPair sample_rate_means(std::size_t d, Engine& rng) {
    detail::require(d >= 1, "sample_rate_means: d must be >= 1");
    MeanPair m{std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t j = 0; j < d; ++j) {
        const double jj = static_cast<double>(j + 1);
        m.theta_minus[j] = draw_normal(rng, 0.0, std::sqrt(1.0 / (20.0 * jj * jj)));
    }
    for (std::size_t j = 0; j < d; ++j) m.theta_plus[j] = draw_normal(rng, -m.theta_minus[j], 1e-2);
    return m;
}

/// Case A: both means independent with coordinate variance 1/(2 j^2).
/// Case B: the first 20 coordinates have variance 1/2 and theta_plus is a 0.1-sd
/// perturbation of theta_minus; beyond 20 both means are drawn independently with
/// variance 1/(2 (j-20)^2).
inline MeanPair sample_case_means(MeanCase which, std::size_t d, Engine& rng) {
    detail::require(d >= 1, "sample_case_means: d must be >= 1");
    MeanPair m{std::vector<double>(d), std::vector<double>(d)};
    switch (which) {
    case MeanCase::CaseA:
        for (auto* theta : {&m.theta_minus, &m.theta_plus})
            for (std::size_t j = 0; j < d; ++j) {
                const double jj = static_cast<double>(j + 1);
                (*theta)[j] = draw_normal(rng, 0.0, std::sqrt(1.0 / (2.0 * jj * jj)));
            }
        return m;
    case MeanCase::CaseB: {
        detail::require(d >= 21, "sample_case_means: case B needs d >= 21");
        constexpr std::size_t head = 20;
        auto tail_sd = [](std::size_t j) {
            const double shifted = static_cast<double>(j + 1 - head);
            return std::sqrt(1.0 / (2.0 * shifted * shifted));
        };
        for (std::size_t j = 0; j < d; ++j)
            m.theta_minus[j] = draw_normal(rng, 0.0, j < head ? std::sqrt(0.5) : tail_sd(j));
        for (std::size_t j = 0; j < d; ++j)
            m.theta_plus[j] = j < head ? draw_normal(rng, m.theta_minus[j], 0.1) : draw_normal(rng, 0.0, tail_sd(j));
        return m;
    }
    case MeanCase::RateModel:
        break;
    }
    throw ValidationError("sample_case_means: expected case A or case B");
}

inline MeanPair sample_means(MeanCase which, std::size_t d, Engine& rng) {
    return which == MeanCase::RateModel ? sample_rate_means(d, rng) : sample_case_means(which, d, rng);
}

// Seeding ---------------------------------------------------------------------

inline std::uint64_t derive_trial_seed(std::uint64_t base_seed, std::uint64_t trial_index, std::uint64_t n,
                                       std::uint64_t T, Selector selector) {
    std::uint64_t h = splitmix64(base_seed);
    h = splitmix64(h ^ trial_index);
    h = splitmix64(h ^ n);
    h = splitmix64(h ^ T);
    h = splitmix64(h ^ static_cast<std::uint64_t>(selector));
    return h;
}

/// Fresh means and a fresh noise draw for one trial, both determined by `seed`.
inline SignalMatrix simulate_trial(const ExperimentConfig& c, std::size_t n, std::uint64_t seed) {
    Engine rng = make_engine(seed);
    MeanPair means = sample_means(c.mean_case, c.d, rng);
    ModelSpec spec{n, c.d, c.tau, std::move(means.theta_minus), std::move(means.theta_plus), c.sigma};
    return generate_sample(spec, rng());
}

// Parallel map ----------------------------------------------------------------

/// results[i] = task(i) for i < count, evaluated on up to `workers` threads.
template <typename Task>
auto parallel_map(std::size_t count, std::size_t workers, Task task) {
    using Result = decltype(task(std::size_t{0}));
    std::vector<std::optional<Result>> slots(count);
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(count, 1));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto drain = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                slots[i].emplace(task(i));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    if (workers <= 1) {
        drain();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<Result> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// Rate study ------------------------------------------------------------------

struct RatePoint {
    std::size_t n = 0;
    SummaryStats error;
};

struct RateStudyResult {
    std::size_t T = 0;
    std::vector<RatePoint> points;
    std::vector<TrialRecord> records;
};

/// |tau_hat(T) - tau| over `trials` fresh draws per n in n_grid, with T = t_grid[0].
inline RateStudyResult run_rate_study(const ExperimentConfig& c) {
    validate(c);
    detail::require(c.mean_case == MeanCase::RateModel, "run_rate_study: needs the rate-model means");
    detail::require(c.t_grid.size() == 1, "run_rate_study: t_grid must hold exactly one T");
    const std::size_t T = c.t_grid.front();

    RateStudyResult out;
    out.T = T;
    for (std::size_t n : c.n_grid) {
        const double tau_true = static_cast<double>(change_index(n, c.tau)) / static_cast<double>(n);
        auto records = parallel_map(c.trials, c.workers, [&](std::size_t trial) {
            const auto seed = derive_trial_seed(c.base_seed, trial, n, T, Selector::FixedT);
            const auto fit = estimate_tau(simulate_trial(c, n, seed), T);
            return TrialRecord{trial, n, T, tau_true, fit.tau_hat, std::abs(fit.tau_hat - tau_true),
                               Selector::FixedT};
        });
        std::vector<double> errors;
        errors.reserve(records.size());
        for (const auto& r : records) errors.push_back(r.abs_error);
        out.points.push_back({n, summarize(errors)});
        out.records.insert(out.records.end(), records.begin(), records.end());
    }
    return out;
}

struct RegressionResult {
    LineFit mean_fit;
    LineFit median_fit;
    double slope_mean() const { return mean_fit.slope; }
    double slope_median() const { return median_fit.slope; }
};

/// Least-squares lines through (ln n, ln mean error) and (ln n, ln median error).
/// Points with a zero aggregate are dropped from the corresponding fit.
inline RegressionResult run_regression_study(const std::vector<RatePoint>& points) {
    auto fit_log = [&](auto pick) {
        std::vector<double> xs, ys;
        for (const auto& p : points) {
            const double e = pick(p.error);
            if (e > 0.0) {
                xs.push_back(std::log(static_cast<double>(p.n)));
                ys.push_back(std::log(e));
            }
        }
        detail::require(xs.size() >= 2, "run_regression_study: fewer than two points with positive error");
        return fit_line(xs, ys);
    };
    RegressionResult r;
    r.mean_fit = fit_log([](const SummaryStats& s) { return s.mean; });
    r.median_fit = fit_log([](const SummaryStats& s) { return s.median; });
    return r;
}

inline RegressionResult run_regression_study(const RateStudyResult& rate) {
    return run_regression_study(rate.points);
}

// T sweep ---------------------------------------------------------------------

struct SweepPoint {
    std::size_t T = 0;
    SummaryStats error;
};

struct SweepStudyResult {
    std::size_t n = 0;
    std::vector<SweepPoint> points;
    /// Smallest T in t_grid with the lowest mean error.
    std::size_t oracle_T = 0;
    std::vector<TrialRecord> records;

    const SweepPoint& at(std::size_t T) const {
        for (const auto& p : points)
            if (p.T == T) return p;
        throw ValidationError("SweepStudyResult: T not in grid");
    }
};

inline std::uint64_t sample_seed(const ExperimentConfig& c, std::size_t trial, std::size_t n) {
    return derive_trial_seed(c.base_seed, trial, n, 0, Selector::FixedT);
}

/// Error of tau_hat(T) for every T in t_grid, each trial sharing one sample across T.
inline SweepStudyResult run_t_sweep_study(const ExperimentConfig& c) {
    validate(c);
    detail::require(c.mean_case != MeanCase::RateModel, "run_t_sweep_study: needs case A or case B");
    detail::require(c.n_grid.size() == 1, "run_t_sweep_study: n_grid must hold exactly one n");
    detail::require(!c.t_grid.empty(), "run_t_sweep_study: t_grid must be non-empty");
    const std::size_t n = c.n_grid.front();
    const double tau_true = static_cast<double>(change_index(n, c.tau)) / static_cast<double>(n);

    auto per_trial = parallel_map(c.trials, c.workers, [&](std::size_t trial) {
        const auto fits = sweep_estimate(simulate_trial(c, n, sample_seed(c, trial, n)), c.t_grid);
        std::vector<TrialRecord> rows;
        rows.reserve(fits.size());
        for (const auto& fit : fits)
            rows.push_back({trial, n, fit.T_used, tau_true, fit.tau_hat, std::abs(fit.tau_hat - tau_true),
                            Selector::FixedT});
        return rows;
    });

    SweepStudyResult out;
    out.n = n;
    for (std::size_t t = 0; t < c.t_grid.size(); ++t) {
        std::vector<double> errors;
        errors.reserve(c.trials);
        for (const auto& rows : per_trial) errors.push_back(rows[t].abs_error);
        out.points.push_back({c.t_grid[t], summarize(errors)});
    }
    const SweepPoint* best = &out.points.front();
    for (const auto& p : out.points)
        if (p.error.mean < best->error.mean || (p.error.mean == best->error.mean && p.T < best->T)) best = &p;
    out.oracle_T = best->T;
    for (auto& rows : per_trial) out.records.insert(out.records.end(), rows.begin(), rows.end());
    return out;
}

// Selector comparison ---------------------------------------------------------

struct SelectorRow {
    Selector selector = Selector::Oracle;
    SummaryStats error;
    SummaryStats chosen_T;
};

struct ComparisonResult {
    std::size_t n = 0;
    std::size_t oracle_T = 0;
    std::vector<SelectorRow> rows;
    std::vector<TrialRecord> records;

    const SelectorRow& row(Selector s) const {
        for (const auto& r : rows)
            if (r.selector == s) return r;
        throw ValidationError("ComparisonResult: selector not present");
    }
};

/// Per trial, the error at the oracle T*, at method 1's and method 2's choices and at
/// Lepski's choice, all on the same sample. Samples coincide with the T-sweep study
/// run under the same base seed.
inline ComparisonResult run_selection_comparison(const ExperimentConfig& c, std::size_t oracle_T) {
    validate(c);
    detail::require(c.mean_case == MeanCase::CaseB, "run_selection_comparison: needs case B means");
    detail::require(c.n_grid.size() == 1, "run_selection_comparison: n_grid must hold exactly one n");
    detail::require(oracle_T >= 1 && oracle_T <= c.d, "run_selection_comparison: T* must lie in [1, d]");
    const std::size_t n = c.n_grid.front();
    const double tau_true = static_cast<double>(change_index(n, c.tau)) / static_cast<double>(n);
    const LepskiConfig lepski(c.c_lepski);
    constexpr Selector order[] = {Selector::Oracle, Selector::Method1, Selector::Method2, Selector::Lepski};

    auto per_trial = parallel_map(c.trials, c.workers, [&](std::size_t trial) {
        const SignalMatrix Y = simulate_trial(c, n, sample_seed(c, trial, n));
        const SurrogateVector z = surrogate(Y, c.sigma);
        const std::size_t chosen[] = {
            oracle_T,
            method1_select(z),
            method2_select(Y, c.sigma, c.n_sub, c.frac, derive_trial_seed(c.base_seed, trial, n, 0, Selector::Method2)),
            lepski_select(z, lepski, n, c.d),
        };
        const PrefixSums P(Y);
        std::vector<TrialRecord> rows;
        for (std::size_t s = 0; s < std::size(order); ++s) {
            const auto fit = estimate_tau(P, chosen[s]);
            rows.push_back({trial, n, chosen[s], tau_true, fit.tau_hat, std::abs(fit.tau_hat - tau_true), order[s]});
        }
        return rows;
    });

    ComparisonResult out;
    out.n = n;
    out.oracle_T = oracle_T;
    for (std::size_t s = 0; s < std::size(order); ++s) {
        std::vector<double> errors, Ts;
        for (const auto& rows : per_trial) {
            errors.push_back(rows[s].abs_error);
            Ts.push_back(static_cast<double>(rows[s].T));
        }
        out.rows.push_back({order[s], summarize(errors), summarize(Ts)});
    }
    for (auto& rows : per_trial) out.records.insert(out.records.end(), rows.begin(), rows.end());
    return out;
}

} // namespace smoothcp
