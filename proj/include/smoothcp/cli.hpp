#pragma once

// Command-line front end.
//
//   simulate   --n --d --tau --sigma --means <rate|caseA|caseB|path> --seed --out
//   estimate   --input <csv> [--T <int>] [--sigma <real>] [--c-lepski <real>] [--trace]
//   select-t   --input <csv> --sigma <real> --method <lepski|method1|method2>
//              [--c-lepski] [--n-sub] [--frac] [--seed]
//   experiment --config <file> [--trials N] [--seed S] --out <dir>
//
// Every subcommand accepts --config <file>: a flat key=value file whose keys
// are flag names without the leading dashes ('_' and '-' are interchangeable).
// Flags given on the command line win over the file.
//
// Exit status: 0 success, 2 usage or validation error, 3 I/O error.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"

#include "smoothcp/error.hpp"
#include "smoothcp/estimator.hpp"
#include "smoothcp/experiments.hpp"
#include "smoothcp/io.hpp"
#include "smoothcp/model.hpp"
#include "smoothcp/smoothing.hpp"
#include "smoothcp/stats.hpp"

namespace smoothcp::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_io = 3;

/// Bad command line or config file. The message includes usage text.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

enum class Subcommand { Simulate, Estimate, SelectT, Experiment };

struct CliInvocation {
    Subcommand subcommand = Subcommand::Estimate;
    std::string config_path;
    std::string input_path;
    std::string output_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> sigma;
    std::optional<double> tau;
    std::optional<double> c_lepski;
    std::optional<double> frac;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> d;
    std::optional<std::size_t> n_sub;
    std::optional<std::size_t> t_star;
    std::optional<std::size_t> workers;
    /// --n: a single n for simulate, a grid for experiment.
    std::vector<std::size_t> n_values;
    /// --T: a single T for estimate, a grid for experiment.
    std::vector<std::size_t> T_values;
    std::optional<std::string> method;
    std::optional<std::string> means;
    std::optional<std::string> study;
    std::optional<std::string> mean_case;
    bool trace = false;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::size_t parse_count(std::string_view text) {
    const std::string t = trim(text);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        throw UsageError("not a non-negative integer: '" + t + "'");
    return v;
}

/// "10", "1,2,5" or ranges "1-200" / "1:200" (inclusive), mixed freely.
inline std::vector<std::size_t> parse_index_list(std::string_view text) {
    std::vector<std::size_t> out;
    while (true) {
        const auto comma = text.find(',');
        const std::string item = trim(text.substr(0, comma));
        const auto dash = item.find_first_of("-:");
        if (dash != std::string::npos && dash > 0) {
            const auto lo = parse_count(std::string_view(item).substr(0, dash));
            const auto hi = parse_count(std::string_view(item).substr(dash + 1));
            if (hi < lo) throw UsageError("empty range: '" + item + "'");
            for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
        } else {
            out.push_back(parse_count(item));
        }
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

/// key=value lines; '#' starts a comment. Keys are normalised to flag spelling.
inline std::map<std::string, std::string> parse_config_text(std::string_view text) {
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string line(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        for (char& ch : key)
            if (ch == '_') ch = '-';
        if (key == "base-seed") key = "seed";
        if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
        out[key] = value;
    }
    return out;
}

/// Value of --config in raw arguments, if any.
inline std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return std::nullopt;
}

inline std::set<std::string> given_flags(const std::vector<std::string>& args) {
    std::set<std::string> names;
    for (const auto& a : args)
        if (a.rfind("--", 0) == 0) names.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos
                                                                                            : a.find('=') - 2));
    return names;
}

struct RawOptions {
    std::string n;
    std::string T;
    std::optional<std::uint64_t> seed;
};

inline void build_app(CLI::App& app, CliInvocation& inv, RawOptions& raw) {
    app.require_subcommand(1, 1);
    app.name("smoothcp");
    app.description("Change-point estimation for high-dimensional two-segment Gaussian signals");

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", inv.config_path, "key=value file providing defaults for any flag");
    };

    auto* sim = app.add_subcommand("simulate", "Draw a sample from the two-segment model and write it as CSV");
    add_config(sim);
    sim->add_option("--n", raw.n, "Number of signals")->required();
    sim->add_option("--d", inv.d, "Signal dimension");
    sim->add_option("--tau", inv.tau, "Change-point fraction in (0,1)")->required();
    sim->add_option("--sigma", inv.sigma, "Noise standard deviation")->required();
    sim->add_option("--means", inv.means, "rate, caseA, caseB, or a CSV file with two rows (pre, post)")->required();
    sim->add_option("--seed", raw.seed, "Random seed")->required();
    sim->add_option("--out", inv.output_path, "Output CSV path")->required();

    auto* est = app.add_subcommand("estimate", "Estimate the change point of a sample");
    add_config(est);
    est->add_option("--input", inv.input_path, "Input matrix CSV")->required();
    est->add_option("--T", raw.T, "Number of leading coordinates; Lepski's choice when omitted");
    est->add_option("--sigma", inv.sigma, "Noise level (needed when --T is omitted)");
    est->add_option("--c-lepski", inv.c_lepski, "Lepski tuning constant");
    est->add_flag("--trace", inv.trace, "Print the objective at every split");

    auto* sel = app.add_subcommand("select-t", "Select the truncation level T");
    add_config(sel);
    sel->add_option("--input", inv.input_path, "Input matrix CSV")->required();
    sel->add_option("--sigma", inv.sigma, "Noise level")->required();
    sel->add_option("--method", inv.method, "lepski, method1 or method2")
        ->required()
        ->check(CLI::IsMember({"lepski", "method1", "method2"}));
    sel->add_option("--c-lepski", inv.c_lepski, "Lepski tuning constant");
    sel->add_option("--n-sub", inv.n_sub, "Number of subsamples (method2)");
    sel->add_option("--frac", inv.frac, "Subsample fraction (method2)");
    sel->add_option("--seed", raw.seed, "Subsampling seed (method2)");

    auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo study and write records.csv and summary.csv");
    add_config(exp);
    exp->add_option("--study", inv.study, "rate, sweep or compare")
        ->check(CLI::IsMember({"rate", "sweep", "compare"}));
    exp->add_option("--case", inv.mean_case, "Mean generator: rate, caseA or caseB")
        ->check(CLI::IsMember({"rate", "caseA", "caseB", "RATE_MODEL", "CASE_A", "CASE_B"}));
    exp->add_option("--trials", inv.trials, "Trials per grid point");
    exp->add_option("--seed", raw.seed, "Base seed");
    exp->add_option("--n", raw.n, "Sample sizes, e.g. 500,1000 or 100");
    exp->add_option("--d", inv.d, "Signal dimension");
    exp->add_option("--sigma", inv.sigma, "Noise standard deviation");
    exp->add_option("--tau", inv.tau, "Change-point fraction");
    exp->add_option("--T", raw.T, "Truncation grid, e.g. 10 or 1-200");
    exp->add_option("--n-sub", inv.n_sub, "Subsamples for method 2");
    exp->add_option("--frac", inv.frac, "Subsample fraction for method 2");
    exp->add_option("--c-lepski", inv.c_lepski, "Lepski tuning constant");
    exp->add_option("--t-star", inv.t_star, "Oracle T for the comparison study (estimated when omitted)");
    exp->add_option("--workers", inv.workers, "Worker threads (0 = all cores)");
    exp->add_option("--out", inv.output_path, "Output directory")->required();
}

} // namespace detail

/// Parses argv (without the program name). Throws UsageError on any problem.
inline CliInvocation parse_invocation(const std::vector<std::string>& argv) {
    CliInvocation inv;
    detail::RawOptions raw;
    CLI::App app;
    detail::build_app(app, inv, raw);

    std::vector<std::string> args = argv;
    if (auto path = detail::find_config_path(argv)) {
        std::string text;
        try {
            text = read_file(*path);
        } catch (const IoError& e) {
            throw UsageError(std::string(e.what()) + "\n" + app.help());
        }
        const auto entries = detail::parse_config_text(text);
        const auto given = detail::given_flags(argv);
        CLI::App* sub = nullptr;
        if (!argv.empty())
            for (auto* s : app.get_subcommands({}))
                if (s->get_name() == argv.front()) sub = s;
        if (!sub) throw UsageError("a subcommand must precede --config\n" + app.help());
        std::vector<std::string> injected;
        for (const auto& [key, value] : entries) {
            if (key == "config" || !sub->get_option_no_throw("--" + key))
                throw UsageError("unknown config key '" + key + "' for " + sub->get_name() + "\n" + sub->help());
            if (given.count(key)) continue;
            injected.push_back("--" + key);
            injected.push_back(value);
        }
        args.insert(args.begin() + 1, injected.begin(), injected.end());
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw UsageError(app.help());
    } catch (const CLI::ParseError& e) {
        const auto subs = app.get_subcommands();
        throw UsageError(std::string(e.what()) + "\n" + (subs.empty() ? app.help() : subs.front()->help()));
    }

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "simulate")
        inv.subcommand = Subcommand::Simulate;
    else if (name == "estimate")
        inv.subcommand = Subcommand::Estimate;
    else if (name == "select-t")
        inv.subcommand = Subcommand::SelectT;
    else
        inv.subcommand = Subcommand::Experiment;

    inv.seed = raw.seed;
    if (!raw.n.empty()) inv.n_values = detail::parse_index_list(raw.n);
    if (!raw.T.empty()) inv.T_values = detail::parse_index_list(raw.T);

    switch (inv.subcommand) {
    case Subcommand::Simulate:
        if (inv.n_values.size() != 1) throw UsageError("simulate: --n takes a single value");
        break;
    case Subcommand::Estimate:
        if (inv.T_values.size() > 1) throw UsageError("estimate: --T takes a single value");
        if (inv.T_values.empty() && !inv.sigma) throw UsageError("estimate: give --T, or --sigma for Lepski's T");
        break;
    case Subcommand::SelectT:
        break;
    case Subcommand::Experiment:
        if (inv.config_path.empty()) throw UsageError("experiment: --config is required");
        break;
    }
    return inv;
}

namespace detail {

inline std::string records_csv(const std::vector<TrialRecord>& records) {
    std::string out = "trial_index,n,T,tau_true,tau_hat,abs_error,selector\n";
    for (const auto& r : records) {
        out += std::to_string(r.trial_index) + ',' + std::to_string(r.n) + ',' + std::to_string(r.T) + ',' +
               format_double(r.tau_true) + ',' + format_double(r.tau_hat) + ',' + format_double(r.abs_error) +
               ',' + std::string(to_string(r.selector)) + '\n';
    }
    return out;
}

inline constexpr std::string_view summary_header = "n,T,selector,count,mean,median,std_dev,mean_T\n";

inline std::string summary_row(std::size_t n, std::optional<std::size_t> T, Selector s, const SummaryStats& e,
                               double mean_T) {
    return std::to_string(n) + ',' + (T ? std::to_string(*T) : std::string()) + ',' + std::string(to_string(s)) +
           ',' + std::to_string(e.count) + ',' + format_double(e.mean) + ',' + format_double(e.median) + ',' +
           format_double(e.std_dev) + ',' + format_double(mean_T) + '\n';
}

inline ExperimentConfig experiment_config(const CliInvocation& inv, std::string& study) {
    MeanCase mean_case = MeanCase::RateModel;
    if (inv.mean_case)
        mean_case = parse_mean_case(*inv.mean_case);
    else if (inv.study && *inv.study != "rate")
        mean_case = MeanCase::CaseB;
    study = inv.study ? *inv.study : (mean_case == MeanCase::RateModel ? "rate" : "sweep");
    ExperimentConfig c = study == "rate" ? ExperimentConfig::rate_study_defaults()
                                         : ExperimentConfig::selection_study_defaults(mean_case);
    c.mean_case = mean_case;
    if (inv.seed) c.base_seed = *inv.seed;
    if (inv.trials) c.trials = *inv.trials;
    if (!inv.n_values.empty()) c.n_grid = inv.n_values;
    if (inv.d) {
        c.d = *inv.d;
        if (study != "rate" && inv.T_values.empty()) {
            c.t_grid.resize(c.d);
            std::iota(c.t_grid.begin(), c.t_grid.end(), std::size_t{1});
        }
    }
    if (inv.sigma) c.sigma = *inv.sigma;
    if (inv.tau) c.tau = *inv.tau;
    if (!inv.T_values.empty()) c.t_grid = inv.T_values;
    if (inv.n_sub) c.n_sub = *inv.n_sub;
    if (inv.frac) c.frac = *inv.frac;
    if (inv.c_lepski) c.c_lepski = *inv.c_lepski;
    if (inv.workers) c.workers = *inv.workers;
    return c;
}

inline int run_simulate(const CliInvocation& inv, std::ostream& out) {
    Engine rng = make_engine(*inv.seed);
    MeanPair means;
    const std::string& source = *inv.means;
    if (source == "rate" || source == "caseA" || source == "caseB") {
        if (!inv.d) throw ValidationError("simulate: --d is required with generated means");
        means = sample_means(parse_mean_case(source), *inv.d, rng);
    } else {
        const auto rows = parse_csv_rows(read_file(source));
        smoothcp::detail::require(rows.size() == 2, "means file must hold exactly two rows (pre-change, post-change)");
        means = {rows[0], rows[1]};
        if (inv.d) smoothcp::detail::require(*inv.d == rows[0].size(), "means file length differs from --d");
    }
    const std::size_t d = means.theta_minus.size();
    ModelSpec spec{inv.n_values.front(), d, *inv.tau, std::move(means.theta_minus), std::move(means.theta_plus),
                   *inv.sigma};
    const auto Y = generate_sample(spec, rng());
    write_matrix_csv(inv.output_path, Y);
    out << "wrote " << Y.rows() << "x" << Y.cols() << " matrix to " << inv.output_path << '\n';
    return exit_ok;
}

inline int run_estimate(const CliInvocation& inv, std::ostream& out) {
    const auto Y = read_matrix_csv(inv.input_path);
    ChangePointFit fit;
    if (!inv.T_values.empty()) {
        fit = estimate_tau(Y, inv.T_values.front());
    } else {
        fit = estimate_adaptive(Y, *inv.sigma, LepskiConfig(inv.c_lepski.value_or(LepskiConfig::default_c_lepski)));
    }
    out << "k_hat=" << fit.k_hat << '\n';
    out << "tau_hat=" << format_double(fit.tau_hat) << '\n';
    out << "T=" << fit.T_used << '\n';
    if (inv.trace) {
        out << "k,objective\n";
        for (std::size_t i = 0; i < fit.objective.size(); ++i)
            out << i + ChangePointFit::first_split << ',' << format_double(fit.objective[i]) << '\n';
    }
    return exit_ok;
}

inline int run_select_t(const CliInvocation& inv, std::ostream& out) {
    const auto Y = read_matrix_csv(inv.input_path);
    const double sigma = *inv.sigma;
    smoothcp::detail::require(std::isfinite(sigma) && sigma >= 0.0, "--sigma must be >= 0");
    std::size_t T = 0;
    if (*inv.method == "lepski") {
        T = lepski_select(surrogate(Y, sigma), LepskiConfig(inv.c_lepski.value_or(LepskiConfig::default_c_lepski)),
                          Y.rows(), Y.cols());
    } else if (*inv.method == "method1") {
        T = method1_select(surrogate(Y, sigma));
    } else {
        const SubsamplingSettings defaults;
        T = method2_select(Y, sigma, inv.n_sub.value_or(defaults.n_sub), inv.frac.value_or(defaults.frac),
                           inv.seed.value_or(0));
    }
    out << T << '\n';
    return exit_ok;
}

inline int run_experiment(const CliInvocation& inv, std::ostream& out) {
    std::string study;
    const ExperimentConfig c = experiment_config(inv, study);
    validate(c);

    std::error_code ec;
    std::filesystem::create_directories(inv.output_path, ec);
    if (ec) throw IoError("cannot create output directory '" + inv.output_path + "': " + ec.message());
    const auto dir = std::filesystem::path(inv.output_path);

    std::string summary(summary_header);
    std::vector<TrialRecord> records;
    if (study == "rate") {
        auto result = run_rate_study(c);
        for (const auto& p : result.points)
            summary += summary_row(p.n, result.T, Selector::FixedT, p.error, static_cast<double>(result.T));
        records = std::move(result.records);
        out << "T=" << result.T << '\n';
        for (const auto& p : result.points)
            out << "n=" << p.n << " mean=" << format_double(p.error.mean)
                << " median=" << format_double(p.error.median) << '\n';
        try {
            const auto reg = run_regression_study(result.points);
            out << "slope_mean=" << format_double(reg.slope_mean()) << '\n';
            out << "slope_median=" << format_double(reg.slope_median()) << '\n';
        } catch (const ValidationError& e) {
            out << "regression skipped: " << e.what() << '\n';
        }
    } else if (study == "sweep") {
        auto result = run_t_sweep_study(c);
        for (const auto& p : result.points)
            summary += summary_row(result.n, p.T, Selector::FixedT, p.error, static_cast<double>(p.T));
        records = std::move(result.records);
        out << "oracle_T=" << result.oracle_T << '\n';
        out << "oracle_mean_error=" << format_double(result.at(result.oracle_T).error.mean) << '\n';
    } else {
        std::size_t t_star = inv.t_star.value_or(0);
        if (t_star == 0) {
            t_star = run_t_sweep_study(c).oracle_T;
            out << "estimated oracle_T=" << t_star << '\n';
        }
        auto result = run_selection_comparison(c, t_star);
        for (const auto& row : result.rows) {
            std::optional<std::size_t> T;
            if (row.selector == Selector::Oracle) T = result.oracle_T;
            summary += summary_row(result.n, T, row.selector, row.error, row.chosen_T.mean);
            out << to_string(row.selector) << " mean=" << format_double(row.error.mean)
                << " sd=" << format_double(row.error.std_dev) << '\n';
        }
        records = std::move(result.records);
    }
    write_file((dir / "records.csv").string(), records_csv(records));
    write_file((dir / "summary.csv").string(), summary);
    return exit_ok;
}

} // namespace detail

/// Executes a parsed invocation. Errors are reported on `err` and mapped to exit codes.
inline int run(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    try {
        switch (inv.subcommand) {
        case Subcommand::Simulate: return detail::run_simulate(inv, out);
        case Subcommand::Estimate: return detail::run_estimate(inv, out);
        case Subcommand::SelectT: return detail::run_select_t(inv, out);
        case Subcommand::Experiment: return detail::run_experiment(inv, out);
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}

inline int main_entry(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CliInvocation inv;
    try {
        inv = parse_invocation(argv);
    } catch (const UsageError& e) {
        err << e.what() << '\n';
        return exit_usage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return run(inv, out, err);
}

} // namespace smoothcp::cli
