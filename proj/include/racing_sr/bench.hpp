#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "racing_sr/racing.hpp"

namespace racing_sr {

struct Metrics {
    double mse = 0.0;
    double nmse = 0.0;
    double rmse = 0.0;
    double nrmse = 0.0;
    double r2 = 0.0;
    /// Constant target: nmse, nrmse and r2 are undefined (NaN).
    bool degenerate = false;
};

/// Needs equal lengths of at least 2. Variance is the population variance.
[[nodiscard]] Metrics metrics(std::span<const double> y, std::span<const double> prediction);

/// Linear interpolation between order statistics at position q*(n-1).
[[nodiscard]] double quantile(std::vector<double> values, double q);

enum class Algo { racing, cvgp, gp, cvgp_all };

[[nodiscard]] std::string_view algo_name(Algo a) noexcept;
[[nodiscard]] std::optional<Algo> parse_algo(std::string_view text) noexcept;

struct ResultRow {
    std::string benchmark;
    Algo algo = Algo::racing;
    std::uint64_t seed = 0;
    Metrics metrics;
    double wall_seconds = 0.0;
    std::uint64_t oracle_rows = 0;
    bool timed_out = false;
    /// Schedule of the reported expression.
    std::string schedule;
    /// Best expression with fitted constants; empty when timed out.
    std::string expression;
    /// Remaining hall of fame as (test nmse, expression), best first.
    std::vector<std::pair<double, std::string>> hof;
};

struct SuiteOptions {
    Algo algo = Algo::racing;
    RacingConfig config;
    /// Per-expression wall-clock limit; none when unset.
    std::optional<double> timeout_seconds;
    /// Concurrent suite members.
    std::size_t jobs = 1;
    /// Raised externally (for example by a signal handler) to stop early.
    const std::atomic<bool>* stop = nullptr;
};

struct SuiteResult {
    /// Rows of every finished member, in suite order.
    std::vector<ResultRow> rows;
    /// Messages from members that threw.
    std::vector<std::string> failures;
    bool interrupted = false;
};

/// Rows for one benchmark: one for racing, cvgp and gp, n! for cvgp-all.
/// Throws TimedOut or Interrupted from the budget.
[[nodiscard]] std::vector<ResultRow> run_benchmark(const BenchmarkSpec& spec, const SuiteOptions& options);

/// Runs every member (seeded from config.seed and its name). Timed-out members
/// produce rows with timed_out set; failures are collected, not thrown.
[[nodiscard]] SuiteResult run_suite(const std::vector<BenchmarkSpec>& suite, const SuiteOptions& options);

struct MetricSummary {
    double median = 0.0;
    double q75 = 0.0;
};

struct SuiteSummary {
    std::size_t rows = 0;
    std::size_t timed_out = 0;
    std::size_t degenerate = 0;
    MetricSummary mse, nmse, rmse, nrmse, r2;
    double wall_seconds = 0.0;
    std::uint64_t oracle_rows = 0;
};

/// Quartiles over finished, non-degenerate rows. Timed-out rows only count.
[[nodiscard]] SuiteSummary summarize(const std::vector<ResultRow>& rows);

/// results.csv columns: benchmark, algo, seed, nmse, mse, rmse, nrmse, r2,
/// wall_s, oracle_rows, timed_out, schedule. With `reproducible` the wall_s
/// column is left empty so identical runs give identical bytes.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool reproducible = false);
[[nodiscard]] std::vector<ResultRow> read_results_csv(std::istream& in);
void write_timing_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_hof(std::ostream& out, const std::vector<ResultRow>& rows);
[[nodiscard]] std::string summary_json(const std::vector<ResultRow>& rows, const std::string& suite);

} // namespace racing_sr
