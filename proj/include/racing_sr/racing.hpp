#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "racing_sr/gp.hpp"

namespace racing_sr {

struct RacingConfig {
    std::size_t trials = 5;        // K
    std::size_t pool = 25;         // N_p
    std::size_t generations = 100; // per round
    std::size_t batch = 256;       // m
    double eps = 1e-3;             // fit test on every trial's NMSE
    double eps_var = 1e-3;         // standalone-constant variance bound
    std::size_t hof = 25;
    double p_mutate = 0.5;
    double p_mate = 0.5;
    FitOptions fit;
    MutationOptions mutation;
    std::size_t init_depth = 3;
    std::size_t init_generations = 20;
    std::size_t test_rows = 256;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    Budget budget;

    /// Genetic operations per round, kept for reporting only.
    [[nodiscard]] std::size_t genetic_ops() const { return generations * pool; }

    /// Throws std::invalid_argument.
    void validate() const;
};

[[nodiscard]] GpConfig gp_config(const RacingConfig& cfg, std::size_t generations);

/// One hall-of-fame entry scored on the shared uncontrolled test batch.
struct ScoredEntry {
    PoolEntry entry;
    std::vector<double> constants; // from the best training trial
    double test_nmse = 0.0;
    std::vector<double> predictions;

    [[nodiscard]] std::string expression() const { return to_string(entry.tree, constants); }
};

struct RunReport {
    std::string algo;
    double wall_seconds = 0.0;
    std::uint64_t oracle_rows = 0; // training rows only
    std::uint64_t test_rows = 0;
    std::size_t optimize_calls = 0;
    std::size_t generations = 0;
    /// Surviving schedules after each round's selection, keyed by their text.
    std::vector<std::map<std::string, std::size_t>> schedule_histogram;
    std::vector<PoolEntry> training_hof;
    /// Best test NMSE first.
    std::vector<ScoredEntry> hof;
    std::vector<double> test_outputs;

    [[nodiscard]] const ScoredEntry& best() const { return hof.front(); }
};

/// Initial pool: for every variable, ceil(N_p / n) random trees over that
/// variable alone with all others controlled, fitted and then evolved for
/// init_generations within their group.
[[nodiscard]] std::vector<PoolEntry> build_gp_pool(Oracle& oracle, const OperatorSet& ops, const RacingConfig& cfg,
                                                   Rng& rng, GpStats* stats = nullptr);

/// All-trials fit test against eps. On success every operator and variable is
/// frozen, and each open constant whose across-trial variance is within
/// eps_var is frozen at its mean; the others stay open. A failing entry is
/// returned as is.
[[nodiscard]] PoolEntry freeze_equation(PoolEntry entry, const RacingConfig& cfg);

/// Frees one uniformly drawn controlled variable per entry and appends the
/// new set to its schedule. Uncontrolled entries pass through.
[[nodiscard]] std::vector<PoolEntry> extend_schedules(std::vector<PoolEntry> pool, Rng& rng);

/// One round: refit on fresh data, GP, then keep the best N_p. Returns the
/// round's hall of fame.
HallOfFame run_round(std::vector<PoolEntry>& pool, Oracle& oracle, const OperatorSet& ops, const RacingConfig& cfg,
                     std::size_t generations, Rng& rng, GpStats* stats = nullptr);

/// Rescores training hall-of-fame entries on `test` and sorts them by test
/// NMSE (stable, so training order breaks ties).
[[nodiscard]] std::vector<ScoredEntry> rescore(const std::vector<PoolEntry>& entries, const TrialBatch& test);

[[nodiscard]] std::map<std::string, std::size_t> histogram(const std::vector<PoolEntry>& pool);

/// Racing over experiment schedules.
[[nodiscard]] RunReport racing_run(const BenchmarkSpec& spec, const RacingConfig& cfg);

/// Control variable GP over one fixed complete schedule.
[[nodiscard]] RunReport cvgp_run(const BenchmarkSpec& spec, const RacingConfig& cfg, const Schedule& schedule);

/// Plain GP: one uncontrolled round of n x generations.
[[nodiscard]] RunReport gp_baseline(const BenchmarkSpec& spec, const RacingConfig& cfg);

struct AllSchedulesReport {
    /// One report per complete schedule, in depth-first order. Times, rows and
    /// generation counts cover the report's own path, shared prefix included.
    std::vector<RunReport> runs;
    std::vector<Schedule> schedules;
    double wall_seconds = 0.0;
    /// Generations actually executed; shared prefixes count once.
    std::size_t generations = 0;
};

inline constexpr std::size_t kMaxAllSchedulesVars = 5;

/// CVGP over every schedule, walking the schedule tree depth first and
/// copying the pool at each branch so common prefixes run once. All runs are
/// scored on one shared test batch. Throws std::invalid_argument above
/// kMaxAllSchedulesVars variables.
[[nodiscard]] AllSchedulesReport cvgp_all_schedules(const BenchmarkSpec& spec, const RacingConfig& cfg);

} // namespace racing_sr
