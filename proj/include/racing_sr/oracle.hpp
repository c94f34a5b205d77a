#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "racing_sr/eval.hpp"
#include "racing_sr/expr.hpp"
#include "racing_sr/types.hpp"

namespace racing_sr {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct BenchmarkSpec {
    std::string name;
    std::size_t n_vars = 0;
    /// Source text of the ground truth, kept verbatim for benchmark files.
    std::string expression;
    ExpressionTree truth;
    OperatorSet op_set;
    std::vector<Interval> ranges;
    double noise_std = 0.0;

    /// Throws std::invalid_argument on a broken spec.
    void validate() const;
};

/// Parses and validates a spec from its parts.
[[nodiscard]] BenchmarkSpec make_benchmark(std::string name, std::size_t n_vars, std::string expression,
                                           std::string_view op_set, std::vector<Interval> ranges,
                                           double noise_std = 0.0);

/// Flat `key = value` text: name, n_vars, expression, op_set, range_<i> = lo,hi, noise_std.
[[nodiscard]] BenchmarkSpec parse_benchmark(std::string_view text);
[[nodiscard]] std::string format_benchmark(const BenchmarkSpec& spec);
[[nodiscard]] BenchmarkSpec load_benchmark(const std::filesystem::path& path);

struct TrialBatch {
    Matrix inputs;                      // m x n_vars
    std::vector<double> outputs;        // m
    VarSet control_set;
    std::vector<double> control_values; // one per controlled variable, ascending variable order

    [[nodiscard]] std::size_t rows() const { return outputs.size(); }
};

/// Data oracle over a ground-truth expression. Queries draw from a seeded
/// stream; training and test data come from independent streams. Each query is
/// serialized, so results depend only on the order of queries.
class Oracle {
public:
    Oracle(BenchmarkSpec spec, std::uint64_t seed);

    Oracle(const Oracle&) = delete;
    Oracle& operator=(const Oracle&) = delete;

    /// K batches of m rows. Controlled variables take one fresh uniform value
    /// per trial; free variables are i.i.d. uniform per row.
    [[nodiscard]] std::vector<TrialBatch> sample(VarSet control_set, std::size_t trials, std::size_t rows);

    /// Uncontrolled batch from the test stream.
    [[nodiscard]] TrialBatch sample_test(std::size_t rows);

    [[nodiscard]] const BenchmarkSpec& spec() const { return spec_; }
    [[nodiscard]] std::uint64_t rows_served() const { return rows_served_.load(); }
    [[nodiscard]] std::uint64_t test_rows_served() const { return test_rows_served_.load(); }

private:
    TrialBatch draw(VarSet control_set, std::size_t rows, Rng& rng);

    BenchmarkSpec spec_;
    std::mutex mutex_;
    Rng train_rng_;
    Rng test_rng_;
    std::atomic<std::uint64_t> rows_served_{0};
    std::atomic<std::uint64_t> test_rows_served_{0};
};

} // namespace racing_sr
