#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "racing_sr/expr.hpp"
#include "racing_sr/types.hpp"

namespace racing_sr {

/// Column-at-a-time evaluator bound to one tree and one input matrix.
///
/// Every node owns a register of `rows` doubles. Nodes whose value does not
/// depend on any open constant are computed once at construction; each call to
/// evaluate() only recomputes the constant-dependent nodes, which is what makes
/// repeated objective evaluation during constant fitting cheap.
class BatchEvaluator {
public:
    BatchEvaluator(const ExpressionTree& tree, const Matrix& inputs);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t open_constants() const { return slot_of_.size(); }

    /// Root register for the given open-constant values. The span stays valid
    /// until the next call. Non-finite rows are left as produced (inf or NaN).
    std::span<const double> evaluate(std::span<const double> constants);

    /// Reverse-mode pass after evaluate(): writes sum_r seed[r] * d root[r] /
    /// d c_j into `out` for every open constant j.
    void gradient(std::span<const double> seed, std::span<double> out);

private:
    struct Instr {
        Op op;
        std::size_t lhs;
        std::size_t rhs;
    };

    void run(std::size_t i);
    // Like run(), but sin and cos nodes also record their derivative.
    void run_dependent(std::size_t i);

    std::size_t rows_ = 0;
    std::vector<Instr> instrs_;           // indexed by prefix position
    std::vector<std::size_t> dependent_;  // constant-dependent nodes, children first
    std::vector<std::size_t> slot_of_;    // prefix position of each open constant
    std::vector<double> registers_;       // node-major, rows_ per node
    std::vector<char> depends_;           // node value depends on an open constant
    std::vector<double> adjoints_;        // same layout as registers_, allocated on first use
    std::vector<double> slopes_;          // d node / d child for constant-dependent sin and cos nodes
};

} // namespace racing_sr
