#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "racing_sr/types.hpp"

namespace racing_sr {

enum class Op : std::uint8_t { add, sub, mul, div, sin, cos, log, exp, sqrt, var, constant };

[[nodiscard]] int arity(Op op) noexcept;
[[nodiscard]] inline bool is_binary(Op op) noexcept { return arity(op) == 2; }
[[nodiscard]] inline bool is_unary(Op op) noexcept { return arity(op) == 1; }
[[nodiscard]] inline bool is_leaf(Op op) noexcept { return arity(op) == 0; }

/// "+", "-", "*", "/", "sin", ... ; "var"/"C" for leaves.
[[nodiscard]] std::string_view op_symbol(Op op) noexcept;
/// Accepts both symbols ("+") and names ("add").
[[nodiscard]] std::optional<Op> op_from_symbol(std::string_view text) noexcept;

struct Node {
    Op op = Op::constant;
    /// false once the node has been frozen; GP editors never touch it.
    bool editable = true;
    /// Variable index, meaningful only for Op::var.
    std::uint32_t var = 0;
    /// Frozen value of a constant. Unset means an open (fittable) constant.
    std::optional<double> value;

    [[nodiscard]] bool is_open_constant() const noexcept { return op == Op::constant && !value.has_value(); }

    friend bool operator==(const Node&, const Node&) = default;
};

[[nodiscard]] Node make_op(Op op);
[[nodiscard]] Node make_var(std::uint32_t index);
[[nodiscard]] Node make_open_constant();
[[nodiscard]] Node make_frozen_constant(double value);

class OperatorSet {
public:
    OperatorSet(std::vector<Op> binary, std::vector<Op> unary);

    /// Comma list of symbols, e.g. "+,-,*,sin,cos".
    static OperatorSet parse(std::string_view list);

    [[nodiscard]] std::span<const Op> binary() const { return binary_; }
    [[nodiscard]] std::span<const Op> unary() const { return unary_; }
    [[nodiscard]] bool contains(Op op) const;
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const OperatorSet&, const OperatorSet&) = default;

private:
    std::vector<Op> binary_;
    std::vector<Op> unary_;
};

class InvalidTree : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Expression tree stored as a flat prefix-order node array. A subtree is the
/// contiguous range [i, subtree_end(i)). Open constants are numbered 0..L-1 in
/// prefix order, so slot indices are always unique and gap-free.
class ExpressionTree {
public:
    ExpressionTree(std::vector<Node> prefix, std::size_t n_vars);

    [[nodiscard]] std::span<const Node> nodes() const { return nodes_; }
    [[nodiscard]] const Node& node(std::size_t i) const { return nodes_[i]; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    [[nodiscard]] std::size_t n_vars() const { return n_vars_; }

    [[nodiscard]] std::size_t subtree_end(std::size_t i) const;
    [[nodiscard]] std::span<const Node> subtree(std::size_t i) const;
    /// Index of the parent of node i; nullopt for the root.
    [[nodiscard]] std::optional<std::size_t> parent(std::size_t i) const;
    [[nodiscard]] std::size_t depth() const;

    /// Prefix positions of the open constants, in slot order.
    [[nodiscard]] std::vector<std::size_t> open_constant_positions() const;

    /// Copy with the subtree at `pos` replaced by `replacement` (a well-formed prefix sequence).
    [[nodiscard]] ExpressionTree with_subtree(std::size_t pos, std::span<const Node> replacement) const;

    friend bool operator==(const ExpressionTree&, const ExpressionTree&) = default;

private:
    std::vector<Node> nodes_;
    std::size_t n_vars_ = 0;
};

/// Same shape, operators, variables and constants; editability ignored.
[[nodiscard]] bool structurally_equal(const ExpressionTree& a, const ExpressionTree& b);

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position);
    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Infix grammar: + - * /, sin cos log exp sqrt, x0..x<n-1>, open constant C,
/// decimal literals (a '-' directly before a literal in operand position makes
/// it negative). Literals become frozen constants.
[[nodiscard]] ExpressionTree parse(std::string_view text, std::size_t n_vars);

/// Canonical fully parenthesized infix, open constants printed as "C".
[[nodiscard]] std::string to_string(const ExpressionTree& tree);
/// Same, with open constants replaced by `constants` (length L).
[[nodiscard]] std::string to_string(const ExpressionTree& tree, std::span<const double> constants);
/// Space-separated prefix tokens; non-editable nodes carry a leading '!'.
[[nodiscard]] std::string to_prefix(const ExpressionTree& tree);

[[nodiscard]] std::size_t count_open_constants(const ExpressionTree& tree);
[[nodiscard]] VarSet free_variables(const ExpressionTree& tree);

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Row-wise evaluation of an m x n_vars input matrix. Rows whose result is not
/// finite come back as NaN (see is_non_finite_marker).
[[nodiscard]] std::vector<double> evaluate(const ExpressionTree& tree, const Matrix& inputs,
                                           std::span<const double> constants);

[[nodiscard]] inline bool is_non_finite_marker(double v) noexcept { return v != v; }

/// Random "grow" tree: leaves come only from `free_vars` and open constants,
/// depth never exceeds max_depth, every node is editable.
[[nodiscard]] ExpressionTree random_tree(VarSet free_vars, const OperatorSet& ops, std::size_t max_depth,
                                         std::size_t n_vars, Rng& rng);

/// Prefix node sequence for random_tree, for splicing into another tree.
[[nodiscard]] std::vector<Node> random_subtree(VarSet free_vars, const OperatorSet& ops, std::size_t max_depth,
                                               Rng& rng);

} // namespace racing_sr
