#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "racing_sr/budget.hpp"
#include "racing_sr/expr.hpp"
#include "racing_sr/fit.hpp"
#include "racing_sr/oracle.hpp"
#include "racing_sr/schedule.hpp"

namespace racing_sr {

struct PoolEntry {
    ExpressionTree tree;
    TrialResult result; // empty when stale
    Schedule schedule;
    VarSet control_set;

    [[nodiscard]] double fitness() const { return result.scalar(); }
};

enum class MutationKind { replace_leaf, same_arity, insert, remove };

struct MutationOptions {
    /// Depth of the tree grown in place of a leaf.
    std::size_t leaf_tree_depth = 3;
    std::size_t max_nodes = 60;
};

/// One of the four edit kinds, drawn uniformly among those applicable. Only
/// editable nodes are targeted and new material uses `free_vars` alone. Returns
/// the input when no kind applies or both size-capped attempts overflow.
[[nodiscard]] ExpressionTree mutate(const ExpressionTree& tree, const OperatorSet& ops, VarSet free_vars, Rng& rng,
                                    const MutationOptions& options = {});

/// Applies one specific kind; std::nullopt if it has no target in `tree`.
[[nodiscard]] std::optional<ExpressionTree> mutate_with(MutationKind kind, const ExpressionTree& tree,
                                                        const OperatorSet& ops, VarSet free_vars, Rng& rng,
                                                        const MutationOptions& options = {});

/// Collapses every maximal all-editable, variable-free subtree that holds an
/// open constant into a single open constant. The result can fit anything the
/// input could, with fewer and better-conditioned constants.
[[nodiscard]] ExpressionTree collapse_constants(const ExpressionTree& tree);

class ControlSetMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Swaps one editable subtree of `a` with one of `b`. The pair returned is
/// (a's offspring, b's offspring) with results invalidated. Symmetric: the
/// random draws depend on the parents only as an unordered pair.
[[nodiscard]] std::pair<PoolEntry, PoolEntry> mate(const PoolEntry& a, const PoolEntry& b, Rng& rng,
                                                   std::size_t max_nodes = 60);

/// Highest mean fitness first, then fewer nodes, then earlier position.
[[nodiscard]] std::vector<PoolEntry> select_topk(std::vector<PoolEntry> entries, std::size_t k);

/// Capped archive sorted best first, unique by canonical infix text.
class HallOfFame {
public:
    explicit HallOfFame(std::size_t capacity = 25) : capacity_(capacity) {}

    void update(const std::vector<PoolEntry>& candidates);
    [[nodiscard]] const std::vector<PoolEntry>& entries() const { return entries_; }
    [[nodiscard]] std::size_t capacity() const { return capacity_; }
    [[nodiscard]] double best_fitness() const;

private:
    std::size_t capacity_;
    std::vector<PoolEntry> entries_;
};

struct GpConfig {
    std::size_t trials = 5;
    std::size_t batch = 256;
    std::size_t generations = 100;
    double p_mutate = 0.5;
    double p_mate = 0.5;
    MutationOptions mutation;
    FitOptions fit;
    std::size_t jobs = 1;
    Budget budget;
};

struct GpStats {
    std::size_t generations = 0;
    std::size_t optimize_calls = 0;
};

/// Draws fresh batches for every entry (in pool order, from each entry's own
/// control set) and fits them, possibly concurrently.
void refit(std::vector<PoolEntry>& entries, Oracle& oracle, const GpConfig& cfg, Rng& rng, GpStats* stats = nullptr);

/// The GP subroutine. Each generation mutates entries with probability
/// p_mutate, mates shuffled same-control-set pairs with probability p_mate,
/// refits every changed tree on fresh data, keeps the best of parents and
/// offspring within each control-set group (group sizes are preserved), and
/// folds the result into the hall of fame.
void gp_run(std::vector<PoolEntry>& pool, Oracle& oracle, const OperatorSet& ops, const GpConfig& cfg,
            HallOfFame& hof, Rng& rng, GpStats* stats = nullptr);

} // namespace racing_sr
