#include "racing_sr/gp.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "racing_sr/parallel.hpp"

namespace racing_sr {

namespace {

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
}

Node random_leaf(const std::vector<std::uint32_t>& vars, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < 0.5) return make_var(pick(vars, rng));
    return make_open_constant();
}

std::vector<Op> alternatives(std::span<const Op> pool, Op current) {
    std::vector<Op> out;
    for (Op op : pool) {
        if (op != current) out.push_back(op);
    }
    return out;
}

// Leaf replacements for a same-arity edit: any free variable or C, minus the
// current leaf.
std::vector<Node> leaf_alternatives(const Node& current, const std::vector<std::uint32_t>& vars) {
    std::vector<Node> out;
    for (auto v : vars) {
        if (!(current.op == Op::var && current.var == v)) out.push_back(make_var(v));
    }
    if (!current.is_open_constant()) out.push_back(make_open_constant());
    return out;
}

std::vector<std::size_t> targets(MutationKind kind, const ExpressionTree& tree, const OperatorSet& ops,
                                 const std::vector<std::uint32_t>& vars) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const Node& nd = tree.node(i);
        if (!nd.editable) continue;
        switch (kind) {
        case MutationKind::replace_leaf:
            if (is_leaf(nd.op)) out.push_back(i);
            break;
        case MutationKind::same_arity:
            if (is_binary(nd.op) ? !alternatives(ops.binary(), nd.op).empty()
                : is_unary(nd.op) ? !alternatives(ops.unary(), nd.op).empty()
                                  : !leaf_alternatives(nd, vars).empty()) {
                out.push_back(i);
            }
            break;
        case MutationKind::insert:
            out.push_back(i);
            break;
        case MutationKind::remove:
            if (!is_leaf(nd.op)) out.push_back(i);
            break;
        }
    }
    return out;
}

ExpressionTree apply(MutationKind kind, const ExpressionTree& tree, std::size_t pos, const OperatorSet& ops,
                     VarSet free_vars, const std::vector<std::uint32_t>& vars, Rng& rng,
                     const MutationOptions& options) {
    const Node& nd = tree.node(pos);
    switch (kind) {
    case MutationKind::replace_leaf:
        return tree.with_subtree(pos, random_subtree(free_vars, ops, options.leaf_tree_depth, rng));
    case MutationKind::same_arity: {
        Node replacement;
        if (is_binary(nd.op)) {
            replacement = make_op(pick(alternatives(ops.binary(), nd.op), rng));
        } else if (is_unary(nd.op)) {
            replacement = make_op(pick(alternatives(ops.unary(), nd.op), rng));
        } else {
            replacement = pick(leaf_alternatives(nd, vars), rng);
        }
        std::vector<Node> nodes(tree.nodes().begin(), tree.nodes().end());
        nodes[pos] = replacement;
        return ExpressionTree(std::move(nodes), tree.n_vars());
    }
    case MutationKind::insert: {
        const std::size_t n_ops = ops.binary().size() + ops.unary().size();
        std::uniform_int_distribution<std::size_t> which(0, n_ops - 1);
        const std::size_t k = which(rng);
        const auto original = tree.subtree(pos);
        std::vector<Node> material;
        if (k < ops.binary().size()) {
            material.push_back(make_op(ops.binary()[k]));
            const Node sibling = random_leaf(vars, rng);
            std::uniform_int_distribution<int> side(0, 1);
            if (side(rng) == 0) {
                material.insert(material.end(), original.begin(), original.end());
                material.push_back(sibling);
            } else {
                material.push_back(sibling);
                material.insert(material.end(), original.begin(), original.end());
            }
        } else {
            material.push_back(make_op(ops.unary()[k - ops.binary().size()]));
            material.insert(material.end(), original.begin(), original.end());
        }
        return tree.with_subtree(pos, material);
    }
    case MutationKind::remove: {
        std::size_t child = pos + 1;
        if (is_binary(nd.op)) {
            std::uniform_int_distribution<int> side(0, 1);
            if (side(rng) == 1) child = tree.subtree_end(pos + 1);
        }
        const auto kept = tree.subtree(child);
        return tree.with_subtree(pos, std::vector<Node>(kept.begin(), kept.end()));
    }
    }
    return tree;
}

} // namespace

std::optional<ExpressionTree> mutate_with(MutationKind kind, const ExpressionTree& tree, const OperatorSet& ops,
                                          VarSet free_vars, Rng& rng, const MutationOptions& options) {
    if (free_vars.empty()) throw std::invalid_argument("mutate needs at least one free variable");
    const auto vars = free_vars.members();
    const auto where = targets(kind, tree, ops, vars);
    if (where.empty()) return std::nullopt;
    return apply(kind, tree, pick(where, rng), ops, free_vars, vars, rng, options);
}

ExpressionTree mutate(const ExpressionTree& tree, const OperatorSet& ops, VarSet free_vars, Rng& rng,
                      const MutationOptions& options) {
    if (free_vars.empty()) throw std::invalid_argument("mutate needs at least one free variable");
    const auto vars = free_vars.members();
    std::vector<MutationKind> kinds;
    for (auto k : {MutationKind::replace_leaf, MutationKind::same_arity, MutationKind::insert, MutationKind::remove}) {
        if (!targets(k, tree, ops, vars).empty()) kinds.push_back(k);
    }
    if (kinds.empty()) return tree;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const MutationKind kind = pick(kinds, rng);
        const auto where = targets(kind, tree, ops, vars);
        ExpressionTree out = apply(kind, tree, pick(where, rng), ops, free_vars, vars, rng, options);
        if (out.size() <= options.max_nodes) return out;
    }
    return tree;
}

ExpressionTree collapse_constants(const ExpressionTree& tree) {
    const auto nodes = tree.nodes();
    const std::size_t n = nodes.size();
    // Per node: subtree is all editable, has no variable, has an open constant.
    std::vector<char> editable(n), no_var(n), open(n);
    for (std::size_t k = n; k-- > 0;) {
        const Node& nd = nodes[k];
        editable[k] = nd.editable;
        no_var[k] = nd.op != Op::var;
        open[k] = nd.is_open_constant();
        if (!is_leaf(nd.op)) {
            for (std::size_t c = k + 1, end = tree.subtree_end(k); c < end; c = tree.subtree_end(c)) {
                editable[k] = static_cast<char>(editable[k] && editable[c]);
                no_var[k] = static_cast<char>(no_var[k] && no_var[c]);
                open[k] = static_cast<char>(open[k] || open[c]);
            }
        }
    }
    std::vector<Node> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n;) {
        if (!is_leaf(nodes[k].op) && editable[k] && no_var[k] && open[k]) {
            out.push_back(make_open_constant());
            k = tree.subtree_end(k);
        } else {
            out.push_back(nodes[k]);
            ++k;
        }
    }
    if (out.size() == n) return tree;
    return ExpressionTree(std::move(out), tree.n_vars());
}

std::pair<PoolEntry, PoolEntry> mate(const PoolEntry& a, const PoolEntry& b, Rng& rng, std::size_t max_nodes) {
    if (a.control_set != b.control_set) {
        throw ControlSetMismatch("mate needs equal control sets, got " + a.control_set.to_string() + " and " +
                                 b.control_set.to_string());
    }
    // Order the parents canonically before drawing so that swapping the
    // arguments cannot change which subtrees are exchanged.
    const auto key = [](const PoolEntry& e) { return std::make_pair(to_prefix(e.tree), e.schedule.to_string()); };
    const bool swapped = key(b) < key(a);
    const PoolEntry& first = swapped ? b : a;
    const PoolEntry& second = swapped ? a : b;

    auto editable = [](const ExpressionTree& t) {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t.node(i).editable) out.push_back(i);
        }
        return out;
    };
    const auto pa = editable(first.tree);
    const auto pb = editable(second.tree);
    if (pa.empty() || pb.empty()) return {a, b};

    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::size_t i = pick(pa, rng);
        const std::size_t j = pick(pb, rng);
        ExpressionTree x = first.tree.with_subtree(i, second.tree.subtree(j));
        ExpressionTree y = second.tree.with_subtree(j, first.tree.subtree(i));
        if (x.size() > max_nodes || y.size() > max_nodes) continue;
        PoolEntry fx{std::move(x), {}, first.schedule, first.control_set};
        PoolEntry fy{std::move(y), {}, second.schedule, second.control_set};
        if (swapped) return {std::move(fy), std::move(fx)};
        return {std::move(fx), std::move(fy)};
    }
    return {a, b};
}

std::vector<PoolEntry> select_topk(std::vector<PoolEntry> entries, std::size_t k) {
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> fit(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) fit[i] = entries[i].fitness();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (fit[x] != fit[y]) return fit[x] > fit[y];
        return entries[x].tree.size() < entries[y].tree.size();
    });
    order.resize(std::min(k, order.size()));
    std::vector<PoolEntry> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back(std::move(entries[i]));
    return out;
}

double HallOfFame::best_fitness() const {
    return entries_.empty() ? -std::numeric_limits<double>::infinity() : entries_.front().fitness();
}

void HallOfFame::update(const std::vector<PoolEntry>& candidates) {
    std::vector<PoolEntry> merged;
    std::unordered_map<std::string, std::size_t> index;
    auto consider = [&](const PoolEntry& e) {
        if (e.result.empty()) return;
        auto key = to_string(e.tree);
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(std::move(key), merged.size());
            merged.push_back(e);
        } else if (e.fitness() > merged[it->second].fitness()) {
            merged[it->second] = e;
        }
    };
    for (const auto& e : entries_) consider(e);
    for (const auto& e : candidates) consider(e);
    entries_ = select_topk(std::move(merged), capacity_);
}

void refit(std::vector<PoolEntry>& entries, Oracle& oracle, const GpConfig& cfg, Rng& rng, GpStats* stats) {
    std::vector<std::vector<TrialBatch>> data;
    std::vector<std::uint64_t> seeds;
    data.reserve(entries.size());
    for (const auto& e : entries) {
        data.push_back(oracle.sample(e.control_set, cfg.trials, cfg.batch));
        seeds.push_back(rng());
    }
    parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
        Rng local(seeds[i]);
        entries[i].result = optimize(entries[i].tree, data[i], cfg.fit, local);
    });
    if (stats) stats->optimize_calls += entries.size();
}

namespace {

// Best `capacity` of the candidates, preferring distinct expressions and
// falling back to duplicates only when there are too few distinct ones.
// Survivors keep their candidate order, so an unchanged group stays as it was.
std::vector<PoolEntry> survivors(std::vector<PoolEntry> candidates, std::size_t capacity) {
    std::vector<std::size_t> ranked(candidates.size());
    std::iota(ranked.begin(), ranked.end(), 0);
    std::vector<double> fit(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) fit[i] = candidates[i].fitness();
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t x, std::size_t y) {
        if (fit[x] != fit[y]) return fit[x] > fit[y];
        return candidates[x].tree.size() < candidates[y].tree.size();
    });
    std::vector<std::size_t> chosen;
    std::vector<std::size_t> repeats;
    std::unordered_set<std::string> seen;
    for (auto i : ranked) {
        if (seen.insert(to_prefix(candidates[i].tree)).second) {
            chosen.push_back(i);
        } else {
            repeats.push_back(i);
        }
    }
    chosen.insert(chosen.end(), repeats.begin(), repeats.end());
    if (chosen.size() > capacity) chosen.resize(capacity);
    std::sort(chosen.begin(), chosen.end());
    std::vector<PoolEntry> out;
    out.reserve(chosen.size());
    for (auto i : chosen) out.push_back(std::move(candidates[i]));
    return out;
}

} // namespace

void gp_run(std::vector<PoolEntry>& pool, Oracle& oracle, const OperatorSet& ops, const GpConfig& cfg,
            HallOfFame& hof, Rng& rng, GpStats* stats) {
    const std::size_t n = oracle.spec().n_vars;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
        cfg.budget.check();
        std::vector<PoolEntry> work = pool;
        std::vector<char> changed(work.size(), 0);

        for (std::size_t i = 0; i < work.size(); ++i) {
            if (u(rng) >= cfg.p_mutate) continue;
            const VarSet free_vars = work[i].control_set.complement(n);
            if (free_vars.empty()) continue;
            ExpressionTree t = mutate(work[i].tree, ops, free_vars, rng, cfg.mutation);
            if (t == work[i].tree) continue;
            work[i].tree = std::move(t);
            changed[i] = 1;
        }

        // Pair entries within each control-set group after a seeded shuffle.
        std::map<VarSet, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < work.size(); ++i) groups[work[i].control_set].push_back(i);
        for (auto& [cs, members] : groups) {
            std::shuffle(members.begin(), members.end(), rng);
            for (std::size_t p = 0; p + 1 < members.size(); p += 2) {
                if (u(rng) >= cfg.p_mate) continue;
                const std::size_t i = members[p];
                const std::size_t j = members[p + 1];
                auto [x, y] = mate(work[i], work[j], rng, cfg.mutation.max_nodes);
                if (!(x.tree == work[i].tree)) {
                    work[i] = std::move(x);
                    changed[i] = 1;
                }
                if (!(y.tree == work[j].tree)) {
                    work[j] = std::move(y);
                    changed[j] = 1;
                }
            }
        }

        std::vector<PoolEntry> children;
        for (std::size_t i = 0; i < work.size(); ++i) {
            if (!changed[i]) continue;
            work[i].tree = collapse_constants(work[i].tree);
            children.push_back(std::move(work[i]));
        }
        refit(children, oracle, cfg, rng, stats);

        // Survival within each control-set group, in order of first appearance.
        std::vector<VarSet> group_order;
        std::map<VarSet, std::vector<PoolEntry>> candidates;
        std::map<VarSet, std::size_t> capacity;
        for (const auto& e : pool) {
            if (!capacity.count(e.control_set)) group_order.push_back(e.control_set);
            ++capacity[e.control_set];
            candidates[e.control_set].push_back(e);
        }
        for (const auto& c : children) candidates[c.control_set].push_back(c);
        std::vector<PoolEntry> next;
        next.reserve(pool.size());
        for (VarSet cs : group_order) {
            for (auto& e : survivors(std::move(candidates[cs]), capacity[cs])) next.push_back(std::move(e));
        }
        pool = std::move(next);

        hof.update(children);
        hof.update(pool);
        if (stats) ++stats->generations;
    }
}

} // namespace racing_sr
