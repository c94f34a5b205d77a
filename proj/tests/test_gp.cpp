#include <doctest.h>

#include <algorithm>
#include <set>

#include "racing_sr/gp.hpp"

using namespace racing_sr;

namespace {

const OperatorSet kTrig = OperatorSet::parse("+,-,*,sin,cos");

ExpressionTree with_frozen(const ExpressionTree& t, const std::vector<std::size_t>& positions) {
    std::vector<Node> nodes(t.nodes().begin(), t.nodes().end());
    for (auto p : positions) nodes[p].editable = false;
    return ExpressionTree(std::move(nodes), t.n_vars());
}

PoolEntry entry(const std::string& text, std::size_t n, VarSet control = {}) {
    return PoolEntry{parse(text, n), {}, Schedule(control), control};
}

PoolEntry scored(const std::string& text, double fitness) {
    auto e = entry(text, 2);
    e.result.fitness = {fitness};
    e.result.constants = Matrix(1, count_open_constants(e.tree));
    return e;
}

} // namespace

TEST_CASE("insert on a single leaf yields depth two") {
    Rng rng(1);
    auto out = mutate_with(MutationKind::insert, parse("x0", 2), kTrig, VarSet{0, 1}, rng);
    REQUIRE(out);
    CHECK(out->depth() == 2);
    CHECK(out->size() >= 2);
}

TEST_CASE("same-arity mutation keeps the shape") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        auto t = parse("x0 + x1", 2);
        auto out = mutate_with(MutationKind::same_arity, t, kTrig, VarSet{0, 1}, rng);
        REQUIRE(out);
        CHECK(out->size() == 3);
        CHECK(!(*out == t));
        for (std::size_t i = 0; i < 3; ++i) CHECK(arity(out->node(i).op) == arity(t.node(i).op));
    }
}

TEST_CASE("remove has no target on a single node") {
    Rng rng(2);
    CHECK(!mutate_with(MutationKind::remove, parse("x0", 1), kTrig, VarSet{0}, rng));
    auto out = mutate_with(MutationKind::remove, parse("sin(x0)", 1), kTrig, VarSet{0}, rng);
    REQUIRE(out);
    CHECK(to_string(*out) == "x0");
}

TEST_CASE("mutation only introduces free variables") {
    Rng rng(3);
    auto t = parse("x0 * C", 3);
    for (int i = 0; i < 500; ++i) {
        t = mutate(t, kTrig, VarSet{0}, rng);
        CHECK(free_variables(t).is_subset_of(VarSet{0}));
        CHECK(t.size() <= 60);
    }
}

TEST_CASE("property: frozen nodes survive mutation and mating") {
    Rng rng(4);
    const auto base = with_frozen(parse("sin(x0) * x1 + C", 2), {0, 1, 2, 3, 4});
    // Frozen nodes in prefix order, with their payloads.
    const auto frozen_nodes = [](const ExpressionTree& t) {
        std::vector<Node> out;
        for (const auto& nd : t.nodes()) {
            if (!nd.editable) out.push_back(nd);
        }
        return out;
    };
    for (int i = 0; i < 300; ++i) {
        auto t = mutate(base, kTrig, VarSet{0, 1}, rng);
        for (std::size_t p = 0; p < 5; ++p) {
            CHECK(t.node(p) == base.node(p));
        }
    }
    PoolEntry a{base, {}, Schedule(VarSet{}), VarSet{}};
    PoolEntry b = entry("cos(x1) - x0 * C", 2);
    const auto before = frozen_nodes(base);
    for (int i = 0; i < 300; ++i) {
        auto [x, y] = mate(a, b, rng);
        CHECK(frozen_nodes(x.tree) == before);
        CHECK(frozen_nodes(y.tree).empty());
        CHECK(frozen_nodes(mutate(x.tree, kTrig, VarSet{0, 1}, rng)) == before);
    }
}

TEST_CASE("property: mating is symmetric and conserves nodes") {
    const auto a = entry("sin(x0) * C + x1", 2);
    const auto b = entry("cos(x1 - C)", 2);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng r1(seed);
        Rng r2(seed);
        auto [x1, y1] = mate(a, b, r1);
        auto [y2, x2] = mate(b, a, r2);
        CHECK(x1.tree == x2.tree);
        CHECK(y1.tree == y2.tree);
        CHECK(x1.tree.size() + y1.tree.size() == a.tree.size() + b.tree.size());
        CHECK(x1.result.empty());
    }
}

TEST_CASE("mating across control sets is rejected") {
    Rng rng(5);
    CHECK_THROWS_AS((void)mate(entry("x0", 2, VarSet{1}), entry("x1", 2, VarSet{0}), rng), ControlSetMismatch);
}

TEST_CASE("mating respects the size cap") {
    Rng rng(6);
    std::string big = "x0";
    for (int i = 0; i < 28; ++i) big = "(" + big + " + x0)";
    auto a = entry(big, 1);
    auto b = entry(big, 1);
    for (int i = 0; i < 50; ++i) {
        auto [x, y] = mate(a, b, rng);
        CHECK(x.tree.size() <= 60);
        CHECK(y.tree.size() <= 60);
    }
}

TEST_CASE("select_topk ordering") {
    std::vector<PoolEntry> v{scored("x0 + x1", -0.5), scored("x0", -0.1), scored("sin(x0)", -0.1),
                             scored("x1", -0.1), scored("C", -2.0)};
    auto top = select_topk(v, 3);
    REQUIRE(top.size() == 3);
    CHECK(to_string(top[0].tree) == "x0");
    CHECK(to_string(top[1].tree) == "x1");
    CHECK(to_string(top[2].tree) == "sin(x0)");
    CHECK(select_topk(v, 10).size() == 5);
    CHECK(select_topk(v, 0).empty());
}

TEST_CASE("hall of fame dedupes and keeps the best copy") {
    HallOfFame hof(2);
    hof.update({scored("x0", -0.3), scored("x0", -0.2), scored("x1", -0.5), entry("sin(x0)", 2)});
    REQUIRE(hof.entries().size() == 2);
    CHECK(hof.entries()[0].fitness() == -0.2);
    CHECK(to_string(hof.entries()[1].tree) == "x1");
    hof.update({scored("C", -0.01)});
    CHECK(hof.best_fitness() == -0.01);
    CHECK(to_string(hof.entries()[1].tree) == "x0");
}

namespace {

struct Fixture {
    Oracle oracle{make_benchmark("t", 2, "x0 * cos(x1) + 2", "+,-,*,sin,cos", {{-5, 5}, {-5, 5}}), 11};
    GpConfig cfg;
    std::vector<PoolEntry> pool;

    explicit Fixture(std::size_t size, VarSet control = {}) {
        cfg.trials = 2;
        cfg.batch = 64;
        cfg.generations = 5;
        cfg.fit.restarts = 2;
        Rng rng(12);
        for (std::size_t i = 0; i < size; ++i) {
            pool.push_back({random_tree(control.complement(2), kTrig, 3, 2, rng), {}, Schedule(control), control});
        }
        refit(pool, oracle, cfg, rng);
    }
};

} // namespace

TEST_CASE("gp with zero generations leaves the pool untouched") {
    Fixture f(10);
    auto before = f.pool;
    f.cfg.generations = 0;
    HallOfFame hof;
    Rng rng(13);
    GpStats stats;
    gp_run(f.pool, f.oracle, kTrig, f.cfg, hof, rng, &stats);
    REQUIRE(f.pool.size() == before.size());
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(f.pool[i].tree == before[i].tree);
    CHECK(stats.generations == 0);
    CHECK(hof.entries().empty());
}

TEST_CASE("gp without variation keeps the trees and fills the hall of fame") {
    Fixture f(10);
    auto before = f.pool;
    f.cfg.p_mutate = 0.0;
    f.cfg.p_mate = 0.0;
    HallOfFame hof;
    Rng rng(14);
    GpStats stats;
    const auto rows = f.oracle.rows_served();
    gp_run(f.pool, f.oracle, kTrig, f.cfg, hof, rng, &stats);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(f.pool[i].tree == before[i].tree);
    CHECK(stats.generations == 5);
    CHECK(stats.optimize_calls == 0);
    CHECK(f.oracle.rows_served() == rows);
    CHECK(!hof.entries().empty());
}

TEST_CASE("property: the hall of fame never gets worse across generations") {
    Fixture f(12);
    HallOfFame hof;
    Rng rng(15);
    double best = -std::numeric_limits<double>::infinity();
    f.cfg.generations = 1;
    for (int g = 0; g < 8; ++g) {
        gp_run(f.pool, f.oracle, kTrig, f.cfg, hof, rng);
        CHECK(hof.best_fitness() >= best);
        best = hof.best_fitness();
        CHECK(hof.entries().size() <= 25);
        CHECK(f.pool.size() == 12);
    }
}

TEST_CASE("gp keeps control-set group sizes and respects controlled variables") {
    Fixture f(0);
    Rng seed_rng(16);
    for (VarSet cs : {VarSet{0}, VarSet{1}}) {
        for (int i = 0; i < 6; ++i) {
            f.pool.push_back({random_tree(cs.complement(2), kTrig, 3, 2, seed_rng), {}, Schedule(cs), cs});
        }
    }
    refit(f.pool, f.oracle, f.cfg, seed_rng);
    HallOfFame hof;
    Rng rng(17);
    gp_run(f.pool, f.oracle, kTrig, f.cfg, hof, rng);
    REQUIRE(f.pool.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
        const VarSet cs = i < 6 ? VarSet{0} : VarSet{1};
        CHECK(f.pool[i].control_set == cs);
        CHECK(free_variables(f.pool[i].tree).is_subset_of(cs.complement(2)));
        CHECK(!f.pool[i].result.empty());
    }
}

TEST_CASE("gp recovers a one-constant target") {
    Oracle oracle(make_benchmark("t", 1, "2*x0", "+,-,*,sin,cos", {{-5, 5}}), 18);
    GpConfig cfg;
    cfg.generations = 3;
    std::vector<PoolEntry> pool{{parse("C*x0", 1), {}, Schedule(VarSet{}), VarSet{}}};
    Rng rng(19);
    refit(pool, oracle, cfg, rng);
    HallOfFame hof;
    gp_run(pool, oracle, kTrig, cfg, hof, rng);
    CHECK(hof.best_fitness() >= -1e-6);
}

TEST_CASE("gp results do not depend on the worker count") {
    auto run = [](std::size_t jobs) {
        Fixture f(8);
        f.cfg.jobs = jobs;
        HallOfFame hof;
        Rng rng(20);
        gp_run(f.pool, f.oracle, kTrig, f.cfg, hof, rng);
        std::vector<std::string> out;
        for (const auto& e : hof.entries()) out.push_back(to_prefix(e.tree) + format_double(e.fitness()));
        return out;
    };
    CHECK(run(1) == run(3));
}

TEST_CASE("gp stops when the budget is exhausted") {
    Fixture f(4);
    std::atomic<bool> stop{true};
    f.cfg.budget = Budget::seconds(1000, &stop);
    HallOfFame hof;
    Rng rng(21);
    CHECK_THROWS_AS(gp_run(f.pool, f.oracle, kTrig, f.cfg, hof, rng), Interrupted);
}

TEST_CASE("variable-free editable subtrees collapse to one constant") {
    CHECK(to_string(collapse_constants(parse("C*C + x0", 1))) == "(C+x0)");
    CHECK(to_string(collapse_constants(parse("cos(C - C)*x0", 1))) == "(C*x0)");
    CHECK(to_string(collapse_constants(parse("sin(x0) + C", 1))) == "(sin(x0)+C)");
    // Literals without open constants are left alone.
    CHECK(to_string(collapse_constants(parse("2*3 + x0", 1))) == to_string(parse("2*3 + x0", 1)));
    // Frozen nodes block the collapse.
    const auto t = with_frozen(parse("C*C + x0", 1), {1});
    CHECK(collapse_constants(t) == t);
    CHECK(to_string(collapse_constants(parse("C", 1))) == "C");
}
