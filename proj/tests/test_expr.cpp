#include <doctest.h>

#include <cmath>
#include <cstring>

#include "racing_sr/eval.hpp"
#include "racing_sr/expr.hpp"

using namespace racing_sr;

namespace {
const OperatorSet kTrig = OperatorSet::parse("+,-,*,sin,cos");
const OperatorSet kAll = OperatorSet::parse("+,-,*,/,sin,cos,log,exp,sqrt");
} // namespace

TEST_CASE("parse builds the expected prefix structure") {
    auto t = parse("x0 + x1", 2);
    REQUIRE(t.size() == 3);
    CHECK(t.node(0).op == Op::add);
    CHECK(t.node(1).op == Op::var);
    CHECK(t.node(1).var == 0);
    CHECK(t.node(2).var == 1);
}

TEST_CASE("open constants are counted in prefix order") {
    auto t = parse("C*cos(x0) + C", 1);
    CHECK(count_open_constants(t) == 2);
    CHECK(t.open_constant_positions() == std::vector<std::size_t>{2, 5});
    CHECK(free_variables(t) == VarSet{0});
    CHECK(to_string(t) == "((C*cos(x0))+C)");
}

TEST_CASE("literals are frozen constants") {
    auto t = parse("3.14*x1", 2);
    CHECK(count_open_constants(t) == 0);
    CHECK(free_variables(t) == VarSet{1});
    CHECK_FALSE(t.node(1).editable);
    CHECK(*t.node(1).value == doctest::Approx(3.14));

    auto e = parse("6.6743e-11*x0 + 2.41e+22", 1);
    CHECK(*e.node(2).value == 6.6743e-11);
    CHECK(*e.node(4).value == 2.41e+22);
}

TEST_CASE("precedence and associativity") {
    CHECK(to_string(parse("x0 - x1 - x2", 3)) == "((x0-x1)-x2)");
    CHECK(to_string(parse("x0 + x1 * x2", 3)) == "(x0+(x1*x2))");
    CHECK(to_string(parse("x0 / x1 / x2", 3)) == "((x0/x1)/x2)");
    CHECK(to_string(parse("(x0 + x1) * x2", 3)) == "((x0+x1)*x2)");
    CHECK(to_string(parse("-2*x0", 1)) == "(-2*x0)");
    CHECK(to_string(parse("x0 - -2", 1)) == "(x0--2)");
}

TEST_CASE("syntax errors carry a position") {
    CHECK_THROWS_AS((void)parse("x2 + sin(", 3), ParseError);
    CHECK_THROWS_AS((void)parse("x0 +", 1), ParseError);
    CHECK_THROWS_AS((void)parse("x0 x1", 2), ParseError);
    CHECK_THROWS_AS((void)parse("tanh(x0)", 1), ParseError);
    CHECK_THROWS_AS((void)parse("x3", 3), ParseError);
    try {
        (void)parse("x0 + )", 1);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 5);
    }
}

TEST_CASE("evaluate") {
    Matrix in(1, 2);
    in(0, 0) = 1;
    in(0, 1) = 2;
    CHECK(evaluate(parse("x0 + x1", 2), in, {}) == std::vector<double>{3.0});

    Matrix zero(1, 1, 0.0);
    const std::vector<double> c{0.5, 0.16};
    CHECK(evaluate(parse("C*cos(x0)+C", 1), zero, c)[0] == doctest::Approx(0.66).epsilon(1e-15));

    Matrix neg(1, 1, -1.0);
    CHECK(is_non_finite_marker(evaluate(parse("log(x0)", 1), neg, {})[0]));
    CHECK(is_non_finite_marker(evaluate(parse("sqrt(x0)", 1), neg, {})[0]));
    CHECK(is_non_finite_marker(evaluate(parse("1/x0", 1), zero, {})[0]));
    CHECK(is_non_finite_marker(evaluate(parse("exp(exp(exp(10)))", 1), zero, {})[0]));
}

TEST_CASE("evaluate rejects mismatched dimensions") {
    Matrix in(2, 3);
    CHECK_THROWS_AS((void)evaluate(parse("x0", 2), in, {}), DimensionMismatch);
    Matrix ok(2, 1);
    CHECK_THROWS_AS((void)evaluate(parse("C*x0", 1), ok, {}), DimensionMismatch);
}

TEST_CASE("batch evaluator agrees with fresh evaluation as constants change") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Matrix in(64, 2);
    for (std::size_t r = 0; r < in.rows(); ++r) {
        in(r, 0) = u(rng);
        in(r, 1) = u(rng);
    }
    auto t = parse("C*sin(x0*x1) + cos(C + x1)*x0 - sin(x0)", 2);
    BatchEvaluator ev(t, in);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> c{u(rng), u(rng)};
        auto cached = ev.evaluate(c);
        for (std::size_t r = 0; r < in.rows(); ++r) {
            const double x0 = in(r, 0);
            const double x1 = in(r, 1);
            const double expect = c[0] * std::sin(x0 * x1) + std::cos(c[1] + x1) * x0 - std::sin(x0);
            CHECK(cached[r] == doctest::Approx(expect).epsilon(1e-14));
        }
    }
}

TEST_CASE("property: reverse-mode constant gradients match finite differences") {
    Rng rng(31);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    Matrix in(32, 2);
    for (std::size_t r = 0; r < in.rows(); ++r) {
        in(r, 0) = u(rng);
        in(r, 1) = u(rng);
    }
    std::vector<double> seed(in.rows());
    for (auto& s : seed) s = u(rng) - 1.25;
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        auto t = random_tree(VarSet{0, 1}, kAll, 4, 2, rng);
        const std::size_t L = count_open_constants(t);
        if (L == 0) continue;
        std::vector<double> c(L);
        for (auto& v : c) v = u(rng);
        BatchEvaluator ev(t, in);
        auto weighted = [&](const std::vector<double>& x) {
            auto y = ev.evaluate(x);
            double s = 0.0;
            for (std::size_t r = 0; r < y.size(); ++r) s += seed[r] * y[r];
            return s;
        };
        if (!std::isfinite(weighted(c))) continue;
        std::vector<double> g(L);
        ev.gradient(seed, g);
        for (std::size_t j = 0; j < L; ++j) {
            const double h = 1e-6;
            auto plus = c;
            auto minus = c;
            plus[j] += h;
            minus[j] -= h;
            const double fd = (weighted(plus) - weighted(minus)) / (2.0 * h);
            if (!std::isfinite(fd)) continue;
            CAPTURE(to_string(t));
            CHECK(g[j] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("random_tree respects depth and variable closure") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        auto leaf = random_tree(VarSet{0}, kTrig, 1, 1, rng);
        REQUIRE(leaf.size() == 1);
        CHECK((leaf.node(0).op == Op::var || leaf.node(0).is_open_constant()));
    }
    for (int i = 0; i < 500; ++i) {
        auto t = random_tree(VarSet{1}, kAll, 4, 3, rng);
        CHECK(t.depth() <= 4);
        CHECK(free_variables(t).is_subset_of(VarSet{1}));
        for (const Node& nd : t.nodes()) CHECK(nd.editable);
    }
}

TEST_CASE("random_tree is deterministic given the seed") {
    Rng a(99);
    Rng b(99);
    for (int i = 0; i < 50; ++i) {
        CHECK(structurally_equal(random_tree(VarSet{0, 2}, kAll, 5, 3, a), random_tree(VarSet{0, 2}, kAll, 5, 3, b)));
    }
}

TEST_CASE("property: parse(to_string(t)) round-trips for 1000 random trees") {
    Rng rng(2024);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 1000; ++i) {
        auto t = random_tree(VarSet{0, 1, 2}, kAll, 6, 3, rng);
        // Freeze a few constants so negative and fractional literals are covered.
        std::vector<Node> nodes(t.nodes().begin(), t.nodes().end());
        for (auto& nd : nodes) {
            if (nd.is_open_constant() && u(rng) > 0.0) nd = make_frozen_constant(u(rng));
        }
        ExpressionTree frozen(nodes, 3);
        auto back = parse(to_string(frozen), 3);
        CHECK(structurally_equal(frozen, back));
    }
}

TEST_CASE("property: evaluation is pure and bitwise repeatable") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Matrix in(32, 3);
    for (std::size_t r = 0; r < in.rows(); ++r) {
        for (std::size_t c = 0; c < 3; ++c) in(r, c) = u(rng);
    }
    for (int i = 0; i < 200; ++i) {
        auto t = random_tree(VarSet{0, 1, 2}, kAll, 5, 3, rng);
        std::vector<double> c(count_open_constants(t));
        for (auto& v : c) v = u(rng);
        auto a = evaluate(t, in, c);
        auto b = evaluate(t, in, c);
        REQUIRE(a.size() == b.size());
        for (std::size_t r = 0; r < a.size(); ++r) {
            CHECK(std::memcmp(&a[r], &b[r], sizeof(double)) == 0);
        }
    }
}

TEST_CASE("property: trig operator closure keeps finite inputs finite") {
    Rng rng(6);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    Matrix in(16, 3);
    for (std::size_t r = 0; r < in.rows(); ++r) {
        for (std::size_t c = 0; c < 3; ++c) in(r, c) = u(rng);
    }
    for (int i = 0; i < 500; ++i) {
        auto t = random_tree(VarSet{0, 1, 2}, kTrig, 6, 3, rng);
        std::vector<double> c(count_open_constants(t));
        for (auto& v : c) v = u(rng);
        for (double v : evaluate(t, in, c)) CHECK(std::isfinite(v));
    }
}

TEST_CASE("frozen nodes print with a marker in prefix form") {
    std::vector<Node> nodes{make_op(Op::mul), make_frozen_constant(2.5), make_var(0)};
    nodes[0].editable = false;
    ExpressionTree t(nodes, 1);
    CHECK(to_prefix(t) == "!* !2.5 x0");
}

TEST_CASE("tree validation") {
    CHECK_THROWS_AS(ExpressionTree({make_op(Op::add), make_var(0)}, 1), InvalidTree);
    CHECK_THROWS_AS(ExpressionTree({make_var(2)}, 2), InvalidTree);
    Node bad = make_frozen_constant(1.0);
    bad.editable = true;
    CHECK_THROWS_AS(ExpressionTree({bad}, 1), InvalidTree);
}

TEST_CASE("with_subtree replaces one subtree") {
    auto t = parse("sin(x0) + x1", 2);
    auto r = t.with_subtree(1, parse("x1*C", 2).nodes());
    CHECK(to_string(r) == "((x1*C)+x1)");
    CHECK(t.subtree_end(1) == 3);
    CHECK(t.parent(3) == std::optional<std::size_t>{0});
    CHECK_FALSE(t.parent(0).has_value());
}
