#include <doctest.h>

#include <cmath>

#include "racing_sr/optim.hpp"

using namespace racing_sr;

namespace {

constexpr Method kLocal[] = {Method::nelder_mead, Method::bfgs, Method::cg};

double multimodal(std::span<const double> x) { return std::sin(5.0 * x[0]) + 0.1 * x[0] * x[0]; }

// Dense scan over [-10, 10] with step 1e-4; the reference the optimizers are held to.
double grid_minimum() {
    double best = multimodal(std::vector<double>{-10.0});
    for (long i = 0; i <= 200000; ++i) {
        const double x = -10.0 + 1e-4 * static_cast<double>(i);
        best = std::min(best, multimodal(std::span<const double>(&x, 1)));
    }
    return best;
}

} // namespace

TEST_CASE("every local method recovers a convex quadratic minimum") {
    Objective f = [](std::span<const double> x) { return (x[0] - 3.0) * (x[0] - 3.0); };
    for (Method m : kLocal) {
        CAPTURE(method_name(m));
        auto r = local_optimize(f, std::vector<double>{0.0}, m);
        CHECK(std::abs(r.x[0] - 3.0) <= 1e-6);
        CHECK(r.f <= 1e-12);
        CHECK(r.evaluations > 0);
    }
}

TEST_CASE("quadratic recovery in several dimensions") {
    Objective f = [](std::span<const double> x) {
        return (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] + 2.0) * (x[1] + 2.0) + 0.5 * (x[2] - 0.25) * (x[2] - 0.25) +
               0.3 * (x[0] - 1.0) * (x[1] + 2.0);
    };
    for (Method m : kLocal) {
        CAPTURE(method_name(m));
        auto r = local_optimize(f, std::vector<double>{0.3, -0.7, 0.9}, m);
        CHECK(std::abs(r.x[0] - 1.0) <= 1e-6);
        CHECK(std::abs(r.x[1] + 2.0) <= 1e-6);
        CHECK(std::abs(r.x[2] - 0.25) <= 1e-6);
    }
}

TEST_CASE("Rosenbrock: every method descends") {
    Objective f = [](std::span<const double> x) {
        return 100.0 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1.0 - x[0]) * (1.0 - x[0]);
    };
    const std::vector<double> x0{-1.2, 1.0};
    for (Method m : kLocal) {
        CAPTURE(method_name(m));
        auto r = local_optimize(f, x0, m);
        CHECK(r.f < f(x0));
    }
    CHECK(local_optimize(f, x0, Method::bfgs).f < 1e-8);
}

TEST_CASE("plateau objective returns the start point") {
    Objective f = [](std::span<const double>) { return 4.0; };
    const std::vector<double> x0{0.7, -0.2};
    for (Method m : kLocal) {
        auto r = local_optimize(f, x0, m);
        CHECK(r.x == x0);
        CHECK(r.f == 4.0);
    }
}

TEST_CASE("non-finite regions are never preferred") {
    Objective f = [](std::span<const double> x) { return x[0] < 0.0 ? std::nan("") : (x[0] - 0.5) * (x[0] - 0.5); };
    for (Method m : kLocal) {
        auto r = local_optimize(f, std::vector<double>{2.0}, m);
        CHECK(std::isfinite(r.f));
        CHECK(r.f <= 2.25);
    }
}

TEST_CASE("finite-difference gradient matches analytic gradients of polynomials") {
    Objective f = [](std::span<const double> x) {
        return 3.0 * x[0] * x[0] * x[1] - 2.0 * x[1] * x[1] * x[1] + x[0] * x[1] + 7.0 * x[0];
    };
    Rng rng(1);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> x{u(rng), u(rng)};
        auto g = finite_difference_gradient(f, x);
        const double g0 = 6.0 * x[0] * x[1] + x[1] + 7.0;
        const double g1 = 3.0 * x[0] * x[0] - 6.0 * x[1] * x[1] + x[0];
        CHECK(g[0] == doctest::Approx(g0).epsilon(1e-5));
        CHECK(g[1] == doctest::Approx(g1).epsilon(1e-5));
    }
}

TEST_CASE("basin hopping finds the grid-search global minimum of sin(5x)+0.1x^2") {
    const double reference = grid_minimum();
    // Frozen from an independent numpy scan of the same grid.
    CHECK(reference == doctest::Approx(-0.9902087121262274).epsilon(1e-12));
    Rng rng(17);
    auto r = basin_hopping(multimodal, std::vector<double>{2.0}, 20, 0.5, rng);
    CHECK(std::abs(r.f - reference) <= 1e-3);
}

TEST_CASE("basin hopping with one hop equals the local solve") {
    Rng rng(1);
    const std::vector<double> x0{2.0};
    auto bh = basin_hopping(multimodal, x0, 1, 0.5, rng);
    auto local = local_optimize(multimodal, x0, Method::bfgs);
    CHECK(bh.x == local.x);
    CHECK(bh.f == local.f);
}

TEST_CASE("basin hopping is never worse than the local solve and is seeded") {
    const std::vector<double> x0{2.0};
    const double local = local_optimize(multimodal, x0, Method::bfgs).f;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng a(seed);
        Rng b(seed);
        auto ra = basin_hopping(multimodal, x0, 8, 0.5, a);
        auto rb = basin_hopping(multimodal, x0, 8, 0.5, b);
        CHECK(ra.f <= local);
        CHECK(ra.x == rb.x);
    }
}

TEST_CASE("method names round-trip") {
    for (Method m : {Method::nelder_mead, Method::bfgs, Method::cg, Method::basin_hopping}) {
        CHECK(parse_method(method_name(m)) == m);
    }
    CHECK_FALSE(parse_method("shgo").has_value());
}

TEST_CASE("stall stop ends a drift toward an infimum at infinity") {
    // Mirrors C*(C+u) fitted to data it cannot explain: the loss creeps toward
    // 1 as c1 -> 0 and c2 -> infinity.
    Objective f = [](std::span<const double> c) {
        const double a = c[0] * c[1] - 1.0;
        return 1.0 + a * a + c[0] * c[0];
    };
    const std::vector<double> start{0.8, 0.5};
    for (Method m : {Method::bfgs, Method::cg}) {
        CAPTURE(method_name(m));
        LocalOptions patient;
        patient.stall_window = 0;
        const auto slow = local_optimize(f, start, m, patient);
        const auto fast = local_optimize(f, start, m);
        CHECK(fast.evaluations < slow.evaluations);
        CHECK(fast.f <= f(start));
        CHECK(fast.f - 1.0 < 0.05);
    }
}
