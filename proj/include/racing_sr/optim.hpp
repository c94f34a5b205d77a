#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "racing_sr/types.hpp"

namespace racing_sr {

using Objective = std::function<double(std::span<const double>)>;
/// Writes the gradient at x into the second argument.
using Gradient = std::function<void(std::span<const double>, std::span<double>)>;

enum class Method { nelder_mead, bfgs, cg, basin_hopping };

[[nodiscard]] std::string_view method_name(Method m) noexcept;
/// Accepts nelder-mead, bfgs, cg, basin-hopping.
[[nodiscard]] std::optional<Method> parse_method(std::string_view text) noexcept;

struct LocalOptions {
    std::size_t max_iterations = 500;
    /// Stop once an iteration lowers the objective by less than this fraction.
    double tolerance = 1e-8;
    /// Gradient methods also stop when every gradient component is this small.
    double gradient_tolerance = 1e-5;
    /// Gradient methods also stop when the last `stall_window` iterations
    /// together lowered the objective by less than `stall_tolerance` of its
    /// value. Catches fits drifting toward an infimum at infinity. A zero
    /// window disables the test.
    std::size_t stall_window = 10;
    double stall_tolerance = 1e-3;
};

struct Minimum {
    std::vector<double> x;
    double f = 0.0;
    std::size_t evaluations = 0;
};

/// Central-difference gradient with per-coordinate step cbrt(eps)*max(1,|x_i|).
[[nodiscard]] std::vector<double> finite_difference_gradient(const Objective& f, std::span<const double> x);

/// Local minimization. Non-finite objective values are treated as +inf, so the
/// returned point is never worse than x0. `method` must not be basin_hopping.
/// Gradient methods use `grad` when given and central differences otherwise.
[[nodiscard]] Minimum local_optimize(const Objective& f, std::span<const double> x0, Method method,
                                     const LocalOptions& options = {}, const Gradient& grad = {});

/// Basin hopping: a local solve from x0, then `hops - 1` perturb-and-solve
/// steps with Metropolis acceptance at unit temperature. Returns the best
/// minimum visited, so hops == 1 is exactly one local solve.
[[nodiscard]] Minimum basin_hopping(const Objective& f, std::span<const double> x0, std::size_t hops,
                                    double step_scale, Rng& rng, Method local = Method::bfgs,
                                    const LocalOptions& options = {}, const Gradient& grad = {});

} // namespace racing_sr
