#include "racing_sr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace racing_sr {

std::string_view method_name(Method m) noexcept {
    switch (m) {
    case Method::nelder_mead: return "nelder-mead";
    case Method::bfgs: return "bfgs";
    case Method::cg: return "cg";
    case Method::basin_hopping: return "basin-hopping";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view text) noexcept {
    for (Method m : {Method::nelder_mead, Method::bfgs, Method::cg, Method::basin_hopping}) {
        if (method_name(m) == text) return m;
    }
    return std::nullopt;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Absolute slack in the stopping test; lets exact fits run down to ~1e-20.
constexpr double kAbsFloor = 1e-22;
constexpr double kArmijo = 1e-4;
constexpr double kSimplexTolerance = 1e-8;

using Vec = std::vector<double>;

class Counted {
public:
    explicit Counted(const Objective& f, const Gradient& grad = {}) : f_(f), grad_(grad) {}
    double operator()(std::span<const double> x) {
        ++calls_;
        const double v = f_(x);
        return std::isfinite(v) ? v : kInf;
    }
    [[nodiscard]] std::size_t calls() const { return calls_; }
    [[nodiscard]] const Gradient& analytic() const { return grad_; }

private:
    const Objective& f_;
    const Gradient& grad_;
    std::size_t calls_ = 0;
};

bool small_decrease(double before, double after, double tol) {
    return before - after <= tol * std::abs(before) + kAbsFloor;
}

// Objective values of recent iterations, for the stall test.
class StallWatch {
public:
    explicit StallWatch(const LocalOptions& opt) : window_(opt.stall_window), tol_(opt.stall_tolerance) {}
    bool stalled(double fx) {
        if (window_ == 0) return false;
        history_.push_back(fx);
        if (history_.size() <= window_) return false;
        const double before = history_[history_.size() - 1 - window_];
        return before - fx <= tol_ * std::abs(fx) + kAbsFloor;
    }

private:
    std::size_t window_;
    double tol_;
    std::vector<double> history_;
};

double dot(const Vec& a, const Vec& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }

double max_abs(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

template <class F>
Vec central_difference(F& f, const Vec& x) {
    static const double kStep = std::cbrt(std::numeric_limits<double>::epsilon());
    Vec g(x.size());
    Vec probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = kStep * std::max(1.0, std::abs(x[i]));
        probe[i] = x[i] + h;
        const double fp = f(probe);
        probe[i] = x[i] - h;
        const double fm = f(probe);
        probe[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
        if (!std::isfinite(g[i])) g[i] = 0.0;
    }
    return g;
}

Vec gradient(Counted& f, const Vec& x) {
    if (!f.analytic()) return central_difference(f, x);
    Vec g(x.size());
    f.analytic()(x, g);
    for (auto& v : g) {
        if (!std::isfinite(v)) v = 0.0;
    }
    return g;
}

struct Step {
    bool ok = false;
    Vec x;
    double f = kInf;
    double alpha = 0.0;
};

// Backtracking Armijo search with safeguarded quadratic interpolation. With
// `refine`, an accepted step is followed by one probe at the minimizer of the
// quadratic through (0, fx, slope) and (alpha, f), which gives exact steps on
// quadratics and lets the step grow.
Step line_search(Counted& f, const Vec& x, double fx, const Vec& d, double slope, double alpha, bool refine) {
    Vec xt(x.size());
    auto at = [&](double a) {
        for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + a * d[i];
        return f(xt);
    };
    for (int k = 0; k < 40; ++k) {
        const double ft = at(alpha);
        if (ft <= fx + kArmijo * alpha * slope) {
            Step s{true, xt, ft, alpha};
            const double curv = ft - fx - slope * alpha;
            if (refine && curv > 0.0) {
                const double a = std::min(-slope * alpha * alpha / (2.0 * curv), 10.0 * alpha);
                if (std::isfinite(a) && a > 0.0 && std::abs(a - alpha) > 0.01 * alpha) {
                    const double fa = at(a);
                    if (fa < s.f) s = Step{true, xt, fa, a};
                }
            }
            return s;
        }
        double next = 0.25 * alpha;
        if (std::isfinite(ft)) {
            const double curv = ft - fx - slope * alpha;
            if (curv > 0.0) next = std::clamp(-slope * alpha * alpha / (2.0 * curv), 0.1 * alpha, 0.5 * alpha);
        }
        alpha = next;
    }
    return {};
}

Minimum nelder_mead(Counted& f, const Vec& x0, const LocalOptions& opt) {
    const std::size_t n = x0.size();
    std::vector<Vec> pts(n + 1, x0);
    Vec fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += x0[i] != 0.0 ? 0.05 * x0[i] : 0.00025;
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);

    std::vector<std::size_t> order(n + 1);
    Vec c(n), xr(n), xe(n), xc(n);
    for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        {
            std::vector<Vec> p2;
            Vec f2;
            for (auto i : order) {
                p2.push_back(std::move(pts[i]));
                f2.push_back(fv[i]);
            }
            pts = std::move(p2);
            fv = std::move(f2);
        }
        if (!std::isfinite(fv[0])) break;
        if (std::isfinite(fv[n]) && small_decrease(fv[n], fv[0], opt.tolerance)) {
            // Equal values at distinct vertices can straddle a minimum, so the
            // simplex must also have collapsed.
            double spread = 0.0;
            for (std::size_t i = 1; i <= n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    spread = std::max(spread, std::abs(pts[i][j] - pts[0][j]) / std::max(1.0, std::abs(pts[0][j])));
                }
            }
            if (spread <= kSimplexTolerance) break;
        }

        std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) c[j] += pts[i][j] / static_cast<double>(n);
        }
        const Vec& w = pts[n];
        for (std::size_t j = 0; j < n; ++j) xr[j] = c[j] + (c[j] - w[j]);
        const double fr = f(xr);
        if (fr < fv[0]) {
            for (std::size_t j = 0; j < n; ++j) xe[j] = c[j] + 2.0 * (c[j] - w[j]);
            const double fe = f(xe);
            if (fe < fr) {
                pts[n] = xe;
                fv[n] = fe;
            } else {
                pts[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if (fr < fv[n - 1]) {
            pts[n] = xr;
            fv[n] = fr;
            continue;
        }
        const bool outside = fr < fv[n];
        for (std::size_t j = 0; j < n; ++j) xc[j] = outside ? c[j] + 0.5 * (xr[j] - c[j]) : c[j] + 0.5 * (w[j] - c[j]);
        const double fc = f(xc);
        if (outside ? fc <= fr : fc < fv[n]) {
            pts[n] = xc;
            fv[n] = fc;
            continue;
        }
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
            fv[i] = f(pts[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    return {pts[best], fv[best], 0};
}

Minimum bfgs(Counted& f, const Vec& x0, const LocalOptions& opt) {
    const std::size_t n = x0.size();
    Vec x = x0;
    double fx = f(x);
    if (!std::isfinite(fx)) return {x, fx, 0};
    Vec g = gradient(f, x);
    std::vector<double> H(n * n, 0.0);
    auto reset = [&] {
        std::fill(H.begin(), H.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
    };
    reset();
    bool identity = true;
    Vec d(n), s(n), y(n), Hy(n);
    StallWatch stall(opt);

    for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
        if (max_abs(g) <= opt.gradient_tolerance) break;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = 0.0;
            for (std::size_t j = 0; j < n; ++j) d[i] -= H[i * n + j] * g[j];
        }
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            reset();
            identity = true;
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            slope = -dot(g, g);
        }
        Step st = line_search(f, x, fx, d, slope, 1.0, false);
        if (!st.ok) {
            if (identity) break;
            reset();
            identity = true;
            continue;
        }
        Vec gn = gradient(f, st.x);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = st.x[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        const bool done = small_decrease(fx, st.f, opt.tolerance);
        x = std::move(st.x);
        fx = st.f;
        g = std::move(gn);
        if (done || stall.stalled(fx)) break;

        const double sy = dot(s, y);
        const double yy = dot(y, y);
        if (!(sy > 1e-12 * std::sqrt(dot(s, s) * yy))) continue;
        if (identity) {
            for (std::size_t i = 0; i < n; ++i) H[i * n + i] = sy / yy;
            identity = false;
        }
        // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
        const double rho = 1.0 / sy;
        for (std::size_t i = 0; i < n; ++i) {
            Hy[i] = 0.0;
            for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
        }
        const double yHy = dot(y, Hy);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                H[i * n + j] += -rho * (Hy[i] * s[j] + s[i] * Hy[j]) + (rho * rho * yHy + rho) * s[i] * s[j];
            }
        }
    }
    return {x, fx, 0};
}

// Polak-Ribiere+ nonlinear conjugate gradients, restarted every n steps.
Minimum cg(Counted& f, const Vec& x0, const LocalOptions& opt) {
    const std::size_t n = x0.size();
    Vec x = x0;
    double fx = f(x);
    if (!std::isfinite(fx)) return {x, fx, 0};
    Vec g = gradient(f, x);
    Vec d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    double alpha = 1.0 / std::max(1.0, std::sqrt(dot(g, g)));
    double prev_slope = 0.0;
    bool steepest = true;
    StallWatch stall(opt);

    for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
        if (max_abs(g) <= opt.gradient_tolerance) break;
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            slope = -dot(g, g);
            steepest = true;
        }
        if (prev_slope != 0.0) alpha = std::min(1.0, alpha * prev_slope / slope);
        Step st = line_search(f, x, fx, d, slope, alpha, true);
        if (!st.ok) {
            if (steepest) break;
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            steepest = true;
            alpha = 1.0 / std::max(1.0, std::sqrt(dot(g, g)));
            prev_slope = 0.0;
            continue;
        }
        Vec gn = gradient(f, st.x);
        const bool done = small_decrease(fx, st.f, opt.tolerance);
        alpha = st.alpha;
        prev_slope = slope;
        x = std::move(st.x);
        fx = st.f;
        if (done || stall.stalled(fx)) break;

        const double gg = dot(g, g);
        double beta = 0.0;
        if ((iter + 1) % n != 0 && gg > 0.0) {
            double num = 0.0;
            for (std::size_t i = 0; i < n; ++i) num += gn[i] * (gn[i] - g[i]);
            beta = std::max(0.0, num / gg);
        }
        g = std::move(gn);
        for (std::size_t i = 0; i < n; ++i) d[i] = -g[i] + beta * d[i];
        steepest = beta == 0.0;
    }
    return {x, fx, 0};
}

} // namespace

std::vector<double> finite_difference_gradient(const Objective& f, std::span<const double> x) {
    Vec v(x.begin(), x.end());
    return central_difference(f, v);
}

Minimum local_optimize(const Objective& f, std::span<const double> x0, Method method, const LocalOptions& options,
                       const Gradient& grad) {
    Counted counted(f, grad);
    const Vec start(x0.begin(), x0.end());
    if (start.empty()) return {start, counted(start), counted.calls()};
    Minimum m;
    switch (method) {
    case Method::nelder_mead: m = nelder_mead(counted, start, options); break;
    case Method::bfgs: m = bfgs(counted, start, options); break;
    case Method::cg: m = cg(counted, start, options); break;
    case Method::basin_hopping: throw std::invalid_argument("basin_hopping is not a local method");
    }
    m.evaluations = counted.calls();
    return m;
}

Minimum basin_hopping(const Objective& f, std::span<const double> x0, std::size_t hops, double step_scale, Rng& rng,
                      Method local, const LocalOptions& options, const Gradient& grad) {
    if (hops == 0) throw std::invalid_argument("basin_hopping needs hops >= 1");
    Minimum current = local_optimize(f, x0, local, options, grad);
    Minimum best = current;
    std::size_t evaluations = current.evaluations;
    std::uniform_real_distribution<double> step(-step_scale, step_scale);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec trial(current.x.size());
    for (std::size_t h = 1; h < hops; ++h) {
        for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = current.x[i] + step(rng);
        Minimum m = local_optimize(f, trial, local, options, grad);
        evaluations += m.evaluations;
        const double u = unit(rng);
        if (m.f < best.f) best = m;
        if (m.f <= current.f || (std::isfinite(m.f) && u < std::exp(current.f - m.f))) current = std::move(m);
    }
    best.evaluations = evaluations;
    return best;
}

} // namespace racing_sr
