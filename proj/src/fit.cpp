#include "racing_sr/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "racing_sr/eval.hpp"

namespace racing_sr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxStartDraws = 16;
} // namespace

double TrialResult::scalar() const {
    if (fitness.empty()) return -kInf;
    double sum = 0.0;
    for (double f : fitness) {
        if (!std::isfinite(f)) return -kInf;
        sum += f;
    }
    const double mean = sum / static_cast<double>(fitness.size());
    return mean >= -kExactLoss ? 0.0 : mean;
}

std::size_t TrialResult::best_trial() const {
    return static_cast<std::size_t>(std::max_element(fitness.begin(), fitness.end()) - fitness.begin());
}

double nmse_loss(std::span<const double> y, std::span<const double> prediction) {
    const auto m = static_cast<double>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= m;
    double var = 0.0;
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - prediction[i];
        sse += r * r;
        var += (y[i] - mean) * (y[i] - mean);
    }
    if (!std::isfinite(sse)) return kInf;
    return var > 0.0 ? sse / var : sse / m;
}

double batch_loss(const ExpressionTree& tree, const TrialBatch& batch, std::span<const double> constants) {
    BatchEvaluator ev(tree, batch.inputs);
    return nmse_loss(batch.outputs, ev.evaluate(constants));
}

TrialResult optimize(const ExpressionTree& tree, std::span<const TrialBatch> batches, const FitOptions& options,
                     Rng& rng) {
    const std::size_t L = count_open_constants(tree);
    TrialResult result;
    result.fitness.assign(batches.size(), -kInf);
    result.constants = Matrix(batches.size(), L);

    std::uniform_real_distribution<double> init(-1.0, 1.0);
    std::vector<double> x0(L);
    for (std::size_t k = 0; k < batches.size(); ++k) {
        BatchEvaluator ev(tree, batches[k].inputs);
        const auto& y = batches[k].outputs;
        if (L == 0) {
            result.fitness[k] = -nmse_loss(y, ev.evaluate({}));
            continue;
        }
        // The gradient is usually requested at the point just evaluated, so the
        // forward pass is reused when the constants match.
        std::vector<double> last_c;
        std::span<const double> last_pred;
        const auto forward = [&](std::span<const double> c) {
            if (last_pred.empty() || !std::equal(c.begin(), c.end(), last_c.begin(), last_c.end())) {
                last_pred = ev.evaluate(c);
                last_c.assign(c.begin(), c.end());
            }
            return last_pred;
        };
        Objective objective = [&](std::span<const double> c) { return nmse_loss(y, forward(c)); };
        // d NMSE / d yhat_r = -2 (y_r - yhat_r) / scale, with the same scale
        // nmse_loss divides by.
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        double scale = 0.0;
        for (double v : y) scale += (v - mean) * (v - mean);
        if (!(scale > 0.0)) scale = static_cast<double>(y.size());
        std::vector<double> seed(y.size());
        Gradient grad = [&](std::span<const double> c, std::span<double> g) {
            const auto pred = forward(c);
            for (std::size_t r = 0; r < y.size(); ++r) seed[r] = -2.0 * (y[r] - pred[r]) / scale;
            ev.gradient(seed, g);
        };

        double best = kInf;
        std::vector<double> best_x(L, 0.0);
        for (std::size_t r = 0; r < std::max<std::size_t>(1, options.restarts); ++r) {
            double f0 = kInf;
            for (int attempt = 0; attempt < kMaxStartDraws && !std::isfinite(f0); ++attempt) {
                for (auto& v : x0) v = init(rng);
                f0 = objective(x0);
            }
            if (!std::isfinite(f0)) continue;
            Minimum m = options.method == Method::basin_hopping
                            ? basin_hopping(objective, x0, options.hops, options.step_scale, rng, Method::bfgs,
                                            options.local, grad)
                            : local_optimize(objective, x0, options.method, options.local, grad);
            if (m.f < best) {
                best = m.f;
                best_x = m.x;
            }
            if (best <= options.good_enough) break;
        }
        if (std::isfinite(best)) {
            result.fitness[k] = -best;
            std::copy(best_x.begin(), best_x.end(), result.constants.row(k).begin());
        }
    }
    return result;
}

} // namespace racing_sr
