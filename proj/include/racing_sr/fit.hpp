#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "racing_sr/expr.hpp"
#include "racing_sr/optim.hpp"
#include "racing_sr/oracle.hpp"
#include "racing_sr/types.hpp"

namespace racing_sr {

/// Losses at or below this level count as an exact fit when ranking. Below it,
/// differences reflect where the optimizer happened to stop, not structure.
inline constexpr double kExactLoss = 1e-10;

struct FitOptions {
    Method method = Method::bfgs;
    std::size_t restarts = 5;
    /// Basin-hopping only.
    std::size_t hops = 10;
    double step_scale = 0.5;
    LocalOptions local;
    /// Remaining restarts are skipped once a batch loss drops to this level.
    double good_enough = kExactLoss;
};

/// Per-trial fitness (negative NMSE, higher is better) and best-fit constants.
struct TrialResult {
    std::vector<double> fitness; // K
    Matrix constants;            // K x L

    [[nodiscard]] bool empty() const { return fitness.empty(); }
    /// Mean of the fitness vector, snapped to 0 within kExactLoss; -inf if any
    /// trial is non-finite or there are none.
    [[nodiscard]] double scalar() const;
    /// Index of the trial with the highest fitness.
    [[nodiscard]] std::size_t best_trial() const;
};

/// Mean squared error over the output variance. A constant target has no
/// spread to normalize by, so the plain MSE is returned for it. Any non-finite
/// prediction gives +inf.
[[nodiscard]] double nmse_loss(std::span<const double> y, std::span<const double> prediction);

/// NMSE of `tree` with the given open-constant values on one batch.
[[nodiscard]] double batch_loss(const ExpressionTree& tree, const TrialBatch& batch, std::span<const double> constants);

/// Fits the open constants of `tree` to each batch independently, keeping the
/// best of `restarts` uniform(-1,1) initializations per batch.
[[nodiscard]] TrialResult optimize(const ExpressionTree& tree, std::span<const TrialBatch> batches,
                                   const FitOptions& options, Rng& rng);

} // namespace racing_sr
