#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fks/adam.hpp"
#include "fks/losses.hpp"
#include "fks/relu.hpp"
#include "fks/splines.hpp"
#include "fks/targets.hpp"

namespace fks {

enum class Pipeline { standard, two_level, combined, preconditioned };

std::string to_string(Pipeline p);

/// beta for the knot stage of two-level training and for combined training.
inline constexpr double kTwoLevelBeta = 10.0;
inline constexpr double kCombinedBeta = 0.1;

enum class StageTwoSolver { direct, adam };

struct TwoLevelOptions {
    /// Fraction of AdamConfig::max_iters given to the knot stage; the rest
    /// goes to a stage-two Adam run when one is used.
    double stage1_fraction = 0.5;
    StageTwoSolver stage2 = StageTwoSolver::direct;
    double stage1_beta = kTwoLevelBeta;
    /// ReLU pipeline only: false trains the scalings c directly in stage two
    /// (with StageTwoSolver::adam) instead of the FKS weights.
    bool precondition = true;
};

/// Exactly one of `fks` and `relu` holds the trained model. loss_history ends
/// with the pipeline loss of that model, at iteration `iterations`.
struct TrainReport {
    Pipeline pipeline = Pipeline::standard;
    std::vector<std::size_t> loss_iters;
    std::vector<double> loss_history;
    std::vector<std::size_t> knot_iters;
    /// Full knot vectors k_0..k_{N-1} at each recorded iteration.
    std::vector<std::vector<double>> knot_trajectory;
    std::optional<FksModel> fks;
    std::optional<ReluModel> relu;
    std::size_t iterations = 0;
    std::size_t projection_events = 0;
    double wall_time = 0.0;

    double final_loss() const { return loss_history.back(); }
    const KnotVector& knots() const;
};

/// Joint Adam on loss_l2 over weights and interior knots.
TrainReport train_standard(const FksModel& init, const TargetFunction& u, const LossConfig& cfg,
                           const AdamConfig& adam);
TrainReport train_standard(const ReluModel& init, const TargetFunction& u, const LossConfig& cfg,
                           const AdamConfig& adam);

/// Joint Adam on loss_comb with cfg.beta (kCombinedBeta in the reference setup).
/// With beta = 0 the run is identical to train_standard.
TrainReport train_combined(const FksModel& init, const TargetFunction& u, const LossConfig& cfg,
                           const AdamConfig& adam);

/// Stage one trains only the knots of the interpolant (w_i = u(k_i)) on
/// loss_comb with stage1_beta; stage two fits the weights on the frozen mesh.
TrainReport train_two_level(const FksModel& init, const TargetFunction& u, const LossConfig& cfg,
                            const AdamConfig& adam, const TwoLevelOptions& opt = {});

/// Same knot stage with the scalings held fixed, then c -> w (Thomas),
/// stage two on the FKS weights, then w -> c.
TrainReport train_relu_preconditioned(const ReluModel& init, const TargetFunction& u, const LossConfig& cfg,
                                      const AdamConfig& adam, const TwoLevelOptions& opt = {});

/// Knots-only stage of two-level training, exposed for diagnostics.
TrainReport train_knots_equidistribution(const KnotVector& init, const TargetFunction& u, const LossConfig& cfg,
                                         const AdamConfig& adam, double beta = kTwoLevelBeta);

}  // namespace fks
