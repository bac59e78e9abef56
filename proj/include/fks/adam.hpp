#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fks {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t max_iters = 50000;
    std::uint64_t seed = 0;
    /// Losses and knots are recorded at iterations 0, log_every, 2 log_every, ...
    std::size_t log_every = 100;

    /// Throws std::invalid_argument on out-of-range hyperparameters.
    void validate() const;
};

/// Non-finite loss or gradient during optimisation.
class TrainingAbort : public std::runtime_error {
public:
    TrainingAbort(const std::string& what, std::size_t iteration)
        : std::runtime_error(what), iteration(iteration) {}
    std::size_t iteration;
};

/// Iteration index passed to the objective for the closing evaluation at the
/// final parameters (objectives that resample their grid use the fixed one).
inline constexpr std::size_t kFinalEvaluation = std::numeric_limits<std::size_t>::max();

/// Returns the loss at `params` and writes the gradient into `grad`.
using LossAndGrad = std::function<double(std::span<const double> params, std::span<double> grad, std::size_t iter)>;
/// Repairs `params` in place after a step; returns true when anything moved.
using Projector = std::function<bool(std::span<double> params)>;
/// Observes the parameters at each recorded iteration.
using Recorder = std::function<void(std::size_t iter, std::span<const double> params)>;

struct AdamTrace {
    std::vector<double> params;
    std::vector<std::size_t> iters;
    std::vector<double> losses;
    std::size_t projection_events = 0;
};

/// Bias-corrected Adam. The trace ends with one extra entry, at iteration
/// max_iters, holding the loss of the returned parameters.
AdamTrace adam_minimize(std::vector<double> params, const LossAndGrad& objective, const AdamConfig& cfg,
                        const Projector& project = {}, const Recorder& record = {});

}  // namespace fks
