#include "fks/adam.hpp"

#include <cmath>

namespace fks {

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in (0,1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in (0,1)");
    if (!(eps > 0.0)) throw std::invalid_argument("Adam eps must be positive");
    if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
    if (log_every == 0) throw std::invalid_argument("log_every must be positive");
}

namespace {

void check_finite(double loss, std::span<const double> grad, std::size_t iter) {
    if (!std::isfinite(loss))
        throw TrainingAbort("non-finite loss at iteration " + std::to_string(iter), iter);
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw TrainingAbort("non-finite gradient entry " + std::to_string(i) + " at iteration " +
                                    std::to_string(iter),
                                iter);
}

}  // namespace

AdamTrace adam_minimize(std::vector<double> params, const LossAndGrad& objective, const AdamConfig& cfg,
                        const Projector& project, const Recorder& record) {
    cfg.validate();
    const std::size_t n = params.size();
    std::vector<double> grad(n, 0.0);
    std::vector<double> m(n, 0.0);
    std::vector<double> v(n, 0.0);
    AdamTrace trace;
    double b1t = 1.0;
    double b2t = 1.0;
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        const double loss = objective(params, grad, it);
        check_finite(loss, grad, it);
        if (it % cfg.log_every == 0) {
            trace.iters.push_back(it);
            trace.losses.push_back(loss);
            if (record) record(it, params);
        }
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            const double mhat = m[i] / (1.0 - b1t);
            const double vhat = v[i] / (1.0 - b2t);
            params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        if (project && project(params)) ++trace.projection_events;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    const double final_loss = objective(params, grad, kFinalEvaluation);
    check_finite(final_loss, std::span<const double>(), cfg.max_iters);
    trace.iters.push_back(cfg.max_iters);
    trace.losses.push_back(final_loss);
    if (record) record(cfg.max_iters, params);
    trace.params = std::move(params);
    return trace;
}

}  // namespace fks
