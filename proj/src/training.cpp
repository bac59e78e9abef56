#include "fks/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fks {

std::string to_string(Pipeline p) {
    switch (p) {
        case Pipeline::standard: return "standard";
        case Pipeline::two_level: return "two_level";
        case Pipeline::combined: return "combined";
        case Pipeline::preconditioned: return "preconditioned";
    }
    return "unknown";
}

const KnotVector& TrainReport::knots() const {
    if (fks) return fks->knots;
    if (relu) return relu->knots;
    throw std::logic_error("TrainReport holds no model");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Supplies the quadrature grid and target samples for each iteration: the
// configured grid throughout, or a fresh random one per iteration when the
// configured grid is in resampled mode. The closing evaluation always uses
// the configured grid.
class GridSource {
public:
    GridSource(const TargetFunction& u, const LossConfig& cfg, std::uint64_t seed)
        : u_(u), cfg_(cfg), rng_(seed), fixed_values_(sample_target(u, cfg.grid)) {}

    struct View {
        const LossConfig& cfg;
        std::span<const double> values;
    };

    View at(std::size_t iter) {
        if (iter == kFinalEvaluation || cfg_.grid.mode() != QuadratureMode::resampled_uniform_random)
            return {cfg_, fixed_values_};
        current_ = cfg_;
        current_->grid = QuadratureGrid::resampled(cfg_.grid.size(), rng_);
        current_values_ = sample_target(u_, current_->grid);
        return {*current_, current_values_};
    }

    std::span<const double> fixed_values() const { return fixed_values_; }

private:
    const TargetFunction& u_;
    const LossConfig& cfg_;
    std::mt19937_64 rng_;
    std::vector<double> fixed_values_;
    std::optional<LossConfig> current_;
    std::vector<double> current_values_;
};

// Sorts interior knots together with one attached parameter each, then
// enforces the gap floor. `attached_offset` is where the parameter of
// interior knot 1 sits (or npos when nothing is attached).
Projector knot_projector(std::size_t knot_offset, std::size_t interior, std::size_t attached_offset,
                         double gap_floor) {
    return [=](std::span<double> p) {
        auto knots = p.subspan(knot_offset, interior);
        bool moved = false;
        if (!std::is_sorted(knots.begin(), knots.end())) {
            std::vector<std::size_t> order(interior);
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return knots[a] < knots[b]; });
            std::vector<double> ks(interior);
            std::vector<double> at(interior);
            for (std::size_t i = 0; i < interior; ++i) {
                ks[i] = knots[order[i]];
                if (attached_offset != std::string::npos) at[i] = p[attached_offset + order[i]];
            }
            std::copy(ks.begin(), ks.end(), knots.begin());
            if (attached_offset != std::string::npos)
                for (std::size_t i = 0; i < interior; ++i) p[attached_offset + i] = at[i];
            moved = true;
        }
        moved |= project_interior(knots, gap_floor);
        return moved;
    };
}

std::vector<double> full_knots(std::span<const double> interior) {
    std::vector<double> k;
    k.reserve(interior.size() + 2);
    k.push_back(0.0);
    k.insert(k.end(), interior.begin(), interior.end());
    k.push_back(1.0);
    return k;
}

void append_trace(TrainReport& r, const AdamTrace& t, std::size_t offset, bool keep_closing_entry) {
    const std::size_t count = keep_closing_entry ? t.iters.size() : t.iters.size() - 1;
    for (std::size_t i = 0; i < count; ++i) {
        r.loss_iters.push_back(offset + t.iters[i]);
        r.loss_history.push_back(t.losses[i]);
    }
    r.projection_events += t.projection_events;
}

std::size_t stage1_iterations(const AdamConfig& adam, const TwoLevelOptions& opt) {
    if (!(opt.stage1_fraction > 0.0 && opt.stage1_fraction <= 1.0))
        throw std::invalid_argument("stage1_fraction must lie in (0,1]");
    const auto s1 = static_cast<std::size_t>(std::llround(opt.stage1_fraction * static_cast<double>(adam.max_iters)));
    return std::max<std::size_t>(s1, 1);
}

TrainReport train_joint_fks(const FksModel& init, const TargetFunction& u, const LossConfig& cfg,
                            const AdamConfig& adam, Pipeline pipeline) {
    cfg.validate();
    const auto start = Clock::now();
    const std::size_t n = init.size();
    const std::size_t interior = n - 2;
    const double gap = init.knots.gap_floor();
    GridSource source(u, cfg, adam.seed);

    std::vector<double> params(init.weights);
    params.insert(params.end(), init.knots.values().begin() + 1, init.knots.values().end() - 1);

    TrainReport report;
    report.pipeline = pipeline;
    const auto objective = [&](std::span<const double> p, std::span<double> g, std::size_t iter) {
        const auto view = source.at(iter);
        const FksModel m(init.knots.with_interior(p.subspan(n, interior)),
                         std::vector<double>(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n)));
        const auto gr = grad_loss(m, u, view.cfg, view.values);
        std::copy(gr.d_weights.begin(), gr.d_weights.end(), g.begin());
        std::copy(gr.d_knots.begin(), gr.d_knots.end(), g.begin() + static_cast<std::ptrdiff_t>(n));
        return gr.loss;
    };
    const auto record = [&](std::size_t iter, std::span<const double> p) {
        report.knot_iters.push_back(iter);
        report.knot_trajectory.push_back(full_knots(p.subspan(n, interior)));
    };
    const auto trace = adam_minimize(std::move(params), objective, adam, knot_projector(n, interior, 1, gap), record);
    append_trace(report, trace, 0, true);
    const std::span<const double> p(trace.params);
    report.fks.emplace(init.knots.with_interior(p.subspan(n, interior)),
                       std::vector<double>(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n)));
    report.iterations = adam.max_iters;
    report.wall_time = seconds_since(start);
    return report;
}

// Stage-two Adam on the FKS weights with the knots frozen; returns the trace.
AdamTrace fit_weights_adam(const FksModel& init, const TargetFunction& u, const LossConfig& cfg,
                           const AdamConfig& adam) {
    LossConfig l2 = cfg;
    l2.beta = 0.0;
    GridSource source(u, l2, adam.seed + 1);
    const auto objective = [&](std::span<const double> p, std::span<double> g, std::size_t iter) {
        const auto view = source.at(iter);
        const FksModel m(init.knots, std::vector<double>(p.begin(), p.end()));
        const auto gr = grad_loss(m, u, view.cfg, view.values);
        std::copy(gr.d_weights.begin(), gr.d_weights.end(), g.begin());
        return gr.loss;
    };
    return adam_minimize(init.weights, objective, adam);
}

// Stage-two Adam directly on [left_coef, c_0..c_{N-2}] with the breakpoints frozen.
AdamTrace fit_scalings_adam(const ReluModel& init, const TargetFunction& u, const LossConfig& cfg,
                            const AdamConfig& adam) {
    LossConfig l2 = cfg;
    l2.beta = 0.0;
    GridSource source(u, l2, adam.seed + 1);
    const auto objective = [&](std::span<const double> p, std::span<double> g, std::size_t iter) {
        const auto view = source.at(iter);
        const ReluModel m(init.knots, std::vector<double>(p.begin() + 1, p.end()), p[0]);
        const auto gr = grad_loss(m, u, view.cfg, view.values);
        std::copy(gr.d_weights.begin(), gr.d_weights.end(), g.begin());
        return gr.loss;
    };
    std::vector<double> params{init.left_coef};
    params.insert(params.end(), init.scalings.begin(), init.scalings.end());
    return adam_minimize(std::move(params), objective, adam);
}

AdamConfig stage_config(const AdamConfig& adam, std::size_t iters) {
    AdamConfig c = adam;
    c.max_iters = iters;
    return c;
}

}  // namespace

TrainReport train_knots_equidistribution(const KnotVector& init, const TargetFunction& u, const LossConfig& cfg,
                                         const AdamConfig& adam, double beta) {
    cfg.validate();
    const auto start = Clock::now();
    const std::size_t interior = init.size() - 2;
    LossConfig stage = cfg;
    stage.beta = beta;
    GridSource source(u, stage, adam.seed);

    TrainReport report;
    report.pipeline = Pipeline::two_level;
    const auto objective = [&](std::span<const double> p, std::span<double> g, std::size_t iter) {
        const auto view = source.at(iter);
        const auto gr = grad_loss_interpolating(init.with_interior(p), u, view.cfg, view.values);
        std::copy(gr.d_knots.begin(), gr.d_knots.end(), g.begin());
        return gr.loss;
    };
    const auto record = [&](std::size_t iter, std::span<const double> p) {
        report.knot_iters.push_back(iter);
        report.knot_trajectory.push_back(full_knots(p));
    };
    std::vector<double> params(init.values().begin() + 1, init.values().end() - 1);
    const auto trace = adam_minimize(std::move(params), objective, adam,
                                     knot_projector(0, interior, std::string::npos, init.gap_floor()), record);
    append_trace(report, trace, 0, true);
    report.fks.emplace(interpolating_fks(init.with_interior(trace.params), u));
    report.iterations = adam.max_iters;
    report.wall_time = seconds_since(start);
    return report;
}

TrainReport train_standard(const FksModel& init, const TargetFunction& u, const LossConfig& cfg,
                           const AdamConfig& adam) {
    LossConfig l2 = cfg;
    l2.beta = 0.0;
    return train_joint_fks(init, u, l2, adam, Pipeline::standard);
}

TrainReport train_combined(const FksModel& init, const TargetFunction& u, const LossConfig& cfg,
                           const AdamConfig& adam) {
    return train_joint_fks(init, u, cfg, adam, Pipeline::combined);
}

TrainReport train_standard(const ReluModel& init, const TargetFunction& u, const LossConfig& cfg,
                           const AdamConfig& adam) {
    LossConfig l2 = cfg;
    l2.beta = 0.0;
    l2.validate();
    const auto start = Clock::now();
    const std::size_t n = init.size();
    const std::size_t interior = n - 2;
    GridSource source(u, l2, adam.seed);

    // [left_coef, c_0 .. c_{N-2}, k_1 .. k_{N-2}]; c_i travels with k_i.
    std::vector<double> params{init.left_coef};
    params.insert(params.end(), init.scalings.begin(), init.scalings.end());
    params.insert(params.end(), init.knots.values().begin() + 1, init.knots.values().end() - 1);
    const auto unpack = [&](std::span<const double> p) {
        return ReluModel(init.knots.with_interior(p.subspan(n, interior)),
                         std::vector<double>(p.begin() + 1, p.begin() + static_cast<std::ptrdiff_t>(n)), p[0]);
    };

    TrainReport report;
    report.pipeline = Pipeline::standard;
    const auto objective = [&](std::span<const double> p, std::span<double> g, std::size_t iter) {
        const auto view = source.at(iter);
        const auto gr = grad_loss(unpack(p), u, view.cfg, view.values);
        std::copy(gr.d_weights.begin(), gr.d_weights.end(), g.begin());
        std::copy(gr.d_knots.begin(), gr.d_knots.end(), g.begin() + static_cast<std::ptrdiff_t>(n));
        return gr.loss;
    };
    const auto record = [&](std::size_t iter, std::span<const double> p) {
        report.knot_iters.push_back(iter);
        report.knot_trajectory.push_back(full_knots(p.subspan(n, interior)));
    };
    const auto trace =
        adam_minimize(std::move(params), objective, adam, knot_projector(n, interior, 2, init.knots.gap_floor()), record);
    append_trace(report, trace, 0, true);
    report.relu.emplace(unpack(trace.params));
    report.iterations = adam.max_iters;
    report.wall_time = seconds_since(start);
    return report;
}

TrainReport train_two_level(const FksModel& init, const TargetFunction& u, const LossConfig& cfg,
                            const AdamConfig& adam, const TwoLevelOptions& opt) {
    cfg.validate();
    adam.validate();
    const auto start = Clock::now();
    const std::size_t s1 = stage1_iterations(adam, opt);
    auto report = train_knots_equidistribution(init.knots, u, cfg, stage_config(adam, s1), opt.stage1_beta);
    const KnotVector knots = report.fks->knots;
    // The knot stage's closing entry is replaced by stage two's first one.
    report.loss_iters.pop_back();
    report.loss_history.pop_back();

    LossConfig l2 = cfg;
    l2.beta = 0.0;
    if (opt.stage2 == StageTwoSolver::direct || s1 >= adam.max_iters) {
        report.fks.emplace(solve_fixed_knot_least_squares(knots, u, cfg.grid));
        report.loss_iters.push_back(s1);
        report.loss_history.push_back(loss_l2(*report.fks, u, cfg.grid));
        report.iterations = s1;
    } else {
        const auto trace = fit_weights_adam(interpolating_fks(knots, u), u, l2, stage_config(adam, adam.max_iters - s1));
        append_trace(report, trace, s1, true);
        report.fks.emplace(knots, trace.params);
        report.knot_iters.push_back(adam.max_iters);
        report.knot_trajectory.push_back(std::vector<double>(knots.values().begin(), knots.values().end()));
        report.iterations = adam.max_iters;
    }
    report.pipeline = Pipeline::two_level;
    report.wall_time = seconds_since(start);
    return report;
}

TrainReport train_relu_preconditioned(const ReluModel& init, const TargetFunction& u, const LossConfig& cfg,
                                      const AdamConfig& adam, const TwoLevelOptions& opt) {
    cfg.validate();
    adam.validate();
    const auto start = Clock::now();
    const std::size_t s1 = stage1_iterations(adam, opt);

    // Step 1: breakpoints from the knot stage; the scalings are not trained.
    auto report = train_knots_equidistribution(init.knots, u, cfg, stage_config(adam, s1), opt.stage1_beta);
    const KnotVector knots = report.fks->knots;
    report.fks.reset();
    report.loss_iters.pop_back();
    report.loss_history.pop_back();
    const ReluModel moved(knots, init.scalings, init.left_coef);

    LossConfig l2 = cfg;
    l2.beta = 0.0;
    const bool use_adam = opt.stage2 == StageTwoSolver::adam && s1 < adam.max_iters;
    const AdamConfig stage2 = stage_config(adam, use_adam ? adam.max_iters - s1 : 1);

    if (!opt.precondition) {
        if (!use_adam) throw std::invalid_argument("training the scalings directly requires the Adam stage-two solver");
        const auto trace = fit_scalings_adam(moved, u, l2, stage2);
        append_trace(report, trace, s1, true);
        report.relu.emplace(knots, std::vector<double>(trace.params.begin() + 1, trace.params.end()), trace.params[0]);
    } else {
        // Steps 2-4: c -> w, fit w, w -> c.
        const FksModel as_fks = relu_to_fks(moved);
        FksModel fitted = as_fks;
        if (use_adam) {
            const auto trace = fit_weights_adam(as_fks, u, l2, stage2);
            append_trace(report, trace, s1, false);
            fitted = FksModel(knots, trace.params);
        } else {
            fitted = solve_fixed_knot_least_squares(knots, u, cfg.grid);
        }
        report.relu.emplace(fks_to_relu(fitted));
        report.loss_iters.push_back(use_adam ? adam.max_iters : s1);
        report.loss_history.push_back(loss_l2(*report.relu, u, cfg.grid));
    }
    if (use_adam) {
        report.knot_iters.push_back(adam.max_iters);
        report.knot_trajectory.push_back(std::vector<double>(knots.values().begin(), knots.values().end()));
    }
    report.iterations = use_adam ? adam.max_iters : s1;
    report.pipeline = Pipeline::preconditioned;
    report.wall_time = seconds_since(start);
    return report;
}

}  // namespace fks
