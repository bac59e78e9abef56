#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fks/knots.hpp"
#include "fks/quadrature.hpp"
#include "fks/relu.hpp"
#include "fks/splines.hpp"
#include "fks/targets.hpp"

namespace fks {

struct LossConfig {
    static constexpr double kDefaultEpsilonSq = 0.1;

    double beta = 0.0;
    double epsilon_sq = kDefaultEpsilonSq;
    QuadratureGrid grid = QuadratureGrid::fixed_uniform();

    /// Uses the target's recommended monitor regulariser when it has one.
    static LossConfig for_target(const TargetFunction& u, double beta = 0.0,
                                 std::size_t quad_points = QuadratureGrid::kDefaultSize);

    /// Throws std::invalid_argument when beta or epsilon_sq is negative or non-finite.
    void validate() const;
};

/// d_weights has N entries: FKS weights, or [left_coef, c_0 .. c_{N-2}] for
/// ReLU models. d_knots has N-2 entries, one per interior knot.
struct GradReport {
    std::vector<double> d_weights;
    std::vector<double> d_knots;
    double loss = 0.0;
};

/// Target samples at the grid points, so repeated losses skip re-evaluating u.
std::vector<double> sample_target(const TargetFunction& u, const QuadratureGrid& grid);

/// sum_a q_a (y(x_a) - u(x_a))^2 with trapezoid weights q_a.
double loss_l2(const FksModel& m, const TargetFunction& u, const QuadratureGrid& grid);
double loss_l2(const ReluModel& m, const TargetFunction& u, const QuadratureGrid& grid);
double loss_l2(const FksModel& m, std::span<const double> u_values, const QuadratureGrid& grid);
double loss_l2(const ReluModel& m, std::span<const double> u_values, const QuadratureGrid& grid);

/// Point at which u'' is sampled for cell j: the midpoint, nudged right by the
/// gap floor if it lands on a declared singular point.
double curvature_sample_point(const KnotVector& kv, const TargetFunction& u, std::size_t j);

/// rho_{j+1/2} = h_j (eps^2 + u''(mid_j)^2)^{1/5}.
std::vector<double> rho_cells(const KnotVector& kv, const TargetFunction& u, double epsilon_sq);

/// sum_j (rho_j - mean(rho))^2.
double loss_equi(const KnotVector& kv, const TargetFunction& u, double epsilon_sq);

/// d loss_equi / d k_i for the interior knots.
std::vector<double> grad_equi_knots(const KnotVector& kv, const TargetFunction& u, double epsilon_sq);

double loss_comb(const FksModel& m, const TargetFunction& u, const LossConfig& cfg);
double loss_comb(const ReluModel& m, const TargetFunction& u, const LossConfig& cfg);

/// (1/120) sum_j h_j^5 u''(mid_j)^2.
double loss_interp_proxy(const KnotVector& kv, const TargetFunction& u);

/// max_j (N-1) rho_j / sum(rho). Exactly 1 on an equidistributed mesh.
double equi_quality(const KnotVector& kv, const TargetFunction& u, double epsilon_sq);

/// Gradient of loss_comb with respect to every free parameter. ReLU kinks
/// use derivative 0 at the breakpoint. `u_values` must be sample_target(u, cfg.grid).
GradReport grad_loss(const FksModel& m, const TargetFunction& u, const LossConfig& cfg);
GradReport grad_loss(const ReluModel& m, const TargetFunction& u, const LossConfig& cfg);
GradReport grad_loss(const FksModel& m, const TargetFunction& u, const LossConfig& cfg,
                     std::span<const double> u_values);
GradReport grad_loss(const ReluModel& m, const TargetFunction& u, const LossConfig& cfg,
                     std::span<const double> u_values);

/// Gradient of loss_comb(interpolating_fks(kv, u)) with the weights tied to
/// w_i = u(k_i). d_knots is the total derivative; d_weights holds the partials
/// with respect to the tied weights.
GradReport grad_loss_interpolating(const KnotVector& kv, const TargetFunction& u, const LossConfig& cfg,
                                   std::span<const double> u_values);

}  // namespace fks
