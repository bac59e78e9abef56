#pragma once

// Independent oracles and property checks shared by the unit tests and the
// acceptance binary. Dense linear algebra goes through Eigen so none of the
// library's own solvers vouch for themselves.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "fks/knots.hpp"
#include "fks/losses.hpp"
#include "fks/relu.hpp"
#include "fks/splines.hpp"
#include "fks/targets.hpp"
#include "fks/training.hpp"
#include "fks/tridiag.hpp"

namespace fks::testing {

/// Ascending eigenvalues of a symmetric tridiagonal matrix.
std::vector<double> dense_eigenvalues(const TridiagMatrix& a);

/// Ascending eigenvalues of a dense symmetric n x n matrix (row-major).
std::vector<double> dense_eigenvalues(const std::vector<double>& a, std::size_t n);

/// Solves a dense n x n system (row-major) by pivoted LU.
std::vector<double> dense_solve(const std::vector<double>& a, const std::vector<double>& b, std::size_t n);

/// Least-squares weights from the dense normal equations B^T Q B w = B^T Q u,
/// with B assembled from basis_eval at every quadrature point.
std::vector<double> dense_least_squares(const KnotVector& kv, const TargetFunction& u, const QuadratureGrid& grid);

/// ReLU weights recovered by walking slopes left to right: the slope on cell j
/// is (w_{j+1}-w_j)/h_j, and c_j is the slope jump at k_j.
std::vector<double> slope_walk_weights(const ReluModel& m);

/// Interior knots drawn uniformly from [margin, 1-margin], all gaps >= min_gap.
KnotVector random_knots(std::size_t n, std::mt19937_64& rng, double min_gap = 1e-2, double margin = 1e-2);

/// Least-squares slope of log y against log x.
double fitted_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

double max_partition_of_unity_error(const KnotVector& kv, std::size_t points);
double max_fks_relu_mismatch(const FksModel& m, std::size_t points);

/// max_i |w_i' - w_i| / max_i |w_i| after fks_to_relu then relu_to_fks.
double roundtrip_relative_error(const FksModel& m);

struct GradientCheck {
    double worst_rel = 0.0;
    std::size_t draws = 0;
    std::size_t redraws = 0;
};

/// Compares grad_loss with central differences (step 1e-6) on `draws` random
/// models of size n. Error is ||g - g_fd||_inf / ||g_fd||_inf over all
/// parameters. Draws where a knot sits within two steps of a quadrature point
/// are redrawn, since the loss has a kink there.
GradientCheck gradient_check(const TargetFunction& u, bool relu, std::size_t draws, std::size_t n, double beta,
                             std::uint64_t seed);

/// Strictly increasing, pinned endpoints, every gap >= gap_floor.
bool knots_valid(const std::vector<double>& k, double gap_floor = KnotVector::kDefaultGapFloor);

bool trajectory_valid(const TrainReport& r);

/// Bitwise equality of histories, trajectories and final parameters.
bool reports_identical(const TrainReport& a, const TrainReport& b);

}  // namespace fks::testing
