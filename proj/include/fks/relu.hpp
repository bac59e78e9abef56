#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "fks/knots.hpp"
#include "fks/splines.hpp"
#include "fks/tridiag.hpp"

namespace fks {

/// Shallow ReLU network in canonical breakpoint form on [0,1]:
///
///   y(x) = left_coef * max(k_1 - x, 0) / k_1 + sum_{i=0}^{N-2} c_i * max(x - k_i, 0)
///
/// Every unit has slope +1 and its scale lives in `scalings`. Breakpoints are
/// the ordered knots of a KnotVector, so the map to FksModel is well defined.
struct ReluModel {
    KnotVector knots;
    std::vector<double> scalings;
    double left_coef = 0.0;

    ReluModel(KnotVector k, std::vector<double> c, double left);

    std::size_t size() const { return knots.size(); }
};

/// A width-W, depth-1 network y = sum_j c_out[j] * max(a[j] x + b[j], 0) + bias_out.
struct RawShallowNet {
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c_out;
    double bias_out = 0.0;

    std::size_t width() const { return a.size(); }
};

struct Breakpoint {
    double k;
    bool inside;
    std::size_t unit;
};

/// k_j = -b_j / a_j for every unit with a_j != 0, flagged inside iff in [0,1].
std::vector<Breakpoint> breakpoints_of(const RawShallowNet& raw);

double raw_eval(const RawShallowNet& raw, double x);

double relu_eval(const ReluModel& m, double x);
void relu_eval_sorted(const ReluModel& m, std::span<const double> xs, std::span<double> out);

/// Scalings c = L w from the tridiagonal weight-to-scaling map.
ReluModel fks_to_relu(const FksModel& m);

/// Inverse of fks_to_relu via two Thomas solves with T, then w_{N-1} fixed
/// from c_0 = alpha_1 w_1. Throws SingularMatrixError for a singular T.
FksModel relu_to_fks(const ReluModel& m);

/// The (N-2)x(N-2) symmetric tridiagonal block T of the weight-to-scaling map
/// (diagonal -beta_i, off-diagonals alpha_i / gamma_i). Requires N >= 3.
TridiagMatrix weight_to_scaling_matrix(const KnotVector& kv);

/// Canonical form of a raw network: breakpoints strictly inside (0,1) become
/// interior knots (projected onto the gap floor if needed), units outside the
/// domain fold into the affine part. Exact on [0,1] unless projection moved a knot.
ReluModel relu_from_raw(const RawShallowNet& raw, double gap_floor = KnotVector::kDefaultGapFloor);

/// PyTorch-default style initialisation: a, b ~ U(-1,1) (fan-in 1) and
/// c_out, bias_out ~ U(-1/sqrt(W), 1/sqrt(W)). With `constrain_breakpoints`
/// each hidden unit is redrawn until -b/a lies in (0,1).
RawShallowNet random_shallow_net(std::size_t width, std::mt19937_64& rng, bool constrain_breakpoints);

}  // namespace fks
