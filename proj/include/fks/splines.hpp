#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fks/knots.hpp"
#include "fks/quadrature.hpp"
#include "fks/targets.hpp"
#include "fks/tridiag.hpp"

namespace fks {

/// Linear spline sum_i w_i phi_i(x) over a knot vector.
///
/// Endpoint weights are free parameters like the interior ones; the
/// interpolating constructors just happen to set them to u(0) and u(1).
struct FksModel {
    KnotVector knots;
    std::vector<double> weights;

    FksModel(KnotVector k, std::vector<double> w);

    std::size_t size() const { return weights.size(); }
};

/// Thrown when a quadrature grid cannot determine the weights on some cell.
class DegenerateSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hat function phi_i at x. Throws std::out_of_range for i >= N.
double basis_eval(const KnotVector& kv, std::size_t i, double x);

double fks_eval(const FksModel& m, double x);

/// Evaluates at ascending `xs` with one merge sweep; `out` must match `xs`.
void fks_eval_sorted(const FksModel& m, std::span<const double> xs, std::span<double> out);

/// Pi_1 u: weights u(k_i).
FksModel interpolating_fks(const KnotVector& kv, const TargetFunction& u);

/// Exact L2 Gram matrix <phi_i, phi_j> of the hats on [0,1].
TridiagMatrix assemble_mass_matrix(const KnotVector& kv);

/// Discrete least-squares weights for fixed knots, through the tridiagonal
/// normal equations. Throws DegenerateSystemError when some hat sees no
/// quadrature mass.
FksModel solve_fixed_knot_least_squares(const KnotVector& kv, const TargetFunction& u,
                                        const QuadratureGrid& grid);

/// Convenience overload on `s` uniform points; requires s >= 4N.
FksModel solve_fixed_knot_least_squares(const KnotVector& kv, const TargetFunction& u,
                                        std::size_t s);

/// Same solve from pre-sampled target values on `grid`.
FksModel solve_fixed_knot_least_squares(const KnotVector& kv, std::span<const double> target_values,
                                        const QuadratureGrid& grid);

}  // namespace fks
