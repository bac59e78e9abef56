#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fks/knots.hpp"
#include "fks/tridiag.hpp"

namespace fks {

enum class ConditioningMethod { closed_form_uniform, numeric };
enum class ConditionTarget { M, T, MTinv };

struct ConditioningReport {
    std::size_t n = 0;
    double kappa_M = 0.0;
    double kappa_T = 0.0;
    double kappa_MTinv = 0.0;
    double predicted_kappa_MTinv = 0.0;
    /// Upper bound on kappa(M) from the Gershgorin interval: upper / lower.
    double gershgorin_bound_M = 0.0;
    ConditioningMethod method = ConditioningMethod::numeric;
};

/// Largest N accepted by the dense conditioning routines.
inline constexpr std::size_t kMaxConditioningN = 512;

/// lambda_k = -2(N-1) + 2(N-1) cos(pi k / (M+1)), k = 1..M, for uniform knots.
/// Requires M = N-2 >= 1.
std::vector<double> toeplitz_eigs_T(std::size_t n_interior, std::size_t n_knots);

/// mu_k = (4 + 2 cos(pi k / (N+1))) / (6(N-1)), k = 1..N.
std::vector<double> toeplitz_eigs_M(std::size_t n_knots);

/// 12 N^2 / pi^2.
double predicted_kappa_MTinv(std::size_t n_knots);

/// Hat mass matrix whose end rows use reflected ghost knots k_{-1} = -k_1 and
/// k_N = 2 - k_{N-2}. Row i has diagonal (k_{i+1} - k_{i-1}) / 3 and off-diagonals
/// h / 6; on uniform knots it is the Toeplitz matrix tridiag(1,4,1) / (6(N-1)).
/// The interior rows coincide with assemble_mass_matrix.
TridiagMatrix conditioning_mass_matrix(const KnotVector& kv);

/// Eigenvalues of a symmetric tridiagonal matrix (implicit QL), ascending.
std::vector<double> symmetric_tridiag_eigenvalues(const TridiagMatrix& a);

/// Singular values of a dense row-major n x n matrix (one-sided Jacobi), descending.
std::vector<double> singular_values(std::vector<double> a, std::size_t n);

/// Spectral condition number by dense eigen/singular value solve. N in [3, 512].
/// Throws SingularMatrixError when the smallest modulus is zero.
double numeric_condition(const KnotVector& kv, ConditionTarget which);

/// (min (k_{i+1} - k_{i-1}) / 6, max (k_{i+1} - k_{i-1}) / 2) over the rows of
/// conditioning_mass_matrix. Requires N >= 3.
std::pair<double, double> gershgorin_bounds_M(const KnotVector& kv);

/// All kappas from the Toeplitz closed forms (uniform knots, N >= 3).
ConditioningReport closed_form_report(std::size_t n_knots);

/// All kappas by numeric solves on `kv`.
ConditioningReport numeric_report(const KnotVector& kv);

/// Condition number of the ReLU normal equations, taken as kappa(M T^{-1})^2.
double relu_normal_equation_condition(const KnotVector& kv);

}  // namespace fks
