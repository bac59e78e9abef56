#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fks {

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tridiagonal matrix in band storage.
///
/// lower[i] = A(i+1, i), upper[i] = A(i, i+1), both of length dim-1.
struct TridiagMatrix {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    TridiagMatrix() = default;
    explicit TridiagMatrix(std::size_t n) : lower(n ? n - 1 : 0), diag(n), upper(n ? n - 1 : 0) {}

    std::size_t dim() const { return diag.size(); }
    bool is_symmetric(double tol = 0.0) const;

    std::vector<double> multiply(std::span<const double> x) const;

    /// Row-major dense copy; only meant for tests and small validation solves.
    std::vector<double> to_dense() const;
};

/// Thomas algorithm (no pivoting). Throws SingularMatrixError on a zero or
/// non-finite pivot.
std::vector<double> thomas_solve(const TridiagMatrix& a, std::span<const double> rhs);

/// Thomas elimination factored once for repeated right-hand sides.
class ThomasFactor {
public:
    /// Throws SingularMatrixError on a zero or non-finite pivot.
    explicit ThomasFactor(const TridiagMatrix& a);

    std::size_t dim() const { return inv_pivot_.size(); }
    /// Overwrites rhs with the solution.
    void solve_in_place(std::span<double> rhs) const;

private:
    std::vector<double> lower_;
    std::vector<double> inv_pivot_;
    std::vector<double> c_;
};

/// Cholesky-style LDL^T factorisation of a symmetric tridiagonal matrix.
/// Returns false as soon as a pivot is not strictly positive.
bool is_positive_definite(const TridiagMatrix& a);

}  // namespace fks
