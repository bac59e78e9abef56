#include "fks/tridiag.hpp"

#include <cmath>
#include <string>

namespace fks {

bool TridiagMatrix::is_symmetric(double tol) const {
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (std::abs(lower[i] - upper[i]) > tol) return false;
    return true;
}

std::vector<double> TridiagMatrix::multiply(std::span<const double> x) const {
    const std::size_t n = dim();
    if (x.size() != n) throw std::invalid_argument("TridiagMatrix::multiply size mismatch");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = diag[i] * x[i];
        if (i > 0) s += lower[i - 1] * x[i - 1];
        if (i + 1 < n) s += upper[i] * x[i + 1];
        y[i] = s;
    }
    return y;
}

std::vector<double> TridiagMatrix::to_dense() const {
    const std::size_t n = dim();
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        a[i * n + i] = diag[i];
        if (i + 1 < n) {
            a[i * n + i + 1] = upper[i];
            a[(i + 1) * n + i] = lower[i];
        }
    }
    return a;
}

std::vector<double> thomas_solve(const TridiagMatrix& a, std::span<const double> rhs) {
    const std::size_t n = a.dim();
    if (rhs.size() != n) throw std::invalid_argument("thomas_solve size mismatch");
    if (n == 0) return {};
    std::vector<double> c(n), d(n);
    double pivot = a.diag[0];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw SingularMatrixError("zero pivot in row 0");
    c[0] = n > 1 ? a.upper[0] / pivot : 0.0;
    d[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = a.diag[i] - a.lower[i - 1] * c[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot))
            throw SingularMatrixError("zero pivot in row " + std::to_string(i));
        c[i] = i + 1 < n ? a.upper[i] / pivot : 0.0;
        d[i] = (rhs[i] - a.lower[i - 1] * d[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    return d;
}

ThomasFactor::ThomasFactor(const TridiagMatrix& a) : lower_(a.lower), inv_pivot_(a.dim()), c_(a.dim()) {
    const std::size_t n = a.dim();
    for (std::size_t i = 0; i < n; ++i) {
        const double pivot = i == 0 ? a.diag[0] : a.diag[i] - a.lower[i - 1] * c_[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot))
            throw SingularMatrixError("zero pivot in row " + std::to_string(i));
        inv_pivot_[i] = 1.0 / pivot;
        c_[i] = i + 1 < n ? a.upper[i] * inv_pivot_[i] : 0.0;
    }
}

void ThomasFactor::solve_in_place(std::span<double> d) const {
    const std::size_t n = dim();
    if (d.size() != n) throw std::invalid_argument("ThomasFactor::solve_in_place size mismatch");
    if (n == 0) return;
    d[0] *= inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i) d[i] = (d[i] - lower_[i - 1] * d[i - 1]) * inv_pivot_[i];
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c_[i] * d[i + 1];
}

bool is_positive_definite(const TridiagMatrix& a) {
    double prev = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        double d = a.diag[i];
        if (i > 0) d -= a.lower[i - 1] * a.lower[i - 1] / prev;
        if (!(d > 0.0)) return false;
        prev = d;
    }
    return true;
}

}  // namespace fks
