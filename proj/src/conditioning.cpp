#include "fks/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fks/relu.hpp"
#include "fks/splines.hpp"

namespace fks {

using std::numbers::pi;

std::vector<double> toeplitz_eigs_T(std::size_t n_interior, std::size_t n_knots) {
    if (n_interior < 1 || n_interior + 2 != n_knots) throw std::invalid_argument("toeplitz_eigs_T needs M = N-2 >= 1");
    const double scale = 2.0 * static_cast<double>(n_knots - 1);
    std::vector<double> out(n_interior);
    for (std::size_t k = 1; k <= n_interior; ++k)
        out[k - 1] = -scale + scale * std::cos(pi * static_cast<double>(k) / static_cast<double>(n_interior + 1));
    return out;
}

std::vector<double> toeplitz_eigs_M(std::size_t n_knots) {
    if (n_knots < 2) throw std::invalid_argument("toeplitz_eigs_M needs N >= 2");
    const double denom = 6.0 * static_cast<double>(n_knots - 1);
    std::vector<double> out(n_knots);
    for (std::size_t k = 1; k <= n_knots; ++k)
        out[k - 1] = (4.0 + 2.0 * std::cos(pi * static_cast<double>(k) / static_cast<double>(n_knots + 1))) / denom;
    return out;
}

double predicted_kappa_MTinv(std::size_t n_knots) {
    const double n = static_cast<double>(n_knots);
    return 12.0 * n * n / (pi * pi);
}

TridiagMatrix conditioning_mass_matrix(const KnotVector& kv) {
    const std::size_t n = kv.size();
    TridiagMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i == 0 ? -kv[1] : kv[i - 1];
        const double right = i + 1 == n ? 2.0 - kv[n - 2] : kv[i + 1];
        m.diag[i] = (right - left) / 3.0;
    }
    for (std::size_t j = 0; j + 1 < n; ++j) m.lower[j] = m.upper[j] = kv.width(j) / 6.0;
    return m;
}

std::vector<double> symmetric_tridiag_eigenvalues(const TridiagMatrix& a) {
    if (!a.is_symmetric()) throw std::invalid_argument("matrix is not symmetric");
    const std::size_t n = a.dim();
    std::vector<double> d = a.diag;
    std::vector<double> e(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = a.lower[i];
    constexpr double eps = std::numeric_limits<double>::epsilon();

    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m == l) break;
            if (++iter > 60) throw std::runtime_error("tridiagonal QL did not converge");
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0;
            double c = 1.0;
            double p = 0.0;
            bool deflated = false;
            for (std::size_t i = m; i-- > l;) {
                const double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if (deflated) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (true);
    }
    std::sort(d.begin(), d.end());
    return d;
}

std::vector<double> singular_values(std::vector<double> a, std::size_t n) {
    if (a.size() != n * n) throw std::invalid_argument("singular_values expects an n x n matrix");
    constexpr double tol = 1e-15;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0;
                double beta = 0.0;
                double gamma = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = a[i * n + p];
                    const double y = a[i * n + q];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if (gamma == 0.0) continue;
                const double rel = std::abs(gamma) / std::sqrt(alpha * beta);
                off = std::max(off, rel);
                if (rel < tol) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = a[i * n + p];
                    const double y = a[i * n + q];
                    a[i * n + p] = c * x - s * y;
                    a[i * n + q] = s * x + c * y;
                }
            }
        }
        if (off < tol) break;
    }
    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i * n + j] * a[i * n + j];
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

namespace {

void check_size(const KnotVector& kv) {
    if (kv.size() < 3 || kv.size() > kMaxConditioningN)
        throw std::invalid_argument("conditioning needs 3 <= N <= " + std::to_string(kMaxConditioningN));
}

double modulus_ratio(const std::vector<double>& values) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double v : values) {
        lo = std::min(lo, std::abs(v));
        hi = std::max(hi, std::abs(v));
    }
    if (!(lo > 0.0)) throw SingularMatrixError("matrix is singular");
    return hi / lo;
}

// Dense M_int T^{-1}, built column by column from Thomas solves.
std::vector<double> mass_times_t_inverse(const KnotVector& kv) {
    const auto t = weight_to_scaling_matrix(kv);
    const auto full = conditioning_mass_matrix(kv);
    const std::size_t m = t.dim();
    TridiagMatrix mi(m);
    for (std::size_t r = 0; r < m; ++r) mi.diag[r] = full.diag[r + 1];
    for (std::size_t r = 0; r + 1 < m; ++r) {
        mi.lower[r] = full.lower[r + 1];
        mi.upper[r] = full.upper[r + 1];
    }
    std::vector<double> dense(m * m);
    std::vector<double> e(m, 0.0);
    for (std::size_t col = 0; col < m; ++col) {
        std::fill(e.begin(), e.end(), 0.0);
        e[col] = 1.0;
        const auto x = thomas_solve(t, e);
        const auto y = mi.multiply(x);
        for (std::size_t r = 0; r < m; ++r) dense[r * m + col] = y[r];
    }
    return dense;
}

}  // namespace

double numeric_condition(const KnotVector& kv, ConditionTarget which) {
    check_size(kv);
    switch (which) {
        case ConditionTarget::M:
            return modulus_ratio(symmetric_tridiag_eigenvalues(conditioning_mass_matrix(kv)));
        case ConditionTarget::T:
            return modulus_ratio(symmetric_tridiag_eigenvalues(weight_to_scaling_matrix(kv)));
        case ConditionTarget::MTinv: {
            const auto sv = singular_values(mass_times_t_inverse(kv), kv.size() - 2);
            if (!(sv.back() > 0.0)) throw SingularMatrixError("M T^{-1} is singular");
            return sv.front() / sv.back();
        }
    }
    throw std::invalid_argument("unknown condition target");
}

std::pair<double, double> gershgorin_bounds_M(const KnotVector& kv) {
    if (kv.size() < 3) throw std::invalid_argument("gershgorin_bounds_M needs N >= 3");
    const auto m = conditioning_mass_matrix(kv);
    // diag = span / 3, so span = 3 diag.
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double d : m.diag) {
        lo = std::min(lo, 3.0 * d);
        hi = std::max(hi, 3.0 * d);
    }
    return {lo / 6.0, hi / 2.0};
}

ConditioningReport closed_form_report(std::size_t n_knots) {
    if (n_knots < 3) throw std::invalid_argument("closed_form_report needs N >= 3");
    const std::size_t m = n_knots - 2;
    ConditioningReport r;
    r.n = n_knots;
    r.method = ConditioningMethod::closed_form_uniform;
    const auto mu = toeplitz_eigs_M(n_knots);
    r.kappa_M = mu.front() / mu.back();
    const auto lambda = toeplitz_eigs_T(m, n_knots);
    r.kappa_T = modulus_ratio(lambda);
    // Interior mass block and T share eigenvectors sin(pi j k / (M+1)).
    const double denom = 6.0 * static_cast<double>(n_knots - 1);
    std::vector<double> nu(m);
    for (std::size_t k = 1; k <= m; ++k) {
        const double mu_int =
            (4.0 + 2.0 * std::cos(pi * static_cast<double>(k) / static_cast<double>(m + 1))) / denom;
        nu[k - 1] = mu_int / lambda[k - 1];
    }
    r.kappa_MTinv = modulus_ratio(nu);
    r.predicted_kappa_MTinv = predicted_kappa_MTinv(n_knots);
    const auto [lo, hi] = gershgorin_bounds_M(KnotVector::uniform(n_knots));
    r.gershgorin_bound_M = hi / lo;
    return r;
}

ConditioningReport numeric_report(const KnotVector& kv) {
    ConditioningReport r;
    r.n = kv.size();
    r.method = ConditioningMethod::numeric;
    r.kappa_M = numeric_condition(kv, ConditionTarget::M);
    r.kappa_T = numeric_condition(kv, ConditionTarget::T);
    r.kappa_MTinv = numeric_condition(kv, ConditionTarget::MTinv);
    r.predicted_kappa_MTinv = predicted_kappa_MTinv(kv.size());
    const auto [lo, hi] = gershgorin_bounds_M(kv);
    r.gershgorin_bound_M = hi / lo;
    return r;
}

double relu_normal_equation_condition(const KnotVector& kv) {
    const double k = numeric_condition(kv, ConditionTarget::MTinv);
    return k * k;
}

}  // namespace fks
