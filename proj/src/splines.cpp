#include "fks/splines.hpp"

#include <cmath>
#include <string>

namespace fks {

FksModel::FksModel(KnotVector k, std::vector<double> w) : knots(std::move(k)), weights(std::move(w)) {
    if (weights.size() != knots.size())
        throw std::invalid_argument("FksModel: weights length must equal knot count");
}

double basis_eval(const KnotVector& kv, std::size_t i, double x) {
    const std::size_t n = kv.size();
    if (i >= n) throw std::out_of_range("basis index " + std::to_string(i) + " out of range");
    const double ki = kv[i];
    if (x == ki) return 1.0;
    if (x < ki) {
        if (i == 0) return 0.0;
        const double kl = kv[i - 1];
        return x <= kl ? 0.0 : (x - kl) / (ki - kl);
    }
    if (i + 1 == n) return 0.0;
    const double kr = kv[i + 1];
    return x >= kr ? 0.0 : (kr - x) / (kr - ki);
}

double fks_eval(const FksModel& m, double x) {
    const std::size_t j = m.knots.cell_of(x);
    const double t = (x - m.knots[j]) / m.knots.width(j);
    return m.weights[j] + (m.weights[j + 1] - m.weights[j]) * t;
}

void fks_eval_sorted(const FksModel& m, std::span<const double> xs, std::span<double> out) {
    if (xs.size() != out.size()) throw std::invalid_argument("fks_eval_sorted size mismatch");
    const auto k = m.knots.values();
    const std::size_t last = m.knots.cells() - 1;
    std::size_t j = 0;
    for (std::size_t p = 0; p < xs.size(); ++p) {
        const double x = xs[p];
        while (j < last && x >= k[j + 1]) ++j;
        const double t = (x - k[j]) / (k[j + 1] - k[j]);
        out[p] = m.weights[j] + (m.weights[j + 1] - m.weights[j]) * t;
    }
}

FksModel interpolating_fks(const KnotVector& kv, const TargetFunction& u) {
    std::vector<double> w(kv.size());
    for (std::size_t i = 0; i < kv.size(); ++i) w[i] = u.eval(kv[i]);
    return FksModel(kv, std::move(w));
}

TridiagMatrix assemble_mass_matrix(const KnotVector& kv) {
    const std::size_t n = kv.size();
    TridiagMatrix m(n);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double h = kv.width(j);
        m.diag[j] += h / 3.0;
        m.diag[j + 1] += h / 3.0;
        m.lower[j] = h / 6.0;
        m.upper[j] = h / 6.0;
    }
    return m;
}

FksModel solve_fixed_knot_least_squares(const KnotVector& kv, std::span<const double> target_values,
                                        const QuadratureGrid& grid) {
    const std::size_t n = kv.size();
    const auto xs = grid.points();
    const auto qs = grid.weights();
    if (target_values.size() != xs.size())
        throw std::invalid_argument("target sample count must match the grid");

    TridiagMatrix p(n);
    std::vector<double> rhs(n, 0.0);
    std::vector<std::size_t> hits(n - 1, 0);
    const auto k = kv.values();
    std::size_t j = 0;
    for (std::size_t a = 0; a < xs.size(); ++a) {
        const double x = xs[a];
        while (j + 1 < n - 1 && x >= k[j + 1]) ++j;
        if (x < k[j] || x > k[j + 1]) continue;
        const double t = (x - k[j]) / (k[j + 1] - k[j]);
        const double pl = 1.0 - t;
        const double pr = t;
        const double q = qs[a];
        if (q > 0.0) ++hits[j];
        p.diag[j] += q * pl * pl;
        p.diag[j + 1] += q * pr * pr;
        p.upper[j] += q * pl * pr;
        rhs[j] += q * pl * target_values[a];
        rhs[j + 1] += q * pr * target_values[a];
    }
    p.lower = p.upper;

    for (std::size_t c = 0; c + 1 < n; ++c) {
        if (hits[c] == 0)
            throw DegenerateSystemError("cell " + std::to_string(c) + " [" + std::to_string(k[c]) + ", " +
                                        std::to_string(k[c + 1]) +
                                        "] contains no quadrature point; increase the quadrature size s");
    }

    std::vector<double> w;
    try {
        w = thomas_solve(p, rhs);
    } catch (const SingularMatrixError& e) {
        throw DegenerateSystemError(std::string("least-squares normal matrix is singular (") + e.what() +
                                    "); increase the quadrature size s");
    }
    // One step of iterative refinement keeps the normal-equation residual at
    // round-off level even for badly graded knots.
    auto pw = p.multiply(w);
    for (std::size_t i = 0; i < n; ++i) pw[i] = rhs[i] - pw[i];
    const auto dw = thomas_solve(p, pw);
    for (std::size_t i = 0; i < n; ++i) w[i] += dw[i];
    for (double v : w)
        if (!std::isfinite(v)) throw DegenerateSystemError("least-squares solve produced non-finite weights");
    return FksModel(kv, std::move(w));
}

FksModel solve_fixed_knot_least_squares(const KnotVector& kv, const TargetFunction& u,
                                        const QuadratureGrid& grid) {
    std::vector<double> values(grid.size());
    const auto xs = grid.points();
    for (std::size_t a = 0; a < xs.size(); ++a) values[a] = u.eval(xs[a]);
    return solve_fixed_knot_least_squares(kv, values, grid);
}

FksModel solve_fixed_knot_least_squares(const KnotVector& kv, const TargetFunction& u, std::size_t s) {
    if (s < 4 * kv.size())
        throw std::invalid_argument("quadrature size s must be at least 4N");
    return solve_fixed_knot_least_squares(kv, u, QuadratureGrid::fixed_uniform(s));
}

}  // namespace fks
