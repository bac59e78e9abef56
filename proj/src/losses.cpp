#include "fks/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace fks {

LossConfig LossConfig::for_target(const TargetFunction& u, double beta, std::size_t quad_points) {
    LossConfig cfg;
    cfg.beta = beta;
    cfg.epsilon_sq = u.recommended_epsilon_sq.value_or(kDefaultEpsilonSq);
    cfg.grid = QuadratureGrid::fixed_uniform(quad_points);
    return cfg;
}

void LossConfig::validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be a finite value >= 0");
    if (!(epsilon_sq >= 0.0) || !std::isfinite(epsilon_sq))
        throw std::invalid_argument("epsilon_sq must be a finite value >= 0");
}

std::vector<double> sample_target(const TargetFunction& u, const QuadratureGrid& grid) {
    const auto xs = grid.points();
    std::vector<double> v(xs.size());
    for (std::size_t a = 0; a < xs.size(); ++a) v[a] = u.eval(xs[a]);
    return v;
}

namespace {

void check_samples(std::span<const double> u_values, const QuadratureGrid& grid) {
    if (u_values.size() != grid.size()) throw std::invalid_argument("target samples must match the grid");
}

double weighted_residual_norm(std::span<const double> y, std::span<const double> u_values,
                              std::span<const double> q) {
    double total = 0.0;
    for (std::size_t a = 0; a < y.size(); ++a) {
        const double r = y[a] - u_values[a];
        total += q[a] * r * r;
    }
    return total;
}

// (eps^2 + u''^2)^{1/5} and its derivative in x.
struct Density {
    double g;
    double dg;
};

double third_derivative(const TargetFunction& u, double x) {
    if (u.d3) return u.d3(x);
    const double step = 1e-5 * std::max(std::abs(x), 1e-3);
    return (u.d2(x + step) - u.d2(x - step)) / (2.0 * step);
}

Density density_at(const TargetFunction& u, double x, double epsilon_sq, bool with_derivative) {
    const double c = u.d2(x);
    const double base = epsilon_sq + c * c;
    const double g = std::pow(base, 0.2);
    double dg = 0.0;
    if (with_derivative && base > 0.0) dg = 0.2 * std::pow(base, -0.8) * 2.0 * c * third_derivative(u, x);
    return {g, dg};
}

}  // namespace

double loss_l2(const FksModel& m, std::span<const double> u_values, const QuadratureGrid& grid) {
    check_samples(u_values, grid);
    std::vector<double> y(grid.size());
    fks_eval_sorted(m, grid.points(), y);
    return weighted_residual_norm(y, u_values, grid.weights());
}

double loss_l2(const ReluModel& m, std::span<const double> u_values, const QuadratureGrid& grid) {
    check_samples(u_values, grid);
    std::vector<double> y(grid.size());
    relu_eval_sorted(m, grid.points(), y);
    return weighted_residual_norm(y, u_values, grid.weights());
}

double loss_l2(const FksModel& m, const TargetFunction& u, const QuadratureGrid& grid) {
    return loss_l2(m, sample_target(u, grid), grid);
}

double loss_l2(const ReluModel& m, const TargetFunction& u, const QuadratureGrid& grid) {
    return loss_l2(m, sample_target(u, grid), grid);
}

double curvature_sample_point(const KnotVector& kv, const TargetFunction& u, std::size_t j) {
    const double mid = kv.midpoint(j);
    return u.is_singular_at(mid) ? mid + kv.gap_floor() : mid;
}

std::vector<double> rho_cells(const KnotVector& kv, const TargetFunction& u, double epsilon_sq) {
    std::vector<double> rho(kv.cells());
    for (std::size_t j = 0; j < rho.size(); ++j)
        rho[j] = kv.width(j) * density_at(u, curvature_sample_point(kv, u, j), epsilon_sq, false).g;
    return rho;
}

double loss_equi(const KnotVector& kv, const TargetFunction& u, double epsilon_sq) {
    const auto rho = rho_cells(kv, u, epsilon_sq);
    double mean = 0.0;
    for (double r : rho) mean += r;
    mean /= static_cast<double>(rho.size());
    double total = 0.0;
    for (double r : rho) total += (r - mean) * (r - mean);
    return total;
}

std::vector<double> grad_equi_knots(const KnotVector& kv, const TargetFunction& u, double epsilon_sq) {
    const std::size_t cells = kv.cells();
    std::vector<double> rho(cells);
    std::vector<Density> dens(cells);
    for (std::size_t j = 0; j < cells; ++j) {
        dens[j] = density_at(u, curvature_sample_point(kv, u, j), epsilon_sq, true);
        rho[j] = kv.width(j) * dens[j].g;
    }
    double mean = 0.0;
    for (double r : rho) mean += r;
    mean /= static_cast<double>(cells);

    // d/d rho_j of sum (rho - mean)^2 is 2 (rho_j - mean): the mean's own
    // variation multiplies sum (rho - mean) = 0.
    std::vector<double> grad(kv.size() - 2, 0.0);
    for (std::size_t j = 0; j < cells; ++j) {
        const double dl = 2.0 * (rho[j] - mean);
        const double h = kv.width(j);
        const double half_slope = 0.5 * h * dens[j].dg;
        if (j >= 1) grad[j - 1] += dl * (-dens[j].g + half_slope);
        if (j + 1 <= kv.size() - 2) grad[j] += dl * (dens[j].g + half_slope);
    }
    return grad;
}

double loss_comb(const FksModel& m, const TargetFunction& u, const LossConfig& cfg) {
    const double l2 = loss_l2(m, u, cfg.grid);
    if (cfg.beta == 0.0) return l2;
    return l2 + cfg.beta * loss_equi(m.knots, u, cfg.epsilon_sq);
}

double loss_comb(const ReluModel& m, const TargetFunction& u, const LossConfig& cfg) {
    const double l2 = loss_l2(m, u, cfg.grid);
    if (cfg.beta == 0.0) return l2;
    return l2 + cfg.beta * loss_equi(m.knots, u, cfg.epsilon_sq);
}

double loss_interp_proxy(const KnotVector& kv, const TargetFunction& u) {
    double total = 0.0;
    for (std::size_t j = 0; j < kv.cells(); ++j) {
        const double h = kv.width(j);
        const double c = u.d2(curvature_sample_point(kv, u, j));
        total += h * h * h * h * h * c * c;
    }
    return total / 120.0;
}

double equi_quality(const KnotVector& kv, const TargetFunction& u, double epsilon_sq) {
    const auto rho = rho_cells(kv, u, epsilon_sq);
    double sum = 0.0;
    double mx = 0.0;
    for (double r : rho) {
        sum += r;
        mx = std::max(mx, r);
    }
    if (!(sum > 0.0)) throw std::invalid_argument("equi_quality: density vanishes identically");
    return static_cast<double>(rho.size()) * mx / sum;
}

namespace {

void add_equi_part(GradReport& g, const KnotVector& kv, const TargetFunction& u, const LossConfig& cfg) {
    if (cfg.beta == 0.0) return;
    g.loss += cfg.beta * loss_equi(kv, u, cfg.epsilon_sq);
    const auto de = grad_equi_knots(kv, u, cfg.epsilon_sq);
    for (std::size_t i = 0; i < de.size(); ++i) g.d_knots[i] += cfg.beta * de[i];
}

}  // namespace

GradReport grad_loss(const FksModel& m, const TargetFunction& u, const LossConfig& cfg,
                     std::span<const double> u_values) {
    check_samples(u_values, cfg.grid);
    const auto& kv = m.knots;
    const auto k = kv.values();
    const auto& w = m.weights;
    const std::size_t n = kv.size();
    const auto xs = cfg.grid.points();
    const auto qs = cfg.grid.weights();

    // Full-length knot gradient first; the endpoints are dropped at the end.
    std::vector<double> dk(n, 0.0);
    GradReport g;
    g.d_weights.assign(n, 0.0);
    const std::size_t last = n - 2;
    std::size_t j = 0;
    for (std::size_t a = 0; a < xs.size(); ++a) {
        const double x = xs[a];
        while (j < last && x >= k[j + 1]) ++j;
        const double h = k[j + 1] - k[j];
        const double t = (x - k[j]) / h;
        const double dw = w[j + 1] - w[j];
        const double r = w[j] + dw * t - u_values[a];
        g.loss += qs[a] * r * r;
        const double s = 2.0 * qs[a] * r;
        g.d_weights[j] += s * (1.0 - t);
        g.d_weights[j + 1] += s * t;
        dk[j] += s * dw * (t - 1.0) / h;
        dk[j + 1] -= s * dw * t / h;
    }
    g.d_knots.assign(dk.begin() + 1, dk.end() - 1);
    add_equi_part(g, kv, u, cfg);
    return g;
}

GradReport grad_loss(const ReluModel& m, const TargetFunction& u, const LossConfig& cfg,
                     std::span<const double> u_values) {
    check_samples(u_values, cfg.grid);
    const auto k = m.knots.values();
    const std::size_t n = m.knots.size();
    const auto xs = cfg.grid.points();
    const auto qs = cfg.grid.weights();
    const double k1 = k[1];

    std::vector<double> y(xs.size());
    relu_eval_sorted(m, xs, y);

    GradReport g;
    g.d_weights.assign(n, 0.0);
    g.d_knots.assign(n - 2, 0.0);
    std::vector<double> s(xs.size());
    double d_left = 0.0;
    double d_k1_left = 0.0;
    for (std::size_t a = 0; a < xs.size(); ++a) {
        const double r = y[a] - u_values[a];
        g.loss += qs[a] * r * r;
        s[a] = 2.0 * qs[a] * r;
        if (xs[a] < k1) {
            d_left += s[a] * (k1 - xs[a]) / k1;
            d_k1_left += s[a] * m.left_coef * xs[a] / (k1 * k1);
        }
    }
    g.d_weights[0] = d_left;

    // Suffix sums over points strictly right of each breakpoint:
    // dL/dc_i = S1_i - k_i S0_i and dL/dk_i = -c_i S0_i.
    std::size_t a = xs.size();
    double s0 = 0.0;
    double s1 = 0.0;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (a > 0 && xs[a - 1] > k[i]) {
            --a;
            s0 += s[a];
            s1 += s[a] * xs[a];
        }
        g.d_weights[i + 1] = s1 - k[i] * s0;
        if (i >= 1) g.d_knots[i - 1] = -m.scalings[i] * s0;
    }
    if (n >= 3) g.d_knots[0] += d_k1_left;
    add_equi_part(g, m.knots, u, cfg);
    return g;
}

GradReport grad_loss(const FksModel& m, const TargetFunction& u, const LossConfig& cfg) {
    return grad_loss(m, u, cfg, sample_target(u, cfg.grid));
}

GradReport grad_loss(const ReluModel& m, const TargetFunction& u, const LossConfig& cfg) {
    return grad_loss(m, u, cfg, sample_target(u, cfg.grid));
}

GradReport grad_loss_interpolating(const KnotVector& kv, const TargetFunction& u, const LossConfig& cfg,
                                   std::span<const double> u_values) {
    auto g = grad_loss(interpolating_fks(kv, u), u, cfg, u_values);
    for (std::size_t i = 1; i + 1 < kv.size(); ++i) g.d_knots[i - 1] += g.d_weights[i] * u.d1(kv[i]);
    return g;
}

}  // namespace fks
