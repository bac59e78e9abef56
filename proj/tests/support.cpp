#include "support.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <cmath>

namespace fks::testing {

std::vector<double> dense_eigenvalues(const TridiagMatrix& a) {
    return dense_eigenvalues(a.to_dense(), a.dim());
}

std::vector<double> dense_eigenvalues(const std::vector<double>& a, std::size_t n) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        a.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

std::vector<double> dense_solve(const std::vector<double>& a, const std::vector<double>& b, std::size_t n) {
    const auto ni = static_cast<Eigen::Index>(n);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(a.data(), ni,
                                                                                                       ni);
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), ni);
    const Eigen::VectorXd x = m.partialPivLu().solve(rhs);
    return {x.data(), x.data() + x.size()};
}

std::vector<double> dense_least_squares(const KnotVector& kv, const TargetFunction& u, const QuadratureGrid& grid) {
    const std::size_t n = kv.size();
    const auto xs = grid.points();
    const auto qs = grid.weights();
    std::vector<double> p(n * n, 0.0);
    std::vector<double> q(n, 0.0);
    std::vector<double> row(n);
    for (std::size_t a = 0; a < xs.size(); ++a) {
        for (std::size_t i = 0; i < n; ++i) row[i] = basis_eval(kv, i, xs[a]);
        const double ua = u(xs[a]);
        for (std::size_t i = 0; i < n; ++i) {
            if (row[i] == 0.0) continue;
            q[i] += qs[a] * row[i] * ua;
            for (std::size_t j = 0; j < n; ++j) p[i * n + j] += qs[a] * row[i] * row[j];
        }
    }
    return dense_solve(p, q, n);
}

std::vector<double> slope_walk_weights(const ReluModel& m) {
    const std::size_t n = m.size();
    std::vector<double> w(n);
    w[0] = m.left_coef;
    // The left unit only contributes on the first cell.
    double slope = -m.left_coef / m.knots[1];
    for (std::size_t j = 0; j + 1 < n; ++j) {
        if (j == 1) slope += m.left_coef / m.knots[1];
        slope += m.scalings[j];
        w[j + 1] = w[j] + m.knots.width(j) * slope;
    }
    return w;
}

KnotVector random_knots(std::size_t n, std::mt19937_64& rng, double min_gap, double margin) {
    // Sorted uniforms on the slack length, then shifted by the reserved gaps: uniform over valid meshes.
    const double slack = 1.0 - 2.0 * margin - static_cast<double>(n > 3 ? n - 3 : 0) * min_gap;
    if (n < 2 || min_gap > margin || slack <= 0.0) throw std::invalid_argument("random_knots: infeasible gaps");
    std::uniform_real_distribution<double> d(0.0, slack);
    std::vector<double> u(n - 2);
    for (auto& v : u) v = d(rng);
    std::sort(u.begin(), u.end());
    std::vector<double> k(n);
    k.front() = 0.0;
    k.back() = 1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) k[i] = margin + u[i - 1] + static_cast<double>(i - 1) * min_gap;
    return KnotVector(k);
}

double fitted_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double m = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

double max_partition_of_unity_error(const KnotVector& kv, std::size_t points) {
    double worst = 0.0;
    for (std::size_t p = 0; p < points; ++p) {
        const double x = static_cast<double>(p) / static_cast<double>(points - 1);
        double s = 0.0;
        for (std::size_t i = 0; i < kv.size(); ++i) s += basis_eval(kv, i, x);
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

double max_fks_relu_mismatch(const FksModel& m, std::size_t points) {
    const auto r = fks_to_relu(m);
    double worst = 0.0;
    for (std::size_t p = 0; p < points; ++p) {
        const double x = static_cast<double>(p) / static_cast<double>(points - 1);
        worst = std::max(worst, std::abs(relu_eval(r, x) - fks_eval(m, x)));
    }
    return worst;
}

double roundtrip_relative_error(const FksModel& m) {
    const auto back = relu_to_fks(fks_to_relu(m));
    double err = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        err = std::max(err, std::abs(back.weights[i] - m.weights[i]));
        scale = std::max(scale, std::abs(m.weights[i]));
    }
    return err / scale;
}

namespace {

constexpr double kFdStep = 1e-6;

bool near_grid_point(const KnotVector& kv, const QuadratureGrid& grid) {
    const auto xs = grid.points();
    for (std::size_t i = 1; i + 1 < kv.size(); ++i) {
        const auto it = std::lower_bound(xs.begin(), xs.end(), kv[i]);
        if (it != xs.end() && *it - kv[i] < 4 * kFdStep) return true;
        if (it != xs.begin() && kv[i] - *std::prev(it) < 4 * kFdStep) return true;
    }
    return false;
}

// Parameters in GradReport order: weights (or left_coef, scalings) then interior knots.
template <class Model>
std::vector<double> flatten(const Model& m) {
    std::vector<double> p;
    if constexpr (std::is_same_v<Model, FksModel>) {
        p = m.weights;
    } else {
        p.push_back(m.left_coef);
        p.insert(p.end(), m.scalings.begin(), m.scalings.end());
    }
    const auto k = m.knots.values();
    p.insert(p.end(), k.begin() + 1, k.end() - 1);
    return p;
}

template <class Model>
Model unflatten(const Model& like, const std::vector<double>& p) {
    const std::size_t n = like.size();
    std::vector<double> k(like.knots.values().begin(), like.knots.values().end());
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(n), p.end(), k.begin() + 1);
    KnotVector kv(std::move(k), like.knots.gap_floor());
    if constexpr (std::is_same_v<Model, FksModel>) {
        return FksModel(std::move(kv), std::vector<double>(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n)));
    } else {
        return ReluModel(std::move(kv), std::vector<double>(p.begin() + 1, p.begin() + static_cast<std::ptrdiff_t>(n)),
                         p[0]);
    }
}

template <class Model>
double check_one(const Model& m, const TargetFunction& u, const LossConfig& cfg) {
    const auto g = grad_loss(m, u, cfg);
    std::vector<double> analytic = g.d_weights;
    analytic.insert(analytic.end(), g.d_knots.begin(), g.d_knots.end());
    const auto p = flatten(m);
    double err = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        // Fourth-order central difference: wide cells on steep targets make the O(h^2) error visible at 1e-5.
        const auto at = [&](double offset) {
            auto q = p;
            q[i] += offset;
            return loss_comb(unflatten(m, q), u, cfg);
        };
        const double fd = (8.0 * (at(kFdStep) - at(-kFdStep)) - (at(2 * kFdStep) - at(-2 * kFdStep))) / (12 * kFdStep);
        err = std::max(err, std::abs(analytic[i] - fd));
        scale = std::max(scale, std::abs(fd));
    }
    return err / scale;
}

}  // namespace

GradientCheck gradient_check(const TargetFunction& u, bool relu, std::size_t draws, std::size_t n, double beta,
                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-0.1, 0.1);
    auto cfg = LossConfig::for_target(u, beta);
    GradientCheck out;
    while (out.draws < draws) {
        const auto kv = random_knots(n, rng, 2e-2, 2e-2);
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = u(kv[i]) + noise(rng);
        if (near_grid_point(kv, cfg.grid)) {
            ++out.redraws;
            continue;
        }
        const FksModel m(kv, w);
        const double e = relu ? check_one(fks_to_relu(m), u, cfg) : check_one(m, u, cfg);
        out.worst_rel = std::max(out.worst_rel, e);
        ++out.draws;
    }
    return out;
}

bool knots_valid(const std::vector<double>& k, double gap_floor) {
    if (k.size() < 2 || k.front() != 0.0 || k.back() != 1.0) return false;
    for (std::size_t i = 0; i + 1 < k.size(); ++i)
        if (!(k[i + 1] - k[i] >= gap_floor)) return false;
    return true;
}

bool trajectory_valid(const TrainReport& r) {
    for (const auto& k : r.knot_trajectory)
        if (!knots_valid(k)) return false;
    return !r.knot_trajectory.empty() && knots_valid(std::vector<double>(r.knots().values().begin(),
                                                                         r.knots().values().end()));
}

bool reports_identical(const TrainReport& a, const TrainReport& b) {
    if (a.loss_iters != b.loss_iters || a.loss_history != b.loss_history) return false;
    if (a.knot_iters != b.knot_iters || a.knot_trajectory != b.knot_trajectory) return false;
    if (a.fks.has_value() != b.fks.has_value() || a.relu.has_value() != b.relu.has_value()) return false;
    if (a.fks && (a.fks->weights != b.fks->weights || !(a.fks->knots == b.fks->knots))) return false;
    if (a.relu && (a.relu->scalings != b.relu->scalings || a.relu->left_coef != b.relu->left_coef ||
                   !(a.relu->knots == b.relu->knots)))
        return false;
    return a.projection_events == b.projection_events;
}

}  // namespace fks::testing
