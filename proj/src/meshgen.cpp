#include "fks/meshgen.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <string>

namespace fks {

double MonitorFunction::operator()(double x) const {
    const double c = base.d2(x);
    return std::pow(epsilon + c * c, exponent);
}

namespace {

constexpr std::array<double, 8> kGlNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                            -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                            0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066278719271,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066278719271,
                                              0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss_legendre(const F& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) s += kGlWeights[i] * f(mid + half * kGlNodes[i]);
    return half * s;
}

// Integral of m over [0, x] for x <= delta, geometrically graded towards 0.
double left_patch_integral(const MonitorFunction& m, double x) {
    double total = 0.0;
    double hi = x;
    for (int level = 0; level < 200 && hi > 0.0; ++level) {
        const double lo = 0.5 * hi;
        total += gauss_legendre(m, lo, hi);
        hi = lo;
    }
    return total;
}

// Integral of m over [x, 1] for x >= 1 - delta, graded towards 1.
double right_patch_integral(const MonitorFunction& m, double x) {
    double total = 0.0;
    double width = 1.0 - x;
    for (int level = 0; level < 200 && width > 0.0; ++level) {
        const double inner = 0.5 * width;
        total += gauss_legendre(m, 1.0 - width, 1.0 - inner);
        width = inner;
    }
    return total;
}

double middle_integral(const MonitorFunction& m, double a, double b, std::size_t panels) {
    double total = 0.0;
    const double h = (b - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) total += gauss_legendre(m, a + h * p, a + h * (p + 1));
    return total;
}

// x in [lo, hi] with F(x) = target for increasing F.
template <class F>
double invert_monotone(const F& f, double target, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) < target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct ShotResult {
    double residual;
    std::vector<double> x_at_outputs;
};

// Dormand-Prince 5(4) on the autonomous ODE dx/dxi = d / m(x) from (xi0, x0)
// to xi1, recording x at each requested output abscissa (ascending).
ShotResult shoot(const MonitorFunction& m, double d, double xi0, double x0, double xi1, double x_target,
                 const std::vector<double>& outputs, double rtol) {
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                     a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                     a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                     b6 = 11.0 / 84.0;
    constexpr double e1 = b1 - 5179.0 / 57600.0, e3 = b3 - 7571.0 / 16695.0, e4 = b4 - 393.0 / 640.0,
                     e5 = b5 - (-92097.0 / 339200.0), e6 = b6 - 187.0 / 2100.0, e7 = -1.0 / 40.0;
    constexpr double overshoot = 1.5;

    const auto f = [&](double x) { return d / m(x); };
    ShotResult res;
    res.x_at_outputs.reserve(outputs.size());
    std::size_t next_out = 0;
    double xi = xi0;
    double x = x0;
    double h = std::min(1e-4, xi1 - xi0);
    double k1 = f(x);
    while (xi < xi1) {
        double stop = xi1;
        if (next_out < outputs.size()) stop = std::min(stop, outputs[next_out]);
        bool clipped = false;
        if (xi + h >= stop) {
            h = stop - xi;
            clipped = true;
        }
        const double k2 = f(x + h * a21 * k1);
        const double k3 = f(x + h * (a31 * k1 + a32 * k2));
        const double k4 = f(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const double k5 = f(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const double k6 = f(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const double xn = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double k7 = f(xn);
        const double err_abs = std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
        const double scale = 1e-15 + rtol * std::max(std::abs(x), std::abs(xn));
        const double err = err_abs / scale;
        if (!std::isfinite(xn) || !(err <= 1.0)) {
            const double shrink = std::isfinite(err) ? std::max(0.1, 0.9 * std::pow(err, -0.2)) : 0.1;
            h *= shrink;
            if (h < 1e-300) {
                res.residual = std::numeric_limits<double>::infinity();
                return res;
            }
            continue;
        }
        xi = clipped ? stop : xi + h;
        x = xn;
        k1 = k7;
        if (x > overshoot) {
            res.residual = x - x_target;
            return res;
        }
        while (next_out < outputs.size() && outputs[next_out] <= xi) {
            res.x_at_outputs.push_back(x);
            ++next_out;
        }
        const double grow = err > 0.0 ? std::min(5.0, 0.9 * std::pow(err, -0.2)) : 5.0;
        if (!clipped) h *= grow;
        else h = std::max(h * grow, 1e-6);
    }
    res.residual = x - x_target;
    return res;
}

}  // namespace

MeshMap solve_mesh_map(const TargetFunction& u, double epsilon, std::size_t n, const MeshgenOptions& opt) {
    if (n < 2) throw std::invalid_argument("mesh needs N >= 2");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("monitor regulariser must be >= 0");
    const MonitorFunction m{u, epsilon};
    const double delta = opt.delta;

    const double left = left_patch_integral(m, delta);
    const double right = right_patch_integral(m, 1.0 - delta);
    const double middle = middle_integral(m, delta, 1.0 - delta, 4000);
    const double d_est = left + middle + right;
    if (!(d_est > 0.0) || !std::isfinite(d_est)) throw std::invalid_argument("monitor integral is not positive");

    MeshMap map;
    map.xi_grid.resize(n);
    for (std::size_t i = 0; i < n; ++i) map.xi_grid[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    map.xi_grid.back() = 1.0;

    const auto run = [&](double d, ShotResult& out, std::vector<double>& outputs) {
        const double xi0 = left / d;
        const double xi1 = 1.0 - right / d;
        outputs.clear();
        for (double xi : map.xi_grid)
            if (xi > xi0 && xi < xi1) outputs.push_back(xi);
        if (!(xi1 > xi0)) {
            out.residual = -std::numeric_limits<double>::infinity();
            return;
        }
        out = shoot(m, d, xi0, delta, xi1, 1.0 - delta, outputs, opt.rtol);
    };

    // Residual x(xi_end) - (1 - delta) increases with D.
    double lo = 0.5 * d_est;
    double hi = 2.0 * d_est;
    ShotResult shot;
    std::vector<double> outputs;
    for (int expand = 0; expand < 20; ++expand) {
        run(lo, shot, outputs);
        if (shot.residual < 0.0) break;
        lo *= 0.5;
    }
    for (int expand = 0; expand < 20; ++expand) {
        run(hi, shot, outputs);
        if (shot.residual > 0.0) break;
        hi *= 2.0;
    }

    double d = d_est;
    run(d, shot, outputs);
    int steps = 0;
    while (!(std::abs(shot.residual) < opt.shoot_tol)) {
        if (steps++ >= opt.max_bisections)
            throw ShootingError("shooting on D did not converge; last bracket [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]",
                                lo, hi);
        if (shot.residual > 0.0) hi = d;
        else lo = d;
        d = 0.5 * (lo + hi);
        run(d, shot, outputs);
    }
    map.integral_D = d;

    const double xi0 = left / d;
    const double xi1 = 1.0 - right / d;
    map.x_values.resize(n);
    std::size_t out_idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = map.xi_grid[i];
        if (i == 0) map.x_values[i] = 0.0;
        else if (i + 1 == n) map.x_values[i] = 1.0;
        else if (xi <= xi0) {
            const double target = xi * d;
            map.x_values[i] =
                invert_monotone([&](double x) { return left_patch_integral(m, x); }, target, 0.0, delta);
        } else if (xi >= xi1) {
            const double target = (1.0 - xi) * d;
            // right_patch_integral decreases in x, so invert its negation.
            map.x_values[i] = invert_monotone([&](double x) { return -right_patch_integral(m, x); }, -target,
                                              1.0 - delta, 1.0);
        } else {
            map.x_values[i] = shot.x_at_outputs.at(out_idx++);
        }
    }
    return map;
}

KnotVector optimal_knots_ode(const TargetFunction& u, double epsilon, std::size_t n, const MeshgenOptions& opt) {
    auto map = solve_mesh_map(u, epsilon, n, opt);
    project_knots(map.x_values);
    return KnotVector(std::move(map.x_values));
}

std::pair<KnotVector, double> optimal_knots_xalpha(double alpha, std::size_t n) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    if (n < 2) throw std::invalid_argument("mesh needs N >= 2");
    const double p = 5.0 / (2.0 * alpha + 1.0);
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) k[i] = std::pow(static_cast<double>(i) / static_cast<double>(n - 1), p);
    k.front() = 0.0;
    k.back() = 1.0;
    const double d5 = alpha * alpha * (1.0 - alpha) * (1.0 - alpha) * std::pow(p, 5.0);
    return {KnotVector(std::move(k)), d5};
}

double predicted_uniform_rate_xalpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    return -(1.0 + 2.0 * alpha);
}

KnotVector optimal_knots(const TargetFunction& u, std::size_t n) {
    if (u.id == "u3") return optimal_knots_xalpha(2.0 / 3.0, n).first;
    return optimal_knots_ode(u, u.recommended_epsilon_sq.value_or(0.1), n);
}

}  // namespace fks
