#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fks/knots.hpp"
#include "fks/targets.hpp"

namespace fks {

/// m(x) = (epsilon + u''(x)^2)^{1/5}.
struct MonitorFunction {
    TargetFunction base;
    double epsilon = 0.0;
    static constexpr double exponent = 0.2;

    double operator()(double x) const;
};

/// Equidistributing map x(xi) sampled on a uniform computational grid.
struct MeshMap {
    std::vector<double> xi_grid;
    std::vector<double> x_values;
    double integral_D = 0.0;
};

class ShootingError : public std::runtime_error {
public:
    ShootingError(const std::string& what, double lo, double hi)
        : std::runtime_error(what), bracket_lo(lo), bracket_hi(hi) {}
    double bracket_lo;
    double bracket_hi;
};

struct MeshgenOptions {
    double rtol = 1e-10;
    /// Both ends are covered by a quadrature patch of this width, so the ODE
    /// never touches a singular or vanishing monitor at x = 0 or x = 1.
    double delta = 1e-6;
    double shoot_tol = 1e-8;
    int max_bisections = 50;
};

/// Integrates dx/dxi = D / m(x) with an embedded 5(4) Runge-Kutta pair and
/// shoots on D until x(1) = 1. Knots inside an end patch come from inverting
/// the patch integral of m. Throws ShootingError with the last bracket when
/// the bisection budget runs out.
MeshMap solve_mesh_map(const TargetFunction& u, double epsilon, std::size_t n, const MeshgenOptions& opt = {});

KnotVector optimal_knots_ode(const TargetFunction& u, double epsilon, std::size_t n,
                             const MeshgenOptions& opt = {});

/// k_i = (i/(N-1))^{5/(2 alpha + 1)} and D^5 = alpha^2 (1-alpha)^2 (5/(2 alpha + 1))^5.
std::pair<KnotVector, double> optimal_knots_xalpha(double alpha, std::size_t n);

/// -(1 + 2 alpha): uniform-mesh IFKS rate for x^alpha.
double predicted_uniform_rate_xalpha(double alpha);

/// Default optimal mesh for a target: the closed form for u3, otherwise the
/// ODE route with the target's recommended regulariser (0.1 if none).
KnotVector optimal_knots(const TargetFunction& u, std::size_t n);

}  // namespace fks
