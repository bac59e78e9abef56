#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <random>

#include "fks/losses.hpp"
#include "fks/meshgen.hpp"
#include "fks/relu.hpp"
#include "fks/splines.hpp"
#include "support.hpp"

using namespace fks;

namespace {

TargetFunction linear_target() {
    return {"lin", [](double x) { return 3 * x - 1; }, [](double) { return 3.0; }, [](double) { return 0.0; },
            [](double) { return 0.0; }, {}, {}, {}};
}

TargetFunction scaled(const TargetFunction& u, double s) {
    TargetFunction v = u;
    v.eval = [u, s](double x) { return s * u.eval(x); };
    v.d1 = [u, s](double x) { return s * u.d1(x); };
    v.d2 = [u, s](double x) { return s * u.d2(x); };
    v.d3 = [u, s](double x) { return s * u.d3(x); };
    return v;
}

KnotVector power_mesh(std::size_t n, double p) {
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) k[i] = std::pow(static_cast<double>(i) / static_cast<double>(n - 1), p);
    return KnotVector(k);
}

LossConfig with_grid(std::size_t s, double beta = 0.0, double eps = 0.0) {
    LossConfig c;
    c.grid = QuadratureGrid::fixed_uniform(s);
    c.beta = beta;
    c.epsilon_sq = eps;
    return c;
}

}  // namespace

TEST_SUITE("losses") {
    TEST_CASE("L2 loss basics") {
        const auto lin = linear_target();
        std::mt19937_64 rng(1);
        const auto kv = fks::testing::random_knots(9, rng);
        const auto g = QuadratureGrid::fixed_uniform(500);
        CHECK(loss_l2(interpolating_fks(kv, lin), lin, g) == doctest::Approx(0.0).scale(1e-20));
        const auto& u4 = find_target("u4");
        const auto m = interpolating_fks(kv, u4);
        const double l = loss_l2(m, u4, g);
        CHECK(l > 0.0);
        CHECK(loss_l2(fks_to_relu(m), u4, g) == doctest::Approx(l).epsilon(1e-11));
        // Trapezoid weights: a constant unit error integrates to 1.
        const FksModel off(kv, std::vector<double>(9, 1.0));
        TargetFunction zero{"zero", [](double) { return 0.0; }, [](double) { return 0.0; },
                            [](double) { return 0.0; }, {}, {}, {}, {}};
        CHECK(loss_l2(off, zero, g) == doctest::Approx(1.0).epsilon(1e-14));
    }

    TEST_CASE("cell densities") {
        const std::size_t n = 11;
        for (double r : rho_cells(KnotVector::uniform(n), linear_target(), 1.0))
            CHECK(r == doctest::Approx(0.1).epsilon(1e-14));
        for (double r : rho_cells(KnotVector::uniform(n), find_target("u1"), 0.0))
            CHECK(r == doctest::Approx(0.1 * std::pow(4.0, 0.2)).epsilon(1e-14));
        for (double r : rho_cells(KnotVector::uniform(n), find_target("u5"), 0.1)) CHECK(r > 0.0);

        const auto rho = rho_cells(power_mesh(128, 15.0 / 7.0), find_target("u3"), 0.0);
        const auto [lo, hi] = std::minmax_element(rho.begin() + 1, rho.end());
        CHECK(*hi / *lo < 1.05);
    }

    TEST_CASE("cell densities on the graded u3 mesh against the closed form") {
        // On k_i = (i/n)^p the midpoint density of cell i depends on i alone, so the spread is fixed by the
        // first few cells and does not shrink with N; it vanishes only once those cells are excluded.
        const double p = 15.0 / 7.0;
        for (std::size_t n : {128u, 512u}) {
            const auto kv = power_mesh(n, p);
            const auto rho = rho_cells(kv, find_target("u3"), 0.0);
            for (std::size_t i = 0; i < rho.size(); ++i) {
                const double a = std::pow(static_cast<double>(i), p);
                const double b = std::pow(static_cast<double>(i + 1), p);
                const double mid = 0.5 * (a + b) / std::pow(static_cast<double>(n - 1), p);
                const double closed = (b - a) / std::pow(static_cast<double>(n - 1), p) *
                                      std::pow(2.0 / 9.0 * std::pow(mid, -4.0 / 3.0), 0.4);
                CHECK(rho[i] == doctest::Approx(closed).epsilon(1e-10));
            }
            const auto [lo1, hi1] = std::minmax_element(rho.begin() + 1, rho.end());
            CHECK(*hi1 / *lo1 == doctest::Approx(1.0670551).epsilon(1e-4));
            const auto [lo5, hi5] = std::minmax_element(rho.begin() + 5, rho.end());
            CHECK(*hi5 / *lo5 < 1.01);
        }
    }

    TEST_CASE("singular midpoints are shifted by the gap floor") {
        TargetFunction kink{"kink_mid", [](double x) { return std::pow(std::abs(x - 0.5), 1.5); },
                            [](double x) { return 1.5 * std::copysign(std::sqrt(std::abs(x - 0.5)), x - 0.5); },
                            [](double x) { return 0.75 / std::sqrt(std::abs(x - 0.5)); }, {}, {}, {0.5}, {}};
        const KnotVector kv({0.0, 0.4, 0.6, 1.0});
        CHECK(curvature_sample_point(kv, kink, 1) == 0.5 + kv.gap_floor());
        CHECK(curvature_sample_point(kv, kink, 0) == 0.2);
        CHECK(std::isfinite(loss_equi(kv, kink, 0.0)));
    }

    TEST_CASE("equidistribution loss") {
        CHECK(loss_equi(KnotVector::uniform(17), find_target("u1"), 0.0) <= 1e-30);
        CHECK(loss_equi(KnotVector::uniform(2), find_target("u3"), 0.1) == 0.0);
        CHECK(loss_equi(KnotVector::uniform(16), find_target("u3"), 0.1) > 0.0);
        CHECK(loss_equi(KnotVector::uniform(9), linear_target(), 1.0) <= 1e-30);
        CHECK(loss_equi(power_mesh(9, 1.3), linear_target(), 1.0) > 1e-6);
        CHECK(loss_equi(KnotVector::uniform(9), find_target("u2"), 0.1) >= 0.0);
    }

    TEST_CASE("combined loss") {
        const auto& u3 = find_target("u3");
        const auto m = interpolating_fks(KnotVector::uniform(16), u3);
        auto cfg = LossConfig::for_target(u3, 0.0, 2000);
        CHECK(loss_comb(m, u3, cfg) == loss_l2(m, u3, cfg.grid));
        CHECK(loss_comb(fks_to_relu(m), u3, cfg) == loss_l2(fks_to_relu(m), u3, cfg.grid));
        cfg.beta = 10.0;
        const double l2 = loss_l2(m, u3, cfg.grid);
        CHECK(10.0 * loss_equi(m.knots, u3, cfg.epsilon_sq) / l2 > 10.0);
        CHECK(loss_comb(m, u3, cfg) == doctest::Approx(l2 + 10.0 * loss_equi(m.knots, u3, cfg.epsilon_sq)));

        const auto& u1 = find_target("u1");
        auto big = LossConfig::for_target(u1, 1e6, 2000);
        const auto mu = interpolating_fks(KnotVector::uniform(16), u1);
        CHECK(loss_comb(mu, u1, big) == doctest::Approx(loss_l2(mu, u1, big.grid)).epsilon(1e-12));
    }

    TEST_CASE("interpolation error proxy") {
        for (std::size_t n : {4u, 16u, 64u}) {
            const double h = 1.0 / static_cast<double>(n - 1);
            CHECK(loss_interp_proxy(KnotVector::uniform(n), find_target("u1")) ==
                  doctest::Approx(h * h * h * h / 30.0).epsilon(1e-12));
        }
        CHECK(loss_interp_proxy(KnotVector::uniform(10), linear_target()) == 0.0);

        const auto [kv, d5] = optimal_knots_xalpha(2.0 / 3.0, 64);
        CHECK(d5 == doctest::Approx(4.0 / 81.0 * std::pow(15.0 / 7.0, 5)).epsilon(1e-14));
        CHECK(loss_interp_proxy(kv, find_target("u3")) == doctest::Approx(d5 / (120.0 * std::pow(63.0, 4))).epsilon(0.2));

        const auto g = QuadratureGrid::fixed_uniform(20001);
        for (const char* id : {"u1", "u2"})
            for (std::size_t n : {16u, 32u, 64u}) {
                const auto& u = find_target(id);
                const auto k = KnotVector::uniform(n);
                const double ratio = loss_interp_proxy(k, u) / loss_l2(interpolating_fks(k, u), u, g);
                CAPTURE(std::string(id));
                CAPTURE(n);
                CHECK(ratio >= 1.0 / 3.0);
                CHECK(ratio <= 3.0);
            }
    }

    TEST_CASE("equidistribution quality") {
        CHECK(equi_quality(KnotVector::uniform(12), find_target("u1"), 0.0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(equi_quality(KnotVector::uniform(16), find_target("u3"), 0.1) > 1.0);
        std::mt19937_64 rng(4);
        const auto kv = fks::testing::random_knots(20, rng);
        const auto& u2 = find_target("u2");
        // rho scales as |u''|^{2/5}, so scaling u by 2^{-5/2} halves every rho.
        const auto half = scaled(u2, std::pow(2.0, -2.5));
        const auto r1 = rho_cells(kv, u2, 0.0);
        const auto r2 = rho_cells(kv, half, 0.0);
        for (std::size_t j = 0; j < r1.size(); ++j) CHECK(r2[j] == doctest::Approx(0.5 * r1[j]).epsilon(1e-13));
        CHECK(equi_quality(kv, half, 0.0) == doctest::Approx(equi_quality(kv, u2, 0.0)).epsilon(1e-13));
    }

    TEST_CASE("least-squares weights are stationary") {
        const auto& u2 = find_target("u2");
        const auto cfg = with_grid(1000);
        const auto m = solve_fixed_knot_least_squares(KnotVector::uniform(16), u2, cfg.grid);
        const auto g = grad_loss(m, u2, cfg);
        double norm = 0.0;
        for (double v : g.d_weights) norm += v * v;
        CHECK(std::sqrt(norm) < 1e-8);
        CHECK(g.loss == doctest::Approx(loss_l2(m, u2, cfg.grid)).epsilon(1e-14));
    }

    TEST_CASE("with beta = 0 the regulariser does not touch the knot gradient") {
        std::mt19937_64 rng(6);
        const auto& u5 = find_target("u5");
        const auto m = interpolating_fks(fks::testing::random_knots(10, rng), u5);
        const auto a = grad_loss(m, u5, with_grid(1000, 0.0, 0.1));
        const auto b = grad_loss(m, u5, with_grid(1000, 0.0, 7.0));
        CHECK(a.d_knots == b.d_knots);
        CHECK(a.d_weights == b.d_weights);
        const auto c = grad_loss(m, u5, with_grid(1000, 1.0, 0.1));
        CHECK(a.d_weights == c.d_weights);
    }

    TEST_CASE("analytic gradients match finite differences") {
        for (const auto& u : builtin_targets()) {
            for (bool relu : {false, true}) {
                CAPTURE(u.id);
                CAPTURE(relu);
                const auto fks_check = fks::testing::gradient_check(u, relu, 50, 8, 0.5, 100 + (relu ? 1 : 0));
                CAPTURE(fks_check.redraws);
                CHECK(fks_check.draws == 50);
                CHECK(fks_check.worst_rel < 1e-5);
            }
        }
        const auto& u2 = find_target("u2");
        const auto check = fks::testing::gradient_check(u2, false, 20, 8, 0.0, 7);
        CHECK(check.worst_rel < 1e-5);
    }

    TEST_CASE("equidistribution knot gradient matches finite differences") {
        std::mt19937_64 rng(77);
        for (const auto& u : builtin_targets()) {
            const double eps = u.recommended_epsilon_sq.value_or(0.1);
            for (int rep = 0; rep < 10; ++rep) {
                const auto kv = fks::testing::random_knots(12, rng, 2e-2, 2e-2);
                const auto g = grad_equi_knots(kv, u, eps);
                std::vector<double> interior(kv.values().begin() + 1, kv.values().end() - 1);
                double err = 0.0;
                double scale = 0.0;
                for (std::size_t i = 0; i < interior.size(); ++i) {
                    auto hi = interior;
                    auto lo = interior;
                    hi[i] += 1e-6;
                    lo[i] -= 1e-6;
                    const double fd =
                        (loss_equi(kv.with_interior(hi), u, eps) - loss_equi(kv.with_interior(lo), u, eps)) / 2e-6;
                    err = std::max(err, std::abs(fd - g[i]));
                    scale = std::max(scale, std::abs(fd));
                }
                CAPTURE(u.id);
                CHECK(err / scale < 1e-5);
            }
        }
    }

    TEST_CASE("tied-weight knot gradient matches finite differences") {
        std::mt19937_64 rng(78);
        for (const char* id : {"u2", "u3", "u4"}) {
            const auto& u = find_target(id);
            auto cfg = LossConfig::for_target(u, 10.0, 1000);
            const auto values = sample_target(u, cfg.grid);
            const auto kv = fks::testing::random_knots(10, rng, 2e-2, 2e-2);
            const auto g = grad_loss_interpolating(kv, u, cfg, values);
            std::vector<double> interior(kv.values().begin() + 1, kv.values().end() - 1);
            const auto loss = [&](const std::vector<double>& in) {
                const auto k = kv.with_interior(in);
                return loss_comb(interpolating_fks(k, u), u, cfg);
            };
            CHECK(g.loss == doctest::Approx(loss(interior)).epsilon(1e-12));
            double err = 0.0;
            double scale = 0.0;
            for (std::size_t i = 0; i < interior.size(); ++i) {
                auto hi = interior;
                auto lo = interior;
                hi[i] += 1e-7;
                lo[i] -= 1e-7;
                const double fd = (loss(hi) - loss(lo)) / 2e-7;
                err = std::max(err, std::abs(fd - g.d_knots[i]));
                scale = std::max(scale, std::abs(fd));
            }
            CAPTURE(std::string(id));
            CHECK(err / scale < 1e-5);
        }
    }

    TEST_CASE("configuration validation") {
        LossConfig c;
        c.beta = -1.0;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        c.beta = 0.0;
        c.epsilon_sq = -0.5;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        const auto t = LossConfig::for_target(find_target("u4"), 2.0, 300);
        CHECK(t.epsilon_sq == 1.0);
        CHECK(t.beta == 2.0);
        CHECK(t.grid.size() == 300);
    }
}
