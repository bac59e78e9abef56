#include "fks/targets.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace fks {

using std::numbers::pi;

bool TargetFunction::is_singular_at(double x) const {
    for (double s : singular_points)
        if (x == s) return true;
    return false;
}

namespace {

TargetFunction make_u1() {
    TargetFunction t;
    t.id = "u1";
    t.eval = [](double x) { return x * (1.0 - x); };
    t.d1 = [](double x) { return 1.0 - 2.0 * x; };
    t.d2 = [](double) { return -2.0; };
    t.d3 = [](double) { return 0.0; };
    t.recommended_epsilon_sq = 0.0;
    return t;
}

TargetFunction make_u2() {
    TargetFunction t;
    t.id = "u2";
    t.eval = [](double x) { return std::sin(pi * x); };
    t.d1 = [](double x) { return pi * std::cos(pi * x); };
    t.d2 = [](double x) { return -pi * pi * std::sin(pi * x); };
    t.d3 = [](double x) { return -pi * pi * pi * std::cos(pi * x); };
    t.recommended_epsilon_sq = 0.0;
    return t;
}

// x^{2/3}: u'' = -(2/9) x^{-4/3} blows up at the origin.
TargetFunction make_u3() {
    TargetFunction t;
    t.id = "u3";
    t.eval = [](double x) { return std::cbrt(x * x); };
    t.d1 = [](double x) { return (2.0 / 3.0) / std::cbrt(x); };
    t.d2 = [](double x) { return -(2.0 / 9.0) / (x * std::cbrt(x)); };
    t.d3 = [](double x) { return (8.0 / 27.0) / (x * x * std::cbrt(x)); };
    t.singular_points = {0.0};
    t.recommended_epsilon_sq = 0.0;
    return t;
}

TargetFunction make_u4() {
    constexpr double a = 100.0;
    constexpr double c = 0.25;
    TargetFunction t;
    t.id = "u4";
    t.eval = [](double x) { return std::tanh(a * (x - c)); };
    t.d1 = [](double x) {
        const double th = std::tanh(a * (x - c));
        return a * (1.0 - th * th);
    };
    t.d2 = [](double x) {
        const double th = std::tanh(a * (x - c));
        return -2.0 * a * a * th * (1.0 - th * th);
    };
    t.d3 = [](double x) {
        const double th = std::tanh(a * (x - c));
        return -2.0 * a * a * a * (1.0 - th * th) * (1.0 - 3.0 * th * th);
    };
    t.smallest_length_scale = 1.0 / a;
    t.recommended_epsilon_sq = 1.0;
    return t;
}

// exp(-500 z^2) sin(20 pi x), z = x - 0.75. Derivatives by Leibniz on f*g.
TargetFunction make_u5() {
    constexpr double s = 500.0;
    constexpr double c = 0.75;
    constexpr double w = 20.0 * pi;
    struct Parts {
        double f0, f1, f2, f3, g0, g1, g2, g3;
    };
    auto parts = [](double x) {
        const double z = x - c;
        const double f = std::exp(-s * z * z);
        const double sn = std::sin(w * x);
        const double cs = std::cos(w * x);
        return Parts{f,
                     -2.0 * s * z * f,
                     (4.0 * s * s * z * z - 2.0 * s) * f,
                     (12.0 * s * s * z - 8.0 * s * s * s * z * z * z) * f,
                     sn,
                     w * cs,
                     -w * w * sn,
                     -w * w * w * cs};
    };
    TargetFunction t;
    t.id = "u5";
    t.eval = [parts](double x) {
        const auto p = parts(x);
        return p.f0 * p.g0;
    };
    t.d1 = [parts](double x) {
        const auto p = parts(x);
        return p.f1 * p.g0 + p.f0 * p.g1;
    };
    t.d2 = [parts](double x) {
        const auto p = parts(x);
        return p.f2 * p.g0 + 2.0 * p.f1 * p.g1 + p.f0 * p.g2;
    };
    t.d3 = [parts](double x) {
        const auto p = parts(x);
        return p.f3 * p.g0 + 3.0 * p.f2 * p.g1 + 3.0 * p.f1 * p.g2 + p.f0 * p.g3;
    };
    t.smallest_length_scale = 1.0 / std::sqrt(s);
    t.recommended_epsilon_sq = 1.0;
    return t;
}

struct Registry {
    std::mutex mutex;
    std::map<std::string, TargetFunction, std::less<>> user;
};

Registry& registry() {
    static Registry r;
    return r;
}

}  // namespace

const std::vector<TargetFunction>& builtin_targets() {
    static const std::vector<TargetFunction> targets{make_u1(), make_u2(), make_u3(), make_u4(),
                                                     make_u5()};
    return targets;
}

const TargetFunction& find_target(std::string_view id) {
    for (const auto& t : builtin_targets())
        if (t.id == id) return t;
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    if (auto it = r.user.find(id); it != r.user.end()) return it->second;
    throw std::invalid_argument("unknown target id '" + std::string(id) + "'");
}

void register_target(TargetFunction target) {
    if (target.id.empty() || !target.eval || !target.d1 || !target.d2)
        throw std::invalid_argument("target needs an id, eval, d1 and d2");
    for (const auto& t : builtin_targets())
        if (t.id == target.id)
            throw std::invalid_argument("cannot replace builtin target '" + t.id + "'");
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    // std::map nodes are stable, so references handed out earlier stay valid
    // unless the same id is re-registered.
    r.user.insert_or_assign(target.id, std::move(target));
}

std::vector<std::string> target_ids() {
    std::vector<std::string> ids;
    for (const auto& t : builtin_targets()) ids.push_back(t.id);
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    for (const auto& [id, _] : r.user) ids.push_back(id);
    return ids;
}

}  // namespace fks
