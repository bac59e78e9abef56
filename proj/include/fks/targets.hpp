#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fks {

using ScalarFn = std::function<double(double)>;

/// A scalar target u on [0,1] together with its analytic derivatives.
///
/// `d3` is only needed for knot gradients of the equidistribution loss; when
/// it is empty the loss module differentiates `d2` numerically instead.
/// `recommended_epsilon_sq` is the monitor regulariser used when a caller does
/// not pick one explicitly (see `LossConfig::for_target`).
struct TargetFunction {
    std::string id;
    ScalarFn eval;
    ScalarFn d1;
    ScalarFn d2;
    ScalarFn d3;
    std::optional<double> smallest_length_scale;
    std::vector<double> singular_points;
    std::optional<double> recommended_epsilon_sq;

    double operator()(double x) const { return eval(x); }

    /// True when `x` is one of the declared points where d2 is unbounded.
    bool is_singular_at(double x) const;
};

/// u1..u5 in that order.
const std::vector<TargetFunction>& builtin_targets();

/// Looks `id` up among the builtins and anything added with `register_target`.
/// Throws std::invalid_argument for unknown ids.
const TargetFunction& find_target(std::string_view id);

/// Adds a user-defined target to the registry. Replaces an existing entry with
/// the same id unless that id belongs to a builtin, in which case it throws.
void register_target(TargetFunction target);

std::vector<std::string> target_ids();

}  // namespace fks
