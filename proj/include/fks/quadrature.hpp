#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fks {

enum class QuadratureMode { fixed_uniform, resampled_uniform_random };

/// Sorted sample points on [0,1] with composite-trapezoid weights.
///
/// Every loss in the library is the weighted sum sum_i weights[i] * f(points[i]).
class QuadratureGrid {
public:
    static constexpr std::size_t kDefaultSize = 1000;

    /// s equispaced points including both endpoints.
    static QuadratureGrid fixed_uniform(std::size_t s = kDefaultSize);

    /// Endpoints plus s-2 sorted uniform random interior points.
    static QuadratureGrid resampled(std::size_t s, std::mt19937_64& rng);

    /// Arbitrary strictly increasing points in [0,1].
    static QuadratureGrid from_points(std::vector<double> points,
                                      QuadratureMode mode = QuadratureMode::fixed_uniform);

    std::size_t size() const { return points_.size(); }
    std::span<const double> points() const { return points_; }
    std::span<const double> weights() const { return weights_; }
    QuadratureMode mode() const { return mode_; }

private:
    QuadratureGrid(std::vector<double> points, QuadratureMode mode);

    std::vector<double> points_;
    std::vector<double> weights_;
    QuadratureMode mode_;
};

}  // namespace fks
