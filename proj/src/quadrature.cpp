#include "fks/quadrature.hpp"

#include <algorithm>
#include <stdexcept>

namespace fks {

QuadratureGrid::QuadratureGrid(std::vector<double> points, QuadratureMode mode)
    : points_(std::move(points)), weights_(points_.size(), 0.0), mode_(mode) {
    if (points_.size() < 2) throw std::invalid_argument("quadrature grid needs at least 2 points");
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        if (!(points_[i] < points_[i + 1]))
            throw std::invalid_argument("quadrature points must be strictly increasing");
        const double half = 0.5 * (points_[i + 1] - points_[i]);
        weights_[i] += half;
        weights_[i + 1] += half;
    }
    if (points_.front() < 0.0 || points_.back() > 1.0)
        throw std::invalid_argument("quadrature points must lie in [0,1]");
}

QuadratureGrid QuadratureGrid::fixed_uniform(std::size_t s) {
    if (s < 2) throw std::invalid_argument("quadrature grid needs at least 2 points");
    std::vector<double> x(s);
    for (std::size_t i = 0; i < s; ++i) x[i] = static_cast<double>(i) / static_cast<double>(s - 1);
    x.back() = 1.0;
    return QuadratureGrid(std::move(x), QuadratureMode::fixed_uniform);
}

QuadratureGrid QuadratureGrid::resampled(std::size_t s, std::mt19937_64& rng) {
    if (s < 2) throw std::invalid_argument("quadrature grid needs at least 2 points");
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> x;
    x.reserve(s);
    x.push_back(0.0);
    x.push_back(1.0);
    while (x.size() < s) {
        const double v = dist(rng);
        if (v > 0.0) x.push_back(v);
    }
    std::sort(x.begin(), x.end());
    // Duplicates are astronomically unlikely; drop them rather than redraw.
    x.erase(std::unique(x.begin(), x.end()), x.end());
    return QuadratureGrid(std::move(x), QuadratureMode::resampled_uniform_random);
}

QuadratureGrid QuadratureGrid::from_points(std::vector<double> points, QuadratureMode mode) {
    return QuadratureGrid(std::move(points), mode);
}

}  // namespace fks
