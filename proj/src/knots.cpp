#include "fks/knots.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fks {

KnotVector::KnotVector(std::vector<double> knots, double gap_floor)
    : knots_(std::move(knots)), gap_floor_(gap_floor) {
    if (knots_.size() < 2) throw std::invalid_argument("KnotVector needs at least 2 knots");
    if (!(gap_floor_ > 0.0)) throw std::invalid_argument("gap_floor must be positive");
    if (knots_.front() != 0.0 || knots_.back() != 1.0)
        throw std::invalid_argument("KnotVector endpoints must be exactly 0 and 1");
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        const double gap = knots_[i + 1] - knots_[i];
        if (!std::isfinite(knots_[i]) || !(gap >= gap_floor_))
            throw std::invalid_argument("knots " + std::to_string(i) + "," + std::to_string(i + 1) +
                                        " violate ordering/gap_floor");
    }
}

KnotVector KnotVector::uniform(std::size_t n, double gap_floor) {
    if (n < 2) throw std::invalid_argument("KnotVector needs at least 2 knots");
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) k[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    k.back() = 1.0;
    return KnotVector(std::move(k), gap_floor);
}

std::size_t KnotVector::cell_of(double x) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    if (it == knots_.begin()) return 0;
    const auto j = static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(j, cells() - 1);
}

KnotVector KnotVector::with_interior(std::span<const double> interior) const {
    if (interior.size() + 2 != knots_.size())
        throw std::invalid_argument("interior size must be N-2");
    std::vector<double> k(knots_.size());
    k.front() = 0.0;
    std::copy(interior.begin(), interior.end(), k.begin() + 1);
    k.back() = 1.0;
    return KnotVector(std::move(k), gap_floor_);
}

bool project_interior(std::span<double> interior, double gap_floor) {
    const std::size_t m = interior.size();
    if (m == 0) return false;
    if (static_cast<double>(m + 1) * gap_floor >= 1.0)
        throw std::invalid_argument("too many knots for gap_floor");
    bool moved = false;
    for (double& k : interior) {
        if (!std::isfinite(k)) throw std::invalid_argument("non-finite knot");
    }
    if (!std::is_sorted(interior.begin(), interior.end())) {
        std::sort(interior.begin(), interior.end());
        moved = true;
    }
    // Forward pass pushes knots right of their left neighbour, backward pass
    // pulls them left of their right neighbour (and of 1).
    double prev = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (interior[i] - prev < gap_floor) {
            double lo = prev + gap_floor;
            // Rounding can leave lo - prev a hair below the floor.
            while (lo - prev < gap_floor) lo = std::nextafter(lo, 2.0);
            interior[i] = lo;
            moved = true;
        }
        prev = interior[i];
    }
    double next = 1.0;
    for (std::size_t i = m; i-- > 0;) {
        if (next - interior[i] < gap_floor) {
            double hi = next - gap_floor;
            while (next - hi < gap_floor) hi = std::nextafter(hi, -1.0);
            interior[i] = hi;
            moved = true;
        }
        next = interior[i];
    }
    return moved;
}

bool project_knots(std::span<double> knots, double gap_floor) {
    if (knots.size() < 2) throw std::invalid_argument("need at least 2 knots");
    bool moved = knots.front() != 0.0 || knots.back() != 1.0;
    knots.front() = 0.0;
    knots.back() = 1.0;
    moved |= project_interior(knots.subspan(1, knots.size() - 2), gap_floor);
    return moved;
}

}  // namespace fks
