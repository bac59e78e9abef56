#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fks {

/// Strictly increasing knots on [0,1] with k_0 = 0 and k_{N-1} = 1 exactly.
///
/// Neighbouring knots are at least `gap_floor` apart. Construction validates
/// and throws std::invalid_argument; `project_knots` is the repair path used
/// by the optimisers.
class KnotVector {
public:
    static constexpr double kDefaultGapFloor = 1e-8;

    explicit KnotVector(std::vector<double> knots, double gap_floor = kDefaultGapFloor);

    static KnotVector uniform(std::size_t n, double gap_floor = kDefaultGapFloor);

    std::size_t size() const { return knots_.size(); }
    std::size_t cells() const { return knots_.size() - 1; }
    double operator[](std::size_t i) const { return knots_[i]; }
    std::span<const double> values() const { return knots_; }
    double gap_floor() const { return gap_floor_; }

    /// Width of cell j, i.e. k_{j+1} - k_j.
    double width(std::size_t j) const { return knots_[j + 1] - knots_[j]; }
    double midpoint(std::size_t j) const { return 0.5 * (knots_[j] + knots_[j + 1]); }

    /// Cell j with k_j <= x < k_{j+1}; x = 1 belongs to the last cell.
    std::size_t cell_of(double x) const;

    /// Copy with interior knots replaced (size must be N-2).
    KnotVector with_interior(std::span<const double> interior) const;

    bool operator==(const KnotVector&) const = default;

private:
    std::vector<double> knots_;
    double gap_floor_;
};

/// Sorts the interior entries of `knots` and shifts them minimally so every
/// gap is at least `gap_floor`, keeping knots[0] = 0 and knots.back() = 1.
/// Returns true when anything moved.
bool project_knots(std::span<double> knots, double gap_floor = KnotVector::kDefaultGapFloor);

/// Same as `project_knots` but for the interior entries only (k_1..k_{N-2}).
bool project_interior(std::span<double> interior, double gap_floor = KnotVector::kDefaultGapFloor);

}  // namespace fks
