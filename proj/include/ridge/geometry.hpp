#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ridge/vec.hpp"

namespace ridge {

/// A ridge direction (a, b): the argument of the associated univariate
/// profile is a*x + b*y. Only the line through the origin matters, so
/// directions are compared up to scaling.
struct Direction {
    double a = 0.0;
    double b = 0.0;

    Vec2 vec() const { return {a, b}; }
    double ridge_arg(Vec2 p) const { return a * p.x + b * p.y; }
};

/// Ordered direction list, validated pairwise linearly independent.
struct DirectionSet {
    std::vector<Direction> dirs;
    double tol_indep = 1e-12;

    std::size_t size() const { return dirs.size(); }
    const Direction& operator[](std::size_t i) const { return dirs[i]; }
};

/// |a_i b_j - a_j b_i| / (|d_i| |d_j|): 0 for parallel, 1 for orthogonal.
double normalized_cross(const Direction& d1, const Direction& d2);

/// Checks every direction nonzero and every pair independent above
/// tol_indep; reports the offending index or pair otherwise.
DirectionSet validate_directions(std::vector<Direction> dirs, double tol_indep = 1e-12);

/// (-b, a)/|(a,b)|: the +90 degree rotation, unit length.
Vec2 perpendicular_unit(const Direction& d);

/// Pair of indices maximizing the normalized cross product, ties broken by
/// lexicographic index order. Needs n >= 2.
std::pair<int, int> select_axis_pair(const DirectionSet& ds);

/// Coordinate change sending two chosen directions' ridge arguments onto the
/// axes: with M = [[a_i, b_i], [a_j, b_j]], (x', y') = M (x, y) makes their
/// arguments exactly x' and y'. The remaining directions are re-expressed as
/// (a, b) M^{-1} and ordered first; the axis pair comes last as exactly
/// (1,0), (0,1).
struct NormalizedProblem {
    Mat2 M;
    Mat2 M_inv;
    /// perm[k] = original index of normalized direction k.
    std::vector<int> perm;
    DirectionSet dirs_normalized;
    /// Unit perpendiculars to the first n-2 normalized directions.
    std::vector<Vec2> perps;
};

NormalizedProblem normalize(const DirectionSet& ds,
                            std::optional<std::pair<int, int>> axis_pair = std::nullopt);

} // namespace ridge
