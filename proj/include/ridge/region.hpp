#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ridge/vec.hpp"

namespace ridge {

/// Evaluable set of a bivariate function: either the whole plane
/// (expression-backed) or a convex polygon (rectangles, and parallelogram
/// images of rectangles under the normalizing map).
class Region {
public:
    static Region whole_plane();
    static Region rect(const Rect& r);
    /// Vertices in counter-clockwise order.
    static Region polygon(std::span<const Vec2> vertices);

    bool is_whole_plane() const { return whole_; }
    bool empty() const { return !whole_ && verts_.size() < 3; }

    bool contains(Vec2 p, double eps = 0.0) const;

    /// Shrinks the region by `margin` (each edge moved inward). May come
    /// back empty.
    Region eroded(double margin) const;

    /// Image under a linear map (vertices transformed, orientation fixed up).
    Region mapped(const Mat2& m) const;

    /// Intersection with a translate of itself; used for increment domains.
    Region intersect_shifted(Vec2 shift) const;

    /// Parameter range {s : base + s*dir inside the region}, or nullopt when
    /// the line misses the region. Finite regions only.
    std::optional<std::pair<double, double>> clip_line(Vec2 base, Vec2 dir) const;

    /// Segment of the line { p : dot(n, p) = t } inside the region,
    /// parameterized as p = t*n/|n|^2 + s * perp(n)/|n|. Returns the s range
    /// or nullopt when the line misses the region. Finite regions only.
    std::optional<std::pair<double, double>> chord(Vec2 n, double t) const;

    /// Bounding box of a finite region.
    Rect bbox() const;

    const std::vector<Vec2>& vertices() const { return verts_; }

private:
    struct Face { Vec2 n; double c; }; // n·p <= c, |n| = 1

    void rebuild_faces();
    static Region from_faces(std::vector<Face> faces);

    bool whole_ = false;
    std::vector<Vec2> verts_;
    std::vector<Face> faces_;
};

} // namespace ridge
