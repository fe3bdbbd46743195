#include "ridge/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ridge {

namespace {

// Intersection of the boundary lines of two faces (n·p = c each).
std::optional<Vec2> line_intersection(Vec2 n1, double c1, Vec2 n2, double c2) {
    const double det = cross(n1, n2);
    if (std::abs(det) < 1e-14)
        return std::nullopt;
    return Vec2{(c1 * n2.y - c2 * n1.y) / det, (n1.x * c2 - n2.x * c1) / det};
}

double polygon_signed_area(const std::vector<Vec2>& v) {
    double a = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2& p = v[i];
        const Vec2& q = v[(i + 1) % v.size()];
        a += cross(p, q);
    }
    return 0.5 * a;
}

} // namespace

Region Region::whole_plane() {
    Region r;
    r.whole_ = true;
    return r;
}

Region Region::rect(const Rect& rc) {
    const Vec2 vs[4] = {{rc.x0, rc.y0}, {rc.x1, rc.y0}, {rc.x1, rc.y1}, {rc.x0, rc.y1}};
    return polygon(vs);
}

Region Region::polygon(std::span<const Vec2> vertices) {
    Region r;
    r.verts_.assign(vertices.begin(), vertices.end());
    if (polygon_signed_area(r.verts_) < 0.0)
        std::reverse(r.verts_.begin(), r.verts_.end());
    r.rebuild_faces();
    return r;
}

void Region::rebuild_faces() {
    faces_.clear();
    const std::size_t n = verts_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 p = verts_[i];
        const Vec2 q = verts_[(i + 1) % n];
        Vec2 edge = q - p;
        const double len = norm(edge);
        if (len == 0.0)
            continue;
        // outward normal for a CCW polygon
        Vec2 nrm{edge.y / len, -edge.x / len};
        faces_.push_back({nrm, dot(nrm, p)});
    }
}

bool Region::contains(Vec2 p, double eps) const {
    if (whole_)
        return true;
    if (empty())
        return false;
    for (const Face& f : faces_)
        if (dot(f.n, p) > f.c + eps)
            return false;
    return true;
}

Region Region::from_faces(std::vector<Face> faces) {
    // Rebuild the vertex loop from consecutive face intersections; faces are
    // assumed ordered (they come from an ordered vertex loop).
    Region r;
    const std::size_t n = faces.size();
    std::vector<Vec2> verts;
    for (std::size_t i = 0; i < n; ++i) {
        const Face& f1 = faces[i];
        const Face& f2 = faces[(i + 1) % n];
        auto p = line_intersection(f1.n, f1.c, f2.n, f2.c);
        if (!p)
            continue;
        verts.push_back(*p);
    }
    // An over-eroded polygon folds through itself; detect and return empty.
    for (const Vec2& v : verts)
        for (const Face& f : faces)
            if (dot(f.n, v) > f.c + 1e-9 * (1.0 + std::abs(f.c)))
                return Region{};
    if (verts.size() < 3 || polygon_signed_area(verts) <= 0.0)
        return Region{};
    r.verts_ = std::move(verts);
    r.rebuild_faces();
    return r;
}

Region Region::eroded(double margin) const {
    if (whole_)
        return *this;
    if (empty() || margin == 0.0)
        return *this;
    std::vector<Face> faces = faces_;
    for (Face& f : faces)
        f.c -= margin;
    return from_faces(std::move(faces));
}

Region Region::mapped(const Mat2& m) const {
    if (whole_)
        return *this;
    std::vector<Vec2> verts(verts_.size());
    for (std::size_t i = 0; i < verts_.size(); ++i)
        verts[i] = m.apply(verts_[i]);
    return polygon(verts);
}

Region Region::intersect_shifted(Vec2 shift) const {
    if (whole_)
        return *this;
    // {p in R : p + shift in R} for convex R: translate each face by -shift.
    std::vector<Face> faces;
    faces.reserve(faces_.size() * 2);
    // Keep an ordered loop: merge by tightening matching normals.
    faces = faces_;
    for (const Face& f : faces_) {
        const double c_shifted = f.c - dot(f.n, shift);
        for (Face& g : faces)
            if (std::abs(g.n.x - f.n.x) < 1e-14 && std::abs(g.n.y - f.n.y) < 1e-14)
                g.c = std::min(g.c, c_shifted);
    }
    return from_faces(std::move(faces));
}

std::optional<std::pair<double, double>> Region::clip_line(Vec2 base, Vec2 dir) const {
    if (whole_ || empty())
        return std::nullopt;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const Face& f : faces_) {
        const double denom = dot(f.n, dir);
        const double rhs = f.c - dot(f.n, base);
        if (std::abs(denom) < 1e-15) {
            if (rhs < 0.0)
                return std::nullopt;
            continue;
        }
        const double s = rhs / denom;
        if (denom > 0.0)
            hi = std::min(hi, s);
        else
            lo = std::max(lo, s);
    }
    if (!(lo <= hi))
        return std::nullopt;
    return std::make_pair(lo, hi);
}

std::optional<std::pair<double, double>> Region::chord(Vec2 n, double t) const {
    const double nn = dot(n, n);
    const Vec2 base{t * n.x / nn, t * n.y / nn};
    const double nl = norm(n);
    const Vec2 dir{-n.y / nl, n.x / nl}; // unit vector along the line
    return clip_line(base, dir);
}

Rect Region::bbox() const {
    Rect r;
    if (whole_ || empty())
        return r;
    r.x0 = r.x1 = verts_[0].x;
    r.y0 = r.y1 = verts_[0].y;
    for (const Vec2& v : verts_) {
        r.x0 = std::min(r.x0, v.x);
        r.x1 = std::max(r.x1, v.x);
        r.y0 = std::min(r.y0, v.y);
        r.y1 = std::max(r.y1, v.y);
    }
    return r;
}

} // namespace ridge
