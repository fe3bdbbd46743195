#pragma once

#include <cmath>

#include "ridge/errors.hpp"

namespace ridge {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
};

inline double dot(Vec2 u, Vec2 v) { return u.x * v.x + u.y * v.y; }
inline double cross(Vec2 u, Vec2 v) { return u.x * v.y - u.y * v.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// 2x2 matrix in row-major order: [[a, b], [c, d]].
struct Mat2 {
    double a = 1.0, b = 0.0;
    double c = 0.0, d = 1.0;

    static Mat2 identity() { return {}; }

    double det() const { return a * d - b * c; }

    Vec2 apply(Vec2 p) const { return {a * p.x + b * p.y, c * p.x + d * p.y}; }

    /// Row-vector product r * M, used to re-express ridge directions.
    Vec2 apply_left(Vec2 r) const { return {r.x * a + r.y * c, r.x * b + r.y * d}; }

    Mat2 inverse() const {
        const double dt = det();
        if (dt == 0.0)
            raise(ErrorKind::Geometry, "singular 2x2 matrix");
        return {d / dt, -b / dt, -c / dt, a / dt};
    }

    bool is_identity(double tol = 0.0) const {
        return std::abs(a - 1.0) <= tol && std::abs(b) <= tol &&
               std::abs(c) <= tol && std::abs(d - 1.0) <= tol;
    }
};

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
    bool degenerate() const { return !(x0 < x1) || !(y0 < y1); }

    bool contains(Vec2 p, double eps = 0.0) const {
        return p.x >= x0 - eps && p.x <= x1 + eps && p.y >= y0 - eps && p.y <= y1 + eps;
    }
};

} // namespace ridge
