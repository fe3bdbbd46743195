#include <cmath>
#include <cstddef>

#include "ridge/kernels.hpp"

// Reference kernels. The AVX2 variants mirror these operation-for-operation;
// any change here must be reflected there to keep the backends bit-identical.

namespace ridge::kernels {
namespace {

void ridge_args_scalar(const double* xs, const double* ys, std::size_t n,
                       double a, double b, double* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a * xs[i] + b * ys[i];
}

double max_abs_scalar(const double* v, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        m = std::max(m, std::fabs(v[i]));
    return m;
}

double max_abs_diff_scalar(const double* u, const double* v, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        m = std::max(m, std::fabs(u[i] - v[i]));
    return m;
}

void lerp_uniform_scalar(const double* vals, std::size_t nvals, double t0,
                         double step, const double* ts, std::size_t n,
                         double* out) {
    const double inv_step = 1.0 / step;
    const double kmax = static_cast<double>(nvals - 2);
    for (std::size_t i = 0; i < n; ++i) {
        double u = (ts[i] - t0) * inv_step;
        double kd = std::floor(u);
        kd = std::min(std::max(kd, 0.0), kmax);
        const std::size_t k = static_cast<std::size_t>(kd);
        const double tk = t0 + kd * step;
        const double frac = (ts[i] - tk) * inv_step;
        out[i] = vals[k] + (vals[k + 1] - vals[k]) * frac;
    }
}

void lagrange4_uniform_scalar(const double* vals, std::size_t nvals, double t0,
                              double step, const double* ts, std::size_t n,
                              double* out) {
    const double inv_step = 1.0 / step;
    const double bmax = static_cast<double>(nvals - 4);
    const double sixth = 1.0 / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
        double u = (ts[i] - t0) * inv_step;
        double kd = std::floor(u);
        // stencil base: one node left of the cell, clamped to the data
        double bd = kd - 1.0;
        bd = std::min(std::max(bd, 0.0), bmax);
        const std::size_t b = static_cast<std::size_t>(bd);
        const double tb = t0 + bd * step;
        const double s = (ts[i] - tb) * inv_step; // local coord, nodes at 0,1,2,3
        const double s1 = s - 1.0;
        const double s2 = s - 2.0;
        const double s3 = s - 3.0;
        const double w0 = -(s1 * s2 * s3) * sixth;
        const double w1 = (s * s2 * s3) * 0.5;
        const double w2 = -(s * s1 * s3) * 0.5;
        const double w3 = (s * s1 * s2) * sixth;
        out[i] = (vals[b] * w0 + vals[b + 1] * w1) +
                 (vals[b + 2] * w2 + vals[b + 3] * w3);
    }
}

void simpson_pair_sums_scalar(const double* f, std::size_t n, double h,
                              double* pair) {
    if (n < 3)
        return;
    const double h3 = h / 3.0;
    for (std::size_t k = 0; k + 2 < n; ++k)
        pair[k] = (f[k] + 4.0 * f[k + 1] + f[k + 2]) * h3;
}

void bilinear_uniform_scalar(const double* vals, std::size_t nx, std::size_t ny,
                             double x0, double y0, double hx, double hy,
                             const double* xs, const double* ys, std::size_t n,
                             double* out) {
    const double inv_hx = 1.0 / hx;
    const double inv_hy = 1.0 / hy;
    const double imax = static_cast<double>(nx - 2);
    const double jmax = static_cast<double>(ny - 2);
    for (std::size_t q = 0; q < n; ++q) {
        double id = std::floor((xs[q] - x0) * inv_hx);
        double jd = std::floor((ys[q] - y0) * inv_hy);
        id = std::min(std::max(id, 0.0), imax);
        jd = std::min(std::max(jd, 0.0), jmax);
        const std::size_t i = static_cast<std::size_t>(id);
        const std::size_t j = static_cast<std::size_t>(jd);
        double fx = (xs[q] - (x0 + id * hx)) * inv_hx;
        double fy = (ys[q] - (y0 + jd * hy)) * inv_hy;
        // snap to the node so stored samples reproduce exactly
        fx = fx < 1e-9 ? 0.0 : (fx > 1.0 - 1e-9 ? 1.0 : fx);
        fy = fy < 1e-9 ? 0.0 : (fy > 1.0 - 1e-9 ? 1.0 : fy);
        const double* row = vals + j * nx + i;
        const double v00 = row[0];
        const double v10 = row[1];
        const double v01 = row[nx];
        const double v11 = row[nx + 1];
        const double lo = v00 + (v10 - v00) * fx;
        const double hi = v01 + (v11 - v01) * fx;
        out[q] = lo + (hi - lo) * fy;
    }
}

} // namespace

const Ops& scalar() {
    static const Ops ops{
        "scalar",
        &ridge_args_scalar,
        &max_abs_scalar,
        &max_abs_diff_scalar,
        &lerp_uniform_scalar,
        &lagrange4_uniform_scalar,
        &simpson_pair_sums_scalar,
        &bilinear_uniform_scalar,
    };
    return ops;
}

} // namespace ridge::kernels
