#pragma once

#include <cstddef>

namespace ridge::kernels {

// Data-parallel inner loops used by the profile and grid sweeps. Every entry
// has a scalar reference implementation and, on x86-64 with AVX2, a vector
// implementation selected at runtime. The two are required to produce
// bit-identical results (no FMA contraction, identical operation order per
// element); the test suite asserts this.
struct Ops {
    const char* name;

    /// out[i] = a*xs[i] + b*ys[i]
    void (*ridge_args)(const double* xs, const double* ys, std::size_t n,
                       double a, double b, double* out);

    /// max_i |v[i]|  (0 for n == 0)
    double (*max_abs)(const double* v, std::size_t n);

    /// max_i |u[i] - v[i]|
    double (*max_abs_diff)(const double* u, const double* v, std::size_t n);

    /// Piecewise-linear interpolation on the uniform grid
    /// t_k = t0 + k*step, k = 0..nvals-1. Queries are clamped to the last
    /// cell; range policing is the caller's job.
    void (*lerp_uniform)(const double* vals, std::size_t nvals, double t0,
                         double step, const double* ts, std::size_t n,
                         double* out);

    /// 4-point (cubic Lagrange) interpolation on the same uniform grid,
    /// stencil clamped at the ends. Needs nvals >= 4.
    void (*lagrange4_uniform)(const double* vals, std::size_t nvals, double t0,
                              double step, const double* ts, std::size_t n,
                              double* out);

    /// pair[k] = (h/3) * (f[k] + 4 f[k+1] + f[k+2]) for k = 0..n-3:
    /// the Simpson integral over [t_k, t_{k+2}].
    void (*simpson_pair_sums)(const double* f, std::size_t n, double h,
                              double* pair);

    /// Bilinear interpolation on a uniform row-major grid
    /// (vals[j*nx+i] at (x0+i*hx, y0+j*hy)), clamped to the boundary cells.
    void (*bilinear_uniform)(const double* vals, std::size_t nx, std::size_t ny,
                             double x0, double y0, double hx, double hy,
                             const double* xs, const double* ys, std::size_t n,
                             double* out);
};

/// Scalar reference kernels; always available.
const Ops& scalar();

/// AVX2 kernels, or nullptr when unsupported (build target or CPU).
const Ops* avx2();

/// Runtime-selected backend. Honors RIDGE_KERNELS=scalar|avx2 (the latter
/// falls back to scalar with a stderr note when AVX2 is unavailable).
const Ops& active();

} // namespace ridge::kernels
