// AVX2 variants of the scalar reference kernels. Compiled only on x86-64
// with -mavx2; selected at runtime (see kernels.cpp). Deliberately no FMA:
// each lane performs the same rounding steps as the scalar code so the two
// backends agree bit-for-bit. Tails run the scalar formulas.

#include "ridge/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace ridge::kernels {
namespace {

inline __m256d abs_pd(__m256d v) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    return _mm256_and_pd(v, mask);
}

inline double hmax_pd(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d m = _mm_max_pd(lo, hi);
    __m128d s = _mm_unpackhi_pd(m, m);
    m = _mm_max_sd(m, s);
    return _mm_cvtsd_f64(m);
}

void ridge_args_avx2(const double* xs, const double* ys, std::size_t n,
                     double a, double b, double* out) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_loadu_pd(xs + i);
        __m256d y = _mm256_loadu_pd(ys + i);
        __m256d r = _mm256_add_pd(_mm256_mul_pd(va, x), _mm256_mul_pd(vb, y));
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i)
        out[i] = a * xs[i] + b * ys[i];
}

double max_abs_avx2(const double* v, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_max_pd(acc, abs_pd(_mm256_loadu_pd(v + i)));
    double m = hmax_pd(acc);
    for (; i < n; ++i)
        m = std::max(m, std::fabs(v[i]));
    return m;
}

double max_abs_diff_avx2(const double* u, const double* v, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(u + i), _mm256_loadu_pd(v + i));
        acc = _mm256_max_pd(acc, abs_pd(d));
    }
    double m = hmax_pd(acc);
    for (; i < n; ++i)
        m = std::max(m, std::fabs(u[i] - v[i]));
    return m;
}

void lerp_uniform_avx2(const double* vals, std::size_t nvals, double t0,
                       double step, const double* ts, std::size_t n,
                       double* out) {
    const double inv_step = 1.0 / step;
    const double kmax = static_cast<double>(nvals - 2);
    const __m256d vt0 = _mm256_set1_pd(t0);
    const __m256d vinv = _mm256_set1_pd(inv_step);
    const __m256d vstep = _mm256_set1_pd(step);
    const __m256d vzero = _mm256_setzero_pd();
    const __m256d vkmax = _mm256_set1_pd(kmax);
    std::size_t i = 0;
    alignas(32) double kd_arr[4];
    alignas(32) double v0_arr[4];
    alignas(32) double v1_arr[4];
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_loadu_pd(ts + i);
        __m256d u = _mm256_mul_pd(_mm256_sub_pd(t, vt0), vinv);
        __m256d kd = _mm256_floor_pd(u);
        kd = _mm256_min_pd(_mm256_max_pd(kd, vzero), vkmax);
        _mm256_store_pd(kd_arr, kd);
        for (int lane = 0; lane < 4; ++lane) {
            const std::size_t k = static_cast<std::size_t>(kd_arr[lane]);
            v0_arr[lane] = vals[k];
            v1_arr[lane] = vals[k + 1];
        }
        __m256d tk = _mm256_add_pd(vt0, _mm256_mul_pd(kd, vstep));
        __m256d frac = _mm256_mul_pd(_mm256_sub_pd(t, tk), vinv);
        __m256d v0 = _mm256_load_pd(v0_arr);
        __m256d v1 = _mm256_load_pd(v1_arr);
        __m256d r = _mm256_add_pd(v0, _mm256_mul_pd(_mm256_sub_pd(v1, v0), frac));
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) {
        double u = (ts[i] - t0) * inv_step;
        double kd = std::floor(u);
        kd = std::min(std::max(kd, 0.0), kmax);
        const std::size_t k = static_cast<std::size_t>(kd);
        const double tk = t0 + kd * step;
        const double frac = (ts[i] - tk) * inv_step;
        out[i] = vals[k] + (vals[k + 1] - vals[k]) * frac;
    }
}

void lagrange4_uniform_avx2(const double* vals, std::size_t nvals, double t0,
                            double step, const double* ts, std::size_t n,
                            double* out) {
    const double inv_step = 1.0 / step;
    const double bmax = static_cast<double>(nvals - 4);
    const double sixth = 1.0 / 6.0;
    const __m256d vt0 = _mm256_set1_pd(t0);
    const __m256d vinv = _mm256_set1_pd(inv_step);
    const __m256d vstep = _mm256_set1_pd(step);
    const __m256d vzero = _mm256_setzero_pd();
    const __m256d vbmax = _mm256_set1_pd(bmax);
    const __m256d vone = _mm256_set1_pd(1.0);
    const __m256d vtwo = _mm256_set1_pd(2.0);
    const __m256d vthree = _mm256_set1_pd(3.0);
    const __m256d vsixth = _mm256_set1_pd(sixth);
    const __m256d vhalf = _mm256_set1_pd(0.5);
    const __m256d vneg = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    alignas(32) double bd_arr[4];
    alignas(32) double g0[4], g1[4], g2[4], g3[4];
    for (; i + 4 <= n; i += 4) {
        __m256d t = _mm256_loadu_pd(ts + i);
        __m256d u = _mm256_mul_pd(_mm256_sub_pd(t, vt0), vinv);
        __m256d kd = _mm256_floor_pd(u);
        __m256d bd = _mm256_sub_pd(kd, vone);
        bd = _mm256_min_pd(_mm256_max_pd(bd, vzero), vbmax);
        _mm256_store_pd(bd_arr, bd);
        for (int lane = 0; lane < 4; ++lane) {
            const std::size_t b = static_cast<std::size_t>(bd_arr[lane]);
            g0[lane] = vals[b];
            g1[lane] = vals[b + 1];
            g2[lane] = vals[b + 2];
            g3[lane] = vals[b + 3];
        }
        __m256d tb = _mm256_add_pd(vt0, _mm256_mul_pd(bd, vstep));
        __m256d s = _mm256_mul_pd(_mm256_sub_pd(t, tb), vinv);
        __m256d s1 = _mm256_sub_pd(s, vone);
        __m256d s2 = _mm256_sub_pd(s, vtwo);
        __m256d s3 = _mm256_sub_pd(s, vthree);
        __m256d w0 = _mm256_xor_pd(_mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(s1, s2), s3), vsixth), vneg);
        __m256d w1 = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(s, s2), s3), vhalf);
        __m256d w2 = _mm256_xor_pd(_mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(s, s1), s3), vhalf), vneg);
        __m256d w3 = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(s, s1), s2), vsixth);
        __m256d lhs = _mm256_add_pd(_mm256_mul_pd(_mm256_load_pd(g0), w0),
                                    _mm256_mul_pd(_mm256_load_pd(g1), w1));
        __m256d rhs = _mm256_add_pd(_mm256_mul_pd(_mm256_load_pd(g2), w2),
                                    _mm256_mul_pd(_mm256_load_pd(g3), w3));
        _mm256_storeu_pd(out + i, _mm256_add_pd(lhs, rhs));
    }
    for (; i < n; ++i) {
        double u = (ts[i] - t0) * inv_step;
        double kd = std::floor(u);
        double bd = kd - 1.0;
        bd = std::min(std::max(bd, 0.0), bmax);
        const std::size_t b = static_cast<std::size_t>(bd);
        const double tb = t0 + bd * step;
        const double s = (ts[i] - tb) * inv_step;
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

void simpson_pair_sums_avx2(const double* f, std::size_t n, double h,
                            double* pair) {
    if (n < 3)
        return;
    const double h3 = h / 3.0;
    const __m256d vh3 = _mm256_set1_pd(h3);
    const __m256d vfour = _mm256_set1_pd(4.0);
    const std::size_t m = n - 2; // number of pair sums
    std::size_t k = 0;
    for (; k + 4 <= m; k += 4) {
        __m256d f0 = _mm256_loadu_pd(f + k);
        __m256d f1 = _mm256_loadu_pd(f + k + 1);
        __m256d f2 = _mm256_loadu_pd(f + k + 2);
        __m256d s = _mm256_add_pd(_mm256_add_pd(f0, _mm256_mul_pd(vfour, f1)), f2);
        _mm256_storeu_pd(pair + k, _mm256_mul_pd(s, vh3));
    }
    for (; k < m; ++k)
        pair[k] = (f[k] + 4.0 * f[k + 1] + f[k + 2]) * h3;
}

void bilinear_uniform_avx2(const double* vals, std::size_t nx, std::size_t ny,
                           double x0, double y0, double hx, double hy,
                           const double* xs, const double* ys, std::size_t n,
                           double* out) {
    const double inv_hx = 1.0 / hx;
    const double inv_hy = 1.0 / hy;
    const double imax = static_cast<double>(nx - 2);
    const double jmax = static_cast<double>(ny - 2);
    const __m256d vx0 = _mm256_set1_pd(x0);
    const __m256d vy0 = _mm256_set1_pd(y0);
    const __m256d vihx = _mm256_set1_pd(inv_hx);
    const __m256d vihy = _mm256_set1_pd(inv_hy);
    const __m256d vhx = _mm256_set1_pd(hx);
    const __m256d vhy = _mm256_set1_pd(hy);
    const __m256d vzero = _mm256_setzero_pd();
    const __m256d vimax = _mm256_set1_pd(imax);
    const __m256d vjmax = _mm256_set1_pd(jmax);
    std::size_t q = 0;
    alignas(32) double id_arr[4], jd_arr[4];
    alignas(32) double a00[4], a10[4], a01[4], a11[4];
    for (; q + 4 <= n; q += 4) {
        __m256d x = _mm256_loadu_pd(xs + q);
        __m256d y = _mm256_loadu_pd(ys + q);
        __m256d id = _mm256_floor_pd(_mm256_mul_pd(_mm256_sub_pd(x, vx0), vihx));
        __m256d jd = _mm256_floor_pd(_mm256_mul_pd(_mm256_sub_pd(y, vy0), vihy));
        id = _mm256_min_pd(_mm256_max_pd(id, vzero), vimax);
        jd = _mm256_min_pd(_mm256_max_pd(jd, vzero), vjmax);
        _mm256_store_pd(id_arr, id);
        _mm256_store_pd(jd_arr, jd);
        for (int lane = 0; lane < 4; ++lane) {
            const std::size_t i = static_cast<std::size_t>(id_arr[lane]);
            const std::size_t j = static_cast<std::size_t>(jd_arr[lane]);
            const double* row = vals + j * nx + i;
            a00[lane] = row[0];
            a10[lane] = row[1];
            a01[lane] = row[nx];
            a11[lane] = row[nx + 1];
        }
        __m256d fx = _mm256_mul_pd(
            _mm256_sub_pd(x, _mm256_add_pd(vx0, _mm256_mul_pd(id, vhx))), vihx);
        __m256d fy = _mm256_mul_pd(
            _mm256_sub_pd(y, _mm256_add_pd(vy0, _mm256_mul_pd(jd, vhy))), vihy);
        const __m256d eps = _mm256_set1_pd(1e-9);
        const __m256d one_m = _mm256_set1_pd(1.0 - 1e-9);
        const __m256d vone2 = _mm256_set1_pd(1.0);
        fx = _mm256_blendv_pd(fx, _mm256_setzero_pd(), _mm256_cmp_pd(fx, eps, _CMP_LT_OQ));
        fx = _mm256_blendv_pd(fx, vone2, _mm256_cmp_pd(fx, one_m, _CMP_GT_OQ));
        fy = _mm256_blendv_pd(fy, _mm256_setzero_pd(), _mm256_cmp_pd(fy, eps, _CMP_LT_OQ));
        fy = _mm256_blendv_pd(fy, vone2, _mm256_cmp_pd(fy, one_m, _CMP_GT_OQ));
        __m256d v00 = _mm256_load_pd(a00);
        __m256d v10 = _mm256_load_pd(a10);
        __m256d v01 = _mm256_load_pd(a01);
        __m256d v11 = _mm256_load_pd(a11);
        __m256d lo = _mm256_add_pd(v00, _mm256_mul_pd(_mm256_sub_pd(v10, v00), fx));
        __m256d hi = _mm256_add_pd(v01, _mm256_mul_pd(_mm256_sub_pd(v11, v01), fx));
        __m256d r = _mm256_add_pd(lo, _mm256_mul_pd(_mm256_sub_pd(hi, lo), fy));
        _mm256_storeu_pd(out + q, r);
    }
    for (; q < n; ++q) {
        double id = std::floor((xs[q] - x0) * inv_hx);
        double jd = std::floor((ys[q] - y0) * inv_hy);
        id = std::min(std::max(id, 0.0), imax);
        jd = std::min(std::max(jd, 0.0), jmax);
        const std::size_t i = static_cast<std::size_t>(id);
        const std::size_t j = static_cast<std::size_t>(jd);
        double fx = (xs[q] - (x0 + id * hx)) * inv_hx;
        double fy = (ys[q] - (y0 + jd * hy)) * inv_hy;
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

const Ops* detail_avx2_ops() {
    static const Ops ops{
        "avx2",
        &ridge_args_avx2,
        &max_abs_avx2,
        &max_abs_diff_avx2,
        &lerp_uniform_avx2,
        &lagrange4_uniform_avx2,
        &simpson_pair_sums_avx2,
        &bilinear_uniform_avx2,
    };
    return &ops;
}

} // namespace ridge::kernels

#endif // __AVX2__
