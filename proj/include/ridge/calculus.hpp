#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ridge/expr.hpp"
#include "ridge/geometry.hpp"
#include "ridge/region.hpp"
#include "ridge/vec.hpp"

namespace ridge {

/// Smoothness hint standing in for "infinitely differentiable".
inline constexpr int kSmoothHint = 1 << 20;

enum class DerivMethod { Symbolic, Numeric };

/// Uniform samples of a bivariate function: vals[j*nx + i] at
/// (x0 + i*hx, y0 + j*hy).
struct GridSamples {
    std::size_t nx = 0, ny = 0;
    double x0 = 0.0, y0 = 0.0;
    double hx = 0.0, hy = 0.0;
    std::vector<double> values;

    Rect rect() const {
        return {x0, x0 + hx * static_cast<double>(nx - 1),
                y0, y0 + hy * static_cast<double>(ny - 1)};
    }
};

/// A univariate component sampled on a uniform t-grid. The base point is the
/// anchor where antiderivative chains vanish; it always sits on a node for
/// profiles built by this library.
struct SampledProfile {
    double t_min = 0.0;
    double t_max = 0.0;
    double step = 0.0;
    double base_point = 0.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double node(std::size_t m) const { return t_min + static_cast<double>(m) * step; }

    static SampledProfile from_grid(double t_min, double step, std::size_t count,
                                    double base_point);
};

/// Linear interpolation between the bracketing samples; exact at nodes.
/// Out-of-range t raises OutOfRange.
double profile_eval(const SampledProfile& p, double t);

/// 4-point interpolation used internally by the decomposition cascade, where
/// the O(step^2) error of the linear rule would contaminate extracted
/// profiles. Same range contract as profile_eval.
double profile_eval_cubic(const SampledProfile& p, double t);

/// Batch versions routed through the kernel backend (clamped, no range
/// checks; callers police ranges).
void profile_eval_many(const SampledProfile& p, const double* ts, std::size_t n,
                       double* out);
void profile_eval_cubic_many(const SampledProfile& p, const double* ts, std::size_t n,
                             double* out);

/// Base-pointed scaled antiderivative: returns H on the same grid with
/// H(base_point) = 0 and H' = scale * h in the quadrature sense. Cumulative
/// composite Simpson outward from the base point in both directions, with a
/// trapezoid fallback for the final odd interval. scale = 0 signals a
/// degenerate direction cosine and is an error.
SampledProfile antiderivative(const SampledProfile& h, double scale);

/// Evaluable bivariate function. Immutable; cheap to copy (shared backing).
class BivariateFunction {
public:
    BivariateFunction() = default;

    /// Expression over variables {x, y}; evaluable on the whole plane up to
    /// domain errors of the expression itself.
    static BivariateFunction from_expression(Expr f, int smoothness_hint = kSmoothHint);
    static BivariateFunction from_expression_text(const std::string& text,
                                                  int smoothness_hint = kSmoothHint);

    /// Grid samples with bilinear interpolation; evaluable on the sample
    /// rectangle only.
    static BivariateFunction from_grid(GridSamples g, int smoothness_hint = 2);

    /// Sum of ridge profiles: F(p) = sum_i profiles[i](dirs[i] . p).
    static BivariateFunction from_ridge_sum(std::vector<Direction> dirs,
                                            std::vector<SampledProfile> profiles,
                                            Region region, int smoothness_hint = 1);

    /// Arbitrary callable over a region (increments, residuals).
    static BivariateFunction from_callable(std::function<double(Vec2)> fn, Region region,
                                           int smoothness_hint);

    double operator()(double x, double y) const { return eval({x, y}); }
    double eval(Vec2 p) const;

    const Region& region() const;
    int smoothness_hint() const;

    bool has_expression() const;
    const Expr& expression() const;

    bool is_grid() const;
    const GridSamples& grid() const;

    bool is_ridge_sum() const;
    const std::vector<Direction>& ridge_dirs() const;
    const std::vector<SampledProfile>& ridge_profiles() const;

    /// View of this function through a linear change of coordinates:
    /// result(p) = this(A p). Expression backings substitute symbolically so
    /// the result stays differentiable; other backings wrap.
    BivariateFunction pullback(const Mat2& A) const;

    struct Impl;

private:
    explicit BivariateFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

/// Increment of f along direction l with offset delta:
/// (x, y) -> f(p + delta*l) - f(p). The region shrinks accordingly.
BivariateFunction increment(const BivariateFunction& f, Vec2 l, double delta);

struct DerivativeOptions {
    /// Length scale for finite-difference steps; defaults to the extent of
    /// the function's region (2 when unbounded).
    std::optional<double> scale;
    /// Explicit finite-difference step (overrides the formula); used to snap
    /// stencils onto sample lattices.
    std::optional<double> step_override;
    /// Accept numeric differentiation of grid-backed data above order 2.
    bool allow_high_order_grid = false;
};

/// Mixed directional derivative along the listed unit vectors. Symbolic
/// needs expression backing; numeric uses nested central differences with a
/// per-order step of eps^(1/(m+2)) times the length scale (grid backings get
/// a coarser interpolation-noise floor). Near the boundary of a finite
/// region the stencil degrades gracefully to one-sided second-order
/// differences, so the derivative stays evaluable on the whole region except
/// where no stencil fits at all (corner slivers).
BivariateFunction mixed_directional_derivative(const BivariateFunction& f,
                                               std::vector<Vec2> dirs,
                                               DerivMethod method,
                                               const DerivativeOptions& opts = {});

/// Finite-difference step used by the numeric path, exposed so callers can
/// erode evaluation regions consistently.
double numeric_derivative_step(const BivariateFunction& f, std::size_t order,
                               const DerivativeOptions& opts = {});

} // namespace ridge
