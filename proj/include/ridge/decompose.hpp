#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ridge/calculus.hpp"
#include "ridge/geometry.hpp"
#include "ridge/region.hpp"
#include "ridge/vec.hpp"

namespace ridge {

struct DecomposeOptions {
    int grid_n = 1025;
    DerivMethod method = DerivMethod::Symbolic;
    /// Override for the two directions mapped onto the axes; defaults to the
    /// best-conditioned pair.
    std::optional<std::pair<int, int>> axis_pair;
    /// Test knob: flip the sign of selected perpendiculars (indexed in
    /// normalized order). Reconstructions are invariant under flips.
    std::vector<bool> flip_perp;
    /// Stage gates, scaled by 1 + max|G_j| on the working grid. Exceeding a
    /// gate aborts with a representability diagnostic.
    double stage_tol_symbolic = 1e-8;
    double stage_tol_numeric = 1e-4;
    /// Profile grids are denser than the working grid: the decomposition is
    /// reconstructed through piecewise-linear profiles, whose O(step^2)
    /// error budget sets these factors.
    int profile_oversample = 8;
    int profile_oversample_small_n = 64;
    int verification_n = 101;
    /// The separation gate sweep is capped at this resolution.
    int gate_grid_cap = 129;
    /// Profile ranges extend this fraction beyond the exact ridge-argument
    /// image of the domain, as interpolation margin.
    double pad_fraction = 0.05;
    bool allow_high_order_grid = false;
};

struct StageDiagnostics {
    int stage = 0;              // 1-based, matching the cascade depth
    double residual_sup = 0.0;  // sup |G_j - stage sum| on the working grid
    double constancy_defect = 0.0;
    double max_abs_g = 0.0;
};

/// Result of the decomposition: one sampled profile per direction, in the
/// original direction order, with F ~= sum_i profiles[i](a_i x + b_i y) on
/// the domain.
struct Decomposition {
    DirectionSet directions;
    std::vector<SampledProfile> profiles;
    Rect domain;
    DerivMethod method = DerivMethod::Symbolic;
    double reconstruction_sup_error = 0.0; // absolute sup on the verification grid
    double separation_defect = 0.0;
    // metadata
    int grid_n = 0;
    std::size_t profile_grid_n = 0;
    std::array<int, 2> axis_pair{-1, -1}; // original indices; {-1,-1} for n <= 2
    Vec2 base_point{};
    double max_abs_f = 0.0;
    std::vector<StageDiagnostics> stages;
    std::optional<std::string> source_expression;
};

/// Sum of the interpolated profiles at (x, y); the point must lie in the
/// decomposition's domain and every ridge argument within its profile range.
double reconstruct(const Decomposition& dec, double x, double y);

/// Max over an nx-by-ny grid on `domain` of |F - reconstruction|, along with
/// max |F|, both needed for relative error reporting.
struct ReconstructionError {
    double sup_error = 0.0;
    double max_abs_f = 0.0;
};
ReconstructionError reconstruction_error(const Decomposition& dec,
                                         const BivariateFunction& F, Rect domain,
                                         int nx, int ny);

/// Base-pointed separation defect of G on the grid:
/// max |G(x,y) - G(x,y0) - G(x0,y) + G(x0,y0)|. Zero (to tolerance) means G
/// splits as h1(x) + h2(y); this is the pipeline's go/no-go gate.
double separation_defect(const BivariateFunction& G, Vec2 base, Rect domain,
                         int grid_n);

/// Sup over the domain grid of the n-fold iterated increment of F along the
/// unit perpendiculars of all n directions, with the given offsets. Zero is
/// necessary for F to be a ridge sum along ds.
double representability_defect(const BivariateFunction& F, const DirectionSet& ds,
                               std::vector<double> deltas, Rect domain, int grid_n);

/// Node-centered uniform t-grid request for profile extraction.
struct ProfileGridSpec {
    double t_lo = 0.0;  // exact ridge-argument range (pre padding)
    double t_hi = 0.0;
    double base_t = 0.0;
    std::size_t target_count = 0;
    double pad_fraction = 0.05;
    std::optional<double> forced_step; // lattice-aligned sampling
};

struct RidgeExtraction {
    SampledProfile profile;
    double constancy_defect = 0.0;
};

/// Samples the ridge profile of R along direction d: phi(t) = R at a point
/// of the line {d . p = t} inside the working region (the chord midpoint, or
/// a lattice node when sampling grid data). Records the ridge-constancy
/// defect max |R(p + s l) - R(p)| over probe points; a defect above
/// `defect_tolerance` (when positive) raises a representability error.
RidgeExtraction extract_ridge_profile(const BivariateFunction& R, Direction d,
                                      const ProfileGridSpec& spec,
                                      const Region& working,
                                      double defect_tolerance = -1.0);

/// Full pipeline: from F and n pairwise independent directions, smooth
/// sampled profiles with F = sum f_i(a_i x + b_i y) plus diagnostics.
/// n <= 2 uses the direct trace formulas; n >= 3 runs the normalization /
/// separation / antiderivative cascade.
Decomposition decompose(const BivariateFunction& F, const DirectionSet& ds,
                        Rect domain, const DecomposeOptions& opts = {});
Decomposition decompose(const BivariateFunction& F, const DirectionSet& ds,
                        Rect domain, int grid_n, DerivMethod method);

/// Direct formulas for one or two directions.
Decomposition decompose_small_n(const BivariateFunction& F, const DirectionSet& ds,
                                Rect domain, const DecomposeOptions& opts = {});

} // namespace ridge
