#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ridge/calculus.hpp"
#include "ridge/decompose.hpp"
#include "ridge/geometry.hpp"

namespace ridge {

/// Product of first-order factors (alpha_i d/dx + beta_i d/dy); plane-wave
/// sums along the factor-derived directions solve the homogeneous equation.
struct PlaneWaveOperator {
    struct Factor {
        double alpha = 0.0;
        double beta = 0.0;
    };
    std::vector<Factor> factors;

    std::size_t order() const { return factors.size(); }
};

/// Validates nonzero, pairwise linearly independent factors.
PlaneWaveOperator make_operator(std::vector<PlaneWaveOperator::Factor> factors,
                                double tol_indep = 1e-12);

/// Ridge directions (beta_i, -alpha_i) annihilated by the factors.
DirectionSet wave_directions(const PlaneWaveOperator& op);

/// u(x, y) = sum_i v_i(beta_i x - alpha_i y) built from univariate
/// expressions over {t}; one profile per factor.
BivariateFunction plane_wave_solution(const PlaneWaveOperator& op,
                                      const std::vector<Expr>& profiles);

/// Applies the factors left to right and returns the residual function.
/// Expression backings differentiate symbolically; ridge-sum backings use
/// the factor algebra (terms annihilated by a factor drop exactly); anything
/// else goes through nested finite differences.
BivariateFunction apply_operator(const PlaneWaveOperator& op,
                                 const BivariateFunction& u, DerivMethod method);

struct SolutionReport {
    double max_residual = 0.0;
    double max_abs_u = 0.0;
    double tolerance = 0.0; // tol * (1 + max|u|)
    bool pass = false;
};

/// Max |(op u)| over an n-by-n grid, compared against tol * (1 + max|u|).
SolutionReport verify_solution(const PlaneWaveOperator& op, const BivariateFunction& u,
                               Rect domain, int grid_n, double tol,
                               DerivMethod method = DerivMethod::Symbolic);

struct CorollaryReport {
    bool decomposition_ok = false;
    std::string diagnostic;            // failure reason when not ok
    std::optional<Decomposition> dec;  // present when decomposition_ok
    SolutionReport pde;                // residual of the reconstructed sum
    bool smoothness_warning = false;   // u's hint below the operator order
};

/// Checks that a plane-wave sum with arbitrarily rough summands still solves
/// the operator equation once rebuilt smoothly: decomposes u along
/// wave_directions(op) and verifies the reconstructed sum's residual.
CorollaryReport corollary_check(const PlaneWaveOperator& op, const BivariateFunction& u,
                                Rect domain, int grid_n, double tol = 1e-8,
                                const DecomposeOptions& opts = {});

} // namespace ridge
