#include "ridge/pde.hpp"

#include <cmath>
#include <sstream>

#include "ridge/errors.hpp"
#include "ridge/parallel.hpp"

namespace ridge {

namespace {

SampledProfile profile_derivative(const SampledProfile& p) {
    const std::size_t n = p.values.size();
    if (n < 3)
        raise(ErrorKind::InputFormat, "profile too short to differentiate");
    SampledProfile d = p;
    const double inv2h = 1.0 / (2.0 * p.step);
    d.values[0] = (-3.0 * p.values[0] + 4.0 * p.values[1] - p.values[2]) * inv2h;
    for (std::size_t k = 1; k + 1 < n; ++k)
        d.values[k] = (p.values[k + 1] - p.values[k - 1]) * inv2h;
    d.values[n - 1] =
        (3.0 * p.values[n - 1] - 4.0 * p.values[n - 2] + p.values[n - 3]) * inv2h;
    return d;
}

} // namespace

PlaneWaveOperator make_operator(std::vector<PlaneWaveOperator::Factor> factors,
                                double tol_indep) {
    if (factors.empty())
        raise(ErrorKind::InputFormat, "operator needs at least one factor");
    std::vector<Direction> as_dirs;
    as_dirs.reserve(factors.size());
    for (const auto& f : factors)
        as_dirs.push_back({f.alpha, f.beta});
    validate_directions(std::move(as_dirs), tol_indep); // nonzero + independence
    return PlaneWaveOperator{std::move(factors)};
}

DirectionSet wave_directions(const PlaneWaveOperator& op) {
    std::vector<Direction> dirs;
    dirs.reserve(op.factors.size());
    for (const auto& f : op.factors)
        dirs.push_back({f.beta, -f.alpha});
    return validate_directions(std::move(dirs));
}

BivariateFunction plane_wave_solution(const PlaneWaveOperator& op,
                                      const std::vector<Expr>& profiles) {
    if (profiles.size() != op.factors.size())
        raise(ErrorKind::InputFormat,
              "profile count " + std::to_string(profiles.size()) +
                  " does not match factor count " + std::to_string(op.factors.size()));
    Expr sum;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& f = op.factors[i];
        char buf[96];
        std::snprintf(buf, sizeof(buf), "(%.17g)*x + (%.17g)*y", f.beta, -f.alpha);
        const std::pair<std::string, Expr> subs[1] = {
            {"t", Expr::parse(buf, {"x", "y"})}};
        Expr term = profiles[i].substitute(subs, {"x", "y"});
        sum = sum.empty() ? term : Expr::linear_combination(1.0, sum, 1.0, term);
    }
    return BivariateFunction::from_expression(std::move(sum));
}

BivariateFunction apply_operator(const PlaneWaveOperator& op,
                                 const BivariateFunction& u, DerivMethod method) {
    const std::size_t r = op.order();

    if (u.is_ridge_sum()) {
        // Each factor sends phi(a x + b y) to (alpha a + beta b) phi'; a zero
        // coefficient annihilates the term outright, which is the whole
        // point of plane-wave sums.
        const auto& dirs = u.ridge_dirs();
        const auto& profiles = u.ridge_profiles();
        std::vector<Direction> keep_dirs;
        std::vector<SampledProfile> keep_profiles;
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            double coeff = 1.0;
            bool annihilated = false;
            for (const auto& f : op.factors) {
                const double c = f.alpha * dirs[i].a + f.beta * dirs[i].b;
                const double scale = std::hypot(f.alpha, f.beta) *
                                     std::hypot(dirs[i].a, dirs[i].b);
                if (std::abs(c) <= 1e-14 * scale) {
                    annihilated = true;
                    break;
                }
                coeff *= c;
            }
            if (annihilated)
                continue;
            SampledProfile d = profiles[i];
            for (std::size_t k = 0; k < r; ++k)
                d = profile_derivative(d);
            for (double& v : d.values)
                v *= coeff;
            keep_dirs.push_back(dirs[i]);
            keep_profiles.push_back(std::move(d));
        }
        if (keep_dirs.empty())
            return BivariateFunction::from_callable([](Vec2) { return 0.0; },
                                                    u.region(), kSmoothHint);
        return BivariateFunction::from_ridge_sum(std::move(keep_dirs),
                                                 std::move(keep_profiles), u.region(),
                                                 0);
    }

    if (method == DerivMethod::Symbolic) {
        if (!u.has_expression())
            raise(ErrorKind::InputFormat,
                  "symbolic operator application requires an expression-backed "
                  "function");
        Expr g = u.expression();
        for (const auto& f : op.factors)
            g = Expr::linear_combination(f.alpha, g.diff("x"), f.beta, g.diff("y"))
                    .simplified();
        return BivariateFunction::from_expression(std::move(g));
    }

    if (u.smoothness_hint() < static_cast<int>(r))
        raise(ErrorKind::Smoothness,
              "operator order " + std::to_string(r) + " exceeds smoothness hint " +
                  std::to_string(u.smoothness_hint()));
    std::vector<Vec2> units;
    double scale = 1.0;
    for (const auto& f : op.factors) {
        const double len = std::hypot(f.alpha, f.beta);
        units.push_back({f.alpha / len, f.beta / len});
        scale *= len;
    }
    BivariateFunction d = mixed_directional_derivative(u, std::move(units),
                                                       DerivMethod::Numeric);
    if (scale == 1.0)
        return d;
    return BivariateFunction::from_callable(
        [d, scale](Vec2 p) { return scale * d.eval(p); }, d.region(),
        d.smoothness_hint());
}

SolutionReport verify_solution(const PlaneWaveOperator& op, const BivariateFunction& u,
                               Rect domain, int grid_n, double tol,
                               DerivMethod method) {
    if (grid_n < 2)
        raise(ErrorKind::InputFormat, "verification grid needs at least 2 nodes");
    BivariateFunction residual = apply_operator(op, u, method);

    const std::size_t n = static_cast<std::size_t>(grid_n);
    const double hx = domain.width() / static_cast<double>(grid_n - 1);
    const double hy = domain.height() / static_cast<double>(grid_n - 1);
    std::vector<double> max_res(n, 0.0), max_u(n, 0.0);
    parallel_for(n, [&](std::size_t jb, std::size_t je) {
        for (std::size_t j = jb; j < je; ++j) {
            const double y = domain.y0 + hy * static_cast<double>(j);
            double mr = 0.0, mu = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2 p{domain.x0 + hx * static_cast<double>(i), y};
                try {
                    mr = std::max(mr, std::abs(residual.eval(p)));
                    mu = std::max(mu, std::abs(u.eval(p)));
                } catch (const Error&) {
                    // boundary stencil sliver on numeric paths
                }
            }
            max_res[j] = mr;
            max_u[j] = mu;
        }
    });
    SolutionReport rep;
    for (std::size_t j = 0; j < n; ++j) {
        rep.max_residual = std::max(rep.max_residual, max_res[j]);
        rep.max_abs_u = std::max(rep.max_abs_u, max_u[j]);
    }
    rep.tolerance = tol * (1.0 + rep.max_abs_u);
    rep.pass = rep.max_residual <= rep.tolerance;
    return rep;
}

CorollaryReport corollary_check(const PlaneWaveOperator& op, const BivariateFunction& u,
                                Rect domain, int grid_n, double tol,
                                const DecomposeOptions& opts) {
    CorollaryReport rep;
    rep.smoothness_warning = u.smoothness_hint() < static_cast<int>(op.order());

    DirectionSet dirs = wave_directions(op);
    DecomposeOptions dopts = opts;
    dopts.grid_n = std::max(dopts.grid_n, grid_n);
    Decomposition dec;
    try {
        dec = decompose(u, dirs, domain, dopts);
    } catch (const Error& e) {
        rep.decomposition_ok = false;
        rep.diagnostic = e.what();
        return rep;
    }
    rep.decomposition_ok = true;

    BivariateFunction rebuilt = BivariateFunction::from_ridge_sum(
        dec.directions.dirs, dec.profiles, Region::rect(domain),
        static_cast<int>(op.order()));
    rep.pde = verify_solution(op, rebuilt, domain, grid_n, tol);
    rep.dec = std::move(dec);
    return rep;
}

} // namespace ridge
