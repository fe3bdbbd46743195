#include "ridge/calculus.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <variant>

#include "ridge/errors.hpp"
#include "ridge/kernels.hpp"

namespace ridge {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_profile_range(const SampledProfile& p, double t) {
    const double slack = 1e-9 * (std::abs(p.step) + std::abs(p.t_max - p.t_min));
    if (t < p.t_min - slack || t > p.t_max + slack)
        raise(ErrorKind::OutOfRange,
              "t = " + std::to_string(t) + " outside profile range [" +
                  std::to_string(p.t_min) + ", " + std::to_string(p.t_max) + "]");
}

} // namespace

SampledProfile SampledProfile::from_grid(double t_min, double step, std::size_t count,
                                         double base_point) {
    SampledProfile p;
    p.t_min = t_min;
    p.step = step;
    p.t_max = t_min + step * static_cast<double>(count - 1);
    p.base_point = base_point;
    p.values.assign(count, 0.0);
    return p;
}

double profile_eval(const SampledProfile& p, double t) {
    if (p.values.size() < 2 || p.step <= 0.0)
        raise(ErrorKind::Internal, "profile needs at least two samples");
    check_profile_range(p, t);
    double out = 0.0;
    kernels::active().lerp_uniform(p.values.data(), p.values.size(), p.t_min, p.step,
                                   &t, 1, &out);
    return out;
}

double profile_eval_cubic(const SampledProfile& p, double t) {
    if (p.values.size() < 4)
        return profile_eval(p, t);
    check_profile_range(p, t);
    double out = 0.0;
    kernels::active().lagrange4_uniform(p.values.data(), p.values.size(), p.t_min,
                                        p.step, &t, 1, &out);
    return out;
}

void profile_eval_many(const SampledProfile& p, const double* ts, std::size_t n,
                       double* out) {
    kernels::active().lerp_uniform(p.values.data(), p.values.size(), p.t_min, p.step,
                                   ts, n, out);
}

void profile_eval_cubic_many(const SampledProfile& p, const double* ts, std::size_t n,
                             double* out) {
    if (p.values.size() < 4) {
        profile_eval_many(p, ts, n, out);
        return;
    }
    kernels::active().lagrange4_uniform(p.values.data(), p.values.size(), p.t_min,
                                        p.step, ts, n, out);
}

SampledProfile antiderivative(const SampledProfile& h, double scale) {
    if (scale == 0.0)
        raise(ErrorKind::Geometry,
              "zero antiderivative scale (degenerate direction cosine)");
    const std::size_t n = h.values.size();
    if (n < 3)
        raise(ErrorKind::InputFormat, "antiderivative needs at least 3 samples");
    if (h.step <= 0.0)
        raise(ErrorKind::InputFormat, "profile step must be positive");

    // Base point must lie on the grid for an exact anchor; profiles built by
    // the pipeline always satisfy this. Off-node bases are re-anchored after
    // integration.
    const double pos = (h.base_point - h.t_min) / h.step;
    std::size_t i0 = static_cast<std::size_t>(
        std::min(std::max(std::llround(pos), 0LL), static_cast<long long>(n - 1)));
    const bool base_on_node = std::abs(pos - static_cast<double>(i0)) < 1e-9;

    // pair[k] = Simpson integral over [t_k, t_{k+2}]
    std::vector<double> pair(n - 2, 0.0);
    kernels::active().simpson_pair_sums(h.values.data(), n, h.step, pair.data());

    SampledProfile out = h;
    std::vector<double>& H = out.values;
    H.assign(n, 0.0);

    // Upward from the base: Simpson over whole pairs, trapezoid for the
    // final odd interval.
    for (std::size_t j = i0 + 2; j < n; j += 2)
        H[j] = H[j - 2] + pair[j - 2];
    for (std::size_t j = i0 + 1; j < n; j += 2)
        H[j] = H[j - 1] + 0.5 * h.step * (h.values[j - 1] + h.values[j]);
    // Downward, mirrored.
    for (std::size_t j = i0; j >= 2; j -= 2)
        H[j - 2] = H[j] - pair[j - 2];
    if (i0 >= 1) {
        for (std::size_t j = i0; j >= 1; j -= 2) {
            H[j - 1] = H[j] - 0.5 * h.step * (h.values[j - 1] + h.values[j]);
            if (j == 1)
                break;
        }
    }

    for (double& v : H)
        v *= scale;

    if (!base_on_node) {
        const double at_base = profile_eval(out, h.base_point);
        for (double& v : H)
            v -= at_base;
    }
    return out;
}

// ---------------------------------------------------------------------------
// BivariateFunction

struct ExprBacking {
    Expr f;
    CompiledExpr tape;
};

struct RidgeSumBacking {
    std::vector<Direction> dirs;
    std::vector<SampledProfile> profiles;
};

struct AffineBacking {
    std::shared_ptr<const BivariateFunction::Impl> base;
    Mat2 A;
};

struct CallableBacking {
    std::function<double(Vec2)> fn;
};

struct BivariateFunction::Impl {
    std::variant<ExprBacking, GridSamples, RidgeSumBacking, AffineBacking, CallableBacking>
        backing;
    Region region = Region::whole_plane();
    int smoothness_hint = kSmoothHint;
    double contain_eps = 0.0; // boundary slack, set once from the region scale

    void finish_region() {
        if (region.is_whole_plane()) {
            contain_eps = 0.0;
            return;
        }
        const Rect b = region.bbox();
        const double scale = std::max({1.0, std::abs(b.x0), std::abs(b.x1),
                                       std::abs(b.y0), std::abs(b.y1)});
        contain_eps = 1e-12 * scale;
    }

    double eval(Vec2 p) const {
        if (!region.contains(p, contain_eps))
            raise(ErrorKind::OutOfDomain,
                  "evaluation point (" + std::to_string(p.x) + ", " +
                      std::to_string(p.y) + ") outside the function's domain");
        return eval_unchecked(p);
    }

    double eval_unchecked(Vec2 p) const {
        if (const auto* e = std::get_if<ExprBacking>(&backing)) {
            const double vars[2] = {p.x, p.y};
            return e->tape.eval(vars);
        }
        if (const auto* g = std::get_if<GridSamples>(&backing)) {
            double out = 0.0;
            kernels::active().bilinear_uniform(g->values.data(), g->nx, g->ny, g->x0,
                                               g->y0, g->hx, g->hy, &p.x, &p.y, 1, &out);
            return out;
        }
        if (const auto* r = std::get_if<RidgeSumBacking>(&backing)) {
            double sum = 0.0;
            for (std::size_t i = 0; i < r->dirs.size(); ++i)
                sum += profile_eval(r->profiles[i], r->dirs[i].ridge_arg(p));
            return sum;
        }
        if (const auto* a = std::get_if<AffineBacking>(&backing))
            return a->base->eval(a->A.apply(p));
        return std::get<CallableBacking>(backing).fn(p);
    }
};

BivariateFunction BivariateFunction::from_expression(Expr f, int smoothness_hint) {
    if (f.empty())
        raise(ErrorKind::InputFormat, "empty expression");
    auto impl = std::make_shared<Impl>();
    const std::string order[2] = {"x", "y"};
    ExprBacking eb{f, CompiledExpr::compile(f, order)};
    impl->backing = std::move(eb);
    impl->region = Region::whole_plane();
    impl->smoothness_hint = f.has_abs() && smoothness_hint == kSmoothHint ? 0 : smoothness_hint;
    impl->finish_region();
    return BivariateFunction(std::move(impl));
}

BivariateFunction BivariateFunction::from_expression_text(const std::string& text,
                                                          int smoothness_hint) {
    return from_expression(Expr::parse(text, {"x", "y"}), smoothness_hint);
}

BivariateFunction BivariateFunction::from_grid(GridSamples g, int smoothness_hint) {
    if (g.nx < 2 || g.ny < 2 || g.hx <= 0.0 || g.hy <= 0.0 ||
        g.values.size() != g.nx * g.ny)
        raise(ErrorKind::InputFormat, "malformed grid samples");
    auto impl = std::make_shared<Impl>();
    impl->region = Region::rect(g.rect());
    impl->backing = std::move(g);
    impl->smoothness_hint = smoothness_hint;
    impl->finish_region();
    return BivariateFunction(std::move(impl));
}

BivariateFunction BivariateFunction::from_ridge_sum(std::vector<Direction> dirs,
                                                    std::vector<SampledProfile> profiles,
                                                    Region region, int smoothness_hint) {
    if (dirs.size() != profiles.size())
        raise(ErrorKind::InputFormat, "one profile per direction required");
    auto impl = std::make_shared<Impl>();
    impl->backing = RidgeSumBacking{std::move(dirs), std::move(profiles)};
    impl->region = std::move(region);
    impl->smoothness_hint = smoothness_hint;
    impl->finish_region();
    return BivariateFunction(std::move(impl));
}

BivariateFunction BivariateFunction::from_callable(std::function<double(Vec2)> fn,
                                                   Region region, int smoothness_hint) {
    auto impl = std::make_shared<Impl>();
    impl->backing = CallableBacking{std::move(fn)};
    impl->region = std::move(region);
    impl->smoothness_hint = smoothness_hint;
    impl->finish_region();
    return BivariateFunction(std::move(impl));
}

double BivariateFunction::eval(Vec2 p) const {
    if (!impl_)
        raise(ErrorKind::Internal, "empty function");
    return impl_->eval(p);
}

const Region& BivariateFunction::region() const { return impl_->region; }
int BivariateFunction::smoothness_hint() const { return impl_->smoothness_hint; }

bool BivariateFunction::has_expression() const {
    return impl_ && std::holds_alternative<ExprBacking>(impl_->backing);
}

const Expr& BivariateFunction::expression() const {
    const auto* e = std::get_if<ExprBacking>(&impl_->backing);
    if (!e)
        raise(ErrorKind::Internal, "function has no expression backing");
    return e->f;
}

bool BivariateFunction::is_grid() const {
    return impl_ && std::holds_alternative<GridSamples>(impl_->backing);
}

const GridSamples& BivariateFunction::grid() const {
    const auto* g = std::get_if<GridSamples>(&impl_->backing);
    if (!g)
        raise(ErrorKind::Internal, "function has no grid backing");
    return *g;
}

bool BivariateFunction::is_ridge_sum() const {
    return impl_ && std::holds_alternative<RidgeSumBacking>(impl_->backing);
}

const std::vector<Direction>& BivariateFunction::ridge_dirs() const {
    return std::get<RidgeSumBacking>(impl_->backing).dirs;
}

const std::vector<SampledProfile>& BivariateFunction::ridge_profiles() const {
    return std::get<RidgeSumBacking>(impl_->backing).profiles;
}

BivariateFunction BivariateFunction::pullback(const Mat2& A) const {
    if (has_expression()) {
        const Expr& f = expression();
        // x -> A.a x + A.b y, y -> A.c x + A.d y
        auto lin = [](double cx, double cy) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "(%.17g)*x + (%.17g)*y", cx, cy);
            return Expr::parse(buf, {"x", "y"});
        };
        const std::pair<std::string, Expr> subs[2] = {
            {"x", lin(A.a, A.b)},
            {"y", lin(A.c, A.d)},
        };
        return from_expression(f.substitute(subs, {"x", "y"}), smoothness_hint());
    }
    auto impl = std::make_shared<Impl>();
    impl->backing = AffineBacking{impl_, A};
    impl->region = impl_->region.mapped(A.inverse());
    impl->smoothness_hint = impl_->smoothness_hint;
    impl->finish_region();
    return BivariateFunction(std::move(impl));
}

// ---------------------------------------------------------------------------

BivariateFunction increment(const BivariateFunction& f, Vec2 l, double delta) {
    const Vec2 shift = l * delta;
    Region reg = f.region().intersect_shifted(shift);
    if (!f.region().is_whole_plane() && reg.empty())
        raise(ErrorKind::OutOfDomain, "increment offset exceeds the function's domain");
    BivariateFunction base = f;
    return BivariateFunction::from_callable(
        [base, shift](Vec2 p) { return base.eval(p + shift) - base.eval(p); },
        std::move(reg), std::max(0, f.smoothness_hint()));
}

double numeric_derivative_step(const BivariateFunction& f, std::size_t order,
                               const DerivativeOptions& opts) {
    double scale = 2.0;
    if (opts.scale) {
        scale = *opts.scale;
    } else if (!f.region().is_whole_plane()) {
        const Rect b = f.region().bbox();
        scale = std::max(b.width(), b.height());
    }
    // Truncation/roundoff balance: eps^(1/(m+2)) of the length scale, taken
    // as the half-extent. Grid backings carry interpolation error
    // ~ (h/scale)^2/8 instead of eps, so the floor rises accordingly.
    double noise = kEps;
    if (f.is_grid()) {
        const GridSamples& g = f.grid();
        const double hrel = std::max(g.hx, g.hy) / scale;
        noise = std::max(noise, hrel * hrel / 8.0);
    }
    const double expo = 1.0 / static_cast<double>(order + 2);
    return std::pow(noise, expo) * (0.5 * scale);
}

BivariateFunction mixed_directional_derivative(const BivariateFunction& f,
                                               std::vector<Vec2> dirs,
                                               DerivMethod method,
                                               const DerivativeOptions& opts) {
    if (dirs.empty())
        return f;

    if (method == DerivMethod::Symbolic) {
        if (!f.has_expression())
            raise(ErrorKind::InputFormat,
                  "symbolic differentiation requires an expression-backed function");
        Expr g = f.expression();
        for (const Vec2& l : dirs) {
            // l . grad = l_x d/dx + l_y d/dy
            g = Expr::linear_combination(l.x, g.diff("x"), l.y, g.diff("y")).simplified();
        }
        const int hint = f.smoothness_hint() >= kSmoothHint
                             ? kSmoothHint
                             : std::max(0, f.smoothness_hint() - static_cast<int>(dirs.size()));
        return BivariateFunction::from_expression(std::move(g), hint);
    }

    const std::size_t m = dirs.size();
    if (f.smoothness_hint() < static_cast<int>(m))
        raise(ErrorKind::Smoothness,
              "derivative order " + std::to_string(m) +
                  " exceeds smoothness hint " + std::to_string(f.smoothness_hint()));
    if (f.is_grid() && m > 2 && !opts.allow_high_order_grid)
        raise(ErrorKind::Smoothness,
              "numeric derivatives of bilinear grid data are limited to order 2 "
              "(pass allow_high_order_grid to override)");

    const double eta = opts.step_override ? *opts.step_override
                                          : numeric_derivative_step(f, m, opts);

    // Nested directional differences, all levels sharing the step eta.
    // Each level prefers the centered 2-point rule and falls back to the
    // one-sided 3-point rules (still O(eta^2)) when the centered stencil
    // would leave the region, so restrictions can be sampled up to the
    // boundary. Feasibility at level i must leave room for the deeper
    // levels, which shift by at most 2*eta each.
    struct Ctx {
        BivariateFunction base;
        std::vector<Vec2> dirs;
        double eta;
        std::vector<Region> room; // region eroded by the deeper levels' span
    };
    auto ctx = std::make_shared<Ctx>();
    ctx->base = f;
    ctx->dirs = std::move(dirs);
    ctx->eta = eta;
    ctx->room.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double below = 2.0 * eta * static_cast<double>(m - 1 - i);
        ctx->room.push_back(f.region().eroded(below));
    }

    struct Evaluator {
        static double level(const Ctx& c, std::size_t i, Vec2 p) {
            if (i == c.dirs.size())
                return c.base.eval(p);
            const Vec2 l = c.dirs[i];
            const Vec2 step = l * c.eta;
            const Region& ok = c.room[i];
            const double slack = 1e-12 * (1.0 + std::abs(p.x) + std::abs(p.y));
            const double inv2 = 1.0 / (2.0 * c.eta);
            if (ok.contains(p - step, slack) && ok.contains(p + step, slack)) {
                return (level(c, i + 1, p + step) - level(c, i + 1, p - step)) * inv2;
            }
            const Vec2 step2 = l * (2.0 * c.eta);
            if (ok.contains(p, slack) && ok.contains(p + step2, slack)) {
                return (-3.0 * level(c, i + 1, p) + 4.0 * level(c, i + 1, p + step) -
                        level(c, i + 1, p + step2)) * inv2;
            }
            if (ok.contains(p, slack) && ok.contains(p - step2, slack)) {
                return (3.0 * level(c, i + 1, p) - 4.0 * level(c, i + 1, p - step) +
                        level(c, i + 1, p - step2)) * inv2;
            }
            raise(ErrorKind::OutOfDomain,
                  "no finite-difference stencil fits at (" + std::to_string(p.x) +
                      ", " + std::to_string(p.y) + ")");
        }
    };

    auto fn = [ctx](Vec2 p) { return Evaluator::level(*ctx, 0, p); };
    const int hint = std::max(0, f.smoothness_hint() - static_cast<int>(m));
    return BivariateFunction::from_callable(std::move(fn), f.region(), hint);
}

} // namespace ridge
