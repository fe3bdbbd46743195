#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "ridge/calculus.hpp"

using namespace ridge;

namespace {

SampledProfile sample_function(double t_min, double step, std::size_t count,
                               double base, double (*f)(double)) {
    SampledProfile p = SampledProfile::from_grid(t_min, step, count, base);
    for (std::size_t m = 0; m < count; ++m)
        p.values[m] = f(p.node(m));
    return p;
}

double max_on_grid(const BivariateFunction& f, Rect r, int n) {
    double m = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = r.x0 + (r.x1 - r.x0) * i / (n - 1);
            const double y = r.y0 + (r.y1 - r.y0) * j / (n - 1);
            m = std::max(m, std::abs(f.eval({x, y})));
        }
    return m;
}

} // namespace

TEST_CASE("profile_eval: linear, exact at nodes, range-checked") {
    auto sq = [](double t) { return t * t; };
    SampledProfile p = sample_function(-1.0, 0.5, 5, 0.0, sq);
    CHECK(profile_eval(p, 0.5) == 0.25);   // node, exact
    CHECK(profile_eval(p, 0.25) == 0.125); // linear between 0 and 0.25
    CHECK_THROWS_AS(profile_eval(p, p.t_max + 1.0), Error);
    try {
        profile_eval(p, -5.0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OutOfRange);
    }
}

TEST_CASE("increment annihilates ridge functions along the perpendicular") {
    // f = x^2 is a ridge in direction (1,0); increments along (0,1) vanish
    auto f = BivariateFunction::from_expression_text("x^2");
    for (double delta : {0.1, 0.5, 1.0}) {
        auto inc = increment(f, {0.0, 1.0}, delta);
        CHECK(max_on_grid(inc, {-1, 1, -1, 1}, 21) <= 1e-15);
    }

    // f = x with l = (1,0): constant h
    auto fx = BivariateFunction::from_expression_text("x");
    auto inc = increment(fx, {1.0, 0.0}, 0.37);
    for (double x : {-0.5, 0.0, 0.8})
        CHECK(inc.eval({x, 0.1}) == doctest::Approx(0.37).epsilon(1e-14));

    // f = sin(x+y) with the unit perpendicular of (1,1)
    auto fs = BivariateFunction::from_expression_text("sin(x+y)");
    const double s = 1.0 / std::sqrt(2.0);
    for (double delta : {0.1, 0.5, 1.0}) {
        auto inc2 = increment(fs, {-s, s}, delta);
        CHECK(max_on_grid(inc2, {-1, 1, -1, 1}, 21) <= 1e-15);
    }
}

TEST_CASE("increment respects grid domains") {
    GridSamples g;
    g.nx = g.ny = 41;
    g.x0 = g.y0 = -1.0;
    g.hx = g.hy = 0.05;
    g.values.assign(g.nx * g.ny, 1.0);
    auto f = BivariateFunction::from_grid(std::move(g));
    auto inc = increment(f, {1.0, 0.0}, 0.5);
    CHECK_NOTHROW(inc.eval({0.0, 0.0}));
    CHECK_THROWS_AS(inc.eval({0.9, 0.0}), Error); // shifted point leaves the grid
}

TEST_CASE("mixed directional derivative: symbolic and numeric") {
    // d2/dx dy (x y) = 1
    auto f = BivariateFunction::from_expression_text("x*y");
    auto d = mixed_directional_derivative(f, {{1, 0}, {0, 1}}, DerivMethod::Symbolic);
    CHECK(d.eval({0.3, -0.7}) == doctest::Approx(1.0).epsilon(1e-14));

    // ridge annihilation, numeric: sin(x+y) along the perpendicular of (1,1)
    const double s = 1.0 / std::sqrt(2.0);
    auto fs = BivariateFunction::from_expression_text("sin(x+y)");
    auto dn = mixed_directional_derivative(fs, {{-s, s}}, DerivMethod::Numeric);
    CHECK(max_on_grid(dn, {-1, 1, -1, 1}, 15) <= 1e-10);

    // second derivative along (1,0) of exp(2x+3y) at the origin: symbolic
    // oracle via expr.diff twice
    auto fe = BivariateFunction::from_expression_text("exp(2*x + 3*y)");
    Expr oracle = Expr::parse("exp(2*x + 3*y)", {"x", "y"}).diff("x").diff("x");
    auto d2 = mixed_directional_derivative(fe, {{1, 0}, {1, 0}}, DerivMethod::Symbolic);
    CHECK(d2.eval({0, 0}) == doctest::Approx(oracle.eval_xy(0, 0)).epsilon(1e-12));
    CHECK(d2.eval({0, 0}) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("symbolic and numeric derivatives agree to 1e-5 for orders <= 3") {
    const std::vector<std::string> corpus = {"sin(x+y)*cos(x-y)", "exp(2*x + 3*y)",
                                             "(x+y)^3", "1/(1 + x^2 + y^2)"};
    const double s = 1.0 / std::sqrt(2.0);
    const std::vector<std::vector<Vec2>> dir_sets = {
        {{1, 0}},
        {{-s, s}, {0, 1}},
        {{s, s}, {1, 0}, {0, 1}},
    };
    for (const auto& text : corpus) {
        auto f = BivariateFunction::from_expression_text(text);
        for (const auto& dirs : dir_sets) {
            auto ds = mixed_directional_derivative(f, dirs, DerivMethod::Symbolic);
            DerivativeOptions dopts;
            dopts.scale = 2.0;
            auto dn = mixed_directional_derivative(f, dirs, DerivMethod::Numeric,
                                                   dopts);
            double max_sym = 0.0, max_diff = 0.0;
            for (double x : {-0.6, 0.0, 0.5})
                for (double y : {-0.4, 0.2, 0.7}) {
                    const double a = ds.eval({x, y});
                    const double b = dn.eval({x, y});
                    max_sym = std::max(max_sym, std::abs(a));
                    max_diff = std::max(max_diff, std::abs(a - b));
                }
            CHECK(max_diff <= 1e-5 * (1.0 + max_sym));
        }
    }
}

TEST_CASE("numeric derivative preconditions") {
    GridSamples g;
    g.nx = g.ny = 65;
    g.x0 = g.y0 = -1.0;
    g.hx = g.hy = 2.0 / 64;
    g.values.assign(g.nx * g.ny, 0.0);
    auto f = BivariateFunction::from_grid(std::move(g), 2);

    // order above the smoothness hint
    CHECK_THROWS_AS(mixed_directional_derivative(f, {{1, 0}, {0, 1}, {1, 0}},
                                                 DerivMethod::Numeric),
                    Error);
    // symbolic requires expression backing
    CHECK_THROWS_AS(mixed_directional_derivative(f, {{1, 0}}, DerivMethod::Symbolic),
                    Error);
}

TEST_CASE("antiderivative: specified examples") {
    // h(t) = 2t on [-1,1], scale 1, base 0 -> H = t^2 with H(0) = 0
    SampledProfile h = sample_function(-1.0, 0.001, 2001, 0.0,
                                       [](double t) { return 2.0 * t; });
    SampledProfile H = antiderivative(h, 1.0);
    CHECK(H.values[1000] == 0.0);
    for (std::size_t m = 0; m < H.size(); m += 97) {
        const double t = H.node(m);
        CHECK(H.values[m] == doctest::Approx(t * t).epsilon(1e-12));
    }

    // h = 0 -> H = 0
    SampledProfile z = sample_function(-1.0, 0.01, 201, 0.0, [](double) { return 0.0; });
    SampledProfile Z = antiderivative(z, 3.0);
    for (double v : Z.values)
        CHECK(v == 0.0);

    // h = cos on [-2,2], scale 3, base 0 -> 3 sin t to 1e-8 at step 1e-3
    SampledProfile c = sample_function(-2.0, 0.001, 4001, 0.0, std::cos);
    SampledProfile C = antiderivative(c, 3.0);
    double worst = 0.0;
    for (std::size_t m = 0; m < C.size(); ++m)
        worst = std::max(worst, std::abs(C.values[m] - 3.0 * std::sin(C.node(m))));
    CHECK(worst <= 1e-8);

    CHECK_THROWS_AS(antiderivative(h, 0.0), Error);
    SampledProfile two = SampledProfile::from_grid(0.0, 1.0, 2, 0.0);
    CHECK_THROWS_AS(antiderivative(two, 1.0), Error);
}

TEST_CASE("antiderivative consistency: derivative of H recovers scale*h") {
    SampledProfile h = sample_function(-1.5, 0.001, 3001, -0.5,
                                       [](double t) { return std::exp(0.5 * t); });
    const double scale = -2.25;
    SampledProfile H = antiderivative(h, scale);
    double worst = 0.0;
    for (std::size_t m = 2; m + 2 < H.size(); ++m) {
        const double fd = (H.values[m + 1] - H.values[m - 1]) / (2.0 * H.step);
        worst = std::max(worst,
                         std::abs(fd - scale * h.values[m]) / (1.0 + std::abs(scale)));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("antiderivative error drops at least 8x when the step halves") {
    auto closed = [](double t) { return std::sin(t); };
    auto err_at_step = [&](double step) {
        const auto count = static_cast<std::size_t>(std::llround(4.0 / step)) + 1;
        SampledProfile h = sample_function(-2.0, step, count, 0.0, std::cos);
        SampledProfile H = antiderivative(h, 1.0);
        double worst = 0.0;
        for (std::size_t m = 0; m < H.size(); ++m)
            worst = std::max(worst, std::abs(H.values[m] - closed(H.node(m))));
        return worst;
    };
    const double e1 = err_at_step(0.004);
    const double e2 = err_at_step(0.002);
    CHECK(e2 * 8.0 <= e1 * 1.05); // allow 5% slack on the order constant
}

TEST_CASE("base point off the origin anchors the antiderivative") {
    SampledProfile h = sample_function(1.0, 0.001, 2001, 2.0,
                                       [](double t) { return 3.0 * t * t; });
    SampledProfile H = antiderivative(h, 1.0);
    // H(t) = t^3 - 8 (vanishing at the base point 2); the odd-node trapezoid
    // tail contributes ~h^3/2
    CHECK(profile_eval(H, 2.0) == 0.0);
    for (std::size_t m = 0; m < H.size(); m += 211) {
        const double t = H.node(m);
        CHECK(std::abs(H.values[m] - (t * t * t - 8.0)) <= 2e-9);
    }
}

TEST_CASE("cubic profile evaluation tracks smooth functions to high order") {
    SampledProfile p = sample_function(-2.0, 0.01, 401, 0.0, std::sin);
    double worst_lin = 0.0, worst_cub = 0.0;
    for (double t = -1.99; t < 1.99; t += 0.0137) {
        worst_lin = std::max(worst_lin, std::abs(profile_eval(p, t) - std::sin(t)));
        worst_cub = std::max(worst_cub, std::abs(profile_eval_cubic(p, t) - std::sin(t)));
    }
    CHECK(worst_lin <= 2e-5);
    CHECK(worst_cub <= 1e-9);
    CHECK(worst_cub * 100.0 < worst_lin);
}
