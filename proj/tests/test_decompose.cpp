#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ridge/decompose.hpp"
#include "ridge/errors.hpp"

using namespace ridge;

namespace {

DecomposeOptions fast_opts(DerivMethod method = DerivMethod::Symbolic) {
    DecomposeOptions o;
    o.grid_n = 257;
    o.method = method;
    return o;
}

double relative_err(const Decomposition& dec) {
    return dec.reconstruction_sup_error / (1.0 + dec.max_abs_f);
}

GridSamples sample_grid(const std::string& text, Rect r, std::size_t n) {
    Expr e = Expr::parse(text, {"x", "y"});
    GridSamples g;
    g.nx = g.ny = n;
    g.x0 = r.x0;
    g.y0 = r.y0;
    g.hx = r.width() / static_cast<double>(n - 1);
    g.hy = r.height() / static_cast<double>(n - 1);
    g.values.resize(n * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            g.values[j * n + i] =
                e.eval_xy(g.x0 + g.hx * static_cast<double>(i),
                          g.y0 + g.hy * static_cast<double>(j));
    return g;
}

} // namespace

TEST_CASE("separation_defect: specified examples") {
    // already separated: defect at roundoff
    auto g1 = BivariateFunction::from_expression_text("x^2 + sin(y)");
    CHECK(separation_defect(g1, {0, 0}, {-1, 1, -1, 1}, 65) <= 1e-15);

    // x*y on [0,1]^2 with base (0,0): defect 1, attained at (1,1)
    auto g2 = BivariateFunction::from_expression_text("x*y");
    const double d = separation_defect(g2, {0, 0}, {0, 1, 0, 1}, 65);
    CHECK(d == doctest::Approx(1.0).epsilon(1e-12));
    // brute-force oracle over a finer grid never exceeds it by more than the
    // grid resolution allows
    double brute = 0.0;
    for (int i = 0; i <= 40; ++i)
        for (int j = 0; j <= 40; ++j) {
            const double x = i / 40.0, y = j / 40.0;
            brute = std::max(brute, std::abs(x * y));
        }
    CHECK(d == doctest::Approx(brute).epsilon(1e-12));

    auto g3 = BivariateFunction::from_expression_text("3");
    CHECK(separation_defect(g3, {0.2, -0.3}, {-1, 1, -1, 1}, 33) == 0.0);
}

TEST_CASE("representability_defect: ridge sums pass, exp(xy) fails") {
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});

    auto ridge_sum = BivariateFunction::from_expression_text(
        "sin(x) + exp(y)/2 + (x+y)^3");
    double max_f = 0.0;
    for (double x : {-1.0, 0.0, 1.0})
        for (double y : {-1.0, 0.0, 1.0})
            max_f = std::max(max_f, std::abs(ridge_sum.eval({x, y})));
    const double ok = representability_defect(ridge_sum, ds, {0.3, 0.3, 0.3},
                                              {-1, 1, -1, 1}, 41);
    CHECK(ok <= 1e-10 * (1.0 + max_f));

    auto bad = BivariateFunction::from_expression_text("exp(x*y)");
    const double defect = representability_defect(bad, ds, {0.5, 0.5, 0.5},
                                                  {-1, 1, -1, 1}, 41);
    CHECK(defect > 1e-2);

    // zero offset annihilates everything
    CHECK(representability_defect(bad, ds, {0.5, 0.0, 0.5}, {-1, 1, -1, 1}, 21) ==
          0.0);

    // offsets too large for the domain
    CHECK_THROWS_AS(representability_defect(bad, ds, {3.0, 3.0, 3.0},
                                            {-1, 1, -1, 1}, 21),
                    Error);
}

TEST_CASE("iterated increment matches the defect integrand") {
    // composing increment() n times reproduces the defect integrand
    DirectionSet ds = validate_directions({{1, 0}, {1, 1}});
    auto F = BivariateFunction::from_expression_text("exp(x*y)");
    const std::vector<double> deltas = {0.25, 0.4};
    BivariateFunction it = F;
    for (std::size_t i = 0; i < ds.size(); ++i)
        it = increment(it, perpendicular_unit(ds[i]), deltas[i]);
    // brute-force max of |iterated increment| on the safe sub-rectangle
    double brute = 0.0;
    for (double x = -0.3; x <= 0.3; x += 0.1)
        for (double y = -0.3; y <= 0.3; y += 0.1)
            brute = std::max(brute, std::abs(it.eval({x, y})));
    CHECK(brute > 0.0);
}

TEST_CASE("extract_ridge_profile: cubic ridge and constant") {
    Region W = Region::rect({-1, 1, -1, 1});

    auto R1 = BivariateFunction::from_expression_text("(x+y)^3");
    ProfileGridSpec spec;
    spec.t_lo = -2.0;
    spec.t_hi = 2.0;
    spec.base_t = 0.0;
    spec.target_count = 2049;
    auto ex = extract_ridge_profile(R1, {1, 1}, spec, W);
    CHECK(ex.constancy_defect <= 1e-12);
    double worst = 0.0;
    for (std::size_t m = 0; m < ex.profile.size(); ++m) {
        const double t = ex.profile.node(m);
        if (t < spec.t_lo || t > spec.t_hi)
            continue; // pad zone is extrapolated margin
        // oracle: R along (t/2, t/2) is exactly t^3
        worst = std::max(worst, std::abs(ex.profile.values[m] - t * t * t));
    }
    CHECK(worst <= 1e-12);

    auto R2 = BivariateFunction::from_expression_text("5");
    auto ex2 = extract_ridge_profile(R2, {2, -1}, spec, W);
    for (double v : ex2.profile.values)
        CHECK(v == 5.0);

    // x*y is not a ridge function along (1,1): defect detected
    auto R3 = BivariateFunction::from_expression_text("x*y");
    double brute = 0.0; // brute-force constancy defect along the diagonal chords
    for (double t : {-0.8, 0.0, 0.9}) {
        const Vec2 p{t / 2, t / 2};
        for (double s : {-0.4, 0.3}) {
            const Vec2 q{p.x - s, p.y + s};
            if (std::abs(q.x) <= 1 && std::abs(q.y) <= 1)
                brute = std::max(brute,
                                 std::abs(q.x * q.y - p.x * p.y));
        }
    }
    CHECK(brute > 0.05);
    auto ex3 = extract_ridge_profile(R3, {1, 1}, spec, W);
    CHECK(ex3.constancy_defect > 0.05);
    CHECK_THROWS_AS(extract_ridge_profile(R3, {1, 1}, spec, W, 1e-6), Error);
    try {
        extract_ridge_profile(R3, {1, 1}, spec, W, 1e-6);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Representability);
    }
}

TEST_CASE("decompose_small_n: n=1 recovers the profile exactly") {
    // F = sin(2x + y), direction (2,1): f(t) = sin t on the covered range
    auto F = BivariateFunction::from_expression_text("sin(2*x + y)");
    DirectionSet ds = validate_directions({{2, 1}});
    DecomposeOptions o1025 = fast_opts();
    o1025.grid_n = 1025; // the 1e-9 reconstruction bound needs the full grid
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1}, o1025);
    REQUIRE(dec.profiles.size() == 1);
    const SampledProfile& p = dec.profiles[0];
    double worst = 0.0;
    for (std::size_t m = 0; m < p.size(); ++m)
        worst = std::max(worst, std::abs(p.values[m] - std::sin(p.node(m))));
    CHECK(worst <= 1e-12);
    CHECK(relative_err(dec) <= 1e-9);
}

TEST_CASE("decompose_small_n: constant function") {
    auto F = BivariateFunction::from_expression_text("7");
    DirectionSet ds = validate_directions({{1, 1}});
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1}, fast_opts());
    for (double v : dec.profiles[0].values)
        CHECK(v == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("decompose_small_n: n=2 dual-basis formulas") {
    auto F = BivariateFunction::from_expression_text("x + y^2");
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}});
    DecomposeOptions o1025 = fast_opts();
    o1025.grid_n = 1025;
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1}, o1025);
    REQUIRE(dec.profiles.size() == 2);
    CHECK(dec.reconstruction_sup_error <= 1e-9);

    // profiles are t and t^2 up to constants summing to zero
    const SampledProfile& f1 = dec.profiles[0];
    const SampledProfile& f2 = dec.profiles[1];
    const double c1 = f1.values[f1.size() / 2] - f1.node(f1.size() / 2);
    const double c2 = f2.values[f2.size() / 2] -
                      f2.node(f2.size() / 2) * f2.node(f2.size() / 2);
    CHECK(std::abs(c1 + c2) <= 1e-12);
    for (std::size_t m = 0; m < f1.size(); m += 101) {
        CHECK(f1.values[m] - c1 == doctest::Approx(f1.node(m)).epsilon(1e-12));
    }
}

TEST_CASE("decompose_small_n: grid-backed trace coverage errors") {
    // direction (1,0) paired with (1,1): the trace line for f1 runs along
    // (1,-1) and exits [-1,1]^2 before covering the needed range
    GridSamples g = sample_grid("x + (x+y)^2", {-1, 1, -1, 1}, 65);
    auto F = BivariateFunction::from_grid(std::move(g));
    DirectionSet ds = validate_directions({{1, 0}, {1, 1}});
    try {
        decompose(F, ds, {-1, 1, -1, 1}, fast_opts(DerivMethod::Numeric));
        FAIL("expected coverage error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OutOfDomain);
        CHECK(std::string(e.what()).find("achievable") != std::string::npos);
    }
}

TEST_CASE("decompose n=3 symbolic: sin + exp + square") {
    auto F = BivariateFunction::from_expression_text("sin(x) + exp(y) + (x+y)^2");
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1}, fast_opts());

    REQUIRE(dec.profiles.size() == 3);
    CHECK(dec.axis_pair[0] == 0);
    CHECK(dec.axis_pair[1] == 1);
    CHECK(dec.separation_defect <= 1e-10);
    REQUIRE(dec.stages.size() == 1);
    CHECK(dec.stages[0].residual_sup <= 1e-8 * (1.0 + dec.stages[0].max_abs_g));

    // oracle: direct evaluation of the profile sum against F on a fresh grid
    const auto err = reconstruction_error(dec, F, dec.domain, 101, 101);
    CHECK(err.sup_error / (1.0 + err.max_abs_f) <= 1e-6);

    // reconstruct() agrees and polices the domain
    CHECK(reconstruct(dec, 0.25, -0.5) ==
          doctest::Approx(F.eval({0.25, -0.5})).epsilon(1e-6));
    CHECK_THROWS_AS(reconstruct(dec, 2.0, 0.0), Error);
}

TEST_CASE("decompose F == 0 gives zero profiles") {
    auto F = BivariateFunction::from_expression_text("0");
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1}, fast_opts());
    for (const auto& p : dec.profiles)
        for (double v : p.values)
            CHECK(std::abs(v) <= 1e-10);
    CHECK(dec.reconstruction_sup_error <= 1e-10);
}

TEST_CASE("decompose rejects non-representable F with a diagnostic") {
    auto F = BivariateFunction::from_expression_text("exp(x*y)");
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});
    try {
        decompose(F, ds, {-1, 1, -1, 1}, fast_opts());
        FAIL("expected representability error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Representability);
        CHECK(std::string(e.what()).find("separation defect") != std::string::npos);
    }
}

TEST_CASE("decompose n=4 symbolic round trip") {
    auto F = BivariateFunction::from_expression_text(
        "sin(x) + cos(y) + (x+y)^3 + exp(x-y)");
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}, {1, -1}});
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1}, fast_opts());
    CHECK(dec.stages.size() == 2);
    CHECK(relative_err(dec) <= 1e-6);

    // closed-form components from the base-pointed cascade, checked at
    // profile nodes: the (1,1) profile is t^3 - t^2/4 + t/2, the (1,-1)
    // profile e^t - t^2/4 + t/2 + 1, h1 = sin x - x + x^2/2,
    // h2 = cos y + y^2/2 - 1
    auto check_nodes = [](const SampledProfile& p, double lim,
                          const std::function<double(double)>& cf) {
        double worst = 0.0;
        for (std::size_t m = 0; m < p.size(); ++m) {
            const double t = p.node(m);
            if (t < -lim || t > lim)
                continue;
            worst = std::max(worst, std::abs(p.values[m] - cf(t)));
        }
        CHECK(worst <= 1e-8);
    };
    check_nodes(dec.profiles[2], 2.0,
                [](double t) { return t * t * t - 0.25 * t * t + 0.5 * t; });
    check_nodes(dec.profiles[3], 2.0, [](double t) {
        return std::exp(t) - 0.25 * t * t + 0.5 * t + 1.0;
    });
    check_nodes(dec.profiles[0], 1.0,
                [](double t) { return std::sin(t) - t + 0.5 * t * t; });
    check_nodes(dec.profiles[1], 1.0,
                [](double t) { return std::cos(t) + 0.5 * t * t - 1.0; });
}

TEST_CASE("decompose with slanted directions (non-identity map)") {
    auto F = BivariateFunction::from_expression_text(
        "sin(2*x+y) + exp(x+3*y)/4 + (x+y)^2");
    DirectionSet ds = validate_directions({{2, 1}, {1, 3}, {1, 1}});
    DecomposeOptions o = fast_opts();
    o.grid_n = 1025; // the 1e-6 bound is calibrated to the default grid
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1}, o);
    CHECK(relative_err(dec) <= 1e-6);

    // and with a forced, different axis pair (strongly slanted image)
    o.axis_pair = std::make_pair(0, 2);
    Decomposition dec2 = decompose(F, ds, {-1, 1, -1, 1}, o);
    CHECK(relative_err(dec2) <= 1e-6);
}

TEST_CASE("decompose n=5: three cascade stages") {
    auto F = BivariateFunction::from_expression_text(
        "sin(x) + cos(y) + (x+y)^3 + exp(x-y) + (2*x+y)^4/10");
    DirectionSet ds =
        validate_directions({{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}});
    DecomposeOptions o = fast_opts();
    o.grid_n = 1025;
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1}, o);
    CHECK(dec.stages.size() == 3);
    CHECK(relative_err(dec) <= 1e-6);
}

TEST_CASE("decompose on a domain away from the origin") {
    auto F = BivariateFunction::from_expression_text("sin(x) + exp(y) + (x+y)^2");
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});
    Decomposition dec = decompose(F, ds, {2, 3, 1, 2}, fast_opts());
    CHECK(dec.base_point.x == doctest::Approx(2.5));
    CHECK(dec.base_point.y == doctest::Approx(1.5));
    CHECK(relative_err(dec) <= 1e-6);
    // base-pointed profiles still reconstruct pointwise
    CHECK(reconstruct(dec, 2.25, 1.75) ==
          doctest::Approx(F.eval({2.25, 1.75})).epsilon(1e-7));
}

TEST_CASE("gauge insensitivity: equal functions give identical profiles") {
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});
    auto Fa = BivariateFunction::from_expression_text("sin(x) + exp(y) + (x+y)^2");
    auto Fb = BivariateFunction::from_expression_text(
        "sin(x) + exp(y) + (x+y)^2 + 0*x");
    Decomposition da = decompose(Fa, ds, {-1, 1, -1, 1}, fast_opts());
    Decomposition db = decompose(Fb, ds, {-1, 1, -1, 1}, fast_opts());
    REQUIRE(da.profiles.size() == db.profiles.size());
    for (std::size_t i = 0; i < da.profiles.size(); ++i) {
        REQUIRE(da.profiles[i].size() == db.profiles[i].size());
        double worst = 0.0;
        for (std::size_t m = 0; m < da.profiles[i].size(); ++m)
            worst = std::max(worst, std::abs(da.profiles[i].values[m] -
                                             db.profiles[i].values[m]));
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("orientation invariance: perpendicular sign flips") {
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}, {1, -1}});
    auto F = BivariateFunction::from_expression_text(
        "sin(x) + cos(y) + (x+y)^3 + exp(x-y)");
    Decomposition base = decompose(F, ds, {-1, 1, -1, 1}, fast_opts());

    for (const auto& flips : std::vector<std::vector<bool>>{
             {true, false}, {false, true}, {true, true}}) {
        DecomposeOptions o = fast_opts();
        o.flip_perp = flips;
        Decomposition flipped = decompose(F, ds, {-1, 1, -1, 1}, o);
        const auto xs = oracles::random_uniform(200, -0.99, 0.99, 55);
        const auto ys = oracles::random_uniform(200, -0.99, 0.99, 56);
        double worst = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            worst = std::max(worst, std::abs(reconstruct(base, xs[i], ys[i]) -
                                             reconstruct(flipped, xs[i], ys[i])));
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("grid refinement does not degrade the reconstruction") {
    auto F = BivariateFunction::from_expression_text("sin(x) + exp(y) + (x+y)^2");
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});
    DecomposeOptions o1 = fast_opts();
    o1.grid_n = 129;
    DecomposeOptions o2 = fast_opts();
    o2.grid_n = 257;
    const double e1 = relative_err(decompose(F, ds, {-1, 1, -1, 1}, o1));
    const double e2 = relative_err(decompose(F, ds, {-1, 1, -1, 1}, o2));
    CHECK(e2 <= 1.1 * e1);
}

TEST_CASE("decompose numeric on expression backing") {
    auto F = BivariateFunction::from_expression_text("sin(x) + exp(y) + (x+y)^2");
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1},
                                  fast_opts(DerivMethod::Numeric));
    CHECK(relative_err(dec) <= 1e-3);
}

TEST_CASE("decompose numeric on grid backing (lattice-aligned)") {
    GridSamples g = sample_grid("sin(x) + exp(y) + (x+y)^2", {-1, 1, -1, 1}, 257);
    auto F = BivariateFunction::from_grid(std::move(g), 2);
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});
    DecomposeOptions o = fast_opts(DerivMethod::Numeric);
    o.grid_n = 129;
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1}, o);
    CHECK(relative_err(dec) <= 1e-3);
}

TEST_CASE("decompose preconditions") {
    auto F = BivariateFunction::from_expression_text("x + y");
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});
    DecomposeOptions o = fast_opts();
    o.grid_n = 8;
    CHECK_THROWS_AS(decompose(F, ds, {-1, 1, -1, 1}, o), Error);
    CHECK_THROWS_AS(decompose(F, ds, {1, -1, -1, 1}, fast_opts()), Error);

    // smoothness hint below n-2
    auto Fg = BivariateFunction::from_grid(
        sample_grid("x + y", {-1, 1, -1, 1}, 65), 0);
    CHECK_THROWS_AS(decompose(Fg, ds, {-1, 1, -1, 1},
                              fast_opts(DerivMethod::Numeric)),
                    Error);

    // grid-backed symbolic is rejected
    auto Fg2 = BivariateFunction::from_grid(
        sample_grid("x + y", {-1, 1, -1, 1}, 65), 2);
    CHECK_THROWS_AS(decompose(Fg2, ds, {-1, 1, -1, 1}, fast_opts()), Error);

    // n - 2 > 2 with grid backing and the numeric method
    DirectionSet big = validate_directions(
        {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}});
    auto Fg3 = BivariateFunction::from_grid(
        sample_grid("x + y", {-1, 1, -1, 1}, 65), 5);
    CHECK_THROWS_AS(decompose(Fg3, big, {-1, 1, -1, 1},
                              fast_opts(DerivMethod::Numeric)),
                    Error);
}
