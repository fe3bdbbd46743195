#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ridge/expr.hpp"

using namespace ridge;

namespace {

const std::vector<std::string> kCorpus = {
    "x^2 + sin(y)",
    "exp(2*x + 3*y)",
    "x*y",
    "sin(x+y)*cos(x-y)",
    "log(2 + x) / (3 + y)",
    "sqrt(4 + x*y)",
    "(x+y)^3",
    "tan(x/2)",
    "pi*x + e*y",
    "-x^2 + 2^x",
    "1/(1 + x^2 + y^2)",
};

double eval_xy(const Expr& e, double x, double y) { return e.eval_xy(x, y); }

} // namespace

TEST_CASE("parse builds the expected trees") {
    Expr e = Expr::parse("x^2 + sin(y)", {"x", "y"});
    CHECK(eval_xy(e, 2.0, 0.0) == doctest::Approx(4.0));
    CHECK(eval_xy(e, 0.0, M_PI / 2) == doctest::Approx(1.0));

    // precedence and associativity
    CHECK(eval_xy(Expr::parse("2^3^2", {"x", "y"}), 0, 0) == doctest::Approx(512.0));
    CHECK(eval_xy(Expr::parse("-x^2", {"x", "y"}), 3, 0) == doctest::Approx(-9.0));
    CHECK(eval_xy(Expr::parse("2*x+3*y", {"x", "y"}), 1, 2) == doctest::Approx(8.0));
    CHECK(eval_xy(Expr::parse("x - y - 1", {"x", "y"}), 5, 2) == doctest::Approx(2.0));
    CHECK(eval_xy(Expr::parse("  x  ", {"x", "y"}), 7, 0) == doctest::Approx(7.0));
}

TEST_CASE("parse errors carry position and identity") {
    CHECK_THROWS_WITH_AS(Expr::parse("x + * y", {"x", "y"}),
                         doctest::Contains("position 4"), Error);
    try {
        Expr::parse("x + * y", {"x", "y"});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Syntax);
    }
    try {
        Expr::parse("sin(z)", {"x", "y"});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnknownIdentifier);
        CHECK(std::string(e.what()).find("z") != std::string::npos);
    }
    try {
        Expr::parse("sinh(x)", {"x", "y"});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnknownFunction);
    }
    CHECK_THROWS_AS(Expr::parse("", {"x", "y"}), Error);
    CHECK_THROWS_AS(Expr::parse("(x", {"x", "y"}), Error);
}

TEST_CASE("eval basics and domain errors") {
    CHECK(eval_xy(Expr::parse("x*y", {"x", "y"}), 2, 3) == 6.0);
    CHECK(eval_xy(Expr::parse("exp(0)", {"x", "y"}), 0, 0) == 1.0);

    try {
        eval_xy(Expr::parse("log(x)", {"x", "y"}), -1.0, 0.0);
        FAIL("expected domain error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EvalDomain);
    }
    CHECK_THROWS_AS(eval_xy(Expr::parse("1/x", {"x", "y"}), 0.0, 0.0), Error);
    CHECK_THROWS_AS(eval_xy(Expr::parse("x^0.5", {"x", "y"}), -2.0, 0.0), Error);
    CHECK_THROWS_AS(eval_xy(Expr::parse("exp(x)", {"x", "y"}), 1e6, 0.0), Error);

    // missing binding
    Expr e = Expr::parse("x + y", {"x", "y"});
    const std::pair<std::string_view, double> only_x[1] = {{"x", 1.0}};
    CHECK_THROWS_AS(e.eval(only_x), Error);
}

TEST_CASE("diff matches the finite-difference oracle on the corpus") {
    const auto xs = oracles::random_uniform(100, -1.0, 1.0, 42);
    const auto ys = oracles::random_uniform(100, -1.0, 1.0, 43);
    for (const std::string& text : kCorpus) {
        Expr e = Expr::parse(text, {"x", "y"});
        for (const char* var : {"x", "y"}) {
            Expr d = e.diff(var);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double x = xs[i], y = ys[i];
                const bool wrt_x = var[0] == 'x';
                auto f1 = [&](double t) {
                    return wrt_x ? e.eval_xy(t, y) : e.eval_xy(x, t);
                };
                const double fd = oracles::richardson_diff(f1, wrt_x ? x : y, 1e-3);
                const double sym = d.eval_xy(x, y);
                CHECK(std::abs(sym - fd) <= 1e-6 * (1.0 + std::abs(sym)));
            }
        }
    }
}

TEST_CASE("diff specific values") {
    // d/dx (x^2 + sin y) = 2x at scattered points
    Expr d1 = Expr::parse("x^2 + sin(y)", {"x", "y"}).diff("x");
    for (double x : {-1.5, 0.0, 0.25, 2.0})
        CHECK(d1.eval_xy(x, 0.7) == doctest::Approx(2.0 * x).epsilon(1e-14));

    // d2/dxdy (x y) = 1 everywhere
    Expr d2 = Expr::parse("x*y", {"x", "y"}).diff("x").diff("y");
    CHECK(d2.eval_xy(5.0, -3.0) == doctest::Approx(1.0));

    // d/dy exp(2x+3y) at origin: oracle first, then the known value 3
    Expr e = Expr::parse("exp(2*x + 3*y)", {"x", "y"});
    auto fy = [&](double t) { return e.eval_xy(0.0, t); };
    const double fd = oracles::richardson_diff(fy, 0.0, 1e-3);
    const double sym = e.diff("y").eval_xy(0.0, 0.0);
    CHECK(sym == doctest::Approx(fd).epsilon(1e-9));
    CHECK(sym == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("serialize round-trips evaluation on the corpus") {
    const auto xs = oracles::random_uniform(100, -0.9, 0.9, 7);
    const auto ys = oracles::random_uniform(100, -0.9, 0.9, 8);
    for (const std::string& text : kCorpus) {
        Expr e = Expr::parse(text, {"x", "y"});
        Expr e2 = Expr::parse(e.serialize(), {"x", "y"});
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double a = e.eval_xy(xs[i], ys[i]);
            const double b = e2.eval_xy(xs[i], ys[i]);
            CHECK(std::abs(a - b) <= 1e-15 * (1.0 + std::abs(a)));
        }
        // derivatives round-trip too (exercises unary/power printing)
        Expr d = e.diff("x");
        Expr d2 = Expr::parse(d.serialize(), {"x", "y"});
        for (std::size_t i = 0; i < xs.size(); i += 11) {
            const double a = d.eval_xy(xs[i], ys[i]);
            const double b = d2.eval_xy(xs[i], ys[i]);
            CHECK(std::abs(a - b) <= 1e-15 * (1.0 + std::abs(a)));
        }
    }
}

TEST_CASE("abs differentiates but flags non-smoothness") {
    Expr e = Expr::parse("abs(x) + y", {"x", "y"});
    CHECK(e.has_abs());
    Expr d = e.diff("x");
    CHECK(d.eval_xy(2.0, 0.0) == doctest::Approx(1.0));
    CHECK(d.eval_xy(-2.0, 0.0) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(d.eval_xy(0.0, 0.0), Error); // 0/abs(0)
}

TEST_CASE("compiled expressions agree with tree evaluation") {
    const auto xs = oracles::random_uniform(64, -0.9, 0.9, 9);
    const auto ys = oracles::random_uniform(64, -0.9, 0.9, 10);
    const std::vector<std::string> order = {"x", "y"};
    for (const std::string& text : kCorpus) {
        Expr e = Expr::parse(text, {"x", "y"});
        CompiledExpr c = CompiledExpr::compile(e, order);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double vars[2] = {xs[i], ys[i]};
            CHECK(c.eval(vars) == e.eval_xy(xs[i], ys[i]));
        }
    }
}

TEST_CASE("simplification folds constants without changing values") {
    Expr e = Expr::parse("(x+y)*1 + 0", {"x", "y"});
    CHECK(e.simplified().eval_xy(0.3, 0.4) == e.eval_xy(0.3, 0.4));
    Expr f = Expr::parse("2*3 + x^1", {"x", "y"});
    CHECK(f.eval_xy(4.0, 0.0) == doctest::Approx(10.0));
}
