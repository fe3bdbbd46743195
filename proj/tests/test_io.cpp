#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ridge/decompose.hpp"
#include "ridge/io.hpp"

using namespace ridge;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "ridge_io_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

Decomposition sample_dec() {
    auto F = BivariateFunction::from_expression_text("sin(x) + exp(y) + (x+y)^2");
    DirectionSet ds = validate_directions({{1, 0}, {0, 1}, {1, 1}});
    DecomposeOptions o;
    o.grid_n = 65;
    Decomposition dec = decompose(F, ds, {-1, 1, -1, 1}, o);
    dec.source_expression = "sin(x) + exp(y) + (x+y)^2";
    return dec;
}

} // namespace

TEST_CASE("decomposition files round-trip byte-identically") {
    Decomposition dec = sample_dec();
    const std::string once = encode_decomposition(dec);
    Decomposition back = decode_decomposition(once);
    const std::string twice = encode_decomposition(back);
    CHECK(once == twice);

    // and doubles survive exactly
    REQUIRE(back.profiles.size() == dec.profiles.size());
    for (std::size_t i = 0; i < dec.profiles.size(); ++i) {
        CHECK(back.profiles[i].t_min == dec.profiles[i].t_min);
        CHECK(back.profiles[i].step == dec.profiles[i].step);
        CHECK(back.profiles[i].values == dec.profiles[i].values);
    }
    CHECK(back.reconstruction_sup_error == dec.reconstruction_sup_error);
    CHECK(back.source_expression == dec.source_expression);
    CHECK(back.axis_pair == dec.axis_pair);

    const auto path = (temp_dir() / "dec_roundtrip.json").string();
    write_decomposition_file(dec, path);
    Decomposition loaded = read_decomposition_file(path);
    CHECK(encode_decomposition(loaded) == once);
}

TEST_CASE("decode rejects malformed documents") {
    Decomposition dec = sample_dec();
    std::string text = encode_decomposition(dec);

    CHECK_THROWS_AS(decode_decomposition("not json"), Error);
    try {
        decode_decomposition("{}");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InputFormat);
    }

    // truncated values array: parseable JSON, inconsistent with its grid
    std::string broken = text;
    const auto p1 = broken.find("\"values\": [");
    const auto comma = broken.find(',', p1 + 12);
    broken.erase(p1 + 11, comma - (p1 + 11) + 1); // remove the first value
    CHECK_THROWS_AS(decode_decomposition(broken), Error);
    try {
        decode_decomposition(broken);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InputFormat);
        CHECK(std::string(e.what()).find("grid") != std::string::npos);
    }
}

TEST_CASE("format_double survives the 17-digit round trip") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> d(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        double v = d(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("ingest_samples: complete shuffled grid round-trips node values") {
    const auto path = (temp_dir() / "grid_ok.csv").string();
    Expr e = Expr::parse("sin(x+y)", {"x", "y"});
    const int n = 41;
    std::vector<std::string> rows;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = -1.0 + 2.0 * i / (n - 1);
            const double y = -1.0 + 2.0 * j / (n - 1);
            rows.push_back(format_double(x) + "," + format_double(y) + "," +
                           format_double(e.eval_xy(x, y)));
        }
    std::mt19937 rng(7);
    std::shuffle(rows.begin(), rows.end(), rng);
    {
        std::ofstream out(path);
        out << "x,y,f\n";
        for (const auto& r : rows)
            out << r << "\n";
    }
    auto F = ingest_samples(path);
    CHECK(F.is_grid());
    // spot value at a node matches the file value exactly
    const double x = -1.0 + 2.0 * 13 / (n - 1);
    const double y = -1.0 + 2.0 * 29 / (n - 1);
    CHECK(F.eval({x, y}) == e.eval_xy(x, y));
}

TEST_CASE("ingest_samples rejects bad inputs") {
    const auto dir = temp_dir();

    auto write = [&](const std::string& name, const std::string& body) {
        const auto p = (dir / name).string();
        std::ofstream out(p);
        out << body;
        return p;
    };

    // too small
    std::ostringstream small;
    small << "x,y,f\n";
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i)
            small << i << "," << j << ",0\n";
    CHECK_THROWS_AS(ingest_samples(write("grid_small.csv", small.str())), Error);

    // missing one point
    std::ostringstream missing;
    missing << "x,y,f\n";
    for (int j = 0; j < 41; ++j)
        for (int i = 0; i < 41; ++i) {
            if (i == 17 && j == 23)
                continue;
            missing << 0.05 * i << "," << 0.05 * j << ",1\n";
        }
    try {
        ingest_samples(write("grid_missing.csv", missing.str()));
        FAIL("expected missing-point error");
    } catch (const Error& err) {
        CHECK(std::string(err.what()).find("missing") != std::string::npos);
    }

    // spacing jitter at 1e-3 relative
    std::ostringstream jitter;
    jitter << "x,y,f\n";
    for (int j = 0; j < 41; ++j)
        for (int i = 0; i < 41; ++i) {
            double x = 0.05 * i;
            if (i == 20)
                x += 0.05 * 1e-3;
            jitter << format_double(x) << "," << 0.05 * j << ",1\n";
        }
    CHECK_THROWS_AS(ingest_samples(write("grid_jitter.csv", jitter.str())), Error);

    // bad header and non-numeric field
    CHECK_THROWS_AS(ingest_samples(write("grid_hdr.csv", "a,b,c\n1,2,3\n")), Error);
    std::ostringstream nonnum;
    nonnum << "x,y,f\n";
    for (int j = 0; j < 33; ++j)
        for (int i = 0; i < 33; ++i) {
            if (i == 1 && j == 1)
                nonnum << "0.1,0.1,oops\n";
            else
                nonnum << 0.1 * i << "," << 0.1 * j << ",1\n";
        }
    CHECK_THROWS_AS(ingest_samples(write("grid_nonnum.csv", nonnum.str())), Error);
}

TEST_CASE("write_samples emits an ingestible grid") {
    auto F = BivariateFunction::from_expression_text("x^2 - y");
    const auto path = (temp_dir() / "emitted.csv").string();
    write_samples(F, {-1, 1, -1, 1}, 41, 41, path);
    auto G = ingest_samples(path);
    CHECK(G.eval({0.5, 0.25}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("emit_plot_data writes profile and field tables") {
    Decomposition dec = sample_dec();
    auto F = BivariateFunction::from_expression_text(*dec.source_expression);
    const auto dir = (temp_dir() / "plots").string();
    emit_plot_data(dec, F, dir);
    namespace fs = std::filesystem;
    CHECK(fs::exists(fs::path(dir) / "profile_0.dat"));
    CHECK(fs::exists(fs::path(dir) / "profile_2.dat"));
    CHECK(fs::exists(fs::path(dir) / "field.dat"));
    std::ifstream field(fs::path(dir) / "field.dat");
    std::string line;
    std::getline(field, line);
    double x, y, f, r, err;
    CHECK(std::sscanf(line.c_str(), "%lf %lf %lf %lf %lf", &x, &y, &f, &r, &err) == 5);
    CHECK(err == doctest::Approx(f - r).epsilon(1e-15));
}
