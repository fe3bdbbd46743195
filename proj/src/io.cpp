#include "ridge/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ridge/errors.hpp"

namespace ridge {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

std::string load_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorKind::InputFormat, "cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void store_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorKind::InputFormat, "cannot write file: " + path);
    out << text;
    if (!out)
        raise(ErrorKind::InputFormat, "write failed: " + path);
}

double require_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        raise(ErrorKind::InputFormat, std::string("missing numeric field '") + key + "'");
    return j[key].get<double>();
}

const json& require(const json& j, const char* key) {
    if (!j.contains(key))
        raise(ErrorKind::InputFormat, std::string("missing field '") + key + "'");
    return j[key];
}

} // namespace

std::string format_double(double v) {
    if (v == 0.0)
        return "0"; // sign of zero does not survive JSON number parsing
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string encode_decomposition(const Decomposition& dec) {
    std::ostringstream os;
    auto num = [](double v) { return format_double(v); };
    os << "{\n";
    os << "  \"format_version\": " << kFormatVersion << ",\n";
    os << "  \"directions\": [";
    for (std::size_t i = 0; i < dec.directions.size(); ++i) {
        if (i) os << ", ";
        os << "[" << num(dec.directions[i].a) << ", " << num(dec.directions[i].b) << "]";
    }
    os << "],\n";
    os << "  \"domain\": [" << num(dec.domain.x0) << ", " << num(dec.domain.x1) << ", "
       << num(dec.domain.y0) << ", " << num(dec.domain.y1) << "],\n";
    os << "  \"method\": \""
       << (dec.method == DerivMethod::Symbolic ? "symbolic" : "numeric") << "\",\n";
    os << "  \"reconstruction_sup_error\": " << num(dec.reconstruction_sup_error)
       << ",\n";
    os << "  \"separation_defect\": " << num(dec.separation_defect) << ",\n";
    os << "  \"metadata\": {\n";
    os << "    \"grid_n\": " << dec.grid_n << ",\n";
    os << "    \"profile_grid_n\": " << dec.profile_grid_n << ",\n";
    os << "    \"axis_pair\": [" << dec.axis_pair[0] << ", " << dec.axis_pair[1]
       << "],\n";
    os << "    \"base_point\": [" << num(dec.base_point.x) << ", "
       << num(dec.base_point.y) << "],\n";
    os << "    \"max_abs_f\": " << num(dec.max_abs_f) << ",\n";
    os << "    \"stages\": [";
    for (std::size_t i = 0; i < dec.stages.size(); ++i) {
        const auto& st = dec.stages[i];
        if (i) os << ", ";
        os << "{\"stage\": " << st.stage << ", \"residual_sup\": "
           << num(st.residual_sup) << ", \"constancy_defect\": "
           << num(st.constancy_defect) << ", \"max_abs_g\": " << num(st.max_abs_g)
           << "}";
    }
    os << "]\n";
    os << "  },\n";
    if (dec.source_expression)
        os << "  \"source_expression\": " << json(*dec.source_expression).dump()
           << ",\n";
    os << "  \"profiles\": [\n";
    for (std::size_t i = 0; i < dec.profiles.size(); ++i) {
        const SampledProfile& p = dec.profiles[i];
        os << "    {\"direction_index\": " << i << ", \"t_min\": " << num(p.t_min)
           << ", \"t_max\": " << num(p.t_max) << ", \"step\": " << num(p.step)
           << ", \"base_point\": " << num(p.base_point) << ", \"values\": [";
        for (std::size_t k = 0; k < p.values.size(); ++k) {
            if (k) os << ", ";
            os << num(p.values[k]);
        }
        os << "]}";
        os << (i + 1 < dec.profiles.size() ? ",\n" : "\n");
    }
    os << "  ]\n";
    os << "}\n";
    return os.str();
}

Decomposition decode_decomposition(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(ErrorKind::InputFormat, std::string("decomposition file parse error: ") +
                                          e.what());
    }
    Decomposition dec;
    const int version = static_cast<int>(require_number(j, "format_version"));
    if (version != kFormatVersion)
        raise(ErrorKind::InputFormat,
              "unsupported format_version " + std::to_string(version));

    for (const auto& d : require(j, "directions")) {
        if (!d.is_array() || d.size() != 2)
            raise(ErrorKind::InputFormat, "directions entries must be [a, b]");
        dec.directions.dirs.push_back({d[0].get<double>(), d[1].get<double>()});
    }
    const auto& dom = require(j, "domain");
    if (!dom.is_array() || dom.size() != 4)
        raise(ErrorKind::InputFormat, "domain must be [x0, x1, y0, y1]");
    dec.domain = {dom[0].get<double>(), dom[1].get<double>(), dom[2].get<double>(),
                  dom[3].get<double>()};
    const std::string method = require(j, "method").get<std::string>();
    if (method == "symbolic")
        dec.method = DerivMethod::Symbolic;
    else if (method == "numeric")
        dec.method = DerivMethod::Numeric;
    else
        raise(ErrorKind::InputFormat, "unknown method '" + method + "'");
    dec.reconstruction_sup_error = require_number(j, "reconstruction_sup_error");
    dec.separation_defect = require_number(j, "separation_defect");

    const auto& meta = require(j, "metadata");
    dec.grid_n = static_cast<int>(require_number(meta, "grid_n"));
    dec.profile_grid_n =
        static_cast<std::size_t>(require_number(meta, "profile_grid_n"));
    const auto& ap = require(meta, "axis_pair");
    dec.axis_pair = {ap[0].get<int>(), ap[1].get<int>()};
    const auto& bp = require(meta, "base_point");
    dec.base_point = {bp[0].get<double>(), bp[1].get<double>()};
    dec.max_abs_f = require_number(meta, "max_abs_f");
    for (const auto& st : require(meta, "stages")) {
        StageDiagnostics s;
        s.stage = static_cast<int>(require_number(st, "stage"));
        s.residual_sup = require_number(st, "residual_sup");
        s.constancy_defect = require_number(st, "constancy_defect");
        s.max_abs_g = require_number(st, "max_abs_g");
        dec.stages.push_back(s);
    }
    if (j.contains("source_expression"))
        dec.source_expression = j["source_expression"].get<std::string>();

    const auto& profs = require(j, "profiles");
    if (!profs.is_array() || profs.size() != dec.directions.size())
        raise(ErrorKind::InputFormat, "one profile per direction required");
    dec.profiles.resize(profs.size());
    for (const auto& pj : profs) {
        const auto idx = static_cast<std::size_t>(require_number(pj, "direction_index"));
        if (idx >= dec.profiles.size())
            raise(ErrorKind::InputFormat, "profile direction_index out of range");
        SampledProfile p;
        p.t_min = require_number(pj, "t_min");
        p.t_max = require_number(pj, "t_max");
        p.step = require_number(pj, "step");
        p.base_point = require_number(pj, "base_point");
        const auto& vals = require(pj, "values");
        if (!vals.is_array())
            raise(ErrorKind::InputFormat, "profile values must be an array");
        p.values.reserve(vals.size());
        for (const auto& v : vals) {
            if (!v.is_number())
                raise(ErrorKind::InputFormat, "non-numeric profile value");
            p.values.push_back(v.get<double>());
        }
        if (p.step <= 0.0 || p.values.size() < 2)
            raise(ErrorKind::InputFormat, "malformed profile grid");
        const double expect =
            std::round((p.t_max - p.t_min) / p.step) + 1.0;
        if (std::abs(expect - static_cast<double>(p.values.size())) > 0.5 ||
            std::abs((p.t_min + p.step * (static_cast<double>(p.values.size()) - 1.0)) -
                     p.t_max) > 1e-9 * (std::abs(p.t_max) + p.step))
            raise(ErrorKind::InputFormat,
                  "profile values array does not match its t grid (truncated file?)");
        if (p.base_point < p.t_min - 1e-12 || p.base_point > p.t_max + 1e-12)
            raise(ErrorKind::InputFormat, "profile base point outside its range");
        dec.profiles[idx] = std::move(p);
    }
    return dec;
}

void write_decomposition_file(const Decomposition& dec, const std::string& path) {
    store_text(path, encode_decomposition(dec));
}

Decomposition read_decomposition_file(const std::string& path) {
    return decode_decomposition(load_text(path));
}

// ---------------------------------------------------------------------------

BivariateFunction ingest_samples(const std::string& path, int smoothness_hint) {
    std::ifstream in(path);
    if (!in)
        raise(ErrorKind::InputFormat, "cannot open samples file: " + path);
    std::string header;
    if (!std::getline(in, header))
        raise(ErrorKind::InputFormat, "empty samples file");
    // tolerate whitespace and \r
    std::string normalized;
    for (char c : header)
        if (!std::isspace(static_cast<unsigned char>(c)))
            normalized += c;
    if (normalized != "x,y,f")
        raise(ErrorKind::InputFormat, "samples header must be 'x,y,f'");

    struct Row {
        double x, y, f;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos)
            continue;
        Row r{};
        char extra = 0;
        if (std::sscanf(line.c_str(), " %lf , %lf , %lf %c", &r.x, &r.y, &r.f,
                        &extra) < 3)
            raise(ErrorKind::InputFormat,
                  "non-numeric row at line " + std::to_string(lineno));
        if (!std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.f))
            raise(ErrorKind::InputFormat,
                  "non-finite value at line " + std::to_string(lineno));
        rows.push_back(r);
    }
    if (rows.empty())
        raise(ErrorKind::InputFormat, "samples file has no data rows");

    auto unique_sorted = [](std::vector<double> v, const char* axis) {
        std::sort(v.begin(), v.end());
        std::vector<double> u;
        const double span = std::max(v.back() - v.front(), 1e-300);
        for (double x : v)
            if (u.empty() || x - u.back() > 1e-12 * span)
                u.push_back(x);
        if (u.size() < 33)
            raise(ErrorKind::InputFormat,
                  std::string("need at least 33 distinct ") + axis +
                      " coordinates, found " + std::to_string(u.size()));
        // uniformity: jitter beyond 1e-9 relative is rejected
        const double h = (u.back() - u.front()) / static_cast<double>(u.size() - 1);
        for (std::size_t i = 1; i < u.size(); ++i) {
            if (std::abs((u[i] - u[i - 1]) - h) > 1e-9 * std::abs(h))
                raise(ErrorKind::InputFormat,
                      std::string("non-uniform ") + axis + " spacing near " +
                          format_double(u[i]));
        }
        return u;
    };

    std::vector<double> xs, ys;
    {
        std::vector<double> ax, ay;
        ax.reserve(rows.size());
        ay.reserve(rows.size());
        for (const Row& r : rows) {
            ax.push_back(r.x);
            ay.push_back(r.y);
        }
        xs = unique_sorted(std::move(ax), "x");
        ys = unique_sorted(std::move(ay), "y");
    }

    GridSamples g;
    g.nx = xs.size();
    g.ny = ys.size();
    g.x0 = xs.front();
    g.y0 = ys.front();
    g.hx = (xs.back() - xs.front()) / static_cast<double>(g.nx - 1);
    g.hy = (ys.back() - ys.front()) / static_cast<double>(g.ny - 1);
    g.values.assign(g.nx * g.ny, 0.0);
    std::vector<char> seen(g.nx * g.ny, 0);

    auto index_of = [](const std::vector<double>& axis, double v, double h) {
        const auto i = static_cast<std::ptrdiff_t>(
            std::llround((v - axis.front()) / h));
        if (i < 0 || i >= static_cast<std::ptrdiff_t>(axis.size()) ||
            std::abs(axis.front() + static_cast<double>(i) * h - v) > 1e-6 * std::abs(h))
            return static_cast<std::ptrdiff_t>(-1);
        return i;
    };

    for (const Row& r : rows) {
        const auto i = index_of(xs, r.x, g.hx);
        const auto jj = index_of(ys, r.y, g.hy);
        if (i < 0 || jj < 0)
            raise(ErrorKind::InputFormat,
                  "sample (" + format_double(r.x) + ", " + format_double(r.y) +
                      ") is off the detected grid");
        const std::size_t at = static_cast<std::size_t>(jj) * g.nx +
                               static_cast<std::size_t>(i);
        if (seen[at])
            raise(ErrorKind::InputFormat,
                  "duplicate sample at (" + format_double(r.x) + ", " +
                      format_double(r.y) + ")");
        seen[at] = 1;
        g.values[at] = r.f;
    }
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i)
            if (!seen[j * g.nx + i])
                raise(ErrorKind::InputFormat,
                      "missing grid point (" + format_double(xs[i]) + ", " +
                          format_double(ys[j]) + ")");

    return BivariateFunction::from_grid(std::move(g), smoothness_hint);
}

void write_samples(const BivariateFunction& F, Rect domain, int nx, int ny,
                   const std::string& path) {
    if (nx < 2 || ny < 2)
        raise(ErrorKind::InputFormat, "sample grid needs at least 2 nodes per axis");
    std::ostringstream os;
    os << "x,y,f\n";
    const double hx = domain.width() / static_cast<double>(nx - 1);
    const double hy = domain.height() / static_cast<double>(ny - 1);
    for (int j = 0; j < ny; ++j) {
        const double y = j + 1 == ny ? domain.y1 : domain.y0 + hy * j;
        for (int i = 0; i < nx; ++i) {
            const double x = i + 1 == nx ? domain.x1 : domain.x0 + hx * i;
            os << format_double(x) << "," << format_double(y) << ","
               << format_double(F.eval({x, y})) << "\n";
        }
    }
    store_text(path, os.str());
}

void emit_plot_data(const Decomposition& dec, const BivariateFunction& F,
                    const std::string& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec)
        raise(ErrorKind::InputFormat, "cannot create directory: " + directory);

    for (std::size_t i = 0; i < dec.profiles.size(); ++i) {
        const SampledProfile& p = dec.profiles[i];
        std::ostringstream os;
        for (std::size_t m = 0; m < p.values.size(); ++m)
            os << format_double(p.node(m)) << " " << format_double(p.values[m])
               << "\n";
        store_text((fs::path(directory) / ("profile_" + std::to_string(i) + ".dat"))
                       .string(),
                   os.str());
    }

    std::ostringstream os;
    const int n = 101;
    const double hx = dec.domain.width() / (n - 1);
    const double hy = dec.domain.height() / (n - 1);
    for (int j = 0; j < n; ++j) {
        const double y = j + 1 == n ? dec.domain.y1 : dec.domain.y0 + hy * j;
        for (int i = 0; i < n; ++i) {
            const double x = i + 1 == n ? dec.domain.x1 : dec.domain.x0 + hx * i;
            const double f = F.eval({x, y});
            const double r = reconstruct(dec, x, y);
            os << format_double(x) << " " << format_double(y) << " "
               << format_double(f) << " " << format_double(r) << " "
               << format_double(f - r) << "\n";
        }
    }
    store_text((fs::path(directory) / "field.dat").string(), os.str());
}

} // namespace ridge
