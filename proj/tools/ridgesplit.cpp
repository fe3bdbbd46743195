// ridgesplit: decompose bivariate ridge-function sums into smooth sampled
// profiles, verify reconstructions, and check plane-wave PDE solutions.
//
// Exit codes: 0 success, 1 validation/verification failure, 2 input/format
// error, 3 representability defect.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ridge/calculus.hpp"
#include "ridge/decompose.hpp"
#include "ridge/errors.hpp"
#include "ridge/geometry.hpp"
#include "ridge/io.hpp"
#include "ridge/kernels.hpp"
#include "ridge/pde.hpp"

using namespace ridge;
using ordered_json = nlohmann::ordered_json;

namespace {

const char* kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::Syntax: return "syntax";
    case ErrorKind::UnknownIdentifier: return "unknown_identifier";
    case ErrorKind::UnknownFunction: return "unknown_function";
    case ErrorKind::EvalDomain: return "eval_domain";
    case ErrorKind::MissingBinding: return "missing_binding";
    case ErrorKind::InputFormat: return "input_format";
    case ErrorKind::InvalidDirections: return "invalid_directions";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::OutOfDomain: return "out_of_domain";
    case ErrorKind::OutOfRange: return "out_of_range";
    case ErrorKind::Smoothness: return "smoothness";
    case ErrorKind::Representability: return "representability";
    case ErrorKind::Verification: return "verification";
    case ErrorKind::Internal: return "internal";
    }
    return "unknown";
}

void print_result(const ordered_json& j) {
    std::cout << "RESULT " << j.dump() << "\n";
}

[[noreturn]] void fail(const std::string& cmd, const Error& e) {
    ordered_json j;
    j["cmd"] = cmd;
    j["status"] = "error";
    j["kind"] = kind_name(e.kind());
    j["message"] = e.what();
    print_result(j);
    std::exit(e.cli_exit_code());
}

std::vector<double> parse_csv_numbers(const std::string& text, char sep,
                                      const std::string& what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find(sep, pos);
        const std::string tok =
            text.substr(pos, next == std::string::npos ? next : next - pos);
        if (tok.find_first_not_of(" \t") == std::string::npos)
            raise(ErrorKind::InputFormat, "empty field in " + what + " '" + text + "'");
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        while (end && *end == ' ')
            ++end;
        if (!end || *end != '\0' || !std::isfinite(v))
            raise(ErrorKind::InputFormat,
                  "bad number '" + tok + "' in " + what);
        out.push_back(v);
        if (next == std::string::npos)
            break;
        pos = next + 1;
    }
    return out;
}

std::vector<Direction> parse_pairs(const std::string& text, const std::string& what) {
    std::vector<Direction> dirs;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find(';', pos);
        const std::string seg =
            text.substr(pos, next == std::string::npos ? next : next - pos);
        const auto nums = parse_csv_numbers(seg, ',', what);
        if (nums.size() != 2)
            raise(ErrorKind::InputFormat,
                  what + " entries must be 'a,b' pairs, got '" + seg + "'");
        dirs.push_back({nums[0], nums[1]});
        if (next == std::string::npos)
            break;
        pos = next + 1;
    }
    if (dirs.empty())
        raise(ErrorKind::InputFormat, "no entries in " + what);
    return dirs;
}

Rect parse_domain(const std::string& text) {
    const auto v = parse_csv_numbers(text, ',', "--domain");
    if (v.size() != 4)
        raise(ErrorKind::InputFormat, "--domain must be 'x0,x1,y0,y1'");
    Rect r{v[0], v[1], v[2], v[3]};
    if (r.degenerate())
        raise(ErrorKind::InputFormat, "--domain must satisfy x0 < x1 and y0 < y1");
    return r;
}

struct InputSource {
    std::string expression;
    std::string samples_path;
    int k_hint = -1;

    BivariateFunction load() const {
        if (!expression.empty() && !samples_path.empty())
            raise(ErrorKind::InputFormat, "pass exactly one of --f and --samples");
        if (!expression.empty())
            return BivariateFunction::from_expression_text(
                expression, k_hint >= 0 ? k_hint : kSmoothHint);
        if (!samples_path.empty())
            return ingest_samples(samples_path, k_hint >= 0 ? k_hint : 2);
        raise(ErrorKind::InputFormat, "pass one of --f and --samples");
    }
};

int cmd_check_dirs(const std::string& dirs_text, double tol) {
    const std::string cmd = "check-dirs";
    std::vector<Direction> dirs;
    try {
        dirs = parse_pairs(dirs_text, "--dirs");
    } catch (const Error& e) {
        fail(cmd, e);
    }
    ordered_json pairs = ordered_json::array();
    bool valid = true;
    std::string reason;
    for (std::size_t i = 0; i < dirs.size(); ++i)
        if (dirs[i].a == 0.0 && dirs[i].b == 0.0) {
            valid = false;
            reason = "zero vector at index " + std::to_string(i);
        }
    if (valid) {
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            for (std::size_t j = i + 1; j < dirs.size(); ++j) {
                const double c = normalized_cross(dirs[i], dirs[j]);
                std::printf("pair (%zu,%zu): normalized cross product %s\n", i, j,
                            format_double(c).c_str());
                pairs.push_back({{"i", i}, {"j", j}, {"cross", c}});
                if (c <= tol) {
                    valid = false;
                    reason = "dependent pair (" + std::to_string(i) + "," +
                             std::to_string(j) + ")";
                }
            }
        }
    }
    ordered_json j;
    j["cmd"] = cmd;
    j["status"] = valid ? "ok" : "invalid";
    j["n"] = dirs.size();
    j["pairs"] = pairs;
    if (!valid)
        j["reason"] = reason;
    print_result(j);
    return valid ? 0 : 1;
}

int cmd_decompose(const InputSource& src, const std::string& dirs_text,
                  const std::string& domain_text, int grid_n,
                  const std::string& method_name, const std::string& out_path,
                  const std::string& plot_dir, const std::string& axis_pair_text,
                  bool allow_high_order_grid) {
    const std::string cmd = "decompose";
    try {
        BivariateFunction F = src.load();
        DirectionSet ds = validate_directions(parse_pairs(dirs_text, "--dirs"));
        const Rect domain = parse_domain(domain_text);
        DecomposeOptions opts;
        if (grid_n < 33)
            raise(ErrorKind::InputFormat, "--grid must be at least 33");
        opts.grid_n = grid_n;
        if (method_name == "symbolic")
            opts.method = DerivMethod::Symbolic;
        else if (method_name == "numeric")
            opts.method = DerivMethod::Numeric;
        else
            raise(ErrorKind::InputFormat, "--method must be symbolic or numeric");
        if (src.expression.empty() && opts.method == DerivMethod::Symbolic)
            opts.method = DerivMethod::Numeric; // samples cannot differentiate symbolically
        if (!axis_pair_text.empty()) {
            const auto v = parse_csv_numbers(axis_pair_text, ',', "--axis-pair");
            if (v.size() != 2)
                raise(ErrorKind::InputFormat, "--axis-pair must be 'i,j'");
            opts.axis_pair = std::make_pair(static_cast<int>(v[0]),
                                            static_cast<int>(v[1]));
        }
        opts.allow_high_order_grid = allow_high_order_grid;

        Decomposition dec = decompose(F, ds, domain, opts);
        if (!src.expression.empty())
            dec.source_expression = src.expression;
        write_decomposition_file(dec, out_path);
        if (!plot_dir.empty())
            emit_plot_data(dec, F, plot_dir);

        const double rel = dec.reconstruction_sup_error / (1.0 + dec.max_abs_f);
        std::printf("reconstruction_sup_error %s (relative %s)\n",
                    format_double(dec.reconstruction_sup_error).c_str(),
                    format_double(rel).c_str());
        std::printf("separation_defect %s\n",
                    format_double(dec.separation_defect).c_str());

        ordered_json j;
        j["cmd"] = cmd;
        j["status"] = "ok";
        j["reconstruction_sup_error"] = dec.reconstruction_sup_error;
        j["relative_error"] = rel;
        j["separation_defect"] = dec.separation_defect;
        j["out"] = out_path;
        print_result(j);
        return 0;
    } catch (const Error& e) {
        fail(cmd, e);
    }
}

int cmd_verify(const std::string& dec_path, const InputSource& src, double tol,
               int grid_n) {
    const std::string cmd = "verify";
    try {
        Decomposition dec = read_decomposition_file(dec_path);
        BivariateFunction F = src.load();
        // fresh grid, distinct from the one stored with the decomposition
        const int nx = grid_n > 0 ? grid_n : 113;
        const int ny = grid_n > 0 ? grid_n + 14 : 127;
        const auto err = reconstruction_error(dec, F, dec.domain, nx, ny);
        const double rel = err.sup_error / (1.0 + err.max_abs_f);
        const bool pass = rel <= tol;
        std::printf("sup_error %s (relative %s) tolerance %s -> %s\n",
                    format_double(err.sup_error).c_str(), format_double(rel).c_str(),
                    format_double(tol).c_str(), pass ? "pass" : "fail");
        ordered_json j;
        j["cmd"] = cmd;
        j["status"] = pass ? "ok" : "fail";
        j["sup_error"] = err.sup_error;
        j["relative_error"] = rel;
        j["tolerance"] = tol;
        print_result(j);
        return pass ? 0 : 1;
    } catch (const Error& e) {
        fail(cmd, e);
    }
}

int cmd_ridge_defect(const InputSource& src, const std::string& dirs_text,
                     const std::string& domain_text, const std::string& deltas_text,
                     int grid_n, double tol) {
    const std::string cmd = "ridge-defect";
    try {
        BivariateFunction F = src.load();
        DirectionSet ds = validate_directions(parse_pairs(dirs_text, "--dirs"));
        const Rect domain = parse_domain(domain_text);
        std::vector<double> deltas;
        if (!deltas_text.empty()) {
            deltas = parse_csv_numbers(deltas_text, ',', "--deltas");
        } else {
            deltas.assign(ds.size(),
                          0.125 * std::min(domain.width(), domain.height()));
        }
        const double defect =
            representability_defect(F, ds, deltas, domain, grid_n);
        double max_f = 0.0;
        for (int j = 0; j < 33; ++j)
            for (int i = 0; i < 33; ++i)
                max_f = std::max(max_f, std::abs(F.eval(
                                            {domain.x0 + domain.width() * i / 32.0,
                                             domain.y0 + domain.height() * j / 32.0})));
        const double rel = defect / (1.0 + max_f);
        const bool pass = rel <= tol;
        std::printf("iterated_increment_defect %s (relative %s) -> %s\n",
                    format_double(defect).c_str(), format_double(rel).c_str(),
                    pass ? "pass" : "defect");
        ordered_json j;
        j["cmd"] = cmd;
        j["status"] = pass ? "ok" : "defect";
        j["defect"] = defect;
        j["relative_defect"] = rel;
        j["tolerance"] = tol;
        print_result(j);
        return pass ? 0 : 3;
    } catch (const Error& e) {
        fail(cmd, e);
    }
}

std::vector<Expr> parse_profiles(const std::string& text) {
    std::vector<Expr> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find(';', pos);
        const std::string seg =
            text.substr(pos, next == std::string::npos ? next : next - pos);
        out.push_back(Expr::parse(seg, {"t"}));
        if (next == std::string::npos)
            break;
        pos = next + 1;
    }
    return out;
}

int cmd_pde_verify(const std::string& factors_text, const std::string& u_text,
                   const std::string& domain_text, int grid_n, double tol,
                   bool corollary) {
    const std::string cmd = "pde-verify";
    try {
        auto factor_dirs = parse_pairs(factors_text, "--factors");
        std::vector<PlaneWaveOperator::Factor> factors;
        for (const auto& d : factor_dirs)
            factors.push_back({d.a, d.b});
        auto op = make_operator(std::move(factors));
        auto u = BivariateFunction::from_expression_text(u_text);
        const Rect domain = parse_domain(domain_text);

        if (corollary) {
            auto rep = corollary_check(op, u, domain, grid_n, tol);
            ordered_json j;
            j["cmd"] = cmd;
            if (!rep.decomposition_ok) {
                j["status"] = "defect";
                j["diagnostic"] = rep.diagnostic;
                print_result(j);
                return 3;
            }
            std::printf("decomposition reconstruction_sup_error %s\n",
                        format_double(rep.dec->reconstruction_sup_error).c_str());
            std::printf("pde max_residual %s tolerance %s -> %s\n",
                        format_double(rep.pde.max_residual).c_str(),
                        format_double(rep.pde.tolerance).c_str(),
                        rep.pde.pass ? "pass" : "fail");
            j["status"] = rep.pde.pass ? "ok" : "fail";
            j["reconstruction_sup_error"] = rep.dec->reconstruction_sup_error;
            j["max_residual"] = rep.pde.max_residual;
            j["tolerance"] = rep.pde.tolerance;
            j["smoothness_warning"] = rep.smoothness_warning;
            print_result(j);
            return rep.pde.pass ? 0 : 1;
        }

        auto rep = verify_solution(op, u, domain, grid_n, tol);
        std::printf("max_residual %s tolerance %s -> %s\n",
                    format_double(rep.max_residual).c_str(),
                    format_double(rep.tolerance).c_str(),
                    rep.pass ? "pass" : "fail");
        ordered_json j;
        j["cmd"] = cmd;
        j["status"] = rep.pass ? "ok" : "fail";
        j["max_residual"] = rep.max_residual;
        j["max_abs_u"] = rep.max_abs_u;
        j["tolerance"] = rep.tolerance;
        print_result(j);
        return rep.pass ? 0 : 1;
    } catch (const Error& e) {
        fail(cmd, e);
    }
}

int cmd_pde_solve(const std::string& factors_text, const std::string& v_text,
                  const std::string& domain_text, int grid_n,
                  const std::string& out_path) {
    const std::string cmd = "pde-solve";
    try {
        auto factor_dirs = parse_pairs(factors_text, "--factors");
        std::vector<PlaneWaveOperator::Factor> factors;
        for (const auto& d : factor_dirs)
            factors.push_back({d.a, d.b});
        auto op = make_operator(std::move(factors));
        auto profiles = parse_profiles(v_text);
        auto u = plane_wave_solution(op, profiles);
        const Rect domain = parse_domain(domain_text);
        write_samples(u, domain, grid_n, grid_n, out_path);
        std::printf("wrote %dx%d samples of the plane-wave sum to %s\n", grid_n,
                    grid_n, out_path.c_str());
        ordered_json j;
        j["cmd"] = cmd;
        j["status"] = "ok";
        j["out"] = out_path;
        j["grid"] = grid_n;
        print_result(j);
        return 0;
    } catch (const Error& e) {
        fail(cmd, e);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ridge-function decomposition toolkit"};
    app.require_subcommand(1);

    // check-dirs
    auto* check = app.add_subcommand("check-dirs",
                                     "validate pairwise independence of directions");
    std::string cd_dirs;
    double cd_tol = 1e-12;
    check->add_option("--dirs", cd_dirs, "directions as 'a,b;a,b;...'")->required();
    check->add_option("--tol", cd_tol, "independence tolerance (normalized cross)");

    // decompose
    auto* dc = app.add_subcommand("decompose",
                                  "decompose F into ridge profiles along --dirs");
    InputSource dc_src;
    std::string dc_dirs, dc_domain = "-1,1,-1,1", dc_method = "symbolic";
    std::string dc_out = "decomposition.json", dc_plot, dc_axis;
    int dc_grid = 1025;
    dc->add_option("--f", dc_src.expression, "expression for F over x, y");
    dc->add_option("--samples", dc_src.samples_path, "CSV grid samples 'x,y,f'");
    dc->add_option("--dirs", dc_dirs, "directions as 'a,b;a,b;...'")->required();
    dc->add_option("--domain", dc_domain, "rectangle 'x0,x1,y0,y1'");
    dc->add_option("--grid", dc_grid, "working grid nodes per axis (>= 33)");
    dc->add_option("--method", dc_method, "symbolic|numeric");
    dc->add_option("--out", dc_out, "decomposition output path");
    dc->add_option("--emit-plot-data", dc_plot, "directory for plot tables");
    dc->add_option("--axis-pair", dc_axis, "override the axis pair as 'i,j'");
    dc->add_option("--k-hint", dc_src.k_hint, "smoothness hint for F");
    bool dc_high_order = false;
    dc->add_flag("--allow-high-order-grid", dc_high_order,
                 "accept numeric derivatives of grid samples above order 2 "
                 "(noise-amplifying; lowers accuracy expectations)");

    // verify
    auto* vf = app.add_subcommand("verify",
                                  "re-check a stored decomposition against F");
    InputSource vf_src;
    std::string vf_dec;
    double vf_tol = 1e-6;
    int vf_grid = 0;
    vf->add_option("--decomposition", vf_dec, "decomposition file")->required();
    vf->add_option("--f", vf_src.expression, "expression for F");
    vf->add_option("--samples", vf_src.samples_path, "CSV grid samples");
    vf->add_option("--tol", vf_tol, "relative sup-error tolerance");
    vf->add_option("--grid", vf_grid, "verification nodes per axis (default 113x127)");
    vf->add_option("--k-hint", vf_src.k_hint, "smoothness hint for F");

    // ridge-defect
    auto* rd = app.add_subcommand("ridge-defect",
                                  "iterated-increment representability defect");
    InputSource rd_src;
    std::string rd_dirs, rd_domain = "-1,1,-1,1", rd_deltas;
    int rd_grid = 65;
    double rd_tol = 1e-6;
    rd->add_option("--f", rd_src.expression, "expression for F");
    rd->add_option("--samples", rd_src.samples_path, "CSV grid samples");
    rd->add_option("--dirs", rd_dirs, "directions as 'a,b;a,b;...'")->required();
    rd->add_option("--domain", rd_domain, "rectangle 'x0,x1,y0,y1'");
    rd->add_option("--deltas", rd_deltas, "increment offsets 'd,d,...'");
    rd->add_option("--grid", rd_grid, "probe nodes per axis");
    rd->add_option("--tol", rd_tol, "relative defect tolerance");
    rd->add_option("--k-hint", rd_src.k_hint, "smoothness hint for F");

    // pde
    auto* pde = app.add_subcommand("pde", "plane-wave operator tools");
    pde->require_subcommand(1);
    auto* pv = pde->add_subcommand("verify", "apply the operator and check residual");
    std::string pv_factors, pv_u, pv_domain = "-1,1,-1,1";
    int pv_grid = 101;
    double pv_tol = 1e-8;
    bool pv_cor = false;
    pv->add_option("--factors", pv_factors, "factors as 'alpha,beta;...'")->required();
    pv->add_option("--u", pv_u, "candidate solution over x, y")->required();
    pv->add_option("--domain", pv_domain, "rectangle 'x0,x1,y0,y1'");
    pv->add_option("--grid", pv_grid, "residual grid nodes per axis");
    pv->add_option("--tol", pv_tol, "residual tolerance, scaled by 1+max|u|");
    pv->add_flag("--corollary", pv_cor,
                 "decompose u along the wave directions first, then verify the "
                 "reconstructed sum");

    auto* ps = pde->add_subcommand("solve", "sample a plane-wave sum");
    std::string ps_factors, ps_v, ps_domain = "-1,1,-1,1", ps_out = "solution.csv";
    int ps_grid = 129;
    ps->add_option("--factors", ps_factors, "factors as 'alpha,beta;...'")->required();
    ps->add_option("--v", ps_v, "profiles over t, ';'-separated, one per factor")
        ->required();
    ps->add_option("--domain", ps_domain, "rectangle 'x0,x1,y0,y1'");
    ps->add_option("--grid", ps_grid, "sample nodes per axis");
    ps->add_option("--out", ps_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (check->parsed())
        return cmd_check_dirs(cd_dirs, cd_tol);
    if (dc->parsed())
        return cmd_decompose(dc_src, dc_dirs, dc_domain, dc_grid, dc_method, dc_out,
                             dc_plot, dc_axis, dc_high_order);
    if (vf->parsed())
        return cmd_verify(vf_dec, vf_src, vf_tol, vf_grid);
    if (rd->parsed())
        return cmd_ridge_defect(rd_src, rd_dirs, rd_domain, rd_deltas, rd_grid,
                                rd_tol);
    if (pde->parsed()) {
        if (pv->parsed())
            return cmd_pde_verify(pv_factors, pv_u, pv_domain, pv_grid, pv_tol,
                                  pv_cor);
        if (ps->parsed())
            return cmd_pde_solve(ps_factors, ps_v, ps_domain, ps_grid, ps_out);
    }
    return 2;
}
