#include "ridge/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "ridge/errors.hpp"
#include "ridge/kernels.hpp"
#include "ridge/parallel.hpp"

namespace ridge {

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    const double h = (b - a) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = a + h * static_cast<double>(i);
    v.front() = a;
    v.back() = b;
    return v;
}

std::pair<double, double> ridge_arg_range(const Direction& d, const Rect& r) {
    const Vec2 corners[4] = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
    double lo = d.ridge_arg(corners[0]);
    double hi = lo;
    for (int i = 1; i < 4; ++i) {
        const double t = d.ridge_arg(corners[i]);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    return {lo, hi};
}

// Uniform t-grid with the base point exactly on a node, covering the padded
// range.
struct TGrid {
    double t_min = 0.0;
    double step = 0.0;
    std::size_t count = 0;
    std::size_t base_index = 0;
    double base_t = 0.0;
    double exact_lo = 0.0; // unpadded range, for pad-zone classification
    double exact_hi = 0.0;

    double node(std::size_t m) const { return t_min + static_cast<double>(m) * step; }
};

TGrid node_centered_grid(double lo, double hi, double pad_fraction, double base_t,
                         std::size_t target_count, std::optional<double> forced_step) {
    if (!(hi > lo))
        raise(ErrorKind::Internal, "degenerate ridge-argument range");
    const double span = hi - lo;
    const double plo = lo - pad_fraction * span;
    const double phi = hi + pad_fraction * span;
    target_count = std::max<std::size_t>(target_count, 9);
    double step = forced_step ? *forced_step
                              : (phi - plo) / static_cast<double>(target_count - 1);
    TGrid g;
    g.step = step;
    g.base_t = base_t;
    g.exact_lo = lo;
    g.exact_hi = hi;
    const auto n_below = static_cast<std::size_t>(
        std::max(0.0, std::ceil((base_t - plo) / step - 1e-9)));
    const auto n_above = static_cast<std::size_t>(
        std::max(0.0, std::ceil((phi - base_t) / step - 1e-9)));
    g.count = n_below + n_above + 1;
    g.base_index = n_below;
    g.t_min = base_t - static_cast<double>(n_below) * step;
    if (g.count > (std::size_t{1} << 21))
        raise(ErrorKind::InputFormat, "profile grid too fine");
    return g;
}

SampledProfile profile_shell(const TGrid& g) {
    SampledProfile p;
    p.t_min = g.t_min;
    p.step = g.step;
    p.t_max = g.node(g.count - 1);
    p.base_point = g.base_t;
    p.values.assign(g.count, 0.0);
    return p;
}

// Fills profile values from a sampler that may fail near the region
// boundary; failed nodes take the nearest sampled value. Failures inside the
// exact range are tolerated only over a thin band, otherwise the achievable
// range is reported.
template <typename Sampler>
SampledProfile sample_profile(const TGrid& g, Sampler&& sample) {
    SampledProfile p = profile_shell(g);
    std::vector<char> ok(g.count, 0);
    bool any = false;
    for (std::size_t m = 0; m < g.count; ++m) {
        if (auto v = sample(g.node(m))) {
            p.values[m] = *v;
            ok[m] = 1;
            any = true;
        }
    }
    if (!any)
        raise(ErrorKind::OutOfDomain, "profile trace entirely outside the domain");

    // nearest-known fill
    std::ptrdiff_t last = -1;
    std::vector<std::ptrdiff_t> near_left(g.count, -1), near_right(g.count, -1);
    for (std::size_t m = 0; m < g.count; ++m) {
        if (ok[m])
            last = static_cast<std::ptrdiff_t>(m);
        near_left[m] = last;
    }
    last = -1;
    for (std::size_t m = g.count; m-- > 0;) {
        if (ok[m])
            last = static_cast<std::ptrdiff_t>(m);
        near_right[m] = last;
    }
    double worst_gap = 0.0;
    double reach_lo = std::numeric_limits<double>::infinity();
    double reach_hi = -reach_lo;
    for (std::size_t m = 0; m < g.count; ++m)
        if (ok[m]) {
            reach_lo = std::min(reach_lo, g.node(m));
            reach_hi = std::max(reach_hi, g.node(m));
        }
    for (std::size_t m = 0; m < g.count; ++m) {
        if (ok[m])
            continue;
        const double t = g.node(m);
        std::ptrdiff_t pick = -1;
        if (near_left[m] >= 0 && near_right[m] >= 0)
            pick = (t - g.node(static_cast<std::size_t>(near_left[m]))) <
                           (g.node(static_cast<std::size_t>(near_right[m])) - t)
                       ? near_left[m]
                       : near_right[m];
        else
            pick = near_left[m] >= 0 ? near_left[m] : near_right[m];
        // linear extrapolation from the two nearest sampled nodes on that
        // side; plain copy when only one exists
        const auto a = static_cast<std::size_t>(pick);
        double filled = p.values[a];
        const bool from_left = pick == near_left[m];
        std::ptrdiff_t second = -1;
        if (from_left && a > 0 && ok[a - 1])
            second = static_cast<std::ptrdiff_t>(a - 1);
        else if (!from_left && a + 1 < g.count && ok[a + 1])
            second = static_cast<std::ptrdiff_t>(a + 1);
        if (second >= 0) {
            const auto b = static_cast<std::size_t>(second);
            const double slope =
                (p.values[a] - p.values[b]) / (g.node(a) - g.node(b));
            filled = p.values[a] + slope * (t - g.node(a));
        }
        p.values[m] = filled;
        if (t > g.exact_lo && t < g.exact_hi) {
            const double gap = std::abs(t - g.node(a));
            worst_gap = std::max(worst_gap, gap);
        }
    }
    const double span = g.exact_hi - g.exact_lo;
    if (worst_gap > 0.02 * span + 3.0 * g.step) {
        std::ostringstream os;
        os << "trace leaves the working domain inside the required range; "
           << "achievable t range [" << reach_lo << ", " << reach_hi
           << "] vs required [" << g.exact_lo << ", " << g.exact_hi << "]";
        raise(ErrorKind::OutOfDomain, os.str());
    }
    return p;
}

// Pins sampling points onto the lattice of grid-backed data when the
// normalizing map is the identity: finite differences and traces then touch
// sample nodes only, eliminating interpolation noise.
struct LatticeSnap {
    double x0 = 0.0, y0 = 0.0, h = 0.0;
    std::size_t nx = 0, ny = 0;

    static std::optional<LatticeSnap> detect(const BivariateFunction& f,
                                             const Mat2& M) {
        if (!f.is_grid() || !M.is_identity())
            return std::nullopt;
        const GridSamples& g = f.grid();
        if (std::abs(g.hx - g.hy) > 1e-12 * g.hx)
            return std::nullopt;
        return LatticeSnap{g.x0, g.y0, g.hx, g.nx, g.ny};
    }

    // Smallest integer vector parallel to v, or nullopt when v is not
    // lattice-rational within a small denominator.
    static std::optional<std::pair<int, int>> rational_direction(Vec2 v) {
        const double len = norm(v);
        for (int den = 1; den <= 8; ++den) {
            for (int num = -8; num <= 8; ++num) {
                if (num == 0 && den == 0)
                    continue;
                const Vec2 cand{static_cast<double>(num), static_cast<double>(den)};
                if (std::abs(cross(cand, v)) <= 1e-12 * norm(cand) * len)
                    return std::make_pair(num, den);
            }
        }
        if (std::abs(v.y) <= 1e-12 * len)
            return std::make_pair(1, 0);
        return std::nullopt;
    }

    // Finite-difference step along unit direction l that lands on lattice
    // vectors, near the requested default step.
    std::optional<double> stencil_step(Vec2 l, double eta_default) const {
        auto pq = rational_direction(l);
        if (!pq)
            return std::nullopt;
        const double base = h * std::hypot(static_cast<double>(pq->first),
                                           static_cast<double>(pq->second));
        const double k = std::max(1.0, std::round(eta_default / base));
        return k * base;
    }

    // Spacing of the ridge-argument values a*x + b*y over the lattice: the
    // profile grid aligned to it samples traces at exact argument levels.
    std::optional<double> induced_t_step(const Direction& d) const {
        auto pq = rational_direction(d.vec());
        if (!pq)
            return std::nullopt;
        const int p = pq->first, q = pq->second;
        // content of (a, b): a/p = b/q where defined
        const double content = p != 0 ? d.a / static_cast<double>(p)
                                      : d.b / static_cast<double>(q);
        const int g = std::gcd(std::abs(p), std::abs(q));
        return std::abs(content) * h * static_cast<double>(g == 0 ? 1 : g);
    }

    // Lattice nodes covering [lo, hi] along one axis, decimated to at most
    // max_count points.
    std::vector<double> lattice_axis(double origin, std::size_t count, double lo,
                                     double hi, std::size_t max_count) const {
        std::vector<double> out;
        auto first = static_cast<std::ptrdiff_t>(std::ceil((lo - origin) / h - 1e-9));
        auto last = static_cast<std::ptrdiff_t>(std::floor((hi - origin) / h + 1e-9));
        first = std::max<std::ptrdiff_t>(first, 0);
        last = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(count) - 1);
        if (last < first)
            return out;
        const auto total = static_cast<std::size_t>(last - first + 1);
        const std::size_t stride = std::max<std::size_t>(1, total / max_count);
        for (auto i = first; i <= last; i += static_cast<std::ptrdiff_t>(stride))
            out.push_back(origin + static_cast<double>(i) * h);
        return out;
    }
};

double stage_tolerance(const DecomposeOptions& opts, DerivMethod method) {
    return method == DerivMethod::Symbolic ? opts.stage_tol_symbolic
                                           : opts.stage_tol_numeric;
}

// Shared core of the separation gate: sweeps |G(x,y)-G(x,y0)-G(x0,y)+G(x0,y0)|
// over grid points that pass the filter, and reports max |G| alongside.
template <typename Filter>
std::pair<double, double> separation_sweep_nodes(const BivariateFunction& G, Vec2 base,
                                                 const std::vector<double>& xs,
                                                 const std::vector<double>& ys,
                                                 Filter&& keep) {
    std::vector<double> row_x(xs.size(), 0.0); // G(x, y0)
    std::vector<char> row_ok(xs.size(), 0);
    double g00 = 0.0;
    bool have_base = false;
    try {
        g00 = G.eval(base);
        have_base = true;
    } catch (const Error&) {
    }
    if (!have_base)
        raise(ErrorKind::OutOfDomain, "separation base point not evaluable");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Vec2 p{xs[i], base.y};
        if (!keep(p))
            continue;
        try {
            row_x[i] = G.eval(p);
            row_ok[i] = 1;
        } catch (const Error&) {
        }
    }
    double defect = 0.0;
    double max_g = std::abs(g00);
    for (std::size_t j = 0; j < ys.size(); ++j) {
        double col = 0.0;
        bool col_ok = false;
        const Vec2 pc{base.x, ys[j]};
        if (keep(pc)) {
            try {
                col = G.eval(pc);
                col_ok = true;
            } catch (const Error&) {
            }
        }
        if (!col_ok)
            continue;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!row_ok[i])
                continue;
            const Vec2 p{xs[i], ys[j]};
            if (!keep(p))
                continue;
            try {
                const double g = G.eval(p);
                max_g = std::max(max_g, std::abs(g));
                defect = std::max(defect, std::abs(g - row_x[i] - col + g00));
            } catch (const Error&) {
            }
        }
    }
    return {defect, max_g};
}

template <typename Filter>
std::pair<double, double> separation_sweep(const BivariateFunction& G, Vec2 base,
                                           const Rect& r, int grid_n, Filter&& keep) {
    return separation_sweep_nodes(G, base, linspace(r.x0, r.x1, grid_n),
                                  linspace(r.y0, r.y1, grid_n),
                                  std::forward<Filter>(keep));
}

} // namespace

double separation_defect(const BivariateFunction& G, Vec2 base, Rect domain,
                         int grid_n) {
    if (grid_n < 2)
        raise(ErrorKind::InputFormat, "separation grid needs at least 2 nodes");
    return separation_sweep(G, base, domain, grid_n, [](Vec2) { return true; }).first;
}

double representability_defect(const BivariateFunction& F, const DirectionSet& ds,
                               std::vector<double> deltas, Rect domain, int grid_n) {
    const std::size_t n = ds.size();
    if (n > 16)
        raise(ErrorKind::InputFormat, "too many directions for the iterated increment");
    if (deltas.size() != n)
        raise(ErrorKind::InputFormat, "one delta per direction required");
    if (grid_n < 2)
        raise(ErrorKind::InputFormat, "defect grid needs at least 2 nodes");

    std::vector<Vec2> shifts(n);
    for (std::size_t i = 0; i < n; ++i)
        shifts[i] = perpendicular_unit(ds[i]) * deltas[i];

    // Evaluation points must keep every subset-sum shift inside the domain.
    double pos_x = 0.0, neg_x = 0.0, pos_y = 0.0, neg_y = 0.0;
    for (const Vec2& s : shifts) {
        pos_x += std::max(0.0, s.x);
        neg_x += std::min(0.0, s.x);
        pos_y += std::max(0.0, s.y);
        neg_y += std::min(0.0, s.y);
    }
    Rect safe{domain.x0 - neg_x, domain.x1 - pos_x, domain.y0 - neg_y,
              domain.y1 - pos_y};
    if (safe.degenerate())
        raise(ErrorKind::OutOfDomain,
              "domain too small for the requested increment offsets");

    const auto xs = linspace(safe.x0, safe.x1, grid_n);
    const auto ys = linspace(safe.y0, safe.y1, grid_n);
    const std::uint32_t combos = 1u << n;

    std::vector<double> chunk_max(ys.size(), 0.0);
    parallel_for(ys.size(), [&](std::size_t jb, std::size_t je) {
        for (std::size_t j = jb; j < je; ++j) {
            double local = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const Vec2 p{xs[i], ys[j]};
                double acc = 0.0;
                for (std::uint32_t bits = 0; bits < combos; ++bits) {
                    Vec2 q = p;
                    int sign = (n - static_cast<std::size_t>(__builtin_popcount(bits))) % 2 == 0
                                   ? 1
                                   : -1;
                    for (std::size_t k = 0; k < n; ++k)
                        if (bits & (1u << k))
                            q = q + shifts[k];
                    acc += sign > 0 ? F.eval(q) : -F.eval(q);
                }
                local = std::max(local, std::abs(acc));
            }
            chunk_max[j] = local;
        }
    });
    double defect = 0.0;
    for (double v : chunk_max)
        defect = std::max(defect, v);
    return defect;
}

RidgeExtraction extract_ridge_profile(const BivariateFunction& R, Direction d,
                                      const ProfileGridSpec& spec,
                                      const Region& working,
                                      double defect_tolerance) {
    if (d.a == 0.0 && d.b == 0.0)
        raise(ErrorKind::InvalidDirections, "zero ridge direction");
    if (working.is_whole_plane() || working.empty())
        raise(ErrorKind::InputFormat, "extraction needs a finite working region");

    TGrid g = node_centered_grid(spec.t_lo, spec.t_hi, spec.pad_fraction, spec.base_t,
                                 spec.target_count, spec.forced_step);
    const Vec2 dv = d.vec();
    const double dn = dot(dv, dv);
    const double dlen = std::sqrt(dn);
    const Vec2 along{-dv.y / dlen, dv.x / dlen};

    // Chord midpoints double as the defect probe anchors.
    std::vector<Vec2> probe_pts;
    std::vector<double> probe_half;
    const std::size_t probe_stride = std::max<std::size_t>(1, g.count / 33);

    auto locate = [&](double t) -> std::optional<std::pair<Vec2, double>> {
        auto ch = working.chord(dv, t);
        if (!ch)
            return std::nullopt;
        const double smid = 0.5 * (ch->first + ch->second);
        const double half = 0.5 * (ch->second - ch->first);
        const Vec2 base{t * dv.x / dn, t * dv.y / dn};
        return std::make_pair(base + along * smid, half);
    };

    std::size_t index = 0;
    auto sampler = [&](double t) -> std::optional<double> {
        const std::size_t m = index++;
        auto loc = locate(t);
        if (!loc)
            return std::nullopt;
        Vec2 p = loc->first;
        try {
            const double v = R.eval(p);
            if (m % probe_stride == 0 && loc->second > 0.0 && t > g.exact_lo &&
                t < g.exact_hi) {
                probe_pts.push_back(p);
                probe_half.push_back(loc->second);
            }
            return v;
        } catch (const Error&) {
        }
        // boundary sliver: try off-center chord points before giving up
        for (double fr : {-0.5, 0.5, -0.9, 0.9}) {
            try {
                return R.eval(loc->first + along * (fr * loc->second));
            } catch (const Error&) {
            }
        }
        return std::nullopt;
    };

    RidgeExtraction out;
    out.profile = sample_profile(g, sampler);

    // Ridge-constancy defect: R should not vary along the chord.
    double defect = 0.0;
    for (std::size_t k = 0; k < probe_pts.size(); ++k) {
        const Vec2 p = probe_pts[k];
        double ref;
        try {
            ref = R.eval(p);
        } catch (const Error&) {
            continue;
        }
        for (double fr : {-0.45, -0.25, 0.25, 0.45}) {
            const Vec2 q = p + along * (2.0 * fr * probe_half[k]);
            try {
                defect = std::max(defect, std::abs(R.eval(q) - ref));
            } catch (const Error&) {
            }
        }
    }
    out.constancy_defect = defect;
    if (defect_tolerance > 0.0 && defect > defect_tolerance) {
        std::ostringstream os;
        os << "residual is not a ridge function along (" << d.a << ", " << d.b
           << "): constancy defect " << defect << " exceeds tolerance "
           << defect_tolerance;
        raise(ErrorKind::Representability, os.str());
    }
    return out;
}

namespace {

// ---------------------------------------------------------------------------
// Axis restrictions h1(x') = G(x', .), h2(y') = G(., y') via the separation
// structure, anchored at the base point: h1(x0') = G(base), h2(y0') = 0.
// Works column/row-wise so slanted working regions resolve by chaining.

struct AxisRestrictions {
    SampledProfile h1;
    SampledProfile h2;
};

AxisRestrictions restrict_separated(const BivariateFunction& G, const Region& W,
                                    Vec2 base, const TGrid& gx, const TGrid& gy) {
    auto eval_at = [&](Vec2 p) -> std::optional<double> {
        if (!W.contains(p, 1e-12))
            return std::nullopt;
        try {
            return G.eval(p);
        } catch (const Error&) {
            return std::nullopt;
        }
    };

    SampledProfile h1 = profile_shell(gx);
    SampledProfile h2 = profile_shell(gy);
    std::vector<char> ok1(gx.count, 0), ok2(gy.count, 0);

    const double g00 = [&] {
        auto v = eval_at(base);
        if (!v)
            raise(ErrorKind::OutOfDomain, "base point not evaluable");
        return *v;
    }();
    h1.values[gx.base_index] = g00;
    ok1[gx.base_index] = 1;
    h2.values[gy.base_index] = 0.0;
    ok2[gy.base_index] = 1;

    auto row_interval = [&](double y) -> std::optional<std::pair<double, double>> {
        auto ch = W.chord({0.0, 1.0}, y);
        if (!ch)
            return std::nullopt;
        // chord() parameterizes along (-1, 0): s in [lo, hi] -> x in [-hi, -lo]
        return std::make_pair(-ch->second, -ch->first);
    };
    auto col_interval = [&](double x) -> std::optional<std::pair<double, double>> {
        auto ch = W.chord({1.0, 0.0}, x);
        if (!ch)
            return std::nullopt;
        // parameterized along (0, 1): s equals y directly
        return *ch;
    };

    // Alternating passes; rectangles resolve in the first two.
    bool progress = true;
    int guard = 0;
    while (progress && guard++ < 64) {
        progress = false;
        // nearest known h1 index to the left/right of each position
        std::vector<std::ptrdiff_t> left1(gx.count, -1), right1(gx.count, -1);
        std::ptrdiff_t last = -1;
        for (std::size_t i = 0; i < gx.count; ++i) {
            if (ok1[i]) last = static_cast<std::ptrdiff_t>(i);
            left1[i] = last;
        }
        last = -1;
        for (std::size_t i = gx.count; i-- > 0;) {
            if (ok1[i]) last = static_cast<std::ptrdiff_t>(i);
            right1[i] = last;
        }
        for (std::size_t k = 0; k < gy.count; ++k) {
            if (ok2[k])
                continue;
            const double y = gy.node(k);
            auto iv = row_interval(y);
            if (!iv)
                continue;
            // candidate h1 node nearest the row-chord center
            const double xc = 0.5 * (iv->first + iv->second);
            auto im = static_cast<std::ptrdiff_t>(
                std::llround((xc - gx.t_min) / gx.step));
            im = std::clamp<std::ptrdiff_t>(im, 0, static_cast<std::ptrdiff_t>(gx.count - 1));
            for (std::ptrdiff_t cand :
                 {left1[static_cast<std::size_t>(im)], right1[static_cast<std::size_t>(im)]}) {
                if (cand < 0)
                    continue;
                const double x = gx.node(static_cast<std::size_t>(cand));
                if (x < iv->first - 1e-12 || x > iv->second + 1e-12)
                    continue;
                if (auto v = eval_at({x, y})) {
                    h2.values[k] = *v - h1.values[static_cast<std::size_t>(cand)];
                    ok2[k] = 1;
                    progress = true;
                    break;
                }
            }
        }
        std::vector<std::ptrdiff_t> left2(gy.count, -1), right2(gy.count, -1);
        last = -1;
        for (std::size_t i = 0; i < gy.count; ++i) {
            if (ok2[i]) last = static_cast<std::ptrdiff_t>(i);
            left2[i] = last;
        }
        last = -1;
        for (std::size_t i = gy.count; i-- > 0;) {
            if (ok2[i]) last = static_cast<std::ptrdiff_t>(i);
            right2[i] = last;
        }
        for (std::size_t i = 0; i < gx.count; ++i) {
            if (ok1[i])
                continue;
            const double x = gx.node(i);
            auto iv = col_interval(x);
            if (!iv)
                continue;
            const double yc = 0.5 * (iv->first + iv->second);
            auto km = static_cast<std::ptrdiff_t>(
                std::llround((yc - gy.t_min) / gy.step));
            km = std::clamp<std::ptrdiff_t>(km, 0, static_cast<std::ptrdiff_t>(gy.count - 1));
            for (std::ptrdiff_t cand :
                 {left2[static_cast<std::size_t>(km)], right2[static_cast<std::size_t>(km)]}) {
                if (cand < 0)
                    continue;
                const double y = gy.node(static_cast<std::size_t>(cand));
                if (y < iv->first - 1e-12 || y > iv->second + 1e-12)
                    continue;
                if (auto v = eval_at({x, y})) {
                    h1.values[i] = *v - h2.values[static_cast<std::size_t>(cand)];
                    ok1[i] = 1;
                    progress = true;
                    break;
                }
            }
        }
    }
    // pad-zone fill + coverage check, reusing the profile filler
    std::size_t idx1 = 0;
    SampledProfile f1 = sample_profile(gx, [&](double) -> std::optional<double> {
        const std::size_t m = idx1++;
        return ok1[m] ? std::optional<double>(h1.values[m]) : std::nullopt;
    });
    std::size_t idx2 = 0;
    SampledProfile f2 = sample_profile(gy, [&](double) -> std::optional<double> {
        const std::size_t m = idx2++;
        return ok2[m] ? std::optional<double>(h2.values[m]) : std::nullopt;
    });
    return {std::move(f1), std::move(f2)};
}

// Evaluates the current stage sum h1(x) + h2(y) + sum phi_i(d_i . p) with the
// internal cubic rule.
struct StageSum {
    SampledProfile h1, h2;
    std::vector<SampledProfile> phis;
    std::vector<Direction> phi_dirs;

    double operator()(Vec2 p) const {
        double s = profile_eval_cubic(h1, p.x) + profile_eval_cubic(h2, p.y);
        for (std::size_t i = 0; i < phis.size(); ++i)
            s += profile_eval_cubic(phis[i], phi_dirs[i].ridge_arg(p));
        return s;
    }
};

Decomposition finalize(Decomposition dec, const BivariateFunction& F,
                       int verification_n) {
    const auto err = reconstruction_error(dec, F, dec.domain, verification_n,
                                          verification_n);
    dec.reconstruction_sup_error = err.sup_error;
    dec.max_abs_f = err.max_abs_f;
    return dec;
}

} // namespace

Decomposition decompose_small_n(const BivariateFunction& F, const DirectionSet& ds,
                                Rect domain, const DecomposeOptions& opts) {
    const std::size_t n = ds.size();
    if (n == 0 || n > 2)
        raise(ErrorKind::InputFormat, "small-n path handles one or two directions");
    if (domain.degenerate())
        raise(ErrorKind::InputFormat, "degenerate domain rectangle");
    validate_directions(ds.dirs, ds.tol_indep);

    const Vec2 p0 = domain.center();
    const double f00 = F.eval(p0);
    const std::size_t target =
        static_cast<std::size_t>(opts.profile_oversample_small_n) *
            static_cast<std::size_t>(opts.grid_n - 1) +
        1;

    // Trace vectors: for n=1 the minimum-norm solution of a c + b d = 1; for
    // n=2 the dual basis of the two directions.
    std::vector<Vec2> trace(n);
    if (n == 1) {
        const Vec2 d = ds[0].vec();
        trace[0] = d * (1.0 / dot(d, d));
    } else {
        const Mat2 A{ds[0].a, ds[0].b, ds[1].a, ds[1].b};
        const Mat2 Ainv = A.inverse();
        trace[0] = {Ainv.a, Ainv.c}; // A * trace[0] = (1, 0)
        trace[1] = {Ainv.b, Ainv.d}; // A * trace[1] = (0, 1)
    }

    Decomposition dec;
    dec.directions = ds;
    dec.domain = domain;
    dec.method = opts.method;
    dec.grid_n = opts.grid_n;
    dec.base_point = p0;

    const bool unbounded = F.region().is_whole_plane();
    for (std::size_t i = 0; i < n; ++i) {
        const auto [lo, hi] = ridge_arg_range(ds[i], domain);
        const double t0 = ds[i].ridge_arg(p0);
        TGrid g = node_centered_grid(lo, hi, opts.pad_fraction, t0, target,
                                     std::nullopt);

        // Achievable t range along the trace line within the region.
        double cov_lo = -std::numeric_limits<double>::infinity();
        double cov_hi = std::numeric_limits<double>::infinity();
        if (!unbounded) {
            auto iv = F.region().clip_line(p0, trace[i]);
            if (!iv)
                raise(ErrorKind::OutOfDomain, "trace line misses the domain");
            cov_lo = t0 + iv->first;
            cov_hi = t0 + iv->second;
            if (cov_lo > lo + 1e-9 * (1.0 + std::abs(lo)) ||
                cov_hi < hi - 1e-9 * (1.0 + std::abs(hi))) {
                std::ostringstream os;
                os << "trace line exits the domain before covering the ridge "
                   << "argument range: achievable [" << cov_lo << ", " << cov_hi
                   << "] vs required [" << lo << ", " << hi << "]";
                raise(ErrorKind::OutOfDomain, os.str());
            }
        }

        const double split = n == 2 ? 0.5 * f00 : 0.0;
        SampledProfile prof = sample_profile(g, [&](double t) -> std::optional<double> {
            double tt = std::min(std::max(t, cov_lo), cov_hi); // pad-zone clamp
            const Vec2 q = p0 + trace[i] * (tt - t0);
            try {
                return F.eval(q) - split;
            } catch (const Error&) {
                return std::nullopt;
            }
        });
        dec.profiles.push_back(std::move(prof));
        dec.profile_grid_n = dec.profiles.back().size();
    }

    // Representability gate, free of interpolation error: for a true ridge
    // sum the trace formula reproduces F exactly, so probe it directly.
    {
        const double split = n == 2 ? 0.5 * f00 : 0.0;
        double defect = 0.0;
        double max_f = std::abs(f00);
        const int pn = 33;
        for (int j = 0; j < pn; ++j) {
            for (int i2 = 0; i2 < pn; ++i2) {
                const Vec2 p{domain.x0 + domain.width() * i2 / (pn - 1),
                             domain.y0 + domain.height() * j / (pn - 1)};
                try {
                    const double f = F.eval(p);
                    max_f = std::max(max_f, std::abs(f));
                    double rec = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        const double t = ds[i].ridge_arg(p);
                        const double t0 = ds[i].ridge_arg(p0);
                        rec += F.eval(p0 + trace[i] * (t - t0)) - split;
                    }
                    defect = std::max(defect, std::abs(f - rec));
                } catch (const Error&) {
                    // trace point clipped away by the region; the coverage
                    // check above already policed the required range
                }
            }
        }
        const double tol = stage_tolerance(opts, opts.method) * (1.0 + max_f);
        if (defect > tol) {
            std::ostringstream os;
            os << "trace-identity defect " << defect << " exceeds tolerance " << tol
               << ": the function is not a ridge sum along the given directions";
            raise(ErrorKind::Representability, os.str());
        }
        dec.separation_defect = defect;
    }
    return finalize(std::move(dec), F, opts.verification_n);
}

Decomposition decompose(const BivariateFunction& F, const DirectionSet& ds,
                        Rect domain, const DecomposeOptions& opts) {
    const std::size_t n = ds.size();
    if (n == 0)
        raise(ErrorKind::InputFormat, "at least one direction required");
    if (domain.degenerate())
        raise(ErrorKind::InputFormat, "degenerate domain rectangle");
    if (opts.grid_n < 33)
        raise(ErrorKind::InputFormat, "grid_n must be at least 33");
    if (n <= 2)
        return decompose_small_n(F, ds, domain, opts);

    validate_directions(ds.dirs, ds.tol_indep);
    const int order = static_cast<int>(n) - 2;
    if (F.smoothness_hint() < order)
        raise(ErrorKind::Smoothness,
              "smoothness hint " + std::to_string(F.smoothness_hint()) +
                  " below the required n-2 = " + std::to_string(order));
    if (opts.method == DerivMethod::Symbolic && !F.has_expression())
        raise(ErrorKind::InputFormat,
              "symbolic method requires an expression-backed function");
    if (opts.method == DerivMethod::Numeric && F.is_grid() && order > 2 &&
        !opts.allow_high_order_grid)
        raise(ErrorKind::Smoothness,
              "numeric derivatives of grid data limited to order 2 "
              "(n - 2 <= 2); use allow_high_order_grid to override");
    if (!F.region().is_whole_plane()) {
        const Vec2 corners[4] = {{domain.x0, domain.y0}, {domain.x1, domain.y0},
                                 {domain.x1, domain.y1}, {domain.x0, domain.y1}};
        for (const Vec2& c : corners)
            if (!F.region().contains(c, 1e-12))
                raise(ErrorKind::InputFormat,
                      "domain exceeds the function's sampled region");
    }

    NormalizedProblem np = normalize(ds, opts.axis_pair);
    if (!opts.flip_perp.empty()) {
        if (opts.flip_perp.size() != static_cast<std::size_t>(order))
            raise(ErrorKind::InputFormat, "flip_perp must have n-2 entries");
        for (std::size_t i = 0; i < np.perps.size(); ++i)
            if (opts.flip_perp[i])
                np.perps[i] = np.perps[i] * -1.0;
    }

    const bool identity_map = np.M.is_identity();
    const BivariateFunction Fn = identity_map ? F : F.pullback(np.M_inv);

    // Working region in normalized coordinates.
    const Vec2 corners[4] = {{domain.x0, domain.y0}, {domain.x1, domain.y0},
                             {domain.x1, domain.y1}, {domain.x0, domain.y1}};
    Vec2 mapped[4];
    for (int i = 0; i < 4; ++i)
        mapped[i] = np.M.apply(corners[i]);
    Region W;
    Region image_region = Region::polygon(mapped);
    const Rect image_bbox = image_region.bbox();
    if (F.region().is_whole_plane()) {
        Rect padded = image_bbox;
        const double pw = opts.pad_fraction * padded.width();
        const double ph = opts.pad_fraction * padded.height();
        padded.x0 -= pw; padded.x1 += pw;
        padded.y0 -= ph; padded.y1 += ph;
        W = Region::rect(padded);
    } else {
        W = image_region;
    }
    const Vec2 base = np.M.apply(domain.center());

    const auto snap = LatticeSnap::detect(Fn, np.M);
    DerivativeOptions dopts;
    dopts.scale = std::max(image_bbox.width(), image_bbox.height());
    dopts.allow_high_order_grid = opts.allow_high_order_grid;
    if (snap) {
        const double eta_default =
            numeric_derivative_step(Fn, static_cast<std::size_t>(order), dopts);
        if (auto step = snap->stencil_step(np.perps[0], eta_default))
            dopts.step_override = step;
    }

    std::vector<Vec2> all_perps(np.perps.begin(), np.perps.end());
    BivariateFunction G0 = mixed_directional_derivative(Fn, all_perps, opts.method,
                                                        dopts);

    // Separation gate on G0.
    const double tol_rel = stage_tolerance(opts, opts.method);
    Decomposition dec;
    {
        const int gate_n = std::min(opts.grid_n, opts.gate_grid_cap);
        Rect gate = image_bbox;
        if (opts.method == DerivMethod::Numeric) {
            const double eta = dopts.step_override
                                   ? *dopts.step_override
                                   : numeric_derivative_step(
                                         Fn, static_cast<std::size_t>(order), dopts);
            const double margin = 3.0 * eta * static_cast<double>(order);
            gate.x0 += margin; gate.x1 -= margin;
            gate.y0 += margin; gate.y1 -= margin;
            if (gate.degenerate())
                raise(ErrorKind::OutOfDomain, "domain too small for the stencil");
        }
        // ridge arguments stay within their exact ranges only on the image
        // of the domain, so both sweeps filter to it
        auto keep = [&](Vec2 p) { return image_region.contains(p, 1e-12); };
        std::pair<double, double> gate_result;
        if (snap) {
            // Sweep on sample nodes so stencils stay interpolation-free.
            const auto mc = static_cast<std::size_t>(gate_n);
            const auto xs = snap->lattice_axis(snap->x0, snap->nx, gate.x0, gate.x1, mc);
            const auto ys = snap->lattice_axis(snap->y0, snap->ny, gate.y0, gate.y1, mc);
            if (xs.empty() || ys.empty())
                raise(ErrorKind::OutOfDomain, "domain too small for the stencil");
            gate_result = separation_sweep_nodes(G0, base, xs, ys, keep);
        } else {
            gate_result = separation_sweep(G0, base, gate, gate_n, keep);
        }
        const auto [defect, max_g] = gate_result;
        dec.separation_defect = defect;
        const double gate_tol = tol_rel * (1.0 + max_g);
        if (defect > gate_tol) {
            std::ostringstream os;
            os << "separation defect " << defect << " exceeds tolerance " << gate_tol
               << ": the function is not a ridge sum along the given directions";
            raise(ErrorKind::Representability, os.str());
        }
    }

    // Profile grids: padded ridge-argument ranges, node-centered on the base
    // image, denser than the working grid.
    const std::size_t target =
        static_cast<std::size_t>(opts.profile_oversample) *
            static_cast<std::size_t>(opts.grid_n - 1) +
        1;
    std::vector<TGrid> grids(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Direction& dk = np.dirs_normalized[k];
        const auto [lo, hi] = ridge_arg_range(ds[static_cast<std::size_t>(np.perm[k])],
                                              domain);
        std::optional<double> forced;
        if (snap)
            forced = snap->induced_t_step(dk);
        grids[k] = node_centered_grid(lo, hi, opts.pad_fraction, dk.ridge_arg(base),
                                      target, forced);
    }

    auto rest = restrict_separated(G0, W, base, grids[n - 2], grids[n - 1]);
    StageSum sum;
    sum.h1 = std::move(rest.h1);
    sum.h2 = std::move(rest.h2);

    dec.directions = ds;
    dec.domain = domain;
    dec.method = opts.method;
    dec.grid_n = opts.grid_n;
    dec.axis_pair = {np.perm[n - 2], np.perm[n - 1]};
    dec.base_point = domain.center();
    dec.profile_grid_n = sum.h1.size();

    // Cascade: integrate current profiles against the stage perpendicular,
    // then extract the stage's ridge profile from the residual.
    const int stage_grid_n = 65;
    for (int s = 0; s < order; ++s) {
        const Vec2 l = np.perps[static_cast<std::size_t>(s)];
        sum.h1 = antiderivative(sum.h1, 1.0 / l.x);
        sum.h2 = antiderivative(sum.h2, 1.0 / l.y);
        for (std::size_t i = 0; i < sum.phis.size(); ++i) {
            const double sc = dot(sum.phi_dirs[i].vec(), l);
            sum.phis[i] = antiderivative(sum.phis[i], 1.0 / sc);
        }

        std::vector<Vec2> rest_dirs(np.perps.begin() + s + 1, np.perps.end());
        BivariateFunction Gj =
            rest_dirs.empty() ? Fn
                              : mixed_directional_derivative(Fn, rest_dirs,
                                                             opts.method, dopts);

        // Stage sweep: max |G_j| for the gate scale, then the residual below.
        std::vector<Vec2> stage_pts;
        std::vector<double> stage_g;
        stage_pts.reserve(static_cast<std::size_t>(stage_grid_n) *
                          static_cast<std::size_t>(stage_grid_n));
        {
            // sweep the (unpadded) image of the domain: the stage identity
            // is the contract there; profile pad zones stay out of it
            const Rect bb = image_bbox;
            const auto xs = linspace(bb.x0, bb.x1, stage_grid_n);
            const auto ys = linspace(bb.y0, bb.y1, stage_grid_n);
            for (double y : ys) {
                for (double x : xs) {
                    const Vec2 p{x, y};
                    if (!image_region.contains(p, 1e-12))
                        continue;
                    try {
                        stage_g.push_back(Gj.eval(p));
                        stage_pts.push_back(p);
                    } catch (const Error&) {
                    }
                }
            }
        }
        double max_g = 0.0;
        for (double v : stage_g)
            max_g = std::max(max_g, std::abs(v));
        const double stage_tol = tol_rel * (1.0 + max_g);

        const StageSum sum_before = sum; // snapshot for the residual closure
        const Direction dnorm = np.dirs_normalized[static_cast<std::size_t>(s)];
        auto residual = [&sum_before, &Gj](Vec2 p) {
            return Gj.eval(p) - sum_before(p);
        };
        BivariateFunction R = BivariateFunction::from_callable(
            residual, Gj.region(), Gj.smoothness_hint());

        ProfileGridSpec spec;
        spec.t_lo = grids[static_cast<std::size_t>(s)].exact_lo;
        spec.t_hi = grids[static_cast<std::size_t>(s)].exact_hi;
        spec.base_t = grids[static_cast<std::size_t>(s)].base_t;
        spec.target_count = target;
        spec.pad_fraction = opts.pad_fraction;
        spec.forced_step = grids[static_cast<std::size_t>(s)].step;

        auto extraction = extract_ridge_profile(R, dnorm, spec, W, stage_tol);

        // Stage identity residual with the extracted profile included.
        double residual_sup = 0.0;
        {
            std::vector<double> args(stage_pts.size());
            std::vector<double> phi_vals(stage_pts.size());
            for (std::size_t i = 0; i < stage_pts.size(); ++i)
                args[i] = dnorm.ridge_arg(stage_pts[i]);
            profile_eval_cubic_many(extraction.profile, args.data(), args.size(),
                                    phi_vals.data());
            for (std::size_t i = 0; i < stage_pts.size(); ++i) {
                const double r = stage_g[i] - sum_before(stage_pts[i]) - phi_vals[i];
                residual_sup = std::max(residual_sup, std::abs(r));
            }
        }
        dec.stages.push_back({s + 1, residual_sup, extraction.constancy_defect, max_g});
        if (residual_sup > stage_tol) {
            std::ostringstream os;
            os << "stage " << (s + 1) << " residual " << residual_sup
               << " exceeds tolerance " << stage_tol;
            raise(ErrorKind::Representability, os.str());
        }

        sum.phis.push_back(std::move(extraction.profile));
        sum.phi_dirs.push_back(dnorm);
    }

    // Ridge arguments are preserved by the normalization, so profiles carry
    // over unchanged; only the ordering maps back.
    dec.profiles.assign(n, SampledProfile{});
    for (std::size_t k = 0; k < n; ++k) {
        const auto orig = static_cast<std::size_t>(np.perm[k]);
        if (k < n - 2)
            dec.profiles[orig] = sum.phis[k];
        else if (k == n - 2)
            dec.profiles[orig] = sum.h1;
        else
            dec.profiles[orig] = sum.h2;
    }
    return finalize(std::move(dec), F, opts.verification_n);
}

Decomposition decompose(const BivariateFunction& F, const DirectionSet& ds,
                        Rect domain, int grid_n, DerivMethod method) {
    DecomposeOptions opts;
    opts.grid_n = grid_n;
    opts.method = method;
    return decompose(F, ds, domain, opts);
}

double reconstruct(const Decomposition& dec, double x, double y) {
    if (!dec.domain.contains({x, y}, 1e-12 * (1.0 + std::abs(x) + std::abs(y))))
        raise(ErrorKind::OutOfDomain, "point outside the decomposition domain");
    double s = 0.0;
    for (std::size_t i = 0; i < dec.profiles.size(); ++i)
        s += profile_eval(dec.profiles[i], dec.directions[i].ridge_arg({x, y}));
    return s;
}

ReconstructionError reconstruction_error(const Decomposition& dec,
                                         const BivariateFunction& F, Rect domain,
                                         int nx, int ny) {
    const auto xs = linspace(domain.x0, domain.x1, nx);
    const auto ys = linspace(domain.y0, domain.y1, ny);
    const std::size_t n = xs.size() * ys.size();
    std::vector<double> px(n), py(n);
    for (std::size_t j = 0; j < ys.size(); ++j)
        for (std::size_t i = 0; i < xs.size(); ++i) {
            px[j * xs.size() + i] = xs[i];
            py[j * xs.size() + i] = ys[j];
        }

    std::vector<double> recon(n, 0.0), args(n), vals(n);
    const auto& ops = kernels::active();
    for (std::size_t d = 0; d < dec.profiles.size(); ++d) {
        const Direction& dir = dec.directions[d];
        ops.ridge_args(px.data(), py.data(), n, dir.a, dir.b, args.data());
        // the batch kernel clamps, so police the range here
        const SampledProfile& prof = dec.profiles[d];
        double lo = args[0], hi = args[0];
        for (std::size_t i = 1; i < n; ++i) {
            lo = std::min(lo, args[i]);
            hi = std::max(hi, args[i]);
        }
        const double slack = 1e-9 * (std::abs(prof.t_max - prof.t_min) + prof.step);
        if (lo < prof.t_min - slack || hi > prof.t_max + slack) {
            std::ostringstream os;
            os << "profile " << d << " covers t in [" << prof.t_min << ", "
               << prof.t_max << "] but the grid needs [" << lo << ", " << hi << "]";
            raise(ErrorKind::OutOfRange, os.str());
        }
        profile_eval_many(prof, args.data(), n, vals.data());
        for (std::size_t i = 0; i < n; ++i)
            recon[i] += vals[i];
    }

    std::vector<double> fvals(n, 0.0);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            fvals[i] = F.eval({px[i], py[i]});
    });

    ReconstructionError out;
    out.sup_error = ops.max_abs_diff(fvals.data(), recon.data(), n);
    out.max_abs_f = ops.max_abs(fvals.data(), n);
    return out;
}

} // namespace ridge
