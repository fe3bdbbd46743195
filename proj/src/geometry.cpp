#include "ridge/geometry.hpp"

#include <cmath>
#include <string>

#include "ridge/errors.hpp"

namespace ridge {

double normalized_cross(const Direction& d1, const Direction& d2) {
    const double c = d1.a * d2.b - d2.a * d1.b;
    return std::abs(c) / (norm(d1.vec()) * norm(d2.vec()));
}

DirectionSet validate_directions(std::vector<Direction> dirs, double tol_indep) {
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        if (dirs[i].a == 0.0 && dirs[i].b == 0.0)
            raise(ErrorKind::InvalidDirections,
                  "zero direction vector at index " + std::to_string(i));
    }
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        for (std::size_t j = i + 1; j < dirs.size(); ++j) {
            if (normalized_cross(dirs[i], dirs[j]) <= tol_indep)
                raise(ErrorKind::InvalidDirections,
                      "dependent direction pair (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
        }
    }
    return DirectionSet{std::move(dirs), tol_indep};
}

Vec2 perpendicular_unit(const Direction& d) {
    const double len = norm(d.vec());
    if (len == 0.0)
        raise(ErrorKind::InvalidDirections, "perpendicular of zero vector");
    return {-d.b / len, d.a / len};
}

std::pair<int, int> select_axis_pair(const DirectionSet& ds) {
    const int n = static_cast<int>(ds.size());
    if (n < 2)
        raise(ErrorKind::InvalidDirections, "axis pair needs at least two directions");
    std::pair<int, int> best{0, 1};
    double best_cross = -1.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double c = normalized_cross(ds[i], ds[j]);
            if (c > best_cross) {
                best_cross = c;
                best = {i, j};
            }
        }
    }
    return best;
}

NormalizedProblem normalize(const DirectionSet& ds,
                            std::optional<std::pair<int, int>> axis_pair) {
    const int n = static_cast<int>(ds.size());
    if (n < 3)
        raise(ErrorKind::InvalidDirections,
              "normalization applies to three or more directions");

    std::pair<int, int> pair = axis_pair ? *axis_pair : select_axis_pair(ds);
    const auto [pi, pj] = pair;
    if (pi < 0 || pj < 0 || pi >= n || pj >= n || pi == pj)
        raise(ErrorKind::InvalidDirections, "invalid axis pair indices");
    if (normalized_cross(ds[pi], ds[pj]) <= ds.tol_indep)
        raise(ErrorKind::InvalidDirections, "axis pair directions are dependent");

    NormalizedProblem np;
    np.M = Mat2{ds[pi].a, ds[pi].b, ds[pj].a, ds[pj].b};
    if (np.M.det() == 0.0)
        raise(ErrorKind::Geometry, "singular normalization map");
    np.M_inv = np.M.inverse();

    // Non-axis directions keep their relative order and go first.
    for (int k = 0; k < n; ++k)
        if (k != pi && k != pj)
            np.perm.push_back(k);
    np.perm.push_back(pi);
    np.perm.push_back(pj);

    np.dirs_normalized.tol_indep = ds.tol_indep;
    for (int k : np.perm) {
        if (k == pi) {
            np.dirs_normalized.dirs.push_back({1.0, 0.0});
        } else if (k == pj) {
            np.dirs_normalized.dirs.push_back({0.0, 1.0});
        } else {
            const Vec2 d = np.M_inv.apply_left(ds[k].vec());
            np.dirs_normalized.dirs.push_back({d.x, d.y});
        }
    }

    // Re-validate: independence must survive the map.
    validate_directions(np.dirs_normalized.dirs, ds.tol_indep);

    for (int k = 0; k + 2 < n; ++k) {
        const Vec2 l = perpendicular_unit(np.dirs_normalized[k]);
        // Independence from both axis directions guarantees nonzero
        // components; the antiderivative scales divide by them.
        if (l.x == 0.0 || l.y == 0.0)
            raise(ErrorKind::Geometry,
                  "perpendicular aligned with an axis after normalization");
        np.perps.push_back(l);
    }
    return np;
}

} // namespace ridge
