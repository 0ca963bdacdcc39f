#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bbm/errors.hpp"
#include "bbm/grid.hpp"
#include "bbm/integrals.hpp"
#include "bbm/numeric.hpp"

namespace bbm {

/// Largest admissible family size floor(eps^(1-d)); 1 in dimension one.
inline long max_family_cardinality(double epsilon, int dim) {
  if (!(epsilon > 0.0) || epsilon > 1.0) {
    throw DomainError("epsilon must lie in (0,1], got " + std::to_string(epsilon));
  }
  if (dim < 1) throw DomainError("dimension must be positive");
  if (dim == 1) return 1;
  // Guard against 1/0.5 evaluating to 1.9999999999999998 and similar.
  const double raw = std::pow(epsilon, 1 - dim);
  return static_cast<long>(std::floor(raw * (1.0 + 4e-15)));
}

// Exact integer form for epsilon = side / n.
inline long max_family_cardinality(int side, int n, int dim) {
  if (side < 1 || side > n) throw DomainError("side must lie in [1, n]");
  std::int64_t num = 1, den = 1;
  for (int i = 1; i < dim; ++i) {
    num *= n;
    den *= side;
  }
  return static_cast<long>(num / den);
}

/// Equal-side cubes with pairwise disjoint interiors, optionally capped at
/// floor(eps^(1-d)) members. Cubes are kept in lexicographic anchor order.
struct CubeFamily {
  int dim = 1;
  int cells = 1;
  int side = 1;
  bool constrained = true;
  std::vector<Cube> cubes;

  double epsilon() const noexcept { return static_cast<double>(side) / cells; }
  long cap() const { return max_family_cardinality(side, cells, dim); }
  bool empty() const noexcept { return cubes.empty(); }
  std::size_t size() const noexcept { return cubes.size(); }
};

inline void sort_cubes(std::vector<Cube>& cubes, int dim) {
  std::sort(cubes.begin(), cubes.end(), [dim](const Cube& a, const Cube& b) {
    return compare_anchors(a, b, dim) < 0;
  });
}

inline CubeFamily make_family(int dim, int cells, int side, std::vector<Cube> cubes,
                              bool constrained = true) {
  sort_cubes(cubes, dim);
  return CubeFamily{dim, cells, side, constrained, std::move(cubes)};
}

// Empty string when the family is admissible, otherwise the first problem.
inline std::string family_problem(const CubeFamily& F) {
  if (F.dim < 1 || F.dim > kMaxDim) return "bad dimension";
  if (F.side < 1 || F.side > F.cells) return "side outside [1, n]";
  if (F.constrained && static_cast<long>(F.cubes.size()) > F.cap()) {
    return "family of " + std::to_string(F.cubes.size()) + " cubes exceeds the cap " +
           std::to_string(F.cap());
  }
  for (std::size_t i = 0; i < F.cubes.size(); ++i) {
    const Cube& q = F.cubes[i];
    if (q.side != F.side) return "cube " + std::to_string(i) + " has a different side";
    if (!cube_inside(q, F.dim, F.cells)) return "cube " + std::to_string(i) + " leaves the unit cube";
    for (std::size_t j = 0; j < i; ++j) {
      if (!interiors_disjoint(F.cubes[j], q, F.dim)) {
        return "cubes " + std::to_string(j) + " and " + std::to_string(i) + " overlap";
      }
    }
  }
  return {};
}

inline bool is_valid(const CubeFamily& F) { return family_problem(F).empty(); }

inline void require_valid(const CubeFamily& F) {
  if (auto why = family_problem(F); !why.empty()) throw FamilyError("invalid family: " + why);
}

inline void require_matches(const CubeFamily& F, const GridFunction& f) {
  require_valid(F);
  if (F.dim != f.dim() || F.cells != f.cells()) {
    throw ShapeError("family and grid disagree on d or n");
  }
}

inline double family_scale(const CubeFamily& F) { return std::pow(F.epsilon(), F.dim - 1); }

/// eps^(d-1) * sum over the family of M(f, Q).
inline double family_value(const GridFunction& f, const CubeFamily& F) {
  require_matches(F, f);
  CompensatedSum acc;
  for (const Cube& q : F.cubes) acc.add(mean_oscillation(f, q));
  return family_scale(F) * acc.value();
}

/// L_F f = eps^(d-1) / |Q| * sum over Q of chi_Q (f - f_Q), for families on
/// the cell lattice.
inline GridFunction family_operator(const GridFunction& f, const CubeFamily& F) {
  require_matches(F, f);
  const double eps = F.epsilon();
  const double factor = family_scale(F) / std::pow(eps, F.dim);
  std::vector<double> out(f.size(), 0.0);
  for (const Cube& q : F.cubes) {
    if (!q.on_cell_lattice()) throw FamilyError("family operator needs cell-lattice cubes");
    const double avg = cube_average(f, q);
    Index lo{0, 0, 0}, ext{1, 1, 1};
    for (int a = 0; a < F.dim; ++a) {
      lo[a] = static_cast<int>(q.anchor[a] / q.scale);
      ext[a] = q.side;
    }
    for (int i = 0; i < ext[0]; ++i) {
      for (int j = 0; j < ext[1]; ++j) {
        for (int l = 0; l < ext[2]; ++l) {
          const std::size_t k = f.flat({lo[0] + i, lo[1] + j, lo[2] + l});
          out[k] = factor * (f[k] - avg);
        }
      }
    }
  }
  return {f.dim(), f.cells(), std::move(out)};
}

}  // namespace bbm
