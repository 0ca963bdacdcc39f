#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bbm/errors.hpp"
#include "bbm/family.hpp"
#include "bbm/grid.hpp"
#include "bbm/integrals.hpp"
#include "bbm/numeric.hpp"
#include "bbm/oscillation.hpp"

namespace bbm {

/// Building block of the predual: a grid function g attached to a capped
/// family F of eps-cubes, supported on the union of F, bounded by
/// eps^(d-1)/|Q| and with zero integral on every cube.
struct Atom {
  CubeFamily family;
  GridFunction values;

  double bound() const { return family_scale(family) / std::pow(family.epsilon(), family.dim); }
};

struct AtomReport {
  bool valid = true;
  double support_violation = 0.0;  // largest |g| outside the union of cubes
  double bound_violation = 0.0;    // largest excess of |g| over eps^(d-1)/|Q|
  double mean_violation = 0.0;     // largest |integral over Q of g| / |Q|
  std::string message;
};

namespace detail {

inline std::vector<Index> cube_cells(const Cube& q, int dim) {
  Index lo{0, 0, 0}, ext{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    lo[a] = static_cast<int>(q.anchor[a] / q.scale);
    ext[a] = q.side;
  }
  std::vector<Index> cells;
  cells.reserve(static_cast<std::size_t>(ext[0]) * ext[1] * ext[2]);
  for (int i = 0; i < ext[0]; ++i)
    for (int j = 0; j < ext[1]; ++j)
      for (int l = 0; l < ext[2]; ++l) cells.push_back({lo[0] + i, lo[1] + j, lo[2] + l});
  return cells;
}

inline void require_atom_family(const CubeFamily& F, const GridFunction& g) {
  require_matches(F, g);
  if (!F.constrained) throw FamilyError("atoms need a capped family");
  for (const Cube& q : F.cubes) {
    if (!q.on_cell_lattice()) throw FamilyError("atoms need cell-lattice cubes");
  }
}

}  // namespace detail

inline AtomReport validate_atom(const Atom& a, double tol = 1e-12) {
  AtomReport r;
  if (auto why = family_problem(a.family); !why.empty() || !a.family.constrained ||
                                           a.family.dim != a.values.dim() ||
                                           a.family.cells != a.values.cells()) {
    r.valid = false;
    r.message = why.empty() ? "family does not match the atom grid or is uncapped" : why;
    return r;
  }
  const GridFunction& g = a.values;
  const double bound = a.bound();
  const double vol = g.cell_volume();
  std::vector<char> covered(g.size(), 0);
  for (const Cube& q : a.family.cubes) {
    if (!q.on_cell_lattice()) {
      r.valid = false;
      r.message = "atom family must use cell-lattice cubes";
      return r;
    }
    CompensatedSum integral;
    for (const Index& idx : detail::cube_cells(q, g.dim())) {
      const std::size_t k = g.flat(idx);
      covered[k] = 1;
      integral.add(g[k] * vol);
      r.bound_violation = std::max(r.bound_violation, std::abs(g[k]) - bound);
    }
    const double qvol = std::pow(a.family.epsilon(), g.dim());
    r.mean_violation = std::max(r.mean_violation, std::abs(integral.value()) / qvol);
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!covered[k]) r.support_violation = std::max(r.support_violation, std::abs(g[k]));
  }
  if (r.support_violation > 0.0) {
    r.valid = false;
    r.message = "support leaves the family by " + std::to_string(r.support_violation);
  } else if (r.bound_violation > tol * std::max(1.0, bound)) {
    r.valid = false;
    r.message = "bound exceeded by " + std::to_string(r.bound_violation);
  } else if (r.mean_violation > tol) {
    r.valid = false;
    r.message = "cube mean " + std::to_string(r.mean_violation) + " is not zero";
  }
  return r;
}

/// Projects `raw` onto the atom conditions: restrict to the family, remove
/// every cube mean, then scale the whole function by the largest sigma <= 1
/// that respects the bound.
inline Atom make_atom(const CubeFamily& F, const GridFunction& raw) {
  detail::require_atom_family(F, raw);
  std::vector<double> out(raw.size(), 0.0);
  const double bound = family_scale(F) / std::pow(F.epsilon(), F.dim);
  double sigma = 1.0;
  for (const Cube& q : F.cubes) {
    const auto cells = detail::cube_cells(q, F.dim);
    CompensatedSum sum;
    for (const Index& idx : cells) sum.add(raw.at(idx));
    const double avg = sum.value() / static_cast<double>(cells.size());
    double peak = 0.0;
    for (const Index& idx : cells) {
      const std::size_t k = raw.flat(idx);
      out[k] = raw[k] - avg;
      peak = std::max(peak, std::abs(out[k]));
    }
    if (peak > bound) sigma = std::min(sigma, bound / peak);
  }
  if (sigma < 1.0) {
    for (double& v : out) v *= sigma;
  }
  return Atom{F, GridFunction(raw.dim(), raw.cells(), std::move(out))};
}

/// Integral of f * g. On each cube f is replaced by f - f_Q, which leaves
/// the value unchanged for mean-zero atoms and removes constants from f.
inline double pair(const GridFunction& f, const Atom& a) {
  require_same_shape(f, a.values);
  const GridFunction& g = a.values;
  std::vector<char> covered(g.size(), 0);
  CompensatedSum acc;
  for (const Cube& q : a.family.cubes) {
    const auto cells = detail::cube_cells(q, g.dim());
    CompensatedSum s;
    for (const Index& idx : cells) s.add(f.at(idx));
    const double avg = s.value() / static_cast<double>(cells.size());
    for (const Index& idx : cells) {
      const std::size_t k = g.flat(idx);
      covered[k] = 1;
      acc.add((f[k] - avg) * g[k]);
    }
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!covered[k] && g[k] != 0.0) acc.add(f[k] * g[k]);
  }
  return acc.value() * f.cell_volume();
}

/// Finite l^1 combination sum lambda_n g_n. `tail_mass` records the l^1 mass
/// of terms dropped by truncation.
struct AtomicFunctional {
  struct Term {
    double lambda = 0.0;
    Atom atom;
  };
  std::vector<Term> terms;
  double tail_mass = 0.0;

  double l1_mass() const {
    CompensatedSum acc;
    for (const auto& t : terms) acc.add(std::abs(t.lambda));
    return acc.value();
  }
};

inline AtomicFunctional truncate(const AtomicFunctional& phi, std::size_t keep) {
  AtomicFunctional out;
  out.tail_mass = phi.tail_mass;
  for (std::size_t i = 0; i < phi.terms.size(); ++i) {
    if (i < keep) {
      out.terms.push_back(phi.terms[i]);
    } else {
      out.tail_mass += std::abs(phi.terms[i].lambda);
    }
  }
  return out;
}

inline AtomicFunctional operator+(const AtomicFunctional& a, const AtomicFunctional& b) {
  AtomicFunctional out = a;
  out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
  out.tail_mass += b.tail_mass;
  return out;
}

/// f(phi) = sum lambda_n * integral of f g_n, summed in term order.
inline double functional_value(const GridFunction& f, const AtomicFunctional& phi) {
  CompensatedSum acc;
  for (const auto& t : phi.terms) acc.add(t.lambda * pair(f, t.atom));
  return acc.value();
}

struct EmpiricalNorm {
  double value = 0.0;       // max |f(phi)| / b_norm(f) over the probes
  std::size_t probe = 0;    // index of the maximising probe
  std::size_t used = 0;     // probes with positive b_norm
};

/// Lower bound of the dual norm of phi from a probe set. Probes with zero
/// B-norm are skipped.
inline EmpiricalNorm empirical_functional_norm(const AtomicFunctional& phi,
                                               const std::vector<GridFunction>& probes,
                                               const SelectOptions& opt = {}) {
  if (probes.empty()) throw ArgumentError("empirical norm needs at least one probe");
  EmpiricalNorm out;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double norm = b_norm(probes[i], opt).value;
    if (!(norm > 0.0)) continue;
    ++out.used;
    const double ratio = std::abs(functional_value(probes[i], phi)) / norm;
    if (ratio > out.value) {
      out.value = ratio;
      out.probe = i;
    }
  }
  if (out.used == 0) throw ArgumentError("no probe has a positive B-norm");
  return out;
}

/// Default probes: the sign pattern of every atom, indicators of every
/// family cube, and `random_count` random cell functions.
inline std::vector<GridFunction> default_probes(const AtomicFunctional& phi, int dim, int cells,
                                                std::uint64_t seed, int random_count = 4) {
  std::vector<GridFunction> probes;
  for (const auto& t : phi.terms) {
    std::vector<double> sgn(t.atom.values.size());
    for (std::size_t k = 0; k < sgn.size(); ++k) {
      const double g = t.atom.values[k];
      sgn[k] = t.lambda * g > 0 ? 1.0 : (t.lambda * g < 0 ? -1.0 : 0.0);
    }
    probes.emplace_back(dim, cells, std::move(sgn));
    for (const Cube& q : t.atom.family.cubes) {
      std::vector<double> ind(t.atom.values.size(), 0.0);
      for (const Index& idx : detail::cube_cells(q, dim)) ind[t.atom.values.flat(idx)] = 1.0;
      probes.emplace_back(dim, cells, std::move(ind));
    }
  }
  std::mt19937_64 rng(seed);
  for (int r = 0; r < random_count; ++r) {
    std::vector<double> v(ipow(static_cast<std::size_t>(cells), dim));
    for (double& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    probes.emplace_back(dim, cells, std::move(v));
  }
  return probes;
}

}  // namespace bbm
