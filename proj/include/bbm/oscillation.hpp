#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "bbm/family.hpp"
#include "bbm/grid.hpp"
#include "bbm/integrals.hpp"
#include "bbm/numeric.hpp"
#include "bbm/selection.hpp"

namespace bbm {

/// One sample eps -> [f]_eps of the oscillation curve.
struct CurvePoint {
  double epsilon = 1.0;
  int side = 1;
  long cap = 1;
  double value = 0.0;
  CubeFamily witness;
  SolveMode solver = SolveMode::greedy;
};

/// Samples ordered by decreasing epsilon.
struct OscillationCurve {
  std::vector<CurvePoint> points;

  double max_value() const {
    double v = 0.0;
    for (const auto& p : points) v = std::max(v, p.value);
    return v;
  }
};

struct Bracket {
  double value = 0.0;
  CubeFamily witness;
  SolveMode solver = SolveMode::greedy;
};

/// [f]_eps over the candidate lattice for eps = side / n.
///
/// Exact over the candidate set for the exact and bnb solvers; in every mode
/// the value is attained by the returned witness, so it is a lower bound of
/// the continuum bracket.
inline Bracket bracket_epsilon(const GridFunction& f, int side, const SelectOptions& opt = {}) {
  auto sel = select_family(f, side, opt);
  return {sel.value, std::move(sel.family), sel.solver};
}

struct BNorm {
  double value = 0.0;
  double witness_epsilon = 1.0;
  OscillationCurve curve;
};

// Sides n, n-1, ..., 1 restricted to side/n <= epsilon_cut.
inline std::vector<int> sweep_sides(int n, double epsilon_cut = 1.0) {
  std::vector<int> sides;
  for (int m = n; m >= 1; --m) {
    if (static_cast<double>(m) <= epsilon_cut * n * (1.0 + 1e-12)) sides.push_back(m);
  }
  return sides;
}

inline OscillationCurve oscillation_curve(const GridFunction& f, const std::vector<int>& sides,
                                          const SelectOptions& opt = {}) {
  OscillationCurve curve;
  for (int m : sides) {
    const auto cand = make_candidates(f, m, opt.refinement, opt.threads);
    auto sel = solve(cand, opt.mode);
    curve.points.push_back(CurvePoint{static_cast<double>(m) / f.cells(), m,
                                      max_family_cardinality(m, f.cells(), f.dim()), sel.value,
                                      std::move(sel.family), sel.solver});
  }
  return curve;
}

/// ||f||_B = sup over the epsilon sweep {m/n} of [f]_eps. Ties resolve to the
/// largest epsilon.
inline BNorm b_norm(const GridFunction& f, const SelectOptions& opt = {}) {
  BNorm out;
  out.curve = oscillation_curve(f, sweep_sides(f.cells()), opt);
  for (const auto& p : out.curve.points) {
    if (p.value > out.value) {
      out.value = p.value;
      out.witness_epsilon = p.epsilon;
    }
  }
  return out;
}

/// Discrete BMO norm: sup of M(f, Q) over every candidate cube of every side.
inline double bmo_norm(const GridFunction& f, int refinement = 2, int threads = 1) {
  double best = 0.0;
  for (int m = f.cells(); m >= 1; --m) {
    const auto cand = make_candidates(f, m, refinement, threads);
    for (double w : cand.weights) best = std::max(best, w);
  }
  return best;
}

struct BvValue {
  double value = 0.0;
  double epsilon = 1.0;
};

/// Cap-free functional sup_eps eps^(d-1) sup_G sum M(f, Q) over disjoint
/// families G.
///
/// For each epsilon the families tried are the shifted tilings (one per
/// anchor offset) and the capped selection; each is a disjoint family, so the
/// result is a lower bound of the continuum quantity and dominates b_norm.
inline BvValue bv_functional(const GridFunction& f, const SelectOptions& opt = {}) {
  const int d = f.dim();
  const int s = opt.refinement;
  BvValue best;
  for (int m = f.cells(); m >= 1; --m) {
    const auto cand = make_candidates(f, m, s, opt.threads);
    const std::size_t per_axis = anchor_positions(m, f.cells(), s).size();
    const double scale = std::pow(static_cast<double>(m) / f.cells(), d - 1);
    double value = solve(cand, opt.mode).value;
    for (std::size_t offset = 0; offset < ipow(static_cast<std::size_t>(s), d); ++offset) {
      std::array<std::size_t, kMaxDim> o{0, 0, 0};
      std::size_t r = offset;
      for (int a = d - 1; a >= 0; --a) {
        o[a] = r % s;
        r /= s;
      }
      CompensatedSum acc;
      for (std::size_t t = 0; t < cand.cubes.size(); ++t) {
        std::size_t rem = t;
        bool member = true;
        for (int a = d - 1; a >= 0; --a) {
          member = member && (rem % per_axis) % s == o[a];
          rem /= per_axis;
        }
        if (member) acc.add(cand.weights[t]);
      }
      value = std::max(value, scale * acc.value());
    }
    if (value > best.value) best = {value, static_cast<double>(m) / f.cells()};
  }
  return best;
}

/// Anisotropic grid total variation: sum over interior faces of the jump
/// times the face measure n^(1-d).
inline double discrete_tv(const GridFunction& f) {
  const int d = f.dim();
  const int n = f.cells();
  const double face = std::pow(1.0 / n, d - 1);
  CompensatedSum acc;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Index idx = f.unflat(k);
    for (int a = 0; a < d; ++a) {
      if (idx[a] + 1 >= n) continue;
      Index nb = idx;
      ++nb[a];
      acc.add(std::abs(f.at(nb) - f[k]));
    }
  }
  return face * acc.value();
}

}  // namespace bbm
