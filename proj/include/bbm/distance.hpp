#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "bbm/errors.hpp"
#include "bbm/grid.hpp"
#include "bbm/mollifier.hpp"
#include "bbm/oscillation.hpp"
#include "bbm/selection.hpp"

namespace bbm {

/// max of [f]_eps over lattice eps = m/n <= epsilon_cut, the discrete stand-in
/// for limsup_{eps -> 0} [f]_eps.
inline double tail_functional(const GridFunction& f, double epsilon_cut,
                              const SelectOptions& opt = {}) {
  if (!(epsilon_cut > 0.0) || epsilon_cut > 1.0) throw DomainError("epsilon_cut must lie in (0,1]");
  const auto sides = sweep_sides(f.cells(), epsilon_cut);
  if (sides.empty()) {
    throw ArgumentError("epsilon_cut " + std::to_string(epsilon_cut) + " is below 1/n = " +
                        std::to_string(1.0 / f.cells()));
  }
  return oscillation_curve(f, sides, opt).max_value();
}

struct UpperBound {
  double value = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  std::vector<double> per_t;  // b_norm(f - f_t) for each t, in t_grid order
};

/// min over t of ||f - f_t||_B with f_t the mollified approximant, which lies
/// in the vanishing subspace. An upper bound of the distance restricted to
/// that family.
inline UpperBound distance_upper_detail(const GridFunction& f, const std::vector<double>& t_grid,
                                        const MollifierParams& base, const SelectOptions& opt = {}) {
  if (t_grid.empty()) throw ArgumentError("distance upper bound needs at least one t");
  UpperBound out;
  for (double t : t_grid) {
    MollifierParams p = base;
    p.t = t;
    const double v = b_norm(f - approximant(f, p), opt).value;
    out.per_t.push_back(v);
    if (v < out.value) {
      out.value = v;
      out.best_t = t;
    }
  }
  return out;
}

inline double distance_upper(const GridFunction& f, const std::vector<double>& t_grid,
                             const MollifierParams& base = {}, const SelectOptions& opt = {}) {
  return distance_upper_detail(f, t_grid, base, opt).value;
}

struct DistanceOptions {
  double epsilon_cut = 0.25;
  std::vector<double> t_grid{0.125, 0.0625, 0.03125};
  MollifierParams mollifier{};
  SelectOptions select{};
  double tolerance = 0.05;  // relative slack before the sandwich is flagged
};

struct DistanceReport {
  double tail_lower = 0.0;
  double upper = 0.0;
  double best_t = 0.0;
  std::vector<double> upper_per_t;
  OscillationCurve curve;
  double epsilon_cut = 0.25;
  std::vector<double> t_grid;
  // Set when tail_lower exceeds upper beyond the tolerance. This signals
  // under-resolution of the grid, not a failure of the distance formula.
  bool inconsistent = false;
};

inline DistanceReport distance_report(const GridFunction& f, const DistanceOptions& o = {}) {
  if (!(o.epsilon_cut > 0.0) || o.epsilon_cut > 1.0) {
    throw DomainError("epsilon_cut must lie in (0,1]");
  }
  DistanceReport r;
  r.epsilon_cut = o.epsilon_cut;
  r.t_grid = o.t_grid;
  r.curve = oscillation_curve(f, sweep_sides(f.cells()), o.select);
  bool any = false;
  for (const auto& p : r.curve.points) {
    if (p.epsilon <= o.epsilon_cut * (1.0 + 1e-12)) {
      r.tail_lower = std::max(r.tail_lower, p.value);
      any = true;
    }
  }
  if (!any) throw ArgumentError("epsilon_cut is below 1/n");
  const auto up = distance_upper_detail(f, o.t_grid, o.mollifier, o.select);
  r.upper = up.value;
  r.best_t = up.best_t;
  r.upper_per_t = up.per_t;
  r.inconsistent = r.tail_lower > r.upper * (1.0 + o.tolerance) + 1e-12;
  return r;
}

}  // namespace bbm
