#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "bbm/errors.hpp"
#include "bbm/grid.hpp"
#include "bbm/oscillation.hpp"
#include "bbm/selection.hpp"

namespace bbm {

enum class Kernel { tent };

// exact: closed-form cell averages of the convolution.
// midpoint: midpoint rule on a supersampled lattice in x and y.
enum class Quadrature { exact, midpoint };

inline Kernel parse_kernel(std::string_view s) {
  if (s == "tent") return Kernel::tent;
  throw ArgumentError("unknown kernel '" + std::string(s) + "' (only tent is available)");
}

inline Quadrature parse_quadrature(std::string_view s) {
  if (s == "exact") return Quadrature::exact;
  if (s == "midpoint") return Quadrature::midpoint;
  throw ArgumentError("unknown quadrature '" + std::string(s) + "' (exact|midpoint)");
}

/// psi(y) = prod (1 - |y_k|)_+ scaled to phi_t(y) = t^-d psi(y / t).
struct MollifierParams {
  double t = 0.125;
  Kernel kernel = Kernel::tent;
  int supersample = 4;
  Quadrature quadrature = Quadrature::exact;
};

inline void require_valid(const MollifierParams& p) {
  if (!(p.t > 0.0 && p.t < 0.5)) {
    throw DomainError("mollifier parameter t must lie in (0, 1/2), got " + std::to_string(p.t));
  }
  if (p.supersample < 1) throw ArgumentError("supersample must be >= 1");
}

/// Linear map between grid functions of the same shape, applied one axis at a
/// time: out_i = sum_j rows[i].weight[j - first] * in_j.
struct AxisOperator {
  struct Row {
    int first = 0;
    std::vector<double> weight;
  };
  std::vector<Row> rows;
};

inline GridFunction apply_separable(const GridFunction& f, const AxisOperator& op) {
  const int n = f.cells();
  const int d = f.dim();
  if (static_cast<int>(op.rows.size()) != n) throw ShapeError("axis operator size mismatch");
  std::vector<double> cur(f.values().begin(), f.values().end());
  std::vector<double> next(cur.size());
  for (int axis = 0; axis < d; ++axis) {
    const std::size_t stride = ipow(static_cast<std::size_t>(n), d - 1 - axis);
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < cur.size(); base += block) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        const std::size_t origin = base + inner;
        for (int i = 0; i < n; ++i) {
          const auto& row = op.rows[i];
          double acc = 0.0;
          for (std::size_t j = 0; j < row.weight.size(); ++j) {
            acc += row.weight[j] * cur[origin + (row.first + j) * stride];
          }
          next[origin + static_cast<std::size_t>(i) * stride] = acc;
        }
      }
    }
    cur.swap(next);
  }
  return {d, n, std::move(cur)};
}

/// Cell averages of x -> f((1-2t)x + t): cell i maps onto the interval
/// [(1-2t) i/n + t, (1-2t)(i+1)/n + t] of the source grid.
inline AxisOperator rescale_operator(int n, double t) {
  AxisOperator op;
  const double shrink = 1.0 - 2.0 * t;
  for (int i = 0; i < n; ++i) {
    const double lo = shrink * i / n + t;
    const double hi = shrink * (i + 1) / n + t;
    AxisSpan span = axis_span(lo, hi, n);
    double total = 0.0;
    for (double w : span.weight) total += w;
    for (double& w : span.weight) w /= total;
    op.rows.push_back({span.first, std::move(span.weight)});
  }
  return op;
}

namespace detail {

// Second antiderivative of the one-dimensional tent density of half-width t:
// Psi(z) = integral from -inf to z of Phi, Phi the tent distribution function.
inline double tent_psi(double z, double t) {
  if (z <= -t) return 0.0;
  if (z >= t) return z;
  if (z <= 0.0) {
    const double u = z + t;
    return u * u * u / (6.0 * t * t);
  }
  const double u = t - z;
  return z + u * u * u / (6.0 * t * t);
}

inline double tent_density(double y, double t) {
  const double a = std::abs(y);
  return a >= t ? 0.0 : (1.0 - a / t) / t;
}

}  // namespace detail

/// One axis of h = phi_t * g, g(x) = f((1-2t)x + t), as exact cell averages:
/// row i, column j is n * integral over cell i of P(x - y lands in the
/// preimage of source cell j).
inline AxisOperator mollify_operator_exact(int n, double t) {
  AxisOperator op;
  const double shrink = 1.0 - 2.0 * t;
  for (int i = 0; i < n; ++i) {
    const double x0 = static_cast<double>(i) / n;
    const double x1 = static_cast<double>(i + 1) / n;
    const double u_lo = shrink * (x0 - t) + t;
    const double u_hi = shrink * (x1 + t) + t;
    const int j0 = std::clamp(static_cast<int>(std::floor(u_lo * n)), 0, n - 1);
    const int j1 = std::clamp(static_cast<int>(std::ceil(u_hi * n)), j0 + 1, n);
    AxisOperator::Row row{j0, {}};
    for (int j = j0; j < j1; ++j) {
      const double a = (static_cast<double>(j) / n - t) / shrink;
      const double b = (static_cast<double>(j + 1) / n - t) / shrink;
      const double w = n * (detail::tent_psi(x1 - a, t) - detail::tent_psi(x0 - a, t) -
                            detail::tent_psi(x1 - b, t) + detail::tent_psi(x0 - b, t));
      row.weight.push_back(std::max(0.0, w));
    }
    double total = 0.0;
    for (double w : row.weight) total += w;
    for (double& w : row.weight) w /= total;
    op.rows.push_back(std::move(row));
  }
  return op;
}

// Kernel nodes: midpoints of 2Q equal pieces of (-t, t), Q = supersample *
// max(1, ceil(t n)). Returns (node, unnormalised weight) pairs.
inline std::vector<std::pair<double, double>> tent_nodes(int n, double t, int supersample) {
  const int q = supersample * std::max(1, static_cast<int>(std::ceil(t * n)));
  const double h = t / q;
  std::vector<std::pair<double, double>> nodes;
  for (int b = 0; b < 2 * q; ++b) {
    const double y = -t + (b + 0.5) * h;
    nodes.emplace_back(y, detail::tent_density(y, t) * h);
  }
  return nodes;
}

/// Midpoint-rule mass of the d-dimensional kernel; 1 up to round-off because
/// the tent is linear on every piece.
inline double kernel_mass(int n, int dim, const MollifierParams& p) {
  require_valid(p);
  double mass = 0.0;
  for (const auto& node : tent_nodes(n, p.t, p.supersample)) mass += node.second;
  return std::pow(mass, dim);
}

inline AxisOperator mollify_operator_midpoint(int n, double t, int supersample) {
  AxisOperator op;
  const double shrink = 1.0 - 2.0 * t;
  auto nodes = tent_nodes(n, t, supersample);
  double mass = 0.0;
  for (const auto& node : nodes) mass += node.second;
  for (int i = 0; i < n; ++i) {
    std::vector<double> dense(n, 0.0);
    for (int a = 0; a < supersample; ++a) {
      const double x = (i + (a + 0.5) / supersample) / n;
      for (const auto& [y, w] : nodes) {
        const double u = shrink * (x - y) + t;
        const int j = std::clamp(static_cast<int>(std::floor(u * n)), 0, n - 1);
        dense[j] += w / (mass * supersample);
      }
    }
    int first = 0;
    while (first < n - 1 && dense[first] == 0.0) ++first;
    int last = n;
    while (last > first + 1 && dense[last - 1] == 0.0) --last;
    op.rows.push_back({first, std::vector<double>(dense.begin() + first, dense.begin() + last)});
  }
  return op;
}

/// g(x) = f((1-2t)x + t) on the grid of f, keeping f so that g can still be
/// evaluated on (-t, 1+t)^d.
struct Rescaled {
  GridFunction values;
  GridFunction source;
  double t = 0.0;
};

inline Rescaled rescale(const GridFunction& f, double t) {
  if (!(t > 0.0 && t < 0.5)) {
    throw DomainError("rescale parameter t must lie in (0, 1/2), got " + std::to_string(t));
  }
  return {apply_separable(f, rescale_operator(f.cells(), t)), f, t};
}

/// h = phi_t * g, as cell values on the grid of g.
inline GridFunction mollify(const Rescaled& g, const MollifierParams& p) {
  require_valid(p);
  if (g.t != p.t) {
    throw ArgumentError("rescaled function was built with t=" + std::to_string(g.t) +
                        " but the mollifier uses t=" + std::to_string(p.t));
  }
  const int n = g.source.cells();
  const AxisOperator op = p.quadrature == Quadrature::exact
                              ? mollify_operator_exact(n, p.t)
                              : mollify_operator_midpoint(n, p.t, p.supersample);
  return apply_separable(g.source, op);
}

/// f_t = (1-2t)^(d-1) * phi_t * g.
inline GridFunction approximant(const GridFunction& f, const MollifierParams& p) {
  const GridFunction h = mollify(rescale(f, p.t), p);
  return std::pow(1.0 - 2.0 * p.t, f.dim() - 1) * h;
}

struct TransferCheck {
  double approximant_bracket = 0.0;  // [f_t]_eps
  double source_bracket = 0.0;       // [f]_{(1-2t) eps}
  int side = 1;
  int shrunk_side = 1;
  int source_refinement = 1;
};

// Values of t in (0, 1/2) for which (1-2t) * side is a whole number of cells.
inline std::vector<double> admissible_transfer_t(int side) {
  std::vector<double> ts;
  for (int m = side - 1; m >= 1; --m) ts.push_back(static_cast<double>(side - m) / (2.0 * side));
  return ts;
}

/// Both sides of [f_t]_eps <= [f]_{(1-2t)eps} with eps = side / n.
///
/// The map x -> (1-2t)x + t does not carry the eps/s anchor lattice onto the
/// (1-2t)eps/s one, so the right side is taken over anchors on every 1/s of a
/// cell. Otherwise a jump can fall between anchors on the right only. Both
/// lattices give lower bounds for the right side, and the larger is kept, since
/// the finer one may exceed the exact solvers' candidate limit.
inline TransferCheck bracket_transfer_check(const GridFunction& f, const MollifierParams& p,
                                            int side, const SelectOptions& opt = {}) {
  require_valid(p);
  const double shrunk = (1.0 - 2.0 * p.t) * side;
  const double rounded = std::round(shrunk);
  if (rounded < 1 || std::abs(shrunk - rounded) > 1e-9) {
    std::string list;
    for (double t : admissible_transfer_t(side)) list += (list.empty() ? "" : ", ") + std::to_string(t);
    throw ArgumentError("(1-2t)*eps is not a lattice side for side=" + std::to_string(side) +
                        "; admissible t: " + (list.empty() ? "none" : list));
  }
  TransferCheck out;
  out.side = side;
  out.shrunk_side = static_cast<int>(rounded);
  out.source_refinement = out.shrunk_side * opt.refinement;
  out.approximant_bracket = bracket_epsilon(approximant(f, p), side, opt).value;
  SelectOptions fine = opt;
  fine.refinement = out.source_refinement;
  out.source_bracket = std::max(bracket_epsilon(f, out.shrunk_side, opt).value,
                                bracket_epsilon(f, out.shrunk_side, fine).value);
  return out;
}

}  // namespace bbm
