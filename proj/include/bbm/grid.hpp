#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bbm/errors.hpp"
#include "bbm/numeric.hpp"

namespace bbm {

inline constexpr int kMaxDim = 3;

using Index = std::array<int, kMaxDim>;

/// Piecewise-constant function on the uniform n^d grid over (0,1)^d.
///
/// Cell (i_1, ..., i_d) covers the box prod [i_k/n, (i_k+1)/n) and is stored
/// row-major: the last axis varies fastest.
class GridFunction {
 public:
  GridFunction() = default;

  GridFunction(int dim, int cells, std::vector<double> values)
      : dim_(dim), cells_(cells), values_(std::move(values)) {
    if (dim < 1 || dim > kMaxDim) {
      throw DomainError("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
    }
    if (cells < 1) throw DomainError("grid needs at least one cell per axis");
    if (values_.size() != ipow(static_cast<std::size_t>(cells), dim)) {
      throw ShapeError("grid of " + std::to_string(cells) + "^" + std::to_string(dim) +
                       " cells given " + std::to_string(values_.size()) + " values");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw DomainError("grid values must be finite");
    }
  }

  static GridFunction constant(int dim, int cells, double c) {
    return GridFunction(dim, cells,
                        std::vector<double>(ipow(static_cast<std::size_t>(cells), dim), c));
  }

  int dim() const noexcept { return dim_; }
  int cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return values_.size(); }
  double cell_volume() const noexcept {
    return std::pow(1.0 / static_cast<double>(cells_), dim_);
  }

  std::span<const double> values() const& noexcept { return values_; }
  // A span into a temporary would dangle.
  std::span<const double> values() const&& = delete;
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  std::size_t flat(const Index& idx) const noexcept {
    std::size_t k = 0;
    for (int a = 0; a < dim_; ++a) k = k * static_cast<std::size_t>(cells_) + idx[a];
    return k;
  }
  Index unflat(std::size_t k) const noexcept {
    Index idx{0, 0, 0};
    for (int a = dim_ - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(k % cells_);
      k /= cells_;
    }
    return idx;
  }
  double at(const Index& idx) const noexcept { return values_[flat(idx)]; }

  bool same_shape(const GridFunction& other) const noexcept {
    return dim_ == other.dim_ && cells_ == other.cells_;
  }

  friend bool operator==(const GridFunction&, const GridFunction&) = default;

 private:
  int dim_ = 1;
  int cells_ = 1;
  std::vector<double> values_{0.0};
};

inline void require_same_shape(const GridFunction& f, const GridFunction& g) {
  if (!f.same_shape(g)) {
    throw ShapeError("grid mismatch: d=" + std::to_string(f.dim()) + " n=" +
                     std::to_string(f.cells()) + " vs d=" + std::to_string(g.dim()) +
                     " n=" + std::to_string(g.cells()));
  }
}

inline GridFunction operator+(const GridFunction& f, double c) {
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x += c;
  return {f.dim(), f.cells(), std::move(v)};
}

inline GridFunction operator*(double alpha, const GridFunction& f) {
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x *= alpha;
  return {f.dim(), f.cells(), std::move(v)};
}

inline GridFunction operator-(const GridFunction& f, const GridFunction& g) {
  require_same_shape(f, g);
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i] - g[i];
  return {f.dim(), f.cells(), std::move(v)};
}

inline GridFunction operator+(const GridFunction& f, const GridFunction& g) {
  require_same_shape(f, g);
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i] + g[i];
  return {f.dim(), f.cells(), std::move(v)};
}

/// Closed axis-parallel cube with rational coordinates.
///
/// The side is `side` cells (epsilon = side / n) and the lower corner along
/// axis k sits at anchor[k] / (n * scale). With scale == 1 this is the
/// lattice form (m, offset). Larger scales express the refined anchor
/// lattices used by the family search.
struct Cube {
  int side = 1;
  std::array<std::int64_t, kMaxDim> anchor{0, 0, 0};
  int scale = 1;

  double epsilon(int n) const noexcept { return static_cast<double>(side) / n; }
  double anchor_coord(int axis, int n) const noexcept {
    return static_cast<double>(anchor[axis]) / (static_cast<double>(n) * scale);
  }
  bool on_cell_lattice() const noexcept {
    for (auto a : anchor) {
      if (a % scale != 0) return false;
    }
    return true;
  }
};

// Exact comparisons between cubes that may use different anchor scales.
inline std::strong_ordering compare_anchors(const Cube& a, const Cube& b, int dim) noexcept {
  for (int k = 0; k < dim; ++k) {
    const std::int64_t lhs = a.anchor[k] * b.scale;
    const std::int64_t rhs = b.anchor[k] * a.scale;
    if (lhs != rhs) return lhs <=> rhs;
  }
  return std::strong_ordering::equal;
}

inline bool same_cube(const Cube& a, const Cube& b, int dim) noexcept {
  return a.side == b.side && compare_anchors(a, b, dim) == 0;
}

// Interiors are disjoint iff the cubes are separated along some axis.
// Shared faces are allowed.
inline bool interiors_disjoint(const Cube& a, const Cube& b, int dim) noexcept {
  for (int k = 0; k < dim; ++k) {
    const std::int64_t s = static_cast<std::int64_t>(a.scale) * b.scale;
    const std::int64_t a_lo = a.anchor[k] * b.scale;
    const std::int64_t b_lo = b.anchor[k] * a.scale;
    const std::int64_t a_hi = a_lo + static_cast<std::int64_t>(a.side) * s;
    const std::int64_t b_hi = b_lo + static_cast<std::int64_t>(b.side) * s;
    if (a_hi <= b_lo || b_hi <= a_lo) return true;
  }
  return false;
}

inline bool cube_inside(const Cube& q, int dim, int n) noexcept {
  if (q.side < 1 || q.scale < 1 || q.side > n) return false;
  const std::int64_t limit = static_cast<std::int64_t>(n) * q.scale;
  for (int k = 0; k < dim; ++k) {
    if (q.anchor[k] < 0) return false;
    if (q.anchor[k] + static_cast<std::int64_t>(q.side) * q.scale > limit) return false;
  }
  return true;
}

inline void require_inside(const Cube& q, const GridFunction& f) {
  if (!cube_inside(q, f.dim(), f.cells())) {
    throw DomainError("cube of side " + std::to_string(q.side) + "/" +
                      std::to_string(f.cells()) + " is not inside the unit cube");
  }
}

/// Cube with arbitrary real anchor and side, for off-lattice evaluation.
struct Box {
  double side = 1.0;
  std::array<double, kMaxDim> lower{0.0, 0.0, 0.0};
};

inline void require_inside(const Box& b, const GridFunction& f) {
  constexpr double slack = 1e-14;
  if (!(b.side > 0.0) || b.side > 1.0 + slack) throw DomainError("box side must lie in (0,1]");
  for (int k = 0; k < f.dim(); ++k) {
    if (b.lower[k] < -slack || b.lower[k] + b.side > 1.0 + slack) {
      throw DomainError("box is not inside the unit cube");
    }
  }
}

/// Cells met by an interval along one axis and the covered fraction of each.
struct AxisSpan {
  int first = 0;
  std::vector<double> weight;
};

// Interval [lo, hi] in units of 1/(n*scale) against cells [j*scale, (j+1)*scale).
inline AxisSpan axis_span(std::int64_t lo, std::int64_t hi, int scale) {
  AxisSpan span;
  const std::int64_t first = lo / scale;
  const std::int64_t last = (hi + scale - 1) / scale;  // exclusive
  span.first = static_cast<int>(first);
  span.weight.reserve(static_cast<std::size_t>(last - first));
  for (std::int64_t j = first; j < last; ++j) {
    const std::int64_t a = std::max(lo, j * scale);
    const std::int64_t b = std::min(hi, (j + 1) * scale);
    span.weight.push_back(static_cast<double>(b - a) / scale);
  }
  return span;
}

inline AxisSpan axis_span(double lo, double hi, int n) {
  AxisSpan span;
  const double x0 = std::clamp(lo * n, 0.0, static_cast<double>(n));
  const double x1 = std::clamp(hi * n, 0.0, static_cast<double>(n));
  const int first = std::min(static_cast<int>(std::floor(x0)), n - 1);
  const int last = std::max(first + 1, std::min(n, static_cast<int>(std::ceil(x1))));
  span.first = first;
  for (int j = first; j < last; ++j) {
    const double a = std::max(x0, static_cast<double>(j));
    const double b = std::min(x1, static_cast<double>(j + 1));
    span.weight.push_back(std::max(0.0, b - a));
  }
  return span;
}

using Spans = std::array<AxisSpan, kMaxDim>;

inline Spans cube_spans(const Cube& q, int dim) {
  Spans s;
  for (int k = 0; k < dim; ++k) {
    s[k] = axis_span(q.anchor[k], q.anchor[k] + static_cast<std::int64_t>(q.side) * q.scale,
                     q.scale);
  }
  return s;
}

inline Spans box_spans(const Box& b, int dim, int n) {
  Spans s;
  for (int k = 0; k < dim; ++k) s[k] = axis_span(b.lower[k], b.lower[k] + b.side, n);
  return s;
}

// Calls fn(value, weight) for every cell met by the spans; the weight is the
// covered fraction of the cell (product over axes).
template <class Fn>
void for_each_weighted(const GridFunction& f, const Spans& s, Fn&& fn) {
  const auto vals = f.values();
  const std::size_t n = static_cast<std::size_t>(f.cells());
  switch (f.dim()) {
    case 1:
      for (std::size_t i = 0; i < s[0].weight.size(); ++i) {
        fn(vals[s[0].first + i], s[0].weight[i]);
      }
      break;
    case 2:
      for (std::size_t i = 0; i < s[0].weight.size(); ++i) {
        const std::size_t row = (s[0].first + i) * n + s[1].first;
        const double wi = s[0].weight[i];
        for (std::size_t j = 0; j < s[1].weight.size(); ++j) {
          fn(vals[row + j], wi * s[1].weight[j]);
        }
      }
      break;
    default:
      for (std::size_t i = 0; i < s[0].weight.size(); ++i) {
        const double wi = s[0].weight[i];
        for (std::size_t j = 0; j < s[1].weight.size(); ++j) {
          const std::size_t row = ((s[0].first + i) * n + s[1].first + j) * n + s[2].first;
          const double wij = wi * s[1].weight[j];
          for (std::size_t l = 0; l < s[2].weight.size(); ++l) {
            fn(vals[row + l], wij * s[2].weight[l]);
          }
        }
      }
      break;
  }
}

}  // namespace bbm
