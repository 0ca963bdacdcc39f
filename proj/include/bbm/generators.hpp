#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bbm/errors.hpp"
#include "bbm/grid.hpp"
#include "bbm/integrals.hpp"

namespace bbm {

/// Uniform double in [lo, hi) from the top 53 bits of a 64-bit Mersenne
/// twister; identical on every platform for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }
  std::uint64_t next() { return engine_(); }
  int below(int bound) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(bound)); }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

// Builds a grid whose cell values are products of per-axis cell averages.
inline GridFunction separable(int dim, int n, const std::function<double(int, int)>& axis_avg) {
  std::vector<double> v(ipow(static_cast<std::size_t>(n), dim));
  GridFunction shape = GridFunction::constant(dim, n, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Index idx = shape.unflat(k);
    double p = 1.0;
    for (int a = 0; a < dim; ++a) p *= axis_avg(a, idx[a]);
    v[k] = p;
  }
  return {dim, n, std::move(v)};
}

// Average over [x0, x1] of the square wave (-1)^floor(x / h).
inline double square_wave_average(double x0, double x1, double h) {
  // Antiderivative of the square wave: triangle wave.
  const auto tri = [h](double x) {
    const double k = std::floor(x / h);
    const double r = x - k * h;
    const double sign = (static_cast<long long>(k) % 2 == 0) ? 1.0 : -1.0;
    const double base = (static_cast<long long>(k) % 2 == 0) ? 0.0 : h;
    return base + sign * r;
  };
  return (tri(x1) - tri(x0)) / (x1 - x0);
}

inline double interval_overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace detail

inline GridFunction gen_constant(int dim, int n, double c = 1.0) {
  return GridFunction::constant(dim, n, c);
}

/// 0 for x_1 < position, 1 beyond, as exact cell averages.
inline GridFunction gen_step(int dim, int n, double position = 0.5) {
  return detail::separable(dim, n, [&](int axis, int i) {
    if (axis != 0) return 1.0;
    const double x0 = static_cast<double>(i) / n, x1 = static_cast<double>(i + 1) / n;
    return detail::interval_overlap(x0, x1, position, 1.0) * n;
  });
}

/// prod_k (-1)^floor(x_k / h): +-1 checks of side h.
inline GridFunction gen_checkerboard(int dim, int n, double h) {
  if (!(h > 0.0)) throw DomainError("checkerboard scale must be positive");
  return detail::separable(dim, n, [&](int, int i) {
    return detail::square_wave_average(static_cast<double>(i) / n, static_cast<double>(i + 1) / n, h);
  });
}

/// Indicator of the cube [lo, hi]^d.
inline GridFunction gen_indicator(int dim, int n, double lo, double hi) {
  return detail::separable(dim, n, [&](int, int i) {
    const double x0 = static_cast<double>(i) / n, x1 = static_cast<double>(i + 1) / n;
    return detail::interval_overlap(x0, x1, lo, hi) * n;
  });
}

/// Sum of checkerboards of scales 1/2, 1/4, ..., 2^-levels with equal
/// amplitude, so every scale carries a comparable bracket.
inline GridFunction gen_cascade(int dim, int n, int levels = 3) {
  if (levels < 1) throw DomainError("cascade needs at least one level");
  GridFunction f = GridFunction::constant(dim, n, 0.0);
  for (int j = 1; j <= levels; ++j) f = f + gen_checkerboard(dim, n, std::ldexp(1.0, -j));
  return f;
}

/// Uniform [-1, 1) values on a coarse grid of `coarse` cells per axis,
/// averaged onto the n-grid. Depends on the seed and `coarse` only, so the
/// same function is obtained at every resolution.
inline GridFunction gen_random(int dim, int n, std::uint64_t seed, int coarse) {
  if (coarse < 1) throw DomainError("coarse cell count must be positive");
  Rng rng(seed);
  std::vector<double> cv(ipow(static_cast<std::size_t>(coarse), dim));
  for (double& x : cv) x = rng.uniform(-1.0, 1.0);
  const GridFunction c(dim, coarse, std::move(cv));
  if (coarse == n) return c;
  std::vector<double> v(ipow(static_cast<std::size_t>(n), dim));
  const GridFunction shape = GridFunction::constant(dim, n, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Index idx = shape.unflat(k);
    Box b{1.0 / n, {0, 0, 0}};
    for (int a = 0; a < dim; ++a) b.lower[a] = static_cast<double>(idx[a]) / n;
    v[k] = cube_average(c, b);
  }
  return {dim, n, std::move(v)};
}

/// Random values on every cell.
inline GridFunction gen_random_cells(int dim, int n, std::uint64_t seed, double lo = -1.0,
                                     double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> v(ipow(static_cast<std::size_t>(n), dim));
  for (double& x : v) x = rng.uniform(lo, hi);
  return {dim, n, std::move(v)};
}

/// x_1 x_2 ... x_d, exact cell averages (the product of cell centres).
inline GridFunction gen_smooth(int dim, int n) {
  return detail::separable(dim, n, [&](int, int i) { return (i + 0.5) / n; });
}

/// |log |x - x0||, x0 = (c, ..., c), by midpoint supersampling.
inline GridFunction gen_log(int dim, int n, double center = 1.0 / 3.0, int supersample = 8) {
  std::vector<double> v(ipow(static_cast<std::size_t>(n), dim));
  const GridFunction shape = GridFunction::constant(dim, n, 0.0);
  const std::size_t sub = ipow(static_cast<std::size_t>(supersample), dim);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Index idx = shape.unflat(k);
    double acc = 0.0;
    for (std::size_t s = 0; s < sub; ++s) {
      std::size_t r = s;
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) {
        const double x = (idx[a] + (static_cast<double>(r % supersample) + 0.5) / supersample) / n;
        r /= supersample;
        r2 += (x - center) * (x - center);
      }
      acc += std::abs(0.5 * std::log(r2));
    }
    v[k] = acc / static_cast<double>(sub);
  }
  return {dim, n, std::move(v)};
}

/// Generator request as used by the command line.
struct GenSpec {
  std::string kind = "constant";
  int dim = 1;
  int cells = 16;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

inline const std::vector<std::string>& generator_kinds() {
  static const std::vector<std::string> kinds{"constant", "step",   "checkerboard", "indicator",
                                              "cascade",  "random", "random-cells", "smooth",
                                              "log"};
  return kinds;
}

inline GridFunction generate(const GenSpec& g) {
  const int d = g.dim, n = g.cells;
  if (g.kind == "constant") return gen_constant(d, n, g.param("value", 1.0));
  if (g.kind == "step") return gen_step(d, n, g.param("position", 0.5));
  if (g.kind == "checkerboard") return gen_checkerboard(d, n, g.param("scale", 0.25));
  if (g.kind == "indicator") return gen_indicator(d, n, g.param("lo", 0.0), g.param("hi", 0.5));
  if (g.kind == "cascade") return gen_cascade(d, n, static_cast<int>(g.param("levels", 3)));
  if (g.kind == "random") return gen_random(d, n, g.seed, static_cast<int>(g.param("coarse", 8)));
  if (g.kind == "random-cells") return gen_random_cells(d, n, g.seed);
  if (g.kind == "smooth") return gen_smooth(d, n);
  if (g.kind == "log") return gen_log(d, n, g.param("center", 1.0 / 3.0));
  throw ArgumentError("unknown generator kind '" + g.kind + "'");
}

}  // namespace bbm
