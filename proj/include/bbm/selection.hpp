#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bbm/errors.hpp"
#include "bbm/family.hpp"
#include "bbm/grid.hpp"
#include "bbm/integrals.hpp"
#include "bbm/numeric.hpp"
#include "bbm/parallel.hpp"

namespace bbm {

enum class SolveMode {
  exact,      // weighted interval scheduling in d = 1, branch and bound otherwise
  bnb,        // branch and bound, at most kBnbCandidateLimit positive candidates
  greedy,     // descending weight, lower bound
  automatic,  // exact when affordable, greedy otherwise
};

inline constexpr std::size_t kBnbCandidateLimit = 40;
inline constexpr std::size_t kOracleCandidateLimit = 24;

inline std::string_view to_string(SolveMode m) {
  switch (m) {
    case SolveMode::exact: return "exact";
    case SolveMode::bnb: return "bnb";
    case SolveMode::greedy: return "greedy";
    case SolveMode::automatic: return "auto";
  }
  return "auto";
}

inline SolveMode parse_solve_mode(std::string_view s) {
  if (s == "exact") return SolveMode::exact;
  if (s == "bnb") return SolveMode::bnb;
  if (s == "greedy") return SolveMode::greedy;
  if (s == "auto" || s == "automatic") return SolveMode::automatic;
  throw ArgumentError("unknown mode '" + std::string(s) + "' (exact|bnb|greedy|auto)");
}

struct SelectOptions {
  SolveMode mode = SolveMode::automatic;
  int refinement = 2;  // anchors on the lattice of step eps / refinement
  int threads = 1;
};

/// Side in cells for epsilon = side / n; rejects epsilons off the lattice.
inline int side_from_epsilon(double epsilon, int n) {
  if (!(epsilon > 0.0) || epsilon > 1.0) throw DomainError("epsilon must lie in (0,1]");
  const double m = epsilon * n;
  const double r = std::round(m);
  if (r < 1 || std::abs(m - r) > 1e-9 * std::max(1.0, m)) {
    throw ArgumentError("epsilon " + std::to_string(epsilon) + " is not a multiple of 1/" +
                        std::to_string(n));
  }
  return static_cast<int>(r);
}

/// Candidate cubes of one side with their mean oscillations, in
/// lexicographic anchor order.
struct Candidates {
  int dim = 1;
  int cells = 1;
  int side = 1;
  int refinement = 1;
  std::vector<Cube> cubes;
  std::vector<double> weights;  // M(f, Q)
};

// Anchor positions along one axis in units of 1/(n*refinement): multiples
// of the step side (= eps/refinement) that keep the cube inside.
inline std::vector<std::int64_t> anchor_positions(int side, int n, int refinement) {
  std::vector<std::int64_t> pos;
  const std::int64_t step = side;
  const std::int64_t limit = static_cast<std::int64_t>(n - side) * refinement;
  for (std::int64_t a = 0; a <= limit; a += step) pos.push_back(a);
  return pos;
}

inline std::vector<Cube> candidate_cubes(int dim, int n, int side, int refinement) {
  if (side < 1 || side > n) throw DomainError("side must lie in [1, n]");
  if (refinement < 1) throw ArgumentError("anchor refinement must be >= 1");
  const auto pos = anchor_positions(side, n, refinement);
  std::vector<Cube> cubes;
  const std::size_t per_axis = pos.size();
  const std::size_t total = ipow(per_axis, dim);
  cubes.reserve(total);
  for (std::size_t t = 0; t < total; ++t) {
    Cube q{side, {0, 0, 0}, refinement};
    std::size_t r = t;
    for (int a = dim - 1; a >= 0; --a) {
      q.anchor[a] = pos[r % per_axis];
      r /= per_axis;
    }
    cubes.push_back(q);
  }
  return cubes;
}

// Weights take the cube average by direct summation rather than from a summed
// table: the deviation pass visits every cell anyway, and a cube holding one
// value then gets weight exactly 0 instead of round-off.
inline Candidates make_candidates(const GridFunction& f, int side, int refinement, int threads = 1) {
  Candidates c{f.dim(), f.cells(), side, refinement,
               candidate_cubes(f.dim(), f.cells(), side, refinement), {}};
  c.weights.assign(c.cubes.size(), 0.0);
  parallel_for(c.cubes.size(), threads,
               [&](std::size_t i) { c.weights[i] = mean_oscillation(f, c.cubes[i]); });
  return c;
}

/// A chosen family with its value eps^(d-1) * sum M.
struct Selection {
  CubeFamily family;
  double value = 0.0;
  SolveMode solver = SolveMode::greedy;  // the routine that actually ran
};

namespace detail {

inline std::vector<std::size_t> positive_items(const Candidates& c) {
  std::vector<std::size_t> items;
  for (std::size_t i = 0; i < c.weights.size(); ++i) {
    if (c.weights[i] > 0.0) items.push_back(i);
  }
  return items;
}

inline Selection finish(const Candidates& c, std::vector<std::size_t> chosen, bool constrained,
                        SolveMode solver) {
  std::sort(chosen.begin(), chosen.end());  // candidate order is lexicographic
  if (chosen.empty() && !c.cubes.empty()) chosen.push_back(0);
  std::vector<Cube> cubes;
  CompensatedSum sum;
  for (std::size_t i : chosen) {
    cubes.push_back(c.cubes[i]);
    sum.add(c.weights[i]);
  }
  CubeFamily F{c.dim, c.cells, c.side, constrained, std::move(cubes)};
  const double scale = family_scale(F);
  return Selection{std::move(F), scale * sum.value(), solver};
}

inline long effective_cap(const Candidates& c, bool constrained) {
  return constrained ? max_family_cardinality(c.side, c.cells, c.dim)
                     : static_cast<long>(c.cubes.size());
}

}  // namespace detail

/// Weighted interval scheduling with a cardinality cap (d = 1).
///
/// Intervals share one length, so sorting by anchor also sorts by end. The
/// table is filled right to left and an interval is taken whenever taking it
/// is optimal, which yields the lexicographically smallest optimal family.
inline Selection solve_interval_dp(const Candidates& c, bool constrained = true) {
  if (c.dim != 1) throw ArgumentError("interval dynamic program needs d = 1");
  const auto items = detail::positive_items(c);
  const std::size_t N = items.size();
  const long cap = detail::effective_cap(c, constrained);
  const std::size_t K = std::min<std::size_t>(static_cast<std::size_t>(cap), N);
  const std::int64_t length = static_cast<std::int64_t>(c.side) * c.refinement;

  std::vector<std::size_t> next(N, N);
  for (std::size_t i = 0, j = 0; i < N; ++i) {
    j = std::max(j, i + 1);
    while (j < N && c.cubes[items[j]].anchor[0] < c.cubes[items[i]].anchor[0] + length) ++j;
    next[i] = j;
  }
  const std::size_t W = K + 1;
  std::vector<double> best((N + 1) * W, 0.0);
  std::vector<char> take(N * W, 0);
  for (std::size_t i = N; i-- > 0;) {
    for (std::size_t k = 1; k <= K; ++k) {
      const double skip = best[(i + 1) * W + k];
      const double inc = c.weights[items[i]] + best[next[i] * W + k - 1];
      if (inc >= skip - tie_tolerance(skip)) {
        best[i * W + k] = inc;
        take[i * W + k] = 1;
      } else {
        best[i * W + k] = skip;
      }
    }
  }
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0, k = K; i < N && k > 0;) {
    if (take[i * W + k]) {
      chosen.push_back(items[i]);
      i = next[i];
      --k;
    } else {
      ++i;
    }
  }
  return detail::finish(c, std::move(chosen), constrained, SolveMode::exact);
}

namespace detail {

struct BnbProblem {
  std::vector<std::size_t> items;    // candidate indices in search order
  std::vector<double> w;             // weights in search order
  std::vector<std::uint64_t> clash;  // bit j set when item j overlaps item i
  long cap = 1;
};

inline BnbProblem bnb_problem(const Candidates& c, std::vector<std::size_t> items, long cap) {
  BnbProblem p;
  p.items = std::move(items);
  p.cap = cap;
  const std::size_t N = p.items.size();
  p.w.resize(N);
  p.clash.assign(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    p.w[i] = c.weights[p.items[i]];
    for (std::size_t j = 0; j < N; ++j) {
      if (i != j && !interiors_disjoint(c.cubes[p.items[i]], c.cubes[p.items[j]], c.dim)) {
        p.clash[i] |= std::uint64_t{1} << j;
      }
    }
  }
  return p;
}

// Sum of the `slots` largest weights among items >= from that are still free.
inline double remainder_bound(const BnbProblem& p, std::size_t from, std::uint64_t blocked,
                              long slots, const std::vector<std::size_t>& by_weight) {
  double bound = 0.0;
  for (std::size_t r : by_weight) {
    if (slots == 0) break;
    if (r < from || ((blocked >> r) & 1u)) continue;
    bound += p.w[r];
    --slots;
  }
  return bound;
}

// Depth-first search, include branch first. With `target` unset it maximises;
// with `target` set it stops at the first family reaching the target.
class BnbSearch {
 public:
  BnbSearch(const BnbProblem& p, std::optional<double> target)
      : p_(p), target_(target), by_weight_(p.items.size()) {
    std::iota(by_weight_.begin(), by_weight_.end(), std::size_t{0});
    std::stable_sort(by_weight_.begin(), by_weight_.end(),
                     [&](std::size_t a, std::size_t b) { return p_.w[a] > p_.w[b]; });
  }

  void run() {
    std::vector<std::size_t> chosen;
    dfs(0, 0, 0.0, chosen);
  }

  double best_value() const { return best_; }
  const std::vector<std::size_t>& best_set() const { return best_set_; }
  bool found() const { return found_; }

 private:
  void dfs(std::size_t i, std::uint64_t blocked, double value, std::vector<std::size_t>& chosen) {
    if (target_ && found_) return;
    const long slots = p_.cap - static_cast<long>(chosen.size());
    if (target_) {
      if (value >= *target_) {
        found_ = true;
        best_ = value;
        best_set_ = chosen;
        return;
      }
    } else if (value > best_ + tie_tolerance(best_)) {
      best_ = value;
      best_set_ = chosen;
      found_ = true;
    }
    if (i >= p_.items.size() || slots <= 0) return;
    const double bound = value + remainder_bound(p_, i, blocked, slots, by_weight_);
    if (target_ ? bound < *target_ : bound <= best_ + tie_tolerance(best_)) return;
    if (!((blocked >> i) & 1u)) {
      chosen.push_back(i);
      dfs(i + 1, blocked | p_.clash[i], value + p_.w[i], chosen);
      chosen.pop_back();
    }
    dfs(i + 1, blocked, value, chosen);
  }

  const BnbProblem& p_;
  std::optional<double> target_;
  std::vector<std::size_t> by_weight_;
  double best_ = 0.0;
  std::vector<std::size_t> best_set_;
  bool found_ = false;
};

}  // namespace detail

/// Exact branch and bound over the candidate conflict graph.
///
/// Pass one branches in descending weight order to find the optimum; pass
/// two walks the candidates in lexicographic order and returns the first
/// family within tie tolerance of it.
inline Selection solve_branch_and_bound(const Candidates& c, bool constrained = true) {
  auto items = detail::positive_items(c);
  if (items.size() > kBnbCandidateLimit) {
    throw CapacityError("branch and bound supports at most " +
                        std::to_string(kBnbCandidateLimit) + " positive candidates, got " +
                        std::to_string(items.size()) + "; use --mode greedy");
  }
  const long cap = detail::effective_cap(c, constrained);

  auto weight_order = items;
  std::stable_sort(weight_order.begin(), weight_order.end(),
                   [&](std::size_t a, std::size_t b) { return c.weights[a] > c.weights[b]; });
  const auto by_weight = detail::bnb_problem(c, weight_order, cap);
  detail::BnbSearch maximise(by_weight, std::nullopt);
  maximise.run();
  const double optimum = maximise.best_value();

  std::vector<std::size_t> chosen;
  if (optimum > 0.0) {
    const auto lex = detail::bnb_problem(c, items, cap);
    detail::BnbSearch canonical(lex, optimum - tie_tolerance(optimum));
    canonical.run();
    for (std::size_t r : canonical.best_set()) chosen.push_back(items[r]);
  }
  return detail::finish(c, std::move(chosen), constrained, SolveMode::bnb);
}

/// Descending-weight greedy packing; a lower bound on the optimum.
inline Selection solve_greedy(const Candidates& c, bool constrained = true) {
  auto items = detail::positive_items(c);
  std::stable_sort(items.begin(), items.end(),
                   [&](std::size_t a, std::size_t b) { return c.weights[a] > c.weights[b]; });
  const long cap = detail::effective_cap(c, constrained);
  std::vector<std::size_t> chosen;
  for (std::size_t i : items) {
    if (static_cast<long>(chosen.size()) >= cap) break;
    bool free = true;
    for (std::size_t j : chosen) {
      if (!interiors_disjoint(c.cubes[i], c.cubes[j], c.dim)) {
        free = false;
        break;
      }
    }
    if (free) chosen.push_back(i);
  }
  return detail::finish(c, std::move(chosen), constrained, SolveMode::greedy);
}

inline Selection solve(const Candidates& c, SolveMode mode, bool constrained = true) {
  switch (mode) {
    case SolveMode::exact:
      return c.dim == 1 ? solve_interval_dp(c, constrained) : solve_branch_and_bound(c, constrained);
    case SolveMode::bnb:
      return solve_branch_and_bound(c, constrained);
    case SolveMode::greedy:
      return solve_greedy(c, constrained);
    case SolveMode::automatic:
      if (c.dim == 1) return solve_interval_dp(c, constrained);
      if (detail::positive_items(c).size() <= kBnbCandidateLimit) {
        return solve_branch_and_bound(c, constrained);
      }
      return solve_greedy(c, constrained);
  }
  return solve_greedy(c, constrained);
}

/// Best admissible family of cubes with side `side` cells.
inline Selection select_family(const GridFunction& f, int side, const SelectOptions& opt = {}) {
  return solve(make_candidates(f, side, opt.refinement, opt.threads), opt.mode);
}

namespace detail {

// Mean oscillation by brute force over every grid cell, independent of the
// span and summed-table machinery.
inline double brute_oscillation(const GridFunction& f, const Cube& q) {
  // Overlaps in integer units of 1/(n * scale), so weights are exact.
  const std::int64_t unit = q.scale;
  std::vector<double> weight(f.size(), 1.0);
  double vol = 0.0, total = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Index idx = f.unflat(k);
    for (int a = 0; a < f.dim(); ++a) {
      const std::int64_t lo = q.anchor[a];
      const std::int64_t hi = lo + static_cast<std::int64_t>(q.side) * unit;
      const std::int64_t overlap = std::max<std::int64_t>(
          0, std::min<std::int64_t>(hi, (idx[a] + 1) * unit) - std::max<std::int64_t>(lo, idx[a] * unit));
      weight[k] *= static_cast<double>(overlap) / static_cast<double>(unit);
    }
    vol += weight[k];
    total += weight[k] * f[k];
  }
  const double avg = total / vol;
  double dev = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) dev += weight[k] * std::abs(f[k] - avg);
  return dev / vol;
}

struct OracleState {
  const std::vector<Cube>* cubes;
  const std::vector<double>* w;
  int dim;
  long cap;
  std::optional<double> target;
  double best = 0.0;
  std::vector<std::size_t> best_set;
  bool found = false;

  void visit(std::size_t i, std::vector<std::size_t>& chosen, double value) {
    if (target && found) return;
    if (target && value >= *target) {
      found = true;
      best_set = chosen;
      best = value;
      return;
    }
    if (i == cubes->size()) {
      if (!target && value > best) {
        best = value;
        best_set = chosen;
      }
      return;
    }
    if (static_cast<long>(chosen.size()) < cap) {
      bool free = true;
      for (std::size_t j : chosen) free = free && interiors_disjoint((*cubes)[i], (*cubes)[j], dim);
      if (free) {
        chosen.push_back(i);
        visit(i + 1, chosen, value + (*w)[i]);
        chosen.pop_back();
      }
    }
    visit(i + 1, chosen, value);
  }
};

}  // namespace detail

/// Exhaustive reference: every disjoint subset of the candidates (cap
/// respected when constrained) is enumerated. Ground truth for the solvers.
inline Selection oracle_family(const GridFunction& f, int side, bool constrained = true,
                               int refinement = 1) {
  auto cubes = candidate_cubes(f.dim(), f.cells(), side, refinement);
  if (cubes.size() > kOracleCandidateLimit) {
    throw CapacityError("oracle supports at most " + std::to_string(kOracleCandidateLimit) +
                        " candidates, got " + std::to_string(cubes.size()));
  }
  std::vector<double> w(cubes.size());
  for (std::size_t i = 0; i < cubes.size(); ++i) w[i] = detail::brute_oscillation(f, cubes[i]);
  const long cap = constrained ? max_family_cardinality(side, f.cells(), f.dim())
                               : static_cast<long>(cubes.size());

  detail::OracleState search{&cubes, &w, f.dim(), cap, std::nullopt, 0.0, {}, false};
  std::vector<std::size_t> chosen;
  search.visit(0, chosen, 0.0);
  const double optimum = search.best;

  // Lexicographically first family within tie tolerance, positive weights only.
  std::vector<std::size_t> result;
  if (optimum > tie_tolerance(optimum)) {
    std::vector<Cube> pos_cubes;
    std::vector<double> pos_w;
    std::vector<std::size_t> back;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
      if (w[i] > 0.0) {
        pos_cubes.push_back(cubes[i]);
        pos_w.push_back(w[i]);
        back.push_back(i);
      }
    }
    detail::OracleState canonical{&pos_cubes, &pos_w, f.dim(), cap,
                                  optimum - tie_tolerance(optimum), 0.0, {}, false};
    chosen.clear();
    canonical.visit(0, chosen, 0.0);
    for (std::size_t r : canonical.best_set) result.push_back(back[r]);
  } else if (!cubes.empty()) {
    result.push_back(0);
  }
  std::vector<Cube> fam;
  double sum = 0.0;
  for (std::size_t i : result) {
    fam.push_back(cubes[i]);
    sum += w[i];
  }
  const double scale = std::pow(static_cast<double>(side) / f.cells(), f.dim() - 1);
  return Selection{CubeFamily{f.dim(), f.cells(), side, constrained, std::move(fam)}, scale * sum,
                   SolveMode::exact};
}

inline double oracle_family_value(const GridFunction& f, int side, bool constrained = true,
                                  int refinement = 1) {
  return oracle_family(f, side, constrained, refinement).value;
}

}  // namespace bbm
