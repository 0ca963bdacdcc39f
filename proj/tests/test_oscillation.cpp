#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bbm/family.hpp"
#include "bbm/generators.hpp"
#include "bbm/oscillation.hpp"
#include "bbm/selection.hpp"
#include "oracles.hpp"

using namespace bbm;

namespace {

// Random admissible family of lattice cubes, built by rejection.
CubeFamily random_family(int d, int n, Rng& rng, bool constrained) {
  const int m = 1 + rng.below(n);
  const long cap = constrained ? max_family_cardinality(m, n, d) : 1000;
  std::vector<Cube> cubes;
  for (int tries = 0; tries < 40 && static_cast<long>(cubes.size()) < cap; ++tries) {
    Cube q{m, {0, 0, 0}, 1};
    for (int a = 0; a < d; ++a) q.anchor[a] = rng.below(n - m + 1);
    bool ok = true;
    for (const auto& c : cubes) ok = ok && interiors_disjoint(c, q, d);
    if (ok) cubes.push_back(q);
  }
  return make_family(d, n, m, std::move(cubes), constrained);
}

}  // namespace

TEST(Cardinality, Examples) {
  EXPECT_EQ(max_family_cardinality(0.3, 1), 1);
  EXPECT_EQ(max_family_cardinality(0.5, 2), 2);
  EXPECT_EQ(max_family_cardinality(0.3, 3), 11);
  EXPECT_EQ(max_family_cardinality(1.0, 3), 1);
  EXPECT_EQ(max_family_cardinality(1, 3, 2), 3);
  EXPECT_EQ(max_family_cardinality(2, 6, 3), 9);
  EXPECT_EQ(max_family_cardinality(3, 7, 2), 2);
}

TEST(Cardinality, DomainErrors) {
  EXPECT_THROW(max_family_cardinality(0.0, 2), DomainError);
  EXPECT_THROW(max_family_cardinality(1.5, 2), DomainError);
  EXPECT_THROW(max_family_cardinality(-0.1, 1), DomainError);
}

TEST(Cardinality, IntegerFormAgreesWithRealForm) {
  for (int d = 1; d <= 3; ++d)
    for (int n = 1; n <= 40; ++n)
      for (int m = 1; m <= n; ++m)
        EXPECT_EQ(max_family_cardinality(m, n, d), max_family_cardinality(static_cast<double>(m) / n, d))
            << d << " " << m << "/" << n;
}

TEST(Family, ValidityChecks) {
  const auto ok = make_family(2, 4, 2, {Cube{2, {0, 0, 0}, 1}, Cube{2, {2, 0, 0}, 1}});
  EXPECT_TRUE(is_valid(ok));
  auto overlap = make_family(2, 4, 2, {Cube{2, {0, 0, 0}, 1}, Cube{2, {1, 1, 0}, 1}});
  EXPECT_THROW(require_valid(overlap), FamilyError);
  auto too_many = make_family(2, 4, 2, {Cube{2, {0, 0, 0}, 1}, Cube{2, {2, 0, 0}, 1}, Cube{2, {0, 2, 0}, 1}});
  EXPECT_FALSE(is_valid(too_many));
  too_many.constrained = false;
  EXPECT_TRUE(is_valid(too_many));
  const auto outside = make_family(2, 4, 2, {Cube{2, {3, 0, 0}, 1}});
  EXPECT_FALSE(is_valid(outside));
  const auto f = GridFunction::constant(2, 4, 0.0);
  EXPECT_THROW(family_value(f, overlap), FamilyError);
  EXPECT_THROW(family_operator(f, overlap), FamilyError);
}

TEST(FamilyValue, EmptyFamilyIsZero) {
  const auto f = gen_random_cells(2, 4, 1);
  EXPECT_EQ(family_value(f, make_family(2, 4, 2, {})), 0.0);
}

TEST(FamilyValue, StepOnWholeInterval) {
  const auto f = gen_step(1, 8);
  EXPECT_DOUBLE_EQ(family_value(f, make_family(1, 8, 8, {Cube{8, {0, 0, 0}, 1}})), 0.5);
}

TEST(FamilyValue, TrivialEstimate) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 3;
    const int n = d == 3 ? 4 : 8;
    const auto f = gen_random_cells(d, n, 900 + trial, -3.0, 1.0);
    const auto F = random_family(d, n, rng, trial % 2 == 0);
    EXPECT_LE(family_value(f, F), 2.0 / F.epsilon() * l1_norm(f) + 1e-12);
  }
}

TEST(FamilyOperator, ConstantGivesZero) {
  const auto f = GridFunction::constant(2, 6, 4.0);
  const auto F = make_family(2, 6, 3, {Cube{3, {0, 0, 0}, 1}, Cube{3, {3, 3, 0}, 1}});
  const auto L = family_operator(f, F);
  for (double v : L.values()) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(FamilyOperator, SingleCube) {
  const auto f = gen_random_cells(2, 4, 3);
  const auto F = make_family(2, 4, 2, {Cube{2, {1, 2, 0}, 1}});
  const auto L = family_operator(f, F);
  const double eps = 0.5;
  const double avg = oracle::lattice_average(f, {1, 2, 0}, 2);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto idx = f.unflat(k);
    const bool inside = idx[0] >= 1 && idx[0] < 3 && idx[1] >= 2 && idx[1] < 4;
    const double expect = inside ? eps / (eps * eps) * (f[k] - avg) : 0.0;
    EXPECT_NEAR(L[k], expect, 1e-14);
  }
}

TEST(FamilyOperator, L1NormEqualsFamilyValue) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = gen_random_cells(2, 8, 300 + trial);
    const auto F = random_family(2, 8, rng, true);
    EXPECT_NEAR(l1_norm(family_operator(f, F)), family_value(f, F), 1e-12);
  }
}

TEST(Candidates, LatticeOfStepEpsOverS) {
  // n = 6, side 2, refinement 2: anchors 0, 1, 2, 3, 4 cells -> units 0,2,4,6,8.
  const auto pos = anchor_positions(2, 6, 2);
  ASSERT_EQ(pos.size(), 5u);
  EXPECT_EQ(pos.back(), 8);
  // Side 3 of 6 with refinement 2: anchors at 0, 1.5, 3 cells.
  EXPECT_EQ(anchor_positions(3, 6, 2).size(), 3u);
  EXPECT_EQ(candidate_cubes(2, 6, 2, 1).size(), 9u);
  EXPECT_THROW(candidate_cubes(2, 6, 7, 1), DomainError);
}

TEST(SelectFamily, ConstantGivesSingleCubeOfValueZero) {
  const auto f = GridFunction::constant(2, 6, 1.5);
  for (auto mode : {SolveMode::exact, SolveMode::bnb, SolveMode::greedy}) {
    const auto sel = select_family(f, 2, {mode, 2, 1});
    EXPECT_EQ(sel.value, 0.0);
    ASSERT_EQ(sel.family.size(), 1u);
    EXPECT_TRUE(is_valid(sel.family));
  }
}

TEST(SelectFamily, IntervalProgramMatchesSubsetEnumeration) {
  Rng rng(5);
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 4 + rng.below(13);
    const int m = 1 + rng.below(n);
    const int s = 1 + rng.below(3);
    const auto f = gen_random_cells(1, n, 4000 + trial);
    const auto cand = make_candidates(f, m, s);
    if (cand.cubes.size() > 20) continue;
    std::vector<double> lower;
    for (const auto& q : cand.cubes) lower.push_back(q.anchor_coord(0, n));
    const double eps = static_cast<double>(m) / n;
    for (bool constrained : {true, false}) {
      const int cap = constrained ? 1 : static_cast<int>(cand.cubes.size());
      const double expect = oracle::best_interval_subset(lower, eps, cand.weights, cap);
      const auto sel = solve_interval_dp(cand, constrained);
      EXPECT_NEAR(sel.value, expect, 1e-12) << "n=" << n << " m=" << m << " s=" << s;
      EXPECT_TRUE(is_valid(sel.family));
    }
  }
}

TEST(SelectFamily, ExactModesMatchOracle) {
  Rng rng(6);
  int checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const int d = 1 + trial % 2;
    const int n = d == 1 ? 4 + rng.below(13) : 2 + rng.below(5);
    const int m = 1 + rng.below(n);
    const int s = 1 + rng.below(2);
    if (candidate_cubes(d, n, m, s).size() > kOracleCandidateLimit) continue;
    const auto f = gen_random_cells(d, n, 7000 + trial);
    const auto truth = oracle_family(f, m, true, s);
    const auto got = select_family(f, m, {SolveMode::exact, s, 1});
    EXPECT_NEAR(got.value, truth.value, 1e-12);
    ASSERT_EQ(got.family.size(), truth.family.size());
    for (std::size_t i = 0; i < got.family.size(); ++i) {
      EXPECT_TRUE(same_cube(got.family.cubes[i], truth.family.cubes[i], d));
    }
    ++checked;
  }
  EXPECT_GT(checked, 40);
}

TEST(SelectFamily, BnbOnSixGridAtOneThird) {
  for (int seed = 0; seed < 20; ++seed) {
    const auto f = gen_random_cells(2, 6, 60 + seed);
    const auto sel = select_family(f, 2, {SolveMode::bnb, 1, 1});
    EXPECT_EQ(sel.family.cap(), 3);
    EXPECT_LE(sel.family.size(), 3u);
    EXPECT_NEAR(sel.value, oracle_family_value(f, 2, true, 1), 1e-12);
  }
}

TEST(SelectFamily, OracleOnFourGridAtOneHalf) {
  for (int seed = 0; seed < 20; ++seed) {
    const auto f = gen_random_cells(2, 4, 600 + seed);
    EXPECT_NEAR(select_family(f, 2, {SolveMode::bnb, 2, 1}).value, oracle_family_value(f, 2, true, 2), 1e-12);
  }
}

TEST(SelectFamily, OracleOnEightGridMatchesIntervalProgram) {
  for (int seed = 0; seed < 20; ++seed) {
    const auto f = gen_random_cells(1, 8, 800 + seed);
    EXPECT_NEAR(select_family(f, 2, {SolveMode::exact, 1, 1}).value, oracle_family_value(f, 2, true, 1), 1e-12);
    EXPECT_NEAR(select_family(f, 2, {SolveMode::exact, 2, 1}).value, oracle_family_value(f, 2, true, 2), 1e-12);
  }
}

TEST(SelectFamily, UnconstrainedBnbMatchesOracle) {
  for (int seed = 0; seed < 10; ++seed) {
    const auto f = gen_random_cells(2, 4, 90 + seed);
    const auto cand = make_candidates(f, 1, 1);
    EXPECT_NEAR(solve_branch_and_bound(cand, false).value, oracle_family_value(f, 1, false, 1), 1e-12);
  }
}

TEST(SelectFamily, GreedyIsALowerBound) {
  for (int seed = 0; seed < 30; ++seed) {
    const auto f = gen_random_cells(2, 5, 1200 + seed);
    for (int m = 1; m <= 5; ++m) {
      const auto cand = make_candidates(f, m, 1);
      const auto g = solve_greedy(cand);
      EXPECT_TRUE(is_valid(g.family));
      EXPECT_LE(g.value, solve_branch_and_bound(cand).value + 1e-12);
    }
  }
}

TEST(SelectFamily, CapacityErrors) {
  // Side 2 on an 8-grid at refinement 2: 49 candidates, all with positive oscillation.
  const auto f = gen_random_cells(2, 8, 1);
  EXPECT_THROW(select_family(f, 2, {SolveMode::bnb, 2, 1}), CapacityError);
  EXPECT_NO_THROW(select_family(f, 2, {SolveMode::greedy, 2, 1}));
  EXPECT_THROW(oracle_family_value(f, 2, true, 2), CapacityError);
}

TEST(SelectFamily, DeterministicAcrossThreadCounts) {
  const auto f = gen_random(2, 24, 8, 6);
  for (int m : {1, 3, 8}) {
    const auto a = select_family(f, m, {SolveMode::greedy, 2, 1});
    const auto b = select_family(f, m, {SolveMode::greedy, 2, 4});
    EXPECT_EQ(a.value, b.value);
    ASSERT_EQ(a.family.size(), b.family.size());
  }
}

TEST(Bracket, ConstantIsZero) {
  EXPECT_EQ(bracket_epsilon(GridFunction::constant(1, 8, 2.0), 3).value, 0.0);
}

TEST(Bracket, StepStraddlesJump) {
  const auto f = gen_step(1, 16);
  for (int m : {2, 4, 8, 16}) EXPECT_DOUBLE_EQ(bracket_epsilon(f, m, {SolveMode::exact, 2, 1}).value, 0.5);
  // Independent check of the analytic value: best interval of length eps
  // straddling 1/2 symmetrically.
  EXPECT_DOUBLE_EQ(oracle::interval_oscillation_1d(f, 0.5 - 0.125, 0.5 + 0.125), 0.5);
}

TEST(Bracket, NonDecreasingUnderRefinement) {
  for (int seed = 0; seed < 10; ++seed) {
    const int d = 1 + seed % 2;
    const auto f = gen_random_cells(d, d == 1 ? 16 : 6, 50 + seed);
    for (int m = 1; m <= f.cells(); ++m) {
      double prev = 0.0;
      for (int s : {1, 2, 4}) {
        const auto cand = make_candidates(f, m, s);
        if (d == 2 && detail::positive_items(cand).size() > kBnbCandidateLimit) break;
        const double v = solve(cand, SolveMode::exact).value;
        EXPECT_GE(v, prev - 1e-12);
        prev = v;
      }
    }
  }
}

TEST(BNorm, ConstantIsZero) {
  // Zero up to the rounding of cube averages.
  const auto f = GridFunction::constant(2, 6, 3.0);
  EXPECT_NEAR(b_norm(f).value, 0.0, 1e-14);
  EXPECT_NEAR(bmo_norm(f), 0.0, 1e-14);
  EXPECT_NEAR(bv_functional(f).value, 0.0, 1e-14);
}

TEST(BNorm, EqualsBmoInOneDimension) {
  for (int seed = 0; seed < 20; ++seed) {
    const int n = 4 + seed;
    const auto f = gen_random_cells(1, n, 20 + seed);
    EXPECT_NEAR(b_norm(f).value, bmo_norm(f), 1e-12);
  }
}

TEST(BNorm, BoundedByBmo) {
  for (int seed = 0; seed < 10; ++seed) {
    const auto f = gen_random_cells(2, 8, 40 + seed);
    EXPECT_LE(b_norm(f, {SolveMode::automatic, 2, 1}).value, bmo_norm(f, 2) + 1e-12);
  }
}

TEST(BNorm, HomogeneousAndShiftInvariant) {
  const auto f = gen_random_cells(2, 8, 13);
  const double base = b_norm(f).value;
  EXPECT_NEAR(b_norm(-2.5 * f).value, 2.5 * base, 1e-12);
  EXPECT_NEAR(b_norm(f + 11.0).value, base, 1e-12);
}

TEST(BNorm, CurveValuesAreWitnessValues) {
  const auto f = gen_random(2, 12, 3, 4);
  const auto r = b_norm(f);
  ASSERT_EQ(r.curve.points.size(), 12u);
  EXPECT_DOUBLE_EQ(r.curve.points.front().epsilon, 1.0);
  for (const auto& p : r.curve.points) {
    EXPECT_GE(p.value, 0.0);
    EXPECT_TRUE(is_valid(p.witness));
    EXPECT_NEAR(p.value, family_value(f, p.witness), 1e-12);
  }
  EXPECT_DOUBLE_EQ(r.value, r.curve.max_value());
}

TEST(BNorm, CheckerboardCurveAttainsItsMaximumAtTheCheckScale) {
  const auto f = gen_checkerboard(2, 16, 0.25);
  const auto r = b_norm(f, {SolveMode::automatic, 2, 1});
  const auto at = std::find_if(r.curve.points.begin(), r.curve.points.end(),
                               [](const CurvePoint& p) { return p.side == 4; });
  ASSERT_NE(at, r.curve.points.end());
  EXPECT_NEAR(at->value, r.value, 1e-12);
}

TEST(Bmo, StepIsOneHalf) {
  EXPECT_DOUBLE_EQ(bmo_norm(gen_step(1, 16)), 0.5);
  EXPECT_DOUBLE_EQ(bmo_norm(gen_step(2, 8)), 0.5);
}

TEST(Bv, DominatesBNorm) {
  for (int seed = 0; seed < 8; ++seed) {
    const int d = 1 + seed % 2;
    const auto f = gen_random_cells(d, d == 1 ? 12 : 6, 30 + seed);
    const SelectOptions opt{SolveMode::automatic, 2, 1};
    EXPECT_GE(bv_functional(f, opt).value, b_norm(f, opt).value - 1e-12);
  }
}

TEST(DiscreteTv, Examples) {
  EXPECT_EQ(discrete_tv(GridFunction::constant(2, 8, 1.0)), 0.0);
  EXPECT_DOUBLE_EQ(discrete_tv(gen_step(1, 8)), 1.0);
  for (int n : {2, 4, 16}) {
    const auto ind = gen_indicator(2, n, 0.0, 0.5);
    EXPECT_DOUBLE_EQ(oracle::face_sum_tv(ind), 1.0);
    EXPECT_DOUBLE_EQ(discrete_tv(ind), 1.0);
  }
  for (int seed = 0; seed < 5; ++seed) {
    const auto f = gen_random_cells(3, 5, seed);
    EXPECT_NEAR(discrete_tv(f), oracle::face_sum_tv(f), 1e-12);
  }
}

TEST(Bv, IndicatorRatioAgainstTotalVariation) {
  std::vector<double> ratios;
  for (int n : {8, 16, 32}) {
    const auto f = gen_indicator(2, n, 0.0, 0.5);
    ratios.push_back(bv_functional(f, {SolveMode::greedy, 2, 1}).value / discrete_tv(f));
  }
  for (double r : ratios) EXPECT_GT(r, 0.0);
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  EXPECT_LE(*hi / *lo, 1.15);
}
