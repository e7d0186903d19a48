#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qmlcp/estimate.hpp"
#include "qmlcp/simulate.hpp"
#include "support/invariants.hpp"
#include "support/oracles.hpp"

namespace qmlcp {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<double> simulate(const BreakModel& m, int n, std::uint64_t seed) {
  return simulate_piecewise(m, n, 200, seed).x;
}

BreakModel ar_break(double a = 0.2, double b = 0.7) {
  return BreakModel{ModelFamily(ArFamily{1}), {0.5}, {vec({a}), vec({b})}};
}

SegmentCostTable table_from(int n, int min_len, const std::function<double(int, int)>& cost) {
  std::vector<int> pos(static_cast<std::size_t>(n) + 1);
  std::iota(pos.begin(), pos.end(), 0);
  SegmentCostTable t(pos, min_len, 1, 1);
  for (int i = 0; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (t.admissible(i, j)) t.set(i, j, cost(i, j), vec({0.0}), true);
    }
  }
  return t;
}

// ---- penalties ------------------------------------------------------------

TEST(Penalty, Values) {
  EXPECT_DOUBLE_EQ(PenaltySchedule::parse("sqrt_n").beta(2500), 50.0);
  EXPECT_DOUBLE_EQ(PenaltySchedule::parse("bic").beta(1000), std::log(1000.0));
  EXPECT_DOUBLE_EQ(PenaltySchedule::parse("heavy").beta(1000), 1000.0 / std::log(1000.0));
  EXPECT_EQ(PenaltySchedule::parse("custom:12.5").beta(10), 12.5);
  EXPECT_EQ(PenaltySchedule::parse("7").beta(10), 7.0);
  EXPECT_EQ(PenaltySchedule{}.name(), "sqrt_n");
  EXPECT_EQ(PenaltySchedule::parse("custom:12.5").name(), "custom:12.5");
  EXPECT_EQ(PenaltySchedule::parse(PenaltySchedule::custom(0.1).name()).beta(5), 0.1);
}

TEST(Penalty, Errors) {
  EXPECT_THROW(PenaltySchedule::parse("aic"), ConfigError);
  EXPECT_THROW(PenaltySchedule::parse("custom:"), ConfigError);
  EXPECT_THROW(PenaltySchedule::parse("custom:-1"), ConfigError);
  EXPECT_THROW(PenaltySchedule::custom(NAN), ConfigError);
  EXPECT_THROW(PenaltySchedule{}.beta(1), ConfigError);
}

TEST(Penalty, BuiltInKindsGrowSublinearly) {
  for (const char* kind : {"sqrt_n", "bic", "heavy"}) {
    const PenaltySchedule p = PenaltySchedule::parse(kind);
    double prev_beta = 0.0;
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (int n = 100; n <= 100'000'000; n *= 10) {
      const double b = p.beta(n);
      EXPECT_GT(b, 0.0);
      EXPECT_GT(b, prev_beta) << kind;
      EXPECT_LT(b / n, prev_ratio) << kind;
      prev_beta = b;
      prev_ratio = b / n;
    }
  }
}

// ---- segment fits -----------------------------------------------------------

TEST(FitSegment, ArMatchesLeastSquares) {
  std::mt19937_64 rng(1);
  const ModelFamily family(ArFamily{1});
  const ParamDomain domain = ParamDomain::default_for(family);
  for (int i = 0; i < 100; ++i) {
    const double phi = std::uniform_real_distribution<double>(-0.8, 0.8)(rng);
    const std::vector<double> x = simulate(BreakModel{family, {}, {vec({phi})}}, 600, rng());
    const ContrastEvaluator ev(family, x);
    const int lo = static_cast<int>(rng() % 400);
    const SegmentRef seg{lo, lo + 30 + static_cast<int>(rng() % (600 - lo - 30 + 1))};
    const SegmentFit fit = fit_segment(ev, seg, domain);
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.theta[0], oracle::ar1_least_squares(x, seg), 1e-8);
    EXPECT_NEAR(fit.cost, ev.evaluate(seg, fit.theta), 1e-12 * fit.cost);
  }
}

TEST(FitSegment, ArWithSegmentAtOrigin) {
  // The first observation regresses on the zero-padded X_0 = 0.
  const ModelFamily family(ArFamily{1});
  const std::vector<double> x = simulate(BreakModel{family, {}, {vec({0.5})}}, 100, 9);
  const ContrastEvaluator ev(family, x);
  const SegmentFit fit = fit_segment(ev, {0, 40}, ParamDomain::default_for(family));
  EXPECT_NEAR(fit.theta[0], oracle::ar1_least_squares(x, {0, 40}), 1e-8);
}

TEST(FitSegment, ArLeastSquaresOutsideBoxIsClamped) {
  // An exploding stretch has slope above the 0.99 bound.
  std::vector<double> x{1.0};
  for (int t = 1; t < 60; ++t) x.push_back(1.05 * x.back());
  const ModelFamily family(ArFamily{1});
  const ContrastEvaluator ev(family, x);
  const SegmentFit fit = fit_segment(ev, {0, 60}, ParamDomain::default_for(family));
  EXPECT_GT(fit.theta[0], 0.97);
  EXPECT_LE(fit.theta[0], 0.99);
  EXPECT_TRUE(std::isfinite(fit.cost));
}

TEST(FitSegment, ArchOnZeroSeries) {
  const ModelFamily family(ArchFamily{1});
  const ParamDomain domain = ParamDomain::default_for(family);
  const std::vector<double> x(200, 0.0);
  const ContrastEvaluator ev(family, x);
  const SegmentFit fit = fit_segment(ev, {0, 200}, domain);
  EXPECT_EQ(fit.theta[0], domain.lower[0]);
  // With every observation zero the contrast n log(psi_0) does not involve
  // psi_1 at all.
  EXPECT_GE(fit.theta[1], domain.lower[1]);
  EXPECT_LE(fit.theta[1], domain.upper[1]);
  EXPECT_NEAR(fit.cost, 200.0 * std::log(domain.lower[0]), 1e-9);
  EXPECT_EQ(ev.evaluate({0, 200}, vec({domain.lower[0], 0.0})), fit.cost);
}

TEST(FitSegment, GradientVanishesAtInteriorMinimum) {
  const ModelFamily family(ArchFamily{1});
  const ParamDomain domain = ParamDomain::default_for(family);
  const std::vector<double> x = simulate(BreakModel{family, {}, {vec({0.5, 0.3})}}, 2000, 4);
  const ContrastEvaluator ev(family, x);
  FitOptions options;
  const SegmentFit fit = fit_segment(ev, {0, 2000}, domain, std::nullopt, options);
  ASSERT_TRUE(fit.converged);
  ASSERT_FALSE(domain.on_boundary(fit.theta, 1e-6));
  Vector g;
  ev.evaluate({0, 2000}, fit.theta, &g);
  EXPECT_LE(g.cwiseAbs().maxCoeff(), options.minimizer.gradient_tol * std::abs(fit.cost));
}

TEST(FitSegment, CostNotAboveStartingPoints) {
  std::mt19937_64 rng(8);
  for (const ModelFamily& family : oracle::test_families()) {
    const ParamDomain domain = ParamDomain::default_for(family);
    const Vector truth = oracle::random_in_domain(family, domain, rng, 0.7);
    const std::vector<double> x = simulate(BreakModel{family, {}, {truth}}, 300, rng());
    const ContrastEvaluator ev(family, x);
    SegmentFitter fitter(ev, domain);
    const SegmentRef seg{20, 260};
    const Vector warm = oracle::random_in_domain(family, domain, rng, 0.8);
    const SegmentFit fit = fitter.fit(seg, warm);
    EXPECT_LE(fit.cost, ev.evaluate(seg, warm)) << family.name();
    EXPECT_LE(fit.cost, ev.evaluate(seg, fitter.default_start(seg))) << family.name();
    EXPECT_LE(fit.cost, ev.evaluate(seg, truth)) << family.name();
    EXPECT_TRUE(domain.contains(fit.theta));
    EXPECT_LT(contraction(family, fit.theta, 2.0).beta0, 1.0);
  }
}

TEST(FitSegment, RejectsEmptySegment) {
  const ModelFamily family(ArFamily{1});
  const ContrastEvaluator ev(family, std::vector<double>(10, 1.0));
  EXPECT_THROW(fit_segment(ev, {3, 3}, ParamDomain::default_for(family)), ConfigError);
  EXPECT_THROW(fit_segment(ev, {3, 11}, ParamDomain::default_for(family)), ConfigError);
}

// ---- cost table -------------------------------------------------------------

TEST(CostTable, CellCount) {
  const ModelFamily family(ArFamily{1});
  const ContrastEvaluator ev(family, simulate(BreakModel{family, {}, {vec({0.3})}}, 100, 2));
  TableOptions options;
  options.min_len = 10;
  const SegmentCostTable t = build_cost_table(ev, ParamDomain::default_for(family), 1, options);
  EXPECT_EQ(t.admissible_cells(), 4186);
  EXPECT_EQ(t.admissible_cells(), (100 - 10 + 1) * (100 - 10 + 2) / 2);
  EXPECT_EQ(t.n(), 100);
  EXPECT_EQ(t.grid_step(), 1);
  long long finite = 0;
  for (int i = 0; i < t.size(); ++i) {
    for (int j = i + 1; j < t.size(); ++j) {
      if (t.admissible(i, j)) {
        finite += std::isfinite(t.cost(i, j)) ? 1 : 0;
      } else {
        EXPECT_TRUE(std::isinf(t.cost(i, j)));
      }
    }
  }
  EXPECT_EQ(finite, 4186);
  EXPECT_EQ(t.nonconverged_cells(), 0);
}

TEST(CostTable, SingleCellGrid) {
  const ModelFamily family(ArchFamily{1});
  const ContrastEvaluator ev(family, simulate(BreakModel{family, {}, {vec({0.5, 0.2})}}, 120, 2));
  const SegmentCostTable t = build_cost_table(ev, ParamDomain::default_for(family), 120, TableOptions{});
  EXPECT_EQ(t.positions(), (std::vector<int>{0, 120}));
  EXPECT_EQ(t.admissible_cells(), 1);
  EXPECT_TRUE(std::isfinite(t.cost(0, 1)));
}

TEST(CostTable, GridHelpers) {
  EXPECT_EQ(default_grid_step(2000), 1);
  EXPECT_EQ(default_grid_step(2001), 2);
  EXPECT_EQ(default_grid_step(4000), 2);
  EXPECT_EQ(default_grid_step(10000), 5);
  EXPECT_EQ(grid_positions(10, 3), (std::vector<int>{0, 3, 6, 9, 10}));
  EXPECT_EQ(grid_positions(9, 3), (std::vector<int>{0, 3, 6, 9}));
  EXPECT_EQ(default_min_len(ModelFamily(ArFamily{1})), 10);
  EXPECT_EQ(default_min_len(ModelFamily(ArFamily{7})), 14);
  EXPECT_EQ(default_min_len(ModelFamily(TarchFamily{3})), 14);
}

TEST(CostTable, MinLenFloor) {
  const ModelFamily family(GarchFamily{1, 1});
  const ContrastEvaluator ev(family, simulate(BreakModel{family, {}, {vec({0.5, 0.1, 0.2})}}, 50, 2));
  TableOptions options;
  options.min_len = 4;
  EXPECT_THROW(build_cost_table(ev, ParamDomain::default_for(family), 1, options), ConfigError);
}

TEST(CostTable, SplitSuperadditivity) {
  const invariant::CheckResult r = invariant::split_superadditivity(6, 44);
  EXPECT_TRUE(r.ok) << r.detail;
}

TEST(CostTable, WarmStartsDoNotChangeCosts) {
  std::mt19937_64 rng(21);
  const std::vector<ModelFamily> families{ModelFamily(ArFamily{2}), ModelFamily(ArchFamily{1}),
                                          ModelFamily(GarchFamily{1, 1}), ModelFamily(TarchFamily{1})};
  for (const ModelFamily& family : families) {
    const ParamDomain domain = ParamDomain::default_for(family);
    const BreakModel model{family,
                           {0.5},
                           {oracle::random_in_domain(family, domain, rng, 0.6),
                            oracle::random_in_domain(family, domain, rng, 0.6)}};
    const ContrastEvaluator ev(family, simulate(model, 200, rng()));
    TableOptions options;
    options.min_len = 40;
    options.warm_start = true;
    const SegmentCostTable warm = build_cost_table(ev, domain, 5, options);
    options.warm_start = false;
    const SegmentCostTable cold = build_cost_table(ev, domain, 5, options);
    for (int i = 0; i < warm.size(); ++i) {
      for (int j = i + 1; j < warm.size(); ++j) {
        if (!warm.admissible(i, j)) continue;
        EXPECT_NEAR(warm.cost(i, j), cold.cost(i, j), 1e-6 * std::max(1.0, std::abs(cold.cost(i, j))))
            << family.name() << " cell (" << i << ", " << j << ")";
      }
    }
  }
}

TEST(CostTable, WorkerCountDoesNotMatter) {
  const ModelFamily family(GarchFamily{1, 1});
  const BreakModel model{family, {0.5}, {vec({0.4, 0.1, 0.3}), vec({0.4, 0.1, 0.8})}};
  const ContrastEvaluator ev(family, simulate(model, 300, 5));
  TableOptions options;
  options.min_len = 30;
  options.workers = 1;
  const SegmentCostTable one = build_cost_table(ev, ParamDomain::default_for(family), 10, options);
  options.workers = 3;
  const SegmentCostTable three = build_cost_table(ev, ParamDomain::default_for(family), 10, options);
  for (int i = 0; i < one.size(); ++i) {
    for (int j = i + 1; j < one.size(); ++j) {
      if (!one.admissible(i, j)) continue;
      EXPECT_EQ(one.cost(i, j), three.cost(i, j));
      EXPECT_EQ(one.theta(i, j), three.theta(i, j));
      EXPECT_EQ(one.converged(i, j), three.converged(i, j));
    }
  }
}

TEST(CostTable, Validation) {
  EXPECT_THROW(SegmentCostTable({1, 5}, 1, 1), ConfigError);
  EXPECT_THROW(SegmentCostTable({0}, 1, 1), ConfigError);
  EXPECT_THROW(SegmentCostTable({0, 5, 5}, 1, 1), ConfigError);
  EXPECT_THROW(SegmentCostTable({0, 5}, 0, 1), ConfigError);
  EXPECT_THROW(SegmentCostTable({0, 5, 9}, 1, 1, 1, {0, 1}), ConfigError);
  SegmentCostTable t({0, 5, 9}, 1, 2);
  EXPECT_THROW(t.set(0, 3, 1.0, vec({0.0, 0.0}), true), ConfigError);
  EXPECT_THROW(t.set(0, 1, 1.0, vec({0.0}), true), InvalidParameter);
}

TEST(RefineCandidates, GroupsByNearestBreak) {
  const RefineCandidates c = refine_candidates(100, {30, 34}, 3);
  EXPECT_EQ(c.positions, (std::vector<int>{0, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 37, 100}));
  EXPECT_EQ(c.groups, (std::vector<int>{0, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 3}));
  const RefineCandidates edge = refine_candidates(10, {1, 9}, 2);
  EXPECT_EQ(edge.positions, (std::vector<int>{0, 1, 2, 3, 7, 8, 9, 10}));
  EXPECT_EQ(edge.groups, (std::vector<int>{0, 1, 1, 1, 2, 2, 2, 3}));
  // At most one break per window: two cuts from the same group are inadmissible.
  SegmentCostTable t(c.positions, 1, 1, 1, c.groups);
  EXPECT_FALSE(t.admissible(1, 4));
  EXPECT_TRUE(t.admissible(1, 8));
  EXPECT_TRUE(t.admissible(0, 12));
}

// ---- dynamic programming ----------------------------------------------------

void expect_matches_oracle(const SegmentCostTable& table, int k_max, double beta, std::optional<int> k_fixed) {
  const std::optional<oracle::Segmentation> ref = oracle::exhaustive_segmentation(table, k_max, beta, k_fixed);
  ASSERT_TRUE(ref.has_value());
  const DpResult dp = dp_segment(table, k_max, beta, k_fixed);
  EXPECT_EQ(dp.k_hat, ref->k);
  EXPECT_EQ(dp.breaks, ref->breaks);
  EXPECT_EQ(dp.contrast, ref->contrast);
  EXPECT_EQ(dp.penalized, ref->penalized);
}

TEST(Dp, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(2025);
  for (int t = 0; t < 50; ++t) {
    const int n = 12 + static_cast<int>(rng() % 19);
    const int min_len = 1 + static_cast<int>(rng() % 4);
    const SegmentCostTable table = oracle::random_cost_table(rng, n, min_len, t % 2 == 0);
    for (int k_max = 1; k_max <= 4; ++k_max) {
      for (double beta : {0.0, 0.5, 3.0, 10.0}) {
        SCOPED_TRACE("table " + std::to_string(t) + " K_max " + std::to_string(k_max));
        expect_matches_oracle(table, k_max, beta, std::nullopt);
      }
    }
    expect_matches_oracle(table, 4, 1.0, 2);
  }
}

TEST(Dp, TwentyFourPositions) {
  std::mt19937_64 rng(24);
  const SegmentCostTable table = oracle::random_cost_table(rng, 24, 4, false);
  for (double beta : {0.0, 1.0, 5.0}) expect_matches_oracle(table, 3, beta, std::nullopt);
}

TEST(Dp, ZeroCostsGiveOneSegment) {
  const SegmentCostTable table = table_from(30, 3, [](int, int) { return 0.0; });
  const DpResult dp = dp_segment(table, 5, 0.1);
  EXPECT_EQ(dp.k_hat, 1);
  EXPECT_TRUE(dp.breaks.empty());
  EXPECT_EQ(dp.penalized, 0.1);
}

TEST(Dp, NoPenaltyUsesAllSegmentsOnSuperadditiveCosts) {
  // Splitting strictly lowers a convex length cost.
  const SegmentCostTable table = table_from(30, 3, [](int i, int j) { return double(j - i) * (j - i); });
  for (int k_max = 1; k_max <= 6; ++k_max) EXPECT_EQ(dp_segment(table, k_max, 0.0).k_hat, k_max);
  EXPECT_EQ(dp_segment(table, 6, 0.0).breaks, (std::vector<int>{5, 10, 15, 20, 25}));
}

TEST(Dp, TiesPreferFewerSegmentsThenEarlierBreaks) {
  const SegmentCostTable flat = table_from(12, 2, [](int, int) { return 1.0; });
  // Whole sample 2, any two pieces 1 + 1.
  const SegmentCostTable tie = table_from(12, 2, [](int i, int j) { return (i == 0 && j == 12) ? 2.0 : 1.0; });
  const DpResult a = dp_segment(tie, 3, 0.0);
  EXPECT_EQ(a.k_hat, 1);
  const DpResult b = dp_segment(flat, 2, 0.0, 2);
  EXPECT_EQ(b.breaks, (std::vector<int>{2}));
}

TEST(Dp, PenaltyMonotonicity) {
  const invariant::CheckResult r = invariant::penalty_monotonicity(40, 12);
  EXPECT_TRUE(r.ok) << r.detail;
}

TEST(Dp, KnownKIgnoresPenalty) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const SegmentCostTable table = oracle::random_cost_table(rng, 25, 3, false);
    const DpResult base = dp_segment(table, 4, 0.0, 3);
    for (double beta : {0.5, 7.0, 1e6}) {
      const DpResult dp = dp_segment(table, 4, beta, 3);
      EXPECT_EQ(dp.k_hat, 3);
      EXPECT_EQ(dp.breaks, base.breaks);
      EXPECT_EQ(dp.contrast, base.contrast);
    }
  }
}

TEST(Dp, InfeasibleKIsSkipped) {
  // n = 25 with min_len = 10 admits at most two segments.
  const SegmentCostTable table = table_from(25, 10, [](int i, int j) { return double(j - i) * (j - i); });
  const DpResult dp = dp_segment(table, 4, 0.0);
  EXPECT_EQ(dp.k_hat, 2);
  EXPECT_EQ(dp.best_by_k.size(), 4u);
  EXPECT_TRUE(std::isinf(dp.best_by_k[2]));
  EXPECT_THROW(dp_segment(table, 4, 0.0, 3), ConfigError);
  EXPECT_THROW(dp_segment(table, 0, 0.0), ConfigError);
  EXPECT_THROW(dp_segment(table, 2, -1.0), ConfigError);
}

TEST(Dp, BestByKIsExactMinimum) {
  std::mt19937_64 rng(77);
  const SegmentCostTable table = oracle::random_cost_table(rng, 20, 2, false);
  const DpResult dp = dp_segment(table, 4, 1.0);
  for (int k = 1; k <= 4; ++k) {
    EXPECT_EQ(dp.best_by_k[k - 1], oracle::exhaustive_segmentation(table, 4, 0.0, k)->contrast);
  }
}

// ---- detection ----------------------------------------------------------------

void expect_result_invariants(const SegmentationResult& r) {
  EXPECT_DOUBLE_EQ(r.penalized, r.contrast + r.beta * r.k_hat);
  EXPECT_LE(r.k_hat, r.k_max);
  ASSERT_EQ(static_cast<int>(r.t_hat.size()), r.k_hat - 1);
  ASSERT_EQ(static_cast<int>(r.theta_hat.size()), r.k_hat);
  ASSERT_EQ(static_cast<int>(r.segments.size()), r.k_hat);
  int prev = 0;
  for (std::size_t j = 0; j <= r.t_hat.size(); ++j) {
    const int t = j < r.t_hat.size() ? r.t_hat[j] : r.n;
    EXPECT_GE(t - prev, r.min_len);
    EXPECT_EQ(r.segments[j].seg, (SegmentRef{prev, t}));
    if (j < r.t_hat.size()) {
      EXPECT_DOUBLE_EQ(r.tau_hat[j], double(t) / r.n);
    }
    prev = t;
  }
  double sum = 0.0;
  for (const SegmentEstimate& s : r.segments) sum += s.cost;
  EXPECT_NEAR(sum, r.contrast, 1e-9 * std::abs(r.contrast));
}

TEST(Detect, ArBreakEndToEnd) {
  const ModelFamily family(ArFamily{1});
  const ContrastEvaluator ev(family, simulate(ar_break(), 1000, 17));
  DetectOptions options;
  const SegmentationResult r = detect(ev, ParamDomain::default_for(family), PenaltySchedule{}, options);
  expect_result_invariants(r);
  EXPECT_EQ(r.k_hat, 2);
  EXPECT_NEAR(r.t_hat.at(0), 500, 60);
  EXPECT_NEAR(r.theta_hat[0][0], 0.2, 0.15);
  EXPECT_NEAR(r.theta_hat[1][0], 0.7, 0.15);
  EXPECT_EQ(r.grid_step, 1);
  EXPECT_FALSE(r.refined);
  for (const SegmentEstimate& s : r.segments) {
    ASSERT_TRUE(s.sandwich.has_value());
    ASSERT_EQ(s.conf_int.size(), 1u);
    EXPECT_TRUE(s.conf_int[0].contains(s.theta[0]));
  }
}

TEST(Detect, GridWithRefinement) {
  const ModelFamily family(ArFamily{1});
  const ContrastEvaluator ev(family, simulate(ar_break(0.0, 0.8), 3000, 5));
  DetectOptions options;
  options.covariances = false;
  Detector detector(ev, ParamDomain::default_for(family), options);
  EXPECT_EQ(detector.grid_step(), 2);
  const SegmentationResult r = detector.run(PenaltySchedule{});
  expect_result_invariants(r);
  EXPECT_TRUE(r.refined);
  EXPECT_EQ(r.k_hat, 2);
  EXPECT_NEAR(r.t_hat.at(0), 1500, 60);
  // The refined optimum is at least as good as the grid optimum.
  const DpResult grid = dp_segment(detector.grid_table(), options.k_max, r.beta);
  EXPECT_LE(r.penalized, grid.penalized + 1e-9 * std::abs(grid.penalized));

  options.refine = false;
  const SegmentationResult coarse = detect(ev, ParamDomain::default_for(family), PenaltySchedule{}, options);
  EXPECT_FALSE(coarse.refined);
  for (int t : coarse.t_hat) EXPECT_EQ(t % 2, 0);
}

TEST(Detect, DoublingPenaltyNeverAddsSegments) {
  const ModelFamily family(ArFamily{1});
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const BreakModel m{family, {0.3, 0.6}, {vec({0.1}), vec({0.6}), vec({-0.2})}};
    const ContrastEvaluator ev(family, simulate(m, 600, seed));
    DetectOptions options;
    options.covariances = false;
    Detector detector(ev, ParamDomain::default_for(family), options);
    int prev = options.k_max + 1;
    for (double beta = 0.5; beta < 2000.0; beta *= 2.0) {
      const int k = detector.run(PenaltySchedule::custom(beta)).k_hat;
      EXPECT_LE(k, prev) << "beta " << beta;
      prev = k;
    }
  }
}

TEST(Detect, KnownKIndependentOfPenalty) {
  const ModelFamily family(GarchFamily{1, 1});
  const BreakModel m{family, {0.5}, {vec({0.4, 0.1, 0.3}), vec({0.4, 0.1, 0.8})}};
  const ContrastEvaluator ev(family, simulate(m, 400, 8));
  DetectOptions options;
  options.k_fixed = 2;
  options.min_len = 40;
  options.grid = 5;
  Detector detector(ev, ParamDomain::default_for(family), options);
  const SegmentationResult base = detector.run(PenaltySchedule{});
  EXPECT_EQ(base.k_hat, 2);
  for (const char* p : {"bic", "heavy", "custom:0", "custom:1e9"}) {
    const SegmentationResult r = detector.run(PenaltySchedule::parse(p));
    EXPECT_EQ(r.t_hat, base.t_hat) << p;
    EXPECT_EQ(r.contrast, base.contrast) << p;
    ASSERT_EQ(r.theta_hat.size(), base.theta_hat.size());
    for (std::size_t j = 0; j < r.theta_hat.size(); ++j) EXPECT_EQ(r.theta_hat[j], base.theta_hat[j]);
  }
}

TEST(Detect, SingleSegmentShortcut) {
  const ModelFamily family(ArchFamily{1});
  const ContrastEvaluator ev(family, simulate(BreakModel{family, {}, {vec({0.5, 0.3})}}, 500, 3));
  DetectOptions options;
  options.k_max = 1;
  Detector detector(ev, ParamDomain::default_for(family), options);
  EXPECT_EQ(detector.grid_table().positions(), (std::vector<int>{0, 500}));
  const SegmentationResult r = detector.run(PenaltySchedule{});
  EXPECT_EQ(r.k_hat, 1);
  const SegmentFit fit = fit_segment(ev, {0, 500}, ParamDomain::default_for(family));
  EXPECT_EQ(r.contrast, fit.cost);
}

TEST(Detect, WorkerCountDoesNotMatter) {
  const ModelFamily family(ArchFamily{1});
  const BreakModel m{family, {0.5}, {vec({0.5, 0.1}), vec({2.0, 0.5})}};
  const ContrastEvaluator ev(family, simulate(m, 300, 12));
  DetectOptions options;
  options.min_len = 30;
  options.workers = 1;
  const SegmentationResult a = detect(ev, ParamDomain::default_for(family), PenaltySchedule{}, options);
  options.workers = 4;
  const SegmentationResult b = detect(ev, ParamDomain::default_for(family), PenaltySchedule{}, options);
  EXPECT_EQ(a.t_hat, b.t_hat);
  EXPECT_EQ(a.penalized, b.penalized);
  for (std::size_t j = 0; j < a.theta_hat.size(); ++j) EXPECT_EQ(a.theta_hat[j], b.theta_hat[j]);
}

TEST(Detect, Preconditions) {
  const ModelFamily family(ArFamily{1});
  const ContrastEvaluator ev(family, std::vector<double>(40, 0.5));
  DetectOptions options;
  options.k_max = 5;
  options.min_len = 10;
  EXPECT_THROW(detect(ev, ParamDomain::default_for(family), PenaltySchedule{}, options), ConfigError);
  options.k_max = 4;
  EXPECT_NO_THROW(detect(ev, ParamDomain::default_for(family), PenaltySchedule{}, options));
  options.min_len = 2;
  EXPECT_THROW(detect(ev, ParamDomain::default_for(family), PenaltySchedule{}, options), ConfigError);
  options.min_len = 10;
  options.grid = 41;
  EXPECT_THROW(detect(ev, ParamDomain::default_for(family), PenaltySchedule{}, options), ConfigError);
}

}  // namespace
}  // namespace qmlcp
