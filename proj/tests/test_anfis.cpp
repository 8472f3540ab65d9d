#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <random>

#include "rlc/anfis.hpp"
#include "rlc/error.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace rlc;
using namespace rlc::anfis;

namespace {

double rel_err(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

double norm(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// gbell evaluated by hand, used as a finite-difference oracle.
long double bell(long double x, long double a, long double b, long double c) {
  return 1.0L / (1.0L + std::pow(std::fabs((x - c) / a), 2.0L * b));
}

Batch targets_from(const AnfisModel& m, Batch batch) {
  for (std::size_t s = 0; s < batch.size(); ++s) {
    batch.targets[s] = rlc::testing::naive_forward(m, batch.row(s));
  }
  return batch;
}

}  // namespace

TEST(GBell, ClosedFormExamples) {
  BellMF mf{2.0, 4.0, 6.0};
  EXPECT_EQ(gbell_eval(6.0, mf), 1.0);
  EXPECT_EQ(gbell_eval(8.0, mf), 0.5);
  EXPECT_EQ(gbell_eval(4.0, mf), 0.5);
  EXPECT_NEAR(gbell_eval(10.0, mf), 1.0 / 257.0, 1e-17);
  EXPECT_NEAR(gbell_eval(10.0, mf), 3.891e-3, 1e-6);
}

TEST(GBell, RangeAndMonotone) {
  BellMF mf{1.5, 2.5, -3.0};
  double prev = gbell_eval(mf.c, mf);
  EXPECT_EQ(prev, 1.0);
  for (double d = 0.01; d < 20.0; d += 0.01) {
    const double right = gbell_eval(mf.c + d, mf);
    EXPECT_LT(right, prev);
    EXPECT_GT(right, 0.0);
    EXPECT_NEAR(right, gbell_eval(mf.c - d, mf), 1e-12);
    prev = right;
  }
}

TEST(GBellGrad, ZeroAtCenter) {
  auto g = gbell_grad(3.0, {1.0, 2.0, 3.0});
  EXPECT_EQ(g.da, 0.0);
  EXPECT_EQ(g.db, 0.0);
  EXPECT_EQ(g.dc, 0.0);
}

TEST(GBellGrad, MatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(0.2, 5.0), ub(1.0, 4.0), uc(-5.0, 5.0), ux(-10, 10);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const double a = ua(rng), b = ub(rng), c = uc(rng), x = ux(rng);
    const double z = std::fabs((x - c) / a);
    // ln|z| vanishes near |z| = 1, the membership saturates far away.
    if (std::fabs(z - 1.0) < 0.05 || z < 0.05 || z > 8.0) continue;
    auto g = gbell_grad(x, {a, b, c});
    auto fd = [&](int which) {
      const long double p[3] = {a, b, c};
      const long double h = 1e-6L * std::max(1.0L, std::fabs(p[which]));
      long double up[3] = {a, b, c}, dn[3] = {a, b, c};
      up[which] += h;
      dn[which] -= h;
      return static_cast<double>((bell(x, up[0], up[1], up[2]) - bell(x, dn[0], dn[1], dn[2])) /
                                 (2.0L * h));
    };
    const double analytic[3] = {g.da, g.db, g.dc};
    for (int k = 0; k < 3; ++k) {
      const double numeric = fd(k);
      if (std::fabs(analytic[k]) < 1e-7) {
        EXPECT_NEAR(numeric, analytic[k], 1e-9);
      } else {
        EXPECT_LT(rel_err(analytic[k], numeric), 1e-4) << "param " << k << " x=" << x;
      }
    }
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(GBellGrad, CenterDerivativeIsOdd) {
  BellMF mf{1.3, 2.2, 0.7};
  for (double d : {0.1, 0.5, 1.0, 2.5}) {
    EXPECT_DOUBLE_EQ(gbell_grad(mf.c + d, mf).dc, -gbell_grad(mf.c - d, mf).dc);
  }
}

TEST(InitGrid, TwoMfsOnZeroToTen) {
  const InputRange r[] = {{0.0, 10.0}};
  const std::size_t counts[] = {2};
  auto m = AnfisModel::init_grid(r, counts);
  ASSERT_EQ(m.mfs()[0].size(), 2u);
  EXPECT_EQ(m.mfs()[0][0], (BellMF{5.0, 2.0, 0.0}));
  EXPECT_EQ(m.mfs()[0][1], (BellMF{5.0, 2.0, 10.0}));
  for (double c : m.consequents()) EXPECT_EQ(c, 0.0);
}

TEST(InitGrid, ThreeMfsEquallySpaced) {
  const InputRange r[] = {{-1.0, 3.0}};
  const std::size_t counts[] = {3};
  auto m = AnfisModel::init_grid(r, counts);
  EXPECT_EQ(m.mfs()[0][0].c, -1.0);
  EXPECT_EQ(m.mfs()[0][1].c, 1.0);
  EXPECT_EQ(m.mfs()[0][2].c, 3.0);
  EXPECT_EQ(m.mfs()[0][1].a, 1.0);
}

TEST(InitGrid, StructuralCounts) {
  const std::vector<InputRange> r(4, {0.0, 1.0});
  const std::vector<std::size_t> two(4, 2), three(4, 3);
  auto m2 = AnfisModel::init_grid(r, two);
  EXPECT_EQ(m2.rule_count(), 16u);
  EXPECT_EQ(m2.linear_parameter_count(), 80u);
  EXPECT_EQ(m2.nonlinear_parameter_count(), 24u);
  auto m3 = AnfisModel::init_grid(r, three);
  EXPECT_EQ(m3.rule_count(), 81u);
  EXPECT_EQ(m3.linear_parameter_count(), 405u);
  EXPECT_EQ(m3.nonlinear_parameter_count(), 36u);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t k = 2; k <= 3; ++k) {
      auto m = AnfisModel::init_grid(std::vector<InputRange>(n, {0.0, 1.0}),
                                     std::vector<std::size_t>(n, k));
      const auto rules = static_cast<std::size_t>(std::pow(k, n));
      EXPECT_EQ(m.rule_count(), rules);
      EXPECT_EQ(m.linear_parameter_count(), rules * (n + 1));
      EXPECT_EQ(m.nonlinear_parameter_count(), 3 * n * k);
    }
  }
}

TEST(InitGrid, DegenerateRange) {
  const InputRange r[] = {{2.0, 2.0}};
  const std::size_t counts[] = {2};
  try {
    AnfisModel::init_grid(r, counts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateRange);
  }
}

TEST(Forward, ZeroConsequentsGiveZero) {
  std::mt19937_64 rng(3);
  auto m = rlc::testing::random_model(rng, 4, 2);
  m.set_consequents(std::vector<double>(80, 0.0));
  auto batch = rlc::testing::random_batch(rng, 4, 50);
  for (std::size_t s = 0; s < batch.size(); ++s) EXPECT_EQ(m.evaluate(batch.row(s)), 0.0);
}

TEST(Forward, SingleRuleCollapsesToLinear) {
  AnfisModel m({{{1.0, 2.0, 0.0}}}, {{0.0, 1.0}}, {3.0, -2.0});
  for (double x : {-4.0, 0.0, 0.25, 9.0}) {
    auto tr = m.forward(std::span<const double>(&x, 1));
    EXPECT_EQ(tr.w_norm.size(), 1u);
    EXPECT_EQ(tr.w_norm[0], 1.0);
    EXPECT_EQ(tr.y, 3.0 * x - 2.0);
  }
}

TEST(Forward, MatchesNaiveLoopsExactly) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = rlc::testing::random_model(rng, 4, 2 + trial % 2);
    auto batch = rlc::testing::random_batch(rng, 4, 10);
    for (std::size_t s = 0; s < batch.size(); ++s) {
      EXPECT_EQ(m.evaluate(batch.row(s)), rlc::testing::naive_forward(m, batch.row(s)));
    }
  }
}

TEST(Forward, TraceInvariants) {
  std::mt19937_64 rng(6);
  auto m = rlc::testing::random_model(rng, 4, 3);
  auto batch = rlc::testing::random_batch(rng, 4, 100);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    auto tr = m.forward(batch.row(s));
    double total = 0.0, y = 0.0;
    for (std::size_t r = 0; r < m.rule_count(); ++r) {
      double w = 1.0;
      for (std::size_t i = 0; i < 4; ++i) w *= tr.mu[i][m.rule_mf(r, i)];
      EXPECT_EQ(tr.w[r], w);
      EXPECT_GE(tr.w_norm[r], 0.0);
      EXPECT_LE(tr.w_norm[r], 1.0);
      total += tr.w_norm[r];
      y += tr.w_norm[r] * tr.f[r];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(tr.y, y);
  }
}

TEST(Forward, ZeroFiringFallsBackToUniform) {
  // b = 400 drives memberships far from the centers to exactly zero.
  AnfisModel m({{{0.01, 400.0, 0.0}, {0.01, 400.0, 1.0}}}, {{0.0, 1.0}}, {0.0, 2.0, 0.0, 4.0});
  const double x = 0.5;
  auto tr = m.forward(std::span<const double>(&x, 1));
  EXPECT_EQ(tr.w_sum, 0.0);
  EXPECT_EQ(tr.w_norm[0], 0.5);
  EXPECT_EQ(tr.y, 3.0);
}

TEST(FitConsequents, ZeroTargetsGiveZeroConsequents) {
  std::mt19937_64 rng(8);
  auto m = rlc::testing::random_model(rng, 4, 2);
  auto batch = rlc::testing::random_batch(rng, 4, 200);
  std::fill(batch.targets.begin(), batch.targets.end(), 0.0);
  auto fitted = fit_consequents(m, batch);
  for (double c : fitted.consequents()) EXPECT_EQ(c, 0.0);
}

TEST(FitConsequents, RecoversGeneratingCoefficients) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    auto truth = rlc::testing::random_model(rng, 4, 2);
    auto batch = targets_from(truth, rlc::testing::random_batch(rng, 4, 400));
    auto start = truth;
    start.set_consequents(std::vector<double>(80, 0.0));
    auto fitted = fit_consequents(start, batch);
    std::vector<double> diff(80);
    for (std::size_t k = 0; k < 80; ++k) diff[k] = fitted.consequents()[k] - truth.consequents()[k];
    EXPECT_LT(norm(diff) / norm(truth.consequents()), 1e-8);
  }
}

TEST(FitConsequents, NeverIncreasesTrainingError) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = rlc::testing::random_model(rng, 4, 2);
    auto batch = rlc::testing::random_batch(rng, 4, 150);
    EXPECT_LE(sse(fit_consequents(m, batch), batch), sse(m, batch));
  }
}

TEST(FitConsequents, MinimumNormOnRankDeficiency) {
  // Every row identical: the design matrix has rank one, so the min-norm
  // solution is d * t / |d|^2 for the shared design row d.
  AnfisModel m({{{0.5, 2.0, 0.0}, {0.5, 2.0, 1.0}}}, {{0.0, 1.0}}, {0, 0, 0, 0});
  const double x0 = 0.3;
  Batch batch{1, std::vector<double>(20, x0), std::vector<double>(20, 2.0)};
  auto fitted = fit_consequents(m, batch);
  const double w0 = bell(x0, 0.5, 2.0, 0.0), w1 = bell(x0, 0.5, 2.0, 1.0);
  const double d[4] = {w0 / (w0 + w1) * x0, w0 / (w0 + w1), w1 / (w0 + w1) * x0, w1 / (w0 + w1)};
  double dd = 0.0;
  for (double v : d) dd += v * v;
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(fitted.consequents()[k], d[k] * 2.0 / dd, 1e-12);
  }
}

TEST(FitConsequents, EmptyBatch) {
  std::mt19937_64 rng(1);
  auto m = rlc::testing::random_model(rng, 4, 2);
  try {
    fit_consequents(m, Batch{4, {}, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBatch);
  }
}

TEST(PremiseGradient, ZeroResidualGivesZeroGradient) {
  std::mt19937_64 rng(12);
  auto m = rlc::testing::random_model(rng, 4, 2);
  auto batch = targets_from(m, rlc::testing::random_batch(rng, 4, 60));
  for (double g : premise_gradient(m, batch)) EXPECT_EQ(g, 0.0);
}

TEST(PremiseGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = rlc::testing::random_model(rng, 4, 2 + trial % 2);
    auto batch = rlc::testing::random_batch(rng, 4, 25);
    auto g = premise_gradient(m, batch);
    auto p = m.premise_vector();
    std::vector<long double> pl(p.begin(), p.end());
    const long double sse0 = rlc::testing::sse_extended(m, pl, batch);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const long double h = 1e-6L * std::max(1.0L, std::fabs(pl[k]));
      auto up = pl, dn = pl;
      up[k] += h;
      dn[k] -= h;
      const double fd = static_cast<double>(
          (rlc::testing::sse_extended(m, up, batch) - rlc::testing::sse_extended(m, dn, batch)) /
          (2.0L * h));
      if (std::fabs(g[k]) < 1e-8 * static_cast<double>(sse0)) {
        EXPECT_LT(std::fabs(fd - g[k]), 1e-8 * static_cast<double>(sse0));
      } else {
        EXPECT_LT(rel_err(g[k], fd), 1e-4) << "trial " << trial << " param " << k;
      }
    }
  }
}

TEST(PremiseGradient, DuplicatedRowsDoubleTheGradient) {
  std::mt19937_64 rng(14);
  auto m = rlc::testing::random_model(rng, 4, 2);
  auto batch = rlc::testing::random_batch(rng, 4, 30);
  Batch twice = batch;
  twice.inputs.insert(twice.inputs.end(), batch.inputs.begin(), batch.inputs.end());
  twice.targets.insert(twice.targets.end(), batch.targets.begin(), batch.targets.end());
  auto g1 = premise_gradient(m, batch);
  auto g2 = premise_gradient(m, twice);
  for (std::size_t k = 0; k < g1.size(); ++k) {
    EXPECT_NEAR(g2[k], 2.0 * g1[k], 1e-12 * std::fabs(g1[k]));
  }
}

TEST(TrainEpoch, PerfectFitLeavesPremisesAlone) {
  std::mt19937_64 rng(15);
  auto truth = rlc::testing::random_model(rng, 4, 2);
  auto batch = targets_from(truth, rlc::testing::random_batch(rng, 4, 300));
  auto er = train_epoch(truth, batch, 0.1);
  EXPECT_LT(er.train_rmse, 1e-12);
  EXPECT_EQ(er.updated.mfs(), truth.mfs());
}

TEST(TrainEpoch, ZeroResidualDataIsANoOp) {
  std::mt19937_64 rng(16);
  auto m = rlc::testing::random_model(rng, 4, 2);
  auto batch = rlc::testing::random_batch(rng, 4, 200);
  auto fitted = fit_consequents(m, batch);
  // Targets generated by the post-solve model: zero residuals, zero gradient.
  for (std::size_t s = 0; s < batch.size(); ++s) batch.targets[s] = fitted.evaluate(batch.row(s));
  auto g = premise_gradient(fitted, batch);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(TrainEpoch, ZeroStepChangesOnlyConsequents) {
  std::mt19937_64 rng(17);
  auto m = rlc::testing::random_model(rng, 4, 2);
  auto batch = rlc::testing::random_batch(rng, 4, 100);
  auto er = train_epoch(m, batch, 0.0);
  EXPECT_EQ(er.updated.mfs(), m.mfs());
  EXPECT_NE(std::vector<double>(er.updated.consequents().begin(), er.updated.consequents().end()),
            std::vector<double>(m.consequents().begin(), m.consequents().end()));
}

TEST(TrainEpoch, ReportsRmseOfSolvedModel) {
  std::mt19937_64 rng(18);
  auto m = rlc::testing::random_model(rng, 4, 2);
  auto batch = rlc::testing::random_batch(rng, 4, 100);
  auto er = train_epoch(m, batch, 0.05);
  double total = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const double e = rlc::testing::naive_forward(er.fitted, batch.row(s)) - batch.targets[s];
    total += e * e;
  }
  EXPECT_DOUBLE_EQ(er.train_rmse, std::sqrt(total / batch.size()));
  // The premise displacement has length equal to the step.
  auto p0 = er.fitted.premise_vector(), p1 = er.updated.premise_vector();
  std::vector<double> d(p0.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = p1[k] - p0[k];
  EXPECT_NEAR(norm(d), 0.05, 1e-12);
}

TEST(TrainEpoch, ClampsWidthAndShape) {
  AnfisModel m({{{1e-3, 1.0, 0.0}, {1e-3, 1.0, 1.0}}}, {{0.0, 1.0}}, {0, 0, 0, 0});
  std::vector<double> p = m.premise_vector();
  p[0] = -5.0;
  p[1] = 0.2;
  m.set_premise_vector(p);
  EXPECT_EQ(m.mfs()[0][0].a, 1e-9);
  EXPECT_EQ(m.mfs()[0][0].b, 1.0);
}

TEST(AdaptStep, Examples) {
  TrainConfig cfg;
  const double dec4[] = {10, 9, 8, 7};
  EXPECT_DOUBLE_EQ(adapt_step(dec4, 1.0, cfg), 1.1);
  const double osc[] = {10, 8, 9, 7, 8};
  EXPECT_DOUBLE_EQ(adapt_step(osc, 1.0, cfg), 0.9);
  const double osc_down[] = {8, 7, 9, 6};
  EXPECT_DOUBLE_EQ(adapt_step(osc_down, 1.0, cfg), 0.9);
  const double two[] = {10, 9};
  EXPECT_EQ(adapt_step(two, 1.0, cfg), 1.0);
  const double flat[] = {10, 9, 9, 8};
  EXPECT_EQ(adapt_step(flat, 1.0, cfg), 1.0);
}

TEST(Train, ZeroEpochsReturnsInput) {
  std::mt19937_64 rng(19);
  auto m = rlc::testing::random_model(rng, 4, 2);
  auto batch = rlc::testing::random_batch(rng, 4, 50);
  TrainConfig cfg;
  cfg.epochs = 0;
  auto res = train(m, batch, batch, cfg);
  EXPECT_EQ(res.best_model, m);
  EXPECT_TRUE(res.history.epochs.empty());
  EXPECT_FALSE(res.history.best_epoch);
}

namespace {

// Clean smooth function of four inputs on [0, 1].
Batch smooth_batch(std::mt19937_64& rng, std::size_t rows) {
  auto batch = rlc::testing::random_batch(rng, 4, rows);
  for (std::size_t s = 0; s < rows; ++s) {
    auto x = batch.row(s);
    batch.targets[s] = std::sin(3.0 * x[0]) + x[1] * x[2] - 0.5 * std::exp(-4.0 * x[3] * x[3]);
  }
  return batch;
}

}  // namespace

TEST(Train, ReducesErrorAndPicksBestCheckEpoch) {
  std::mt19937_64 rng(20);
  auto tr = smooth_batch(rng, 300), ck = smooth_batch(rng, 300);
  auto model = AnfisModel::init_grid(input_ranges(tr), std::vector<std::size_t>(4, 2));
  TrainConfig cfg;
  cfg.epochs = 40;
  auto res = train(model, tr, ck, cfg);
  ASSERT_EQ(res.history.epochs.size(), 40u);
  EXPECT_LT(res.history.epochs.back().train_rmse, res.history.epochs.front().train_rmse);
  std::size_t best = 0;
  for (std::size_t e = 1; e < res.history.epochs.size(); ++e) {
    if (res.history.epochs[e].check_rmse < res.history.epochs[best].check_rmse) best = e;
  }
  EXPECT_EQ(res.history.best_epoch, best);
  EXPECT_DOUBLE_EQ(rmse(res.best_model, ck), res.history.epochs[best].check_rmse);
  // Step trace obeys the adaptation factors.
  for (std::size_t e = 1; e < res.history.epochs.size(); ++e) {
    const double ratio = res.history.epochs[e].step / res.history.epochs[e - 1].step;
    EXPECT_TRUE(ratio == 1.0 || std::fabs(ratio - 1.1) < 1e-12 || std::fabs(ratio - 0.9) < 1e-12)
        << ratio;
  }
}

TEST(Train, StopsAtTolerance) {
  std::mt19937_64 rng(21);
  auto tr = smooth_batch(rng, 200);
  auto model = AnfisModel::init_grid(input_ranges(tr), std::vector<std::size_t>(4, 2));
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.error_tolerance = 1e6;
  auto res = train(model, tr, tr, cfg);
  EXPECT_EQ(res.history.epochs.size(), 1u);
}

TEST(Train, IsBitDeterministic) {
  std::mt19937_64 rng(22);
  auto tr = smooth_batch(rng, 200), ck = smooth_batch(rng, 200);
  auto model = AnfisModel::init_grid(input_ranges(tr), std::vector<std::size_t>(4, 2));
  TrainConfig cfg;
  cfg.epochs = 15;
  auto a = train(model, tr, ck, cfg);
  auto b = train(model, tr, ck, cfg);
  EXPECT_EQ(a.best_model, b.best_model);
  EXPECT_EQ(a.history, b.history);
}

TEST(Train, RejectsBadConfig) {
  std::mt19937_64 rng(23);
  auto tr = smooth_batch(rng, 50);
  auto model = AnfisModel::init_grid(input_ranges(tr), std::vector<std::size_t>(4, 2));
  TrainConfig cfg;
  cfg.step_increase = 0.9;
  try {
    train(model, tr, tr, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
}

TEST(PredictSeries, MasksAndAgreesWithForward) {
  auto series = rlc::testing::synthetic_series(1000, rlc::testing::hour_of(2009, 1, 1));
  auto ds = features::build_dataset(series, features::FactorKind::WeeklySystem);
  auto batch = to_batch(ds.valid_rows());
  auto model = AnfisModel::init_grid(input_ranges(batch), std::vector<std::size_t>(4, 2));
  auto zero = predict_series(model, ds);
  ASSERT_EQ(zero.size(), 1000u);
  for (std::size_t t = 0; t < zero.size(); ++t) {
    const bool masked = t < 168 || t >= 1000 - 24;
    EXPECT_EQ(!zero[t].has_value(), masked) << t;
    if (zero[t]) EXPECT_EQ(*zero[t], 0.0);
  }
  auto fitted = fit_consequents(model, batch);
  auto est = predict_series(fitted, ds);
  for (std::size_t t = 168; t < 1000 - 24; ++t) {
    EXPECT_EQ(*est[t], fitted.evaluate(row_inputs(ds.rows[t])));
  }
}

TEST(ToBatch, InputOrderAndValidRowsOnly) {
  std::vector<features::FeatureRow> rows{{0.5, 1, 2, 3, 4, true}, {0.6, 5, 6, 7, 8, false}};
  auto b = to_batch(rows);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b.inputs, (std::vector<double>{0.5, 1, 2, 3}));
  EXPECT_EQ(b.targets, (std::vector<double>{4}));
}
