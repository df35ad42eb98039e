#include "loglin/select.hpp"

#include <gtest/gtest.h>

#include "loglin/inference.hpp"
#include "oracles.hpp"

namespace {

using namespace loglin;

ContingencyTable make_table(std::vector<int> levels,
                            std::vector<int64_t> counts) {
  ContingencyTable t;
  t.schema = oracles::binary_schema(0);
  t.schema.names.clear();
  t.schema.levels.clear();
  for (size_t i = 0; i < levels.size(); ++i) {
    t.schema.names.push_back("x" + std::to_string(i + 1));
    t.schema.levels.push_back(levels[i]);
    t.vars.push_back(static_cast<int>(i));
  }
  t.counts = std::move(counts);
  return t;
}

// --- group lasso --------------------------------------------------------

TEST(GroupLasso, LargeLambdaGivesUniformFit) {
  const auto table = make_table({2, 2}, {30, 10, 5, 25});
  const double lmax = group_lasso_lambda_max(table);
  const auto fit = fit_group_lasso(table, lmax * 1.5);
  ASSERT_TRUE(fit.converged);
  for (Eigen::Index i = 0; i < fit.probs.size(); ++i) {
    EXPECT_NEAR(fit.probs[i], 0.25, 1e-12);
  }
  for (const auto& tc : fit.model.terms) {
    if (!tc.vars.empty()) EXPECT_DOUBLE_EQ(tc.coef.norm(), 0.0);
  }
}

TEST(GroupLasso, AtLambdaMaxAllBlocksZeroAndJustBelowNot) {
  const auto table = make_table({2, 2}, {40, 10, 12, 38});
  const double lmax = group_lasso_lambda_max(table);
  const auto at = fit_group_lasso(table, lmax);
  for (const auto& tc : at.model.terms) {
    if (!tc.vars.empty()) EXPECT_DOUBLE_EQ(tc.coef.norm(), 0.0);
  }
  const auto below = fit_group_lasso(table, lmax * 0.98);
  double active = 0.0;
  for (const auto& tc : below.model.terms) {
    if (!tc.vars.empty()) active += tc.coef.norm();
  }
  EXPECT_GT(active, 0.0);
}

TEST(GroupLasso, ZeroLambdaRecoversSaturatedMle) {
  const auto table = make_table({2, 2}, {30, 10, 5, 25});
  GroupLassoOptions opts;
  opts.tol = 1e-13;
  const auto fit = fit_group_lasso(table, 0.0, opts);
  ASSERT_TRUE(fit.converged);
  const double n = 70.0;
  EXPECT_NEAR(fit.probs[0], 30 / n, 1e-6);
  EXPECT_NEAR(fit.probs[1], 10 / n, 1e-6);
  EXPECT_NEAR(fit.probs[2], 5 / n, 1e-6);
  EXPECT_NEAR(fit.probs[3], 25 / n, 1e-6);
}

TEST(GroupLasso, ObjectiveMatchesProximalGradientOracle) {
  const std::vector<std::pair<std::vector<int>, std::vector<int64_t>>> cases =
      {{{2, 2}, {30, 10, 5, 25}},
       {{2, 2}, {7, 3, 11, 2}},
       {{2, 3}, {12, 7, 25, 4, 9, 18}},
       {{2, 3}, {3, 19, 6, 14, 2, 8}}};
  for (const auto& [levels, counts] : cases) {
    const auto table = make_table(levels, counts);
    const double lmax = group_lasso_lambda_max(table);
    for (const double frac : {0.5, 0.2, 0.05}) {
      const double lambda = frac * lmax;
      GroupLassoOptions opts;
      opts.tol = 1e-13;
      const auto fit = fit_group_lasso(table, lambda, opts);
      const auto design =
          build_design(table.schema,
                       loglin::detail::full_term_set(table.schema.size()));
      const auto oracle = oracles::prox_grad_group_lasso(
          design.matrix, design.map, loglin::detail::freq_of(table.counts),
          lambda);
      EXPECT_NEAR(fit.objective, oracle.objective, 1e-8)
          << "lambda=" << lambda;
    }
  }
}

TEST(GroupLasso, KktCertification) {
  const auto table = make_table({2, 3}, {12, 7, 25, 4, 9, 18});
  const double lmax = group_lasso_lambda_max(table);
  for (const double frac : {0.6, 0.25, 0.08}) {
    GroupLassoOptions opts;
    opts.tol = 1e-13;
    const double lambda = frac * lmax;
    const auto fit = fit_group_lasso(table, lambda, opts);
    ASSERT_TRUE(fit.converged);
    const double eps = 1e-6;
    EXPECT_LE(fit.max_zero_block_gradient, lambda * (1 + eps));
    EXPECT_LE(fit.max_active_residual, eps);
  }
}

TEST(GroupLasso, ObjectiveNonincreasingAcrossSweeps) {
  const auto table = make_table({2, 3}, {3, 19, 6, 14, 2, 8});
  const auto fit = fit_group_lasso(table, 0.02);
  for (size_t i = 1; i < fit.objective_trace.size(); ++i) {
    EXPECT_LE(fit.objective_trace[i], fit.objective_trace[i - 1] + 1e-12);
  }
}

TEST(GroupLasso, BasisInvarianceUnderBlockRotation) {
  // Rotating a block's design columns orthonormally must leave the fitted
  // probabilities unchanged.
  const auto table = make_table({2, 3}, {12, 7, 25, 4, 9, 18});
  const auto design =
      build_design(table.schema,
                   loglin::detail::full_term_set(table.schema.size()));
  const Eigen::VectorXd freq = loglin::detail::freq_of(table.counts);
  const double lambda = 0.05 * group_lasso_lambda_max(table);
  GroupLassoOptions opts;
  opts.tol = 1e-13;
  const auto base =
      fit_group_lasso_on_design(design.matrix, design.map, freq, lambda, opts);
  // Rotate the width-2 block of the {0,1} interaction by a Givens rotation.
  Eigen::MatrixXd rotated = design.matrix;
  const int bi = design.map.find(Term{0, 1});
  ASSERT_GE(bi, 0);
  const auto& blk = design.map.blocks[static_cast<size_t>(bi)];
  ASSERT_EQ(blk.width, 2);
  const double theta = 0.7;
  Eigen::Matrix2d rot;
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  rotated.middleCols(blk.offset, 2) =
      design.matrix.middleCols(blk.offset, 2) * rot;
  const auto turned =
      fit_group_lasso_on_design(rotated, design.map, freq, lambda, opts);
  ASSERT_TRUE(base.converged && turned.converged);
  for (Eigen::Index i = 0; i < base.probs.size(); ++i) {
    EXPECT_NEAR(base.probs[i], turned.probs[i], 1e-8);
  }
}

TEST(GroupLasso, FittedProbabilitiesSumToOne) {
  const auto table = make_table({3, 3}, {5, 9, 1, 14, 3, 8, 2, 11, 6});
  const auto fit = fit_group_lasso(table, 0.03);
  EXPECT_NEAR(fit.probs.sum(), 1.0, 1e-10);
  // Model reproduces probs: log p = score - 0 with the intercept absorbing Z.
  TermEvaluator eval(table.schema);
  for (int64_t i = 0; i < 9; ++i) {
    EXPECT_NEAR(log_prob(fit.model, eval, cell_of_index(table.schema, i)),
                std::log(fit.probs[static_cast<Eigen::Index>(i)]), 1e-9);
  }
}

TEST(GroupLasso, NegativeLambdaRejected) {
  const auto table = make_table({2, 2}, {1, 2, 3, 4});
  EXPECT_THROW(fit_group_lasso(table, -0.1), ValidationError);
}

// --- cross-validation ----------------------------------------------------

TEST(CrossValidate, SingleGridPointReturned) {
  const auto table = make_table({2, 2}, {30, 10, 5, 25});
  const auto res = cross_validate_lambda(table, 5, {0.37}, 11);
  EXPECT_DOUBLE_EQ(res.selected_lambda, 0.37);
}

TEST(CrossValidate, StrongDependencePicksSmallLambda) {
  // Strongly dependent 2x2 counts: the near-saturated fit wins over the
  // all-shrunk (uniform) fit on held-out likelihood.
  const auto table = make_table({2, 2}, {400, 50, 60, 390});
  const double lmax = group_lasso_lambda_max(table);
  const auto res =
      cross_validate_lambda(table, 10, {1e-4 * lmax, 10.0 * lmax}, 7);
  EXPECT_DOUBLE_EQ(res.selected_lambda, 1e-4 * lmax);
}

TEST(CrossValidate, IndependentOfObservationOrder) {
  // Folds are assigned from the table, so any row order producing the same
  // table gives the same selection.
  Dataset d1;
  d1.schema = oracles::binary_schema(2);
  std::mt19937_64 gen(5);
  for (int i = 0; i < 500; ++i) {
    const int a = gen() & 1;
    const int b = rng::uniform01(gen) < 0.8 ? a : 1 - a;
    d1.append_row({a, b});
  }
  Dataset d2 = d1;
  std::vector<int> order(500);
  std::iota(order.begin(), order.end(), 0);
  rng::shuffle(order, gen);
  d2.values.clear();
  for (int r : order) {
    d2.values.insert(d2.values.end(), d1.row(r).begin(), d1.row(r).end());
  }
  const std::vector<int> both = {0, 1};
  const auto t1 = tabulate(d1, both);
  const auto t2 = tabulate(d2, both);
  const auto grid = default_lambda_grid(t1, 8);
  const auto r1 = cross_validate_lambda(t1, 5, grid, 31);
  const auto r2 = cross_validate_lambda(t2, 5, grid, 31);
  EXPECT_DOUBLE_EQ(r1.selected_lambda, r2.selected_lambda);
  EXPECT_EQ(r1.mean_heldout, r2.mean_heldout);
}

TEST(CrossValidate, Validation) {
  const auto table = make_table({2, 2}, {30, 10, 5, 25});
  EXPECT_THROW(cross_validate_lambda(table, 1, {0.1}, 1), ValidationError);
  EXPECT_THROW(cross_validate_lambda(table, 5, {}, 1), ValidationError);
  const auto tiny = make_table({2, 2}, {1, 0, 0, 0});
  EXPECT_THROW(cross_validate_lambda(tiny, 2, {0.1}, 1), ValidationError);
}

// --- fit_mle (IPF) --------------------------------------------------------

TEST(FitMle, SaturatedEqualsEmpiricalProportions) {
  const auto table = make_table({2, 2}, {30, 10, 5, 25});
  const auto res = fit_mle(table, {Term{0, 1}});
  ASSERT_TRUE(res.converged);
  EXPECT_TRUE(res.mle_exists);
  const double n = 70.0;
  EXPECT_NEAR(res.probs[0], 30 / n, 1e-12);
  EXPECT_NEAR(res.probs[1], 10 / n, 1e-12);
  EXPECT_NEAR(res.probs[2], 5 / n, 1e-12);
  EXPECT_NEAR(res.probs[3], 25 / n, 1e-12);
}

TEST(FitMle, DecomposableClassMatchesClosedForm) {
  // Generators {0,1},{1,2}: closed form f(i01) f(i12) / f(i1).
  const auto table =
      make_table({2, 2, 2}, {21, 9, 14, 6, 5, 15, 10, 30});
  const auto res = fit_mle(table, {Term{0, 1}, Term{1, 2}});
  ASSERT_TRUE(res.converged);
  const double n = static_cast<double>(table.total());
  const auto f = [&](std::initializer_list<int> cell_init) {
    const Cell cell(cell_init);
    return static_cast<double>(
               table.counts[static_cast<size_t>(cell_index(table.schema, cell))]) /
           n;
  };
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int c = 0; c < 2; ++c) {
        double f01 = f({a, b, 0}) + f({a, b, 1});
        double f12 = f({0, b, c}) + f({1, b, c});
        double f1 = 0;
        for (int x = 0; x < 2; ++x) {
          for (int z = 0; z < 2; ++z) f1 += f({x, b, z});
        }
        const double expect = f01 * f12 / f1;
        const size_t idx =
            static_cast<size_t>(cell_index(table.schema, {a, b, c}));
        EXPECT_NEAR(res.probs[static_cast<Eigen::Index>(idx)], expect, 1e-8);
      }
    }
  }
}

TEST(FitMle, IndependenceClassIsProductOfMargins) {
  const auto table = make_table({2, 3}, {12, 7, 25, 4, 9, 18});
  const auto res = fit_mle(table, {Term{0}, Term{1}});
  ASSERT_TRUE(res.converged);
  const double n = static_cast<double>(table.total());
  const double row0 = (12 + 7 + 25) / n;
  const std::vector<double> col = {(12 + 4) / n, (7 + 9) / n, (25 + 18) / n};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double expect = (a == 0 ? row0 : 1 - row0) * col[b];
      const auto idx = cell_index(table.schema, {a, b});
      EXPECT_NEAR(res.probs[static_cast<Eigen::Index>(idx)], expect, 1e-9);
    }
  }
}

TEST(FitMle, MarginsMatchObservedWithinTolerance) {
  const auto table =
      make_table({2, 2, 2}, {3, 11, 7, 2, 9, 4, 16, 8});
  const std::vector<Term> gens = {{0, 1}, {1, 2}, {0, 2}};
  const auto res = fit_mle(table, gens);
  ASSERT_TRUE(res.converged);
  EXPECT_LT(res.max_margin_gap, 1e-8);
}

TEST(FitMle, SamplingZeroClearsExistenceFlag) {
  const auto table = make_table({2, 2}, {30, 0, 5, 25});
  const auto res = fit_mle(table, {Term{0, 1}});
  EXPECT_FALSE(res.mle_exists);
}

TEST(FitMle, ModelReproducesFittedProbabilities) {
  const auto table = make_table({2, 2, 2}, {21, 9, 14, 6, 5, 15, 10, 30});
  const auto res = fit_mle(table, {Term{0, 1}, Term{1, 2}});
  TermEvaluator eval(table.schema);
  for (int64_t i = 0; i < 8; ++i) {
    EXPECT_NEAR(log_prob(res.model, eval, cell_of_index(table.schema, i)),
                std::log(res.probs[static_cast<Eigen::Index>(i)]), 1e-7);
  }
}

// --- stepwise forward -----------------------------------------------------

TEST(Stepwise, HugePenaltyKeepsInterceptOnly) {
  const auto table = make_table({2, 2}, {40, 10, 12, 38});
  const auto fit = stepwise_forward(table, 1e9);
  EXPECT_EQ(fit.generating_class, std::vector<Term>{Term{}});
  EXPECT_EQ(fit.df, 0);
}

TEST(Stepwise, ZeroPenaltyReachesSaturatedFit) {
  const auto table = make_table({2, 2}, {30, 11, 5, 25});
  const auto fit = stepwise_forward(table, 0.0);
  const auto sat = fit_mle(table, {Term{0, 1}});
  EXPECT_EQ(fit.generating_class, std::vector<Term>{(Term{0, 1})});
  for (Eigen::Index i = 0; i < fit.probs.size(); ++i) {
    EXPECT_NEAR(fit.probs[i], sat.probs[i], 1e-9);
  }
}

TEST(Stepwise, GenuineAicRarelyPicksNoise) {
  // Two 4-level variables, independent truth, n = 10^4: with s=2 the pair
  // term (9 df) must be rejected in at least 90% of 20 seeded runs.
  int clean = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::mt19937_64 gen(5000 + rep);
    VariableSchema schema;
    schema.names = {"a", "b"};
    schema.levels = {4, 4};
    std::vector<double> pa = {0.4, 0.3, 0.2, 0.1};
    std::vector<double> pb = {0.25, 0.25, 0.3, 0.2};
    std::vector<double> joint;
    for (double x : pa) {
      for (double y : pb) joint.push_back(x * y);
    }
    const auto counts = sample_multinomial(joint, 10000, 600 + rep);
    ContingencyTable table;
    table.schema = schema;
    table.vars = {0, 1};
    table.counts = counts;
    const auto fit = stepwise_forward(table, 2.0);
    bool has_interaction = false;
    for (const auto& t : fit.generating_class) {
      if (t.size() >= 2) has_interaction = true;
    }
    if (!has_interaction) ++clean;
  }
  EXPECT_GE(clean, 18);
}

TEST(Stepwise, HierarchicalFeasibilityEnforced) {
  // With a strong pairwise signal, the selected class must stay downward
  // closed at every step; final class is hierarchical by construction.
  const auto table = make_table({2, 2, 2}, {60, 12, 11, 58, 13, 57, 61, 14});
  const auto fit = stepwise_forward(table, 2.0);
  const auto closure = hierarchical_closure(fit.generating_class);
  for (const Term& t : fit.generating_class) {
    for (size_t d = 0; d < t.size(); ++d) {
      Term sub = t;
      sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(d));
      EXPECT_TRUE(closure.count(sub));
    }
  }
}

TEST(Stepwise, SamplingZeroCandidateSkipped) {
  // The {0,1} margin has a zero cell, so the saturated term is skipped and
  // the fit falls back to main effects at most.
  const auto table = make_table({2, 2}, {40, 0, 5, 25});
  const auto fit = stepwise_forward(table, 0.0);
  for (const auto& t : fit.generating_class) {
    EXPECT_LT(t.size(), 2u);
  }
  EXPECT_FALSE(fit.warnings.empty());
}

TEST(Stepwise, NegativePenaltyRejected) {
  const auto table = make_table({2, 2}, {1, 2, 3, 4});
  EXPECT_THROW(stepwise_forward(table, -1.0), ValidationError);
}

}  // namespace
