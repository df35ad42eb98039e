#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "loglin/design.hpp"
#include "loglin/schema.hpp"

namespace loglin {

struct GroupLassoOptions {
  int max_sweeps = 50000;
  double tol = 1e-9;               // relative objective change per sweep
  int64_t max_design_cells = 4096;  // dense design capacity bound
};

/// Group-lasso fit of a multinomial log-linear model on one table. The
/// model keeps every block (zeros included); probabilities come from the
/// softmax parameterization, so they always sum to 1.
struct GroupLassoFit {
  double lambda = 0.0;
  LogLinearModel model;
  Eigen::VectorXd probs;
  double objective = 0.0;
  int iterations = 0;  // block-descent sweeps
  bool converged = false;
  std::vector<double> objective_trace;  // objective after each sweep
  double max_zero_block_gradient = 0.0;
  double max_active_residual = 0.0;
};

namespace detail {

struct GroupLassoState {
  std::vector<Eigen::VectorXd> beta;  // per block; block 0 (intercept) unused
  Eigen::VectorXd eta;                // X_noint * beta
  Eigen::VectorXd p;                  // softmax(eta)
  double log_z = 0.0;
};

inline double softmax_refresh(GroupLassoState& st) {
  const double mx = st.eta.maxCoeff();
  st.p = (st.eta.array() - mx).exp();
  const double sum = st.p.sum();
  st.p /= sum;
  st.log_z = mx + std::log(sum);
  return st.log_z;
}

inline double group_lasso_objective(const GroupLassoState& st,
                                    const Eigen::VectorXd& freq,
                                    double lambda) {
  double pen = 0.0;
  for (size_t b = 1; b < st.beta.size(); ++b) pen += st.beta[b].norm();
  return -freq.dot(st.eta) + st.log_z + lambda * pen;
}

}  // namespace detail

/// Block coordinate descent with blockwise majorization on an explicit
/// design. The design must have the intercept as block 0 and all columns
/// mutually orthogonal with squared norm equal to the row count (as
/// produced by build_design); the majorization constant m/2 relies on it.
/// `freq` holds the empirical cell frequencies n_i / n. An initial state
/// may be supplied for warm starts.
inline GroupLassoFit fit_group_lasso_on_design(
    const Eigen::MatrixXd& design, const DesignBlockMap& map,
    const Eigen::VectorXd& freq, double lambda,
    const GroupLassoOptions& opts = {},
    const std::vector<Eigen::VectorXd>* warm_start = nullptr) {
  if (lambda < 0) throw ValidationError("group lasso: lambda must be >= 0");
  if (map.blocks.empty() || !map.blocks[0].vars.empty()) {
    throw ValidationError("group lasso: block 0 must be the intercept");
  }
  const int64_t m = design.rows();
  const double lip = static_cast<double>(m) / 2.0;
  const size_t nb = map.blocks.size();

  detail::GroupLassoState st;
  st.beta.resize(nb);
  st.eta = Eigen::VectorXd::Zero(m);
  for (size_t b = 1; b < nb; ++b) {
    st.beta[b] = Eigen::VectorXd::Zero(map.blocks[b].width);
    if (warm_start && (*warm_start)[b].size() == map.blocks[b].width) {
      st.beta[b] = (*warm_start)[b];
      if (st.beta[b].squaredNorm() > 0) {
        st.eta += design.middleCols(map.blocks[b].offset, map.blocks[b].width) *
                  st.beta[b];
      }
    }
  }
  detail::softmax_refresh(st);

  const auto sweep = [&](bool active_only) {
    for (size_t b = 1; b < nb; ++b) {
      if (active_only && st.beta[b].squaredNorm() == 0.0) continue;
      const auto& blk = map.blocks[b];
      const auto xb = design.middleCols(blk.offset, blk.width);
      const Eigen::VectorXd grad = xb.transpose() * (st.p - freq);
      const Eigen::VectorXd z = st.beta[b] - grad / lip;
      const double zn = z.norm();
      const double thr = lambda / lip;
      Eigen::VectorXd fresh;
      if (zn > thr) {
        fresh = z * (1.0 - thr / zn);
      } else {
        fresh = Eigen::VectorXd::Zero(blk.width);
      }
      if ((fresh - st.beta[b]).squaredNorm() > 0.0) {
        st.eta += xb * (fresh - st.beta[b]);
        st.beta[b] = std::move(fresh);
        detail::softmax_refresh(st);
      }
    }
  };

  GroupLassoFit fit;
  fit.lambda = lambda;
  double obj = detail::group_lasso_objective(st, freq, lambda);
  fit.objective_trace.push_back(obj);
  const auto rel_change = [](double next, double prev) {
    return std::abs(prev - next) / std::max(1.0, std::abs(prev));
  };
  int sweeps = 0;
  while (sweeps < opts.max_sweeps) {
    sweep(false);
    ++sweeps;
    double next = detail::group_lasso_objective(st, freq, lambda);
    fit.objective_trace.push_back(next);
    const bool done = rel_change(next, obj) < opts.tol;
    obj = next;
    if (done) {
      fit.converged = true;
      break;
    }
    while (sweeps < opts.max_sweeps) {
      sweep(true);
      ++sweeps;
      next = detail::group_lasso_objective(st, freq, lambda);
      fit.objective_trace.push_back(next);
      const bool inner_done = rel_change(next, obj) < opts.tol;
      obj = next;
      if (inner_done) break;
    }
  }
  fit.iterations = sweeps;
  fit.objective = obj;
  fit.probs = st.p;

  // KKT residuals at the returned point.
  for (size_t b = 1; b < nb; ++b) {
    const auto& blk = map.blocks[b];
    const Eigen::VectorXd grad =
        design.middleCols(blk.offset, blk.width).transpose() * (st.p - freq);
    if (st.beta[b].squaredNorm() == 0.0) {
      fit.max_zero_block_gradient =
          std::max(fit.max_zero_block_gradient, grad.norm());
    } else {
      const Eigen::VectorXd resid =
          grad + lambda * st.beta[b] / st.beta[b].norm();
      fit.max_active_residual = std::max(fit.max_active_residual, resid.norm());
    }
  }

  fit.model.terms.resize(nb);
  for (size_t b = 0; b < nb; ++b) {
    fit.model.terms[b].vars = map.blocks[b].vars;
    fit.model.terms[b].coef = b == 0 ? Eigen::VectorXd::Constant(1, -st.log_z)
                                     : st.beta[b];
  }
  fit.model.log_partition = 0.0;
  return fit;
}

namespace detail {

inline Eigen::VectorXd freq_of(const std::vector<int64_t>& counts) {
  Eigen::VectorXd f(counts.size());
  double n = 0;
  for (int64_t c : counts) n += static_cast<double>(c);
  if (n <= 0) throw ValidationError("table has no observations");
  for (size_t i = 0; i < counts.size(); ++i) {
    f[static_cast<Eigen::Index>(i)] = static_cast<double>(counts[i]) / n;
  }
  return f;
}

inline std::vector<Term> full_term_set(int p) {
  if (p > 20) throw CapacityError("full term set too large");
  std::vector<Term> out;
  for (int mask = 0; mask < (1 << p); ++mask) {
    Term t;
    for (int v = 0; v < p; ++v) {
      if (mask & (1 << v)) t.push_back(v);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace detail

/// Group lasso over the full subset lattice of the table's variables.
inline GroupLassoFit fit_group_lasso(const ContingencyTable& table,
                                     double lambda,
                                     const GroupLassoOptions& opts = {}) {
  auto design = build_design(table.schema,
                             detail::full_term_set(table.schema.size()),
                             opts.max_design_cells);
  auto fit = fit_group_lasso_on_design(design.matrix, design.map,
                                       detail::freq_of(table.counts), lambda,
                                       opts);
  fit.model.schema = table.schema;
  return fit;
}

/// Smallest lambda at which every non-intercept block is zero: the largest
/// block gradient norm at the intercept-only fit.
inline double group_lasso_lambda_max(const ContingencyTable& table,
                                     const GroupLassoOptions& opts = {}) {
  auto design = build_design(table.schema,
                             detail::full_term_set(table.schema.size()),
                             opts.max_design_cells);
  const Eigen::VectorXd f = detail::freq_of(table.counts);
  double mx = 0.0;
  for (size_t b = 1; b < design.map.blocks.size(); ++b) {
    const auto& blk = design.map.blocks[b];
    mx = std::max(mx, (design.matrix.middleCols(blk.offset, blk.width)
                           .transpose() *
                       f)
                          .norm());
  }
  return mx;
}

/// Log-spaced grid from lambda_max down to lambda_max * ratio.
inline std::vector<double> default_lambda_grid(const ContingencyTable& table,
                                               int count = 30,
                                               double ratio = 1e-3,
                                               const GroupLassoOptions& opts = {}) {
  if (count < 1) throw ValidationError("lambda grid: count must be >= 1");
  const double mx = group_lasso_lambda_max(table, opts);
  std::vector<double> grid;
  if (mx <= 0) return {0.0};
  if (count == 1) return {mx};
  for (int i = 0; i < count; ++i) {
    grid.push_back(mx * std::pow(ratio, static_cast<double>(i) / (count - 1)));
  }
  return grid;
}

struct CrossValidationResult {
  double selected_lambda = 0.0;
  std::vector<double> grid;           // descending
  std::vector<double> mean_heldout;   // mean held-out log-likelihood per grid point
};

/// K-fold cross-validation of lambda: the individual counts are split into
/// equal parts (by seeded shuffle of the individuals, independent of row
/// order), each part held out once, scored by held-out multinomial
/// log-likelihood under the fitted probabilities. Ties pick the larger
/// lambda.
inline CrossValidationResult cross_validate_lambda(
    const ContingencyTable& table, int folds, std::vector<double> grid,
    uint64_t seed, const GroupLassoOptions& opts = {}) {
  if (folds < 2) throw ValidationError("cross-validation: folds must be >= 2");
  if (grid.empty()) throw ValidationError("cross-validation: empty grid");
  std::sort(grid.begin(), grid.end(), std::greater<double>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const int64_t n = table.total();
  std::vector<int32_t> individuals;
  individuals.reserve(static_cast<size_t>(n));
  for (size_t i = 0; i < table.counts.size(); ++i) {
    for (int64_t k = 0; k < table.counts[i]; ++k) {
      individuals.push_back(static_cast<int32_t>(i));
    }
  }
  std::mt19937_64 gen(seed);
  rng::shuffle(individuals, gen);

  auto design = build_design(table.schema,
                             detail::full_term_set(table.schema.size()),
                             opts.max_design_cells);
  std::vector<double> score(grid.size(), 0.0);
  int64_t start = 0;
  for (int fold = 0; fold < folds; ++fold) {
    const int64_t len = n / folds + (fold < n % folds ? 1 : 0);
    std::vector<int64_t> test_counts(table.counts.size(), 0);
    for (int64_t i = start; i < start + len; ++i) {
      ++test_counts[static_cast<size_t>(individuals[static_cast<size_t>(i)])];
    }
    start += len;
    std::vector<int64_t> train_counts(table.counts.size());
    int64_t train_total = 0;
    for (size_t i = 0; i < table.counts.size(); ++i) {
      train_counts[i] = table.counts[i] - test_counts[i];
      train_total += train_counts[i];
    }
    if (train_total <= 0) {
      throw ValidationError("cross-validation: empty training fold");
    }
    const Eigen::VectorXd train_freq = detail::freq_of(train_counts);
    std::vector<Eigen::VectorXd> warm;
    bool have_warm = false;
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      const auto fit = fit_group_lasso_on_design(
          design.matrix, design.map, train_freq, grid[gi], opts,
          have_warm ? &warm : nullptr);
      warm.clear();
      for (size_t b = 0; b < design.map.blocks.size(); ++b) {
        warm.push_back(b == 0 ? Eigen::VectorXd()
                              : Eigen::VectorXd(fit.model.terms[b].coef));
      }
      have_warm = true;
      double heldout = 0.0;
      for (size_t i = 0; i < test_counts.size(); ++i) {
        if (test_counts[i] > 0) {
          heldout += static_cast<double>(test_counts[i]) *
                     std::log(fit.probs[static_cast<Eigen::Index>(i)]);
        }
      }
      score[gi] += heldout;
    }
  }
  CrossValidationResult res;
  res.grid = grid;
  res.mean_heldout.resize(grid.size());
  size_t best = 0;
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    res.mean_heldout[gi] = score[gi] / folds;
    if (res.mean_heldout[gi] > res.mean_heldout[best]) best = gi;
  }
  res.selected_lambda = grid[best];
  return res;
}

/// Iterative-proportional-fitting result. `mle_exists` is cleared when an
/// observed generator margin contains a zero (extended MLE returned).
struct MleResult {
  LogLinearModel model;
  Eigen::VectorXd probs;  // fitted cell probabilities on the table schema
  bool mle_exists = true;
  bool converged = false;
  int iterations = 0;
  double max_margin_gap = 0.0;
};

/// Hierarchical MLE by IPF: fitted generator margins match the observed
/// ones within `tol`. Coefficients are recovered by projecting log
/// probabilities onto the closure's design blocks.
inline MleResult fit_mle(const ContingencyTable& table,
                         const std::vector<Term>& generators,
                         double tol = 1e-8, int max_iters = 20000,
                         int64_t max_design_cells = kDefaultMaxCells) {
  const VariableSchema& schema = table.schema;
  const int64_t m = schema.cell_count(max_design_cells);
  const double n = static_cast<double>(table.total());
  if (n <= 0) throw ValidationError("fit_mle: table has no observations");
  std::vector<Term> gens = generators.empty() ? std::vector<Term>{{}} : generators;
  for (const Term& g : gens) check_term(schema, g);

  MleResult res;
  struct MarginInfo {
    std::vector<int64_t> map;      // cell -> margin cell
    std::vector<double> observed;  // observed margin frequencies
    std::vector<double> fitted;
  };
  std::vector<MarginInfo> margins;
  for (const Term& g : gens) {
    MarginInfo info;
    std::vector<int> pos(g.size());
    for (size_t i = 0; i < g.size(); ++i) pos[i] = g[i];
    info.map = detail::margin_index_map(schema, pos);
    int64_t cells = 1;
    for (int v : g) cells *= schema.levels[v];
    info.observed.assign(static_cast<size_t>(cells), 0.0);
    for (size_t i = 0; i < table.counts.size(); ++i) {
      info.observed[static_cast<size_t>(info.map[i])] +=
          static_cast<double>(table.counts[i]) / n;
    }
    for (double f : info.observed) {
      if (f == 0.0) res.mle_exists = false;
    }
    info.fitted.assign(info.observed.size(), 0.0);
    margins.push_back(std::move(info));
  }

  Eigen::VectorXd p =
      Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  for (int iter = 0; iter < max_iters; ++iter) {
    double gap = 0.0;
    for (auto& info : margins) {
      std::fill(info.fitted.begin(), info.fitted.end(), 0.0);
      for (int64_t i = 0; i < m; ++i) {
        info.fitted[static_cast<size_t>(info.map[i])] += p[i];
      }
      for (size_t s = 0; s < info.fitted.size(); ++s) {
        gap = std::max(gap, std::abs(info.fitted[s] - info.observed[s]));
      }
      for (int64_t i = 0; i < m; ++i) {
        const auto s = static_cast<size_t>(info.map[i]);
        p[i] = info.fitted[s] > 0.0 ? p[i] * info.observed[s] / info.fitted[s]
                                    : 0.0;
      }
    }
    res.iterations = iter + 1;
    res.max_margin_gap = gap;
    if (gap < tol) {
      res.converged = true;
      break;
    }
  }

  res.probs = p;
  // Coefficients by projection of log p onto the closure design. Cells
  // forced to zero (extended MLE) are floored; the nonexistence flag warns
  // that the parameterization is then only approximate.
  const auto closure = hierarchical_closure(gens);
  auto design = build_design(schema,
                             std::vector<Term>(closure.begin(), closure.end()),
                             max_design_cells);
  Eigen::VectorXd logp(m);
  for (int64_t i = 0; i < m; ++i) {
    logp[i] = std::log(std::max(p[i], 1e-12));
  }
  res.model.schema = schema;
  res.model.terms.resize(design.map.blocks.size());
  Eigen::VectorXd score = Eigen::VectorXd::Zero(m);
  for (size_t b = 0; b < design.map.blocks.size(); ++b) {
    const auto& blk = design.map.blocks[b];
    const auto xb = design.matrix.middleCols(blk.offset, blk.width);
    res.model.terms[b].vars = blk.vars;
    res.model.terms[b].coef = xb.transpose() * logp / static_cast<double>(m);
    score += xb * res.model.terms[b].coef;
  }
  const double mx = score.maxCoeff();
  res.model.log_partition =
      mx + std::log((score.array() - mx).exp().sum());
  return res;
}

/// Stepwise forward selection minimizing s*k - 2*log(l). Candidates must be
/// hierarchically feasible; candidates whose observed margin contains a
/// sampling zero (MLE nonexistence) or whose IPF does not converge are
/// skipped with a warning.
struct StepwiseFit {
  double s = 0.0;
  std::vector<Term> generating_class;
  double criterion = 0.0;
  int df = 0;
  LogLinearModel model;
  Eigen::VectorXd probs;
  std::vector<std::string> warnings;
};

inline StepwiseFit stepwise_forward(const ContingencyTable& table, double s,
                                    double ipf_tol = 1e-8,
                                    int64_t max_design_cells = kDefaultMaxCells) {
  if (s < 0) throw ValidationError("stepwise: s must be >= 0");
  const VariableSchema& schema = table.schema;
  const int p = schema.size();
  const double n = static_cast<double>(table.total());
  if (n <= 0) throw ValidationError("stepwise: table has no observations");
  const auto pool = detail::full_term_set(p);

  const auto loglik = [&](const Eigen::VectorXd& probs) {
    double ll = 0.0;
    for (size_t i = 0; i < table.counts.size(); ++i) {
      if (table.counts[i] > 0) {
        ll += static_cast<double>(table.counts[i]) *
              std::log(std::max(probs[static_cast<Eigen::Index>(i)], 1e-300));
      }
    }
    return ll;
  };
  const auto df_of = [&](const std::set<Term>& included) {
    int k = 0;
    for (const Term& t : included) {
      if (!t.empty()) k += term_width(schema, t);
    }
    return k;
  };

  StepwiseFit fit;
  fit.s = s;
  std::set<Term> included{Term{}};
  MleResult current = fit_mle(table, {Term{}}, ipf_tol, 20000, max_design_cells);
  double crit = s * df_of(included) - 2.0 * loglik(current.probs);

  for (;;) {
    double best_crit = crit;
    Term best_term;
    MleResult best_fit;
    bool found = false;
    for (const Term& cand : pool) {
      if (cand.empty() || included.count(cand)) continue;
      bool feasible = true;
      for (size_t drop = 0; drop < cand.size() && feasible; ++drop) {
        Term sub = cand;
        sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(drop));
        feasible = included.count(sub) > 0;
      }
      if (!feasible) continue;
      // Sampling-zero guard: a zero observed margin on the added term means
      // the candidate MLE does not exist.
      {
        const auto map = detail::margin_index_map(schema, cand);
        int64_t cells = 1;
        for (int v : cand) cells *= schema.levels[v];
        std::vector<int64_t> margin(static_cast<size_t>(cells), 0);
        for (size_t i = 0; i < table.counts.size(); ++i) {
          margin[static_cast<size_t>(map[i])] += table.counts[i];
        }
        if (std::find(margin.begin(), margin.end(), 0) != margin.end()) {
          fit.warnings.push_back("skipped term with sampling-zero margin");
          continue;
        }
      }
      std::set<Term> trial = included;
      trial.insert(cand);
      const auto gens_vec = maximal_terms(
          std::vector<Term>(trial.begin(), trial.end()));
      MleResult cand_fit =
          fit_mle(table, gens_vec, ipf_tol, 20000, max_design_cells);
      if (!cand_fit.converged) {
        fit.warnings.push_back("skipped term with non-convergent fit");
        continue;
      }
      const double cand_crit =
          s * df_of(trial) - 2.0 * loglik(cand_fit.probs);
      if (cand_crit < best_crit) {
        best_crit = cand_crit;
        best_term = cand;
        best_fit = std::move(cand_fit);
        found = true;
      }
    }
    if (!found) break;
    included.insert(best_term);
    current = std::move(best_fit);
    crit = best_crit;
  }

  fit.criterion = crit;
  fit.df = df_of(included);
  fit.generating_class =
      maximal_terms(std::vector<Term>(included.begin(), included.end()));
  fit.model = current.model;
  fit.probs = current.probs;
  return fit;
}

}  // namespace loglin
