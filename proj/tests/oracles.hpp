// Test-only reference implementations: brute-force enumeration oracles,
// random model generators, and an independent proximal-gradient solver.
// Everything here stays independent of the library code paths it checks.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "loglin/design.hpp"
#include "loglin/graph.hpp"
#include "loglin/rng.hpp"
#include "loglin/schema.hpp"

namespace oracles {

using loglin::Cell;
using loglin::Graph;
using loglin::LogLinearModel;
using loglin::Term;
using loglin::VariableSchema;

inline VariableSchema binary_schema(int p) {
  VariableSchema s;
  for (int i = 0; i < p; ++i) {
    s.names.push_back("x" + std::to_string(i + 1));
    s.levels.push_back(2);
  }
  return s;
}

/// Exact joint probabilities of a model by full enumeration.
inline std::vector<double> brute_force_joint(const LogLinearModel& model) {
  const int64_t m = model.schema.cell_count();
  loglin::TermEvaluator eval(model.schema);
  std::vector<double> score(static_cast<size_t>(m));
  double mx = -std::numeric_limits<double>::infinity();
  for (int64_t i = 0; i < m; ++i) {
    score[static_cast<size_t>(i)] =
        loglin::log_score(model, eval, loglin::cell_of_index(model.schema, i));
    mx = std::max(mx, score[static_cast<size_t>(i)]);
  }
  double z = 0.0;
  for (double s : score) z += std::exp(s - mx);
  std::vector<double> p(score.size());
  for (size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(score[i] - mx) / z;
  }
  return p;
}

/// Exact log partition function by full enumeration.
inline double brute_force_log_partition(const LogLinearModel& model) {
  const int64_t m = model.schema.cell_count();
  loglin::TermEvaluator eval(model.schema);
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> score(static_cast<size_t>(m));
  for (int64_t i = 0; i < m; ++i) {
    score[static_cast<size_t>(i)] =
        loglin::log_score(model, eval, loglin::cell_of_index(model.schema, i));
    mx = std::max(mx, score[static_cast<size_t>(i)]);
  }
  double z = 0.0;
  for (double s : score) z += std::exp(s - mx);
  return mx + std::log(z);
}

/// Margin of an explicit joint over the full schema.
inline std::vector<double> brute_force_margin(const VariableSchema& schema,
                                              const std::vector<double>& joint,
                                              const std::vector<int>& vars) {
  const VariableSchema sub = schema.restricted(vars);
  std::vector<double> out(static_cast<size_t>(sub.cell_count()), 0.0);
  for (size_t i = 0; i < joint.size(); ++i) {
    const Cell cell = loglin::cell_of_index(schema, static_cast<int64_t>(i));
    const Cell mc = loglin::marginal_cell(schema, cell, vars);
    out[static_cast<size_t>(loglin::cell_index(sub, mc))] += joint[i];
  }
  return out;
}

/// Random chordal graph built by an incremental clique-attachment order;
/// max clique size bounded by max_clique. May be disconnected.
inline Graph random_decomposable_graph(int n, int max_clique, uint64_t seed) {
  std::mt19937_64 gen(seed);
  Graph g(n);
  std::vector<std::vector<int>> cliques{{0}};
  for (int v = 1; v < n; ++v) {
    const auto& q =
        cliques[loglin::rng::uniform_below(gen, cliques.size())];
    const int max_s =
        std::min(static_cast<int>(q.size()), max_clique - 1);
    const int s = static_cast<int>(
        loglin::rng::uniform_below(gen, static_cast<uint64_t>(max_s) + 1));
    std::vector<int> pool = q;
    loglin::rng::shuffle(pool, gen);
    std::vector<int> attach(pool.begin(), pool.begin() + s);
    for (int u : attach) g.add_edge(v, u);
    attach.push_back(v);
    std::sort(attach.begin(), attach.end());
    cliques.push_back(attach);
  }
  return g;
}

/// Random log-linear model whose interaction structure is the given graph:
/// pairwise blocks on every edge, optional small main effects.
inline LogLinearModel pairwise_model_on_graph(const Graph& g,
                                              const VariableSchema& schema,
                                              double lo, double hi,
                                              uint64_t seed,
                                              double main_scale = 0.1) {
  std::mt19937_64 gen(seed);
  LogLinearModel model;
  model.schema = schema;
  std::vector<Term> terms{{}};
  for (int v = 0; v < schema.size(); ++v) terms.push_back({v});
  for (const auto& [u, v] : g.edges()) terms.push_back({u, v});
  std::sort(terms.begin(), terms.end(), loglin::term_less);
  for (const Term& t : terms) {
    Eigen::VectorXd coef =
        Eigen::VectorXd::Zero(loglin::term_width(schema, t));
    if (t.size() == 1) {
      for (int i = 0; i < coef.size(); ++i) {
        coef[i] = main_scale * (2.0 * loglin::rng::uniform01(gen) - 1.0);
      }
    } else if (t.size() == 2) {
      for (int i = 0; i < coef.size(); ++i) {
        const double mag = lo + (hi - lo) * loglin::rng::uniform01(gen);
        coef[i] = (gen() & 1) ? mag : -mag;
      }
    }
    model.terms.push_back({t, coef});
  }
  return model;
}

/// Independent solver for the penalized multinomial objective: synchronous
/// full-vector proximal gradient (fixed step 2/m), no block sweeps.
struct ProxGradResult {
  double objective = 0.0;
  Eigen::VectorXd probs;
  std::vector<Eigen::VectorXd> beta;
};

inline ProxGradResult prox_grad_group_lasso(const Eigen::MatrixXd& design,
                                            const loglin::DesignBlockMap& map,
                                            const Eigen::VectorXd& freq,
                                            double lambda,
                                            int max_iters = 2000000,
                                            double tol = 1e-15) {
  const Eigen::Index m = design.rows();
  const double step = 2.0 / static_cast<double>(m);
  const size_t nb = map.blocks.size();
  std::vector<Eigen::VectorXd> beta(nb);
  for (size_t b = 1; b < nb; ++b) {
    beta[b] = Eigen::VectorXd::Zero(map.blocks[b].width);
  }
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(m);
  const auto softmax = [&](const Eigen::VectorXd& e, double& logz) {
    const double mx = e.maxCoeff();
    Eigen::VectorXd p = (e.array() - mx).exp();
    const double s = p.sum();
    logz = mx + std::log(s);
    return Eigen::VectorXd(p / s);
  };
  double logz;
  Eigen::VectorXd p = softmax(eta, logz);
  const auto objective = [&]() {
    double pen = 0.0;
    for (size_t b = 1; b < nb; ++b) pen += beta[b].norm();
    return -freq.dot(eta) + logz + lambda * pen;
  };
  double obj = objective();
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd resid = p - freq;
    std::vector<Eigen::VectorXd> fresh(nb);
    for (size_t b = 1; b < nb; ++b) {
      const auto& blk = map.blocks[b];
      const Eigen::VectorXd grad =
          design.middleCols(blk.offset, blk.width).transpose() * resid;
      const Eigen::VectorXd z = beta[b] - step * grad;
      const double zn = z.norm();
      const double thr = lambda * step;
      fresh[b] = zn > thr ? Eigen::VectorXd(z * (1.0 - thr / zn))
                          : Eigen::VectorXd::Zero(blk.width);
    }
    Eigen::VectorXd eta_new = Eigen::VectorXd::Zero(m);
    for (size_t b = 1; b < nb; ++b) {
      const auto& blk = map.blocks[b];
      if (fresh[b].squaredNorm() > 0) {
        eta_new += design.middleCols(blk.offset, blk.width) * fresh[b];
      }
    }
    beta = std::move(fresh);
    eta = std::move(eta_new);
    p = softmax(eta, logz);
    const double next = objective();
    const bool done = std::abs(obj - next) < tol * std::max(1.0, std::abs(obj));
    obj = next;
    if (done && it > 50) break;
  }
  ProxGradResult res;
  res.objective = obj;
  res.probs = p;
  res.beta = beta;
  return res;
}

/// Random model with blocks on random subsets of the given cliques.
inline LogLinearModel random_model_on_cliques(
    const VariableSchema& schema, const std::vector<std::vector<int>>& cliques,
    double scale, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::set<Term> terms;
  terms.insert(Term{});
  for (const auto& c : cliques) {
    for (size_t mask = 1; mask < (size_t{1} << c.size()); ++mask) {
      Term t;
      for (size_t b = 0; b < c.size(); ++b) {
        if (mask & (size_t{1} << b)) t.push_back(c[b]);
      }
      if (loglin::rng::uniform01(gen) < 0.6) terms.insert(t);
    }
  }
  LogLinearModel model;
  model.schema = schema;
  for (const Term& t : terms) {
    Eigen::VectorXd coef =
        Eigen::VectorXd::Zero(loglin::term_width(schema, t));
    if (!t.empty()) {
      for (int i = 0; i < coef.size(); ++i) {
        coef[i] = scale * (2.0 * loglin::rng::uniform01(gen) - 1.0);
      }
    }
    model.terms.push_back({t, coef});
  }
  std::sort(model.terms.begin(), model.terms.end(),
            [](const auto& a, const auto& b) {
              return loglin::term_less(a.vars, b.vars);
            });
  return model;
}

}  // namespace oracles
