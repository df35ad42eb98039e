#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "loglin/decompose.hpp"
#include "loglin/design.hpp"
#include "loglin/inference.hpp"
#include "loglin/schema.hpp"

namespace loglin {

/// Where a combined term came from: +1 per contributing clique fit,
/// -nu(S) per separator fit, and whether the term lies entirely inside
/// some recorded separator.
struct TermProvenance {
  int clique_count = 0;
  int separator_weight = 0;
  bool separator_only = false;
};

struct CombinedModel {
  LogLinearModel model;
  std::vector<TermProvenance> provenance;  // parallel to model.terms

  void validate() const {
    model.validate();
    if (provenance.size() != model.terms.size()) {
      throw ValidationError("combined model: provenance out of sync");
    }
  }
};

namespace detail {

/// Maps a sub-model term to global variable indices via schema names;
/// checks that the level counts agree (shared contrast basis).
inline Term to_global_term(const Term& local, const VariableSchema& sub,
                           const VariableSchema& global) {
  Term out;
  for (int v : local) {
    const auto gi = global.index_of(sub.names[v]);
    if (!gi) {
      throw ValidationError("combine: unknown variable '" + sub.names[v] + "'");
    }
    if (global.levels[*gi] != sub.levels[v]) {
      throw ValidationError("combine: level mismatch for variable '" +
                            sub.names[v] + "' (basis mismatch)");
    }
    out.push_back(*gi);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Signed aggregation of per-clique and per-separator fits into one global
/// model: coefficient of term a = sum over cliques containing a of its
/// clique-fit block minus sum over separators of nu(S) times its
/// separator-fit block. Blocks share the contrast basis, so addition is
/// direct. The result is unnormalized (log_partition unset).
inline CombinedModel combine(const DecompositionPlan& plan,
                             const std::vector<LogLinearModel>& clique_fits,
                             const std::vector<LogLinearModel>& separator_fits,
                             const VariableSchema& schema) {
  if (clique_fits.size() != plan.records.size()) {
    throw ValidationError("combine: one fit per recorded clique required");
  }
  const auto separators = plan.record_separators();
  if (separator_fits.size() != separators.size()) {
    throw ValidationError("combine: one fit per distinct separator required");
  }

  std::map<Term, Eigen::VectorXd> coef;
  std::map<Term, TermProvenance> prov;
  const auto accumulate = [&](const LogLinearModel& fit, double weight,
                              bool from_clique, int nu) {
    for (const auto& tc : fit.terms) {
      const Term global = detail::to_global_term(tc.vars, fit.schema, schema);
      auto [it, fresh] = coef.try_emplace(
          global, Eigen::VectorXd::Zero(term_width(schema, global)));
      if (it->second.size() != tc.coef.size()) {
        throw ValidationError("combine: coefficient width mismatch");
      }
      it->second += weight * tc.coef;
      auto& pv = prov[global];
      if (from_clique) {
        pv.clique_count += 1;
      } else {
        pv.separator_weight += nu;
      }
    }
  };
  for (size_t r = 0; r < plan.records.size(); ++r) {
    accumulate(clique_fits[r], 1.0, true, 0);
  }
  for (size_t s = 0; s < separators.size(); ++s) {
    accumulate(separator_fits[s], -static_cast<double>(separators[s].nu),
               false, separators[s].nu);
  }

  CombinedModel out;
  out.model.schema = schema;
  for (auto& [term, block] : coef) {
    TermProvenance pv = prov[term];
    if (!term.empty()) {
      for (const auto& sep : separators) {
        if (std::includes(sep.vars.begin(), sep.vars.end(), term.begin(),
                          term.end())) {
          pv.separator_only = true;
          break;
        }
      }
    }
    out.model.terms.push_back({term, std::move(block)});
    out.provenance.push_back(pv);
  }
  // std::map iterates Terms in operator< order; restore canonical order.
  std::vector<size_t> idx(out.model.terms.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return term_less(out.model.terms[a].vars, out.model.terms[b].vars);
  });
  std::vector<TermCoef> terms;
  std::vector<TermProvenance> provenance;
  for (size_t i : idx) {
    terms.push_back(std::move(out.model.terms[i]));
    provenance.push_back(out.provenance[i]);
  }
  out.model.terms = std::move(terms);
  out.provenance = std::move(provenance);
  return out;
}

/// Result of the separator-interaction hard-thresholding rule.
struct ThresholdResult {
  CombinedModel model;    // blocks below the threshold zeroed; unnormalized
  double threshold = 0.0;
  int zeroed_separator = 0;
  int zeroed_non_separator = 0;
};

/// Hard-threshold blocks by l2 norm at the largest cutoff t for which the
/// blocks zeroed by t are majority separator-only interactions. When no
/// nonempty prefix satisfies the rule (e.g. no separator interactions
/// exist), t = 0 and the model is returned unchanged. The intercept is
/// never thresholded.
inline ThresholdResult threshold_separator_rule(const CombinedModel& in) {
  in.validate();
  struct Block {
    double norm;
    size_t index;
    bool separator_only;
  };
  std::vector<Block> blocks;
  for (size_t i = 0; i < in.model.terms.size(); ++i) {
    const auto& tc = in.model.terms[i];
    if (tc.vars.empty()) continue;
    const double nrm = tc.coef.norm();
    if (nrm > 0.0) {
      blocks.push_back({nrm, i, in.provenance[i].separator_only});
    }
  }
  std::sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
    return a.norm < b.norm;
  });

  // Scan prefixes at group boundaries (ties zero together).
  int best_len = 0;
  int sep = 0, nonsep = 0;
  int best_sep = 0, best_nonsep = 0;
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].separator_only) {
      ++sep;
    } else {
      ++nonsep;
    }
    const bool boundary =
        i + 1 == blocks.size() || blocks[i + 1].norm > blocks[i].norm;
    if (boundary && sep > nonsep) {
      best_len = static_cast<int>(i) + 1;
      best_sep = sep;
      best_nonsep = nonsep;
    }
  }

  ThresholdResult res;
  res.model = in;
  res.zeroed_separator = best_sep;
  res.zeroed_non_separator = best_nonsep;
  if (best_len == 0) {
    res.threshold = 0.0;
    return res;
  }
  res.threshold = best_len < static_cast<int>(blocks.size())
                      ? blocks[static_cast<size_t>(best_len)].norm
                      : std::nextafter(blocks.back().norm,
                                       std::numeric_limits<double>::infinity());
  for (int i = 0; i < best_len; ++i) {
    res.model.model.terms[blocks[static_cast<size_t>(i)].index].coef.setZero();
  }
  res.model.model.log_partition.reset();
  return res;
}

/// Interaction graph of the nonzero terms of a combined model.
inline Graph extract_graph(const CombinedModel& m) {
  return interaction_graph(active_terms(m.model), m.model.schema.size());
}

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct EvaluationReport {
  std::vector<RocPoint> roc;
  double auc = std::numeric_limits<double>::quiet_NaN();
  double kl = std::numeric_limits<double>::quiet_NaN();
  int true_edges = 0;
  int true_gaps = 0;
};

/// Edge strength for the ROC sweep: the largest block norm among terms
/// containing both endpoints.
inline Eigen::MatrixXd edge_strengths(const CombinedModel& m) {
  const int p = m.model.schema.size();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  for (const auto& tc : m.model.terms) {
    if (tc.vars.size() < 2) continue;
    const double nrm = tc.coef.norm();
    if (nrm <= 0.0) continue;
    for (size_t i = 0; i < tc.vars.size(); ++i) {
      for (size_t j = i + 1; j < tc.vars.size(); ++j) {
        const int u = tc.vars[i], v = tc.vars[j];
        s(u, v) = s(v, u) = std::max(s(u, v), nrm);
      }
    }
  }
  return s;
}

/// Threshold sweep over implied edges ordered by strength. Points run from
/// the empty estimate (highest threshold) down to all positive-strength
/// edges; tpr and fpr are nondecreasing along the sweep. The AUC closes the
/// curve with (0,0) and (1,1).
inline EvaluationReport roc_sweep(const CombinedModel& m, const Graph& truth) {
  const int p = m.model.schema.size();
  if (truth.size() != p) {
    throw ValidationError("roc: vertex set mismatch");
  }
  const Eigen::MatrixXd strength = edge_strengths(m);
  EvaluationReport rep;
  rep.true_edges = static_cast<int>(truth.edge_count());
  rep.true_gaps = p * (p - 1) / 2 - rep.true_edges;

  std::vector<double> cuts;
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) {
      if (strength(u, v) > 0) cuts.push_back(strength(u, v));
    }
  }
  std::sort(cuts.begin(), cuts.end(), std::greater<double>());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto point_at = [&](double t) {
    int tp = 0, fp = 0;
    for (int u = 0; u < p; ++u) {
      for (int v = u + 1; v < p; ++v) {
        if (strength(u, v) >= t) {
          if (truth.has_edge(u, v)) {
            ++tp;
          } else {
            ++fp;
          }
        }
      }
    }
    RocPoint pt;
    pt.threshold = t;
    pt.tpr = rep.true_edges > 0
                 ? static_cast<double>(tp) / rep.true_edges
                 : 1.0;
    pt.fpr = rep.true_gaps > 0 ? static_cast<double>(fp) / rep.true_gaps : 0.0;
    return pt;
  };

  rep.roc.push_back(
      {std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (double t : cuts) rep.roc.push_back(point_at(t));

  // Trapezoidal AUC over the curve closed at (0,0) and (1,1).
  double auc = 0.0;
  double px = 0.0, py = 0.0;
  for (size_t i = 1; i < rep.roc.size(); ++i) {
    auc += (rep.roc[i].fpr - px) * (rep.roc[i].tpr + py) / 2.0;
    px = rep.roc[i].fpr;
    py = rep.roc[i].tpr;
  }
  auc += (1.0 - px) * (1.0 + py) / 2.0;
  rep.auc = auc;
  return rep;
}

/// Monte-Carlo estimate of the non-normalized KL divergence:
/// -(1/N) * sum over reference observations of log p_hat(observation).
/// Cells with zero fitted probability produce +infinity with a diagnostic
/// list. Kahan summation keeps the result order-independent.
struct KlResult {
  double value = 0.0;
  std::vector<Cell> zero_cells;  // capped diagnostic listing
};

inline KlResult empirical_kl(const Dataset& reference,
                             const LogLinearModel& model,
                             const CliqueDecomposition& decomp,
                             int64_t max_cells = kDefaultMaxCells) {
  if (!model.log_partition) {
    throw ValidationError("empirical_kl: candidate model not normalized");
  }
  if (reference.schema.levels != model.schema.levels) {
    throw ValidationError("empirical_kl: schema mismatch");
  }
  JunctionEngine engine(model, decomp, max_cells);
  if (std::abs(engine.log_partition() - *model.log_partition) > 1e-6) {
    throw ValidationError("empirical_kl: stored log_partition is stale");
  }
  const int64_t n = reference.n();
  if (n <= 0) throw ValidationError("empirical_kl: empty reference sample");
  KlResult res;
  double sum = 0.0, comp = 0.0;  // Kahan
  Cell cell(reference.schema.size());
  for (int64_t r = 0; r < n; ++r) {
    const auto row = reference.row(r);
    std::copy(row.begin(), row.end(), cell.begin());
    const double lp = engine.log_prob(cell);
    if (!std::isfinite(lp)) {
      if (res.zero_cells.size() < 10) res.zero_cells.push_back(cell);
      continue;
    }
    const double y = -lp - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  if (!res.zero_cells.empty()) {
    res.value = std::numeric_limits<double>::infinity();
    return res;
  }
  res.value = sum / static_cast<double>(n);
  return res;
}

/// Closed-form independence model (main-effect MLE from the observed
/// univariate margins), exactly normalized. Zero margin levels are floored.
inline LogLinearModel independence_model(const Dataset& data) {
  data.validate();
  const int p = data.schema.size();
  const double n = static_cast<double>(data.n());
  if (n <= 0) throw ValidationError("independence_model: empty dataset");
  LogLinearModel model;
  model.schema = data.schema;
  TermEvaluator eval(data.schema);
  double intercept = 0.0;
  std::vector<TermCoef> mains;
  for (int v = 0; v < p; ++v) {
    const int k = data.schema.levels[v];
    Eigen::VectorXd logf(k);
    std::vector<int64_t> counts(static_cast<size_t>(k), 0);
    for (int64_t r = 0; r < data.n(); ++r) ++counts[static_cast<size_t>(data.at(r, v))];
    for (int l = 0; l < k; ++l) {
      logf[l] = std::log(std::max(static_cast<double>(counts[static_cast<size_t>(l)]) / n,
                                  1e-12));
    }
    intercept += logf.mean();
    const Eigen::MatrixXd& c = eval.contrasts(v);
    // Projection onto the contrast columns (squared norm k each).
    Eigen::VectorXd coef = c.transpose() * logf / static_cast<double>(k);
    mains.push_back({Term{v}, std::move(coef)});
  }
  model.terms.push_back({Term{}, Eigen::VectorXd::Constant(1, intercept)});
  for (auto& tc : mains) model.terms.push_back(std::move(tc));
  // Product of normalized margins sums to one over the full table.
  const Graph empty(p);
  model.log_partition =
      junction_normalize(model, cliques_and_separators(empty));
  return model;
}

}  // namespace loglin
