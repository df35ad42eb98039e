#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loglin/errors.hpp"
#include "loglin/graph.hpp"
#include "loglin/schema.hpp"

namespace loglin {

/// An interaction term: sorted variable indices; {} is the intercept.
using Term = std::vector<int>;

inline void check_term(const VariableSchema& schema, const Term& term) {
  check_subset(schema, term);
}

/// Number of design columns carried by a term: prod over its vars of k_v-1.
inline int term_width(const VariableSchema& schema, const Term& term) {
  int w = 1;
  for (int v : term) w *= schema.levels[v] - 1;
  return w;
}

/// Deterministic term order: by interaction order, ties lexicographic.
inline bool term_less(const Term& a, const Term& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

/// Downward closure: every subset (including the intercept) of every input
/// term. Idempotent.
inline std::set<Term> hierarchical_closure(const std::vector<Term>& terms) {
  std::set<Term> out;
  out.insert(Term{});
  for (const Term& t : terms) {
    const size_t k = t.size();
    if (k > 24) throw CapacityError("hierarchical_closure: term too large");
    for (size_t mask = 0; mask < (size_t{1} << k); ++mask) {
      Term sub;
      for (size_t b = 0; b < k; ++b) {
        if (mask & (size_t{1} << b)) sub.push_back(t[b]);
      }
      out.insert(std::move(sub));
    }
  }
  return out;
}

/// Maximal elements of a term set (the generating class of its closure).
inline std::vector<Term> maximal_terms(const std::vector<Term>& terms) {
  std::vector<Term> out;
  for (const Term& a : terms) {
    bool nested = false;
    for (const Term& b : terms) {
      if (&a != &b && a.size() <= b.size() && a != b &&
          std::includes(b.begin(), b.end(), a.begin(), a.end())) {
        nested = true;
        break;
      }
    }
    if (!nested && std::find(out.begin(), out.end(), a) == out.end()) {
      out.push_back(a);
    }
  }
  std::sort(out.begin(), out.end(), term_less);
  return out;
}

/// Graph with an edge wherever two variables co-occur in a generator.
inline Graph interaction_graph(const std::vector<Term>& generators, int p) {
  Graph g(p);
  for (const Term& t : generators) {
    for (size_t i = 0; i < t.size(); ++i) {
      for (size_t j = i + 1; j < t.size(); ++j) {
        g.add_edge(t[i], t[j]);
      }
    }
  }
  return g;
}

namespace detail {

/// Bron-Kerbosch with pivoting; for the small graphs handled here.
inline void bron_kerbosch(const Graph& g, std::vector<int>& r,
                          std::vector<int> p, std::vector<int> x,
                          std::vector<std::vector<int>>& out) {
  if (p.empty() && x.empty()) {
    out.push_back(r);
    return;
  }
  int pivot = -1, best = -1;
  for (int u : p) {
    int cnt = 0;
    for (int v : p) {
      if (g.has_edge(u, v)) ++cnt;
    }
    if (cnt > best) {
      best = cnt;
      pivot = u;
    }
  }
  for (int u : x) {
    int cnt = 0;
    for (int v : p) {
      if (g.has_edge(u, v)) ++cnt;
    }
    if (cnt > best) {
      best = cnt;
      pivot = u;
    }
  }
  std::vector<int> cand;
  for (int v : p) {
    if (pivot < 0 || !g.has_edge(pivot, v)) cand.push_back(v);
  }
  for (int v : cand) {
    std::vector<int> p2, x2;
    for (int w : p) {
      if (g.has_edge(v, w)) p2.push_back(w);
    }
    for (int w : x) {
      if (g.has_edge(v, w)) x2.push_back(w);
    }
    r.push_back(v);
    bron_kerbosch(g, r, std::move(p2), std::move(x2), out);
    r.pop_back();
    p.erase(std::remove(p.begin(), p.end(), v), p.end());
    x.push_back(v);
  }
}

}  // namespace detail

/// All maximal cliques of an arbitrary graph, sorted lexicographically.
/// Isolated vertices count as singleton cliques.
inline std::vector<std::vector<int>> maximal_cliques(const Graph& g) {
  std::vector<int> r, p(g.size());
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  detail::bron_kerbosch(g, r, std::move(p), {}, out);
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

/// True iff the generators equal the maximal cliques of their interaction
/// graph (variables absent from all generators are treated as singletons).
inline bool is_graphical(const std::vector<Term>& generators, int p) {
  const Graph g = interaction_graph(generators, p);
  auto cliques = maximal_cliques(g);
  auto gens = maximal_terms(generators);
  // maximal_cliques lists every vertex; generators may omit isolated
  // variables entirely, which is the same model.
  std::vector<Term> gen_full = gens;
  std::vector<bool> covered(p, false);
  for (const auto& t : gen_full) {
    for (int v : t) covered[v] = true;
  }
  for (int v = 0; v < p; ++v) {
    if (!covered[v]) gen_full.push_back({v});
  }
  std::sort(gen_full.begin(), gen_full.end());
  gen_full.erase(std::unique(gen_full.begin(), gen_full.end()), gen_full.end());
  return gen_full == cliques;
}

/// Orthogonal polynomial contrasts for k levels at points 0..k-1: a
/// k x (k-1) matrix whose columns are mutually orthogonal, orthogonal to the
/// constant, scaled to squared norm k, and positive at level 0. For k=2 the
/// single column is (+1, -1).
inline Eigen::MatrixXd poly_contrasts(int k) {
  if (k < 2) throw ValidationError("poly_contrasts: need at least 2 levels");
  Eigen::MatrixXd v(k, k);
  for (int r = 0; r < k; ++r) {
    double x = 1.0;
    for (int c = 0; c < k; ++c) {
      v(r, c) = x;
      x *= static_cast<double>(r);
    }
  }
  // Modified Gram-Schmidt with one reorthogonalization pass.
  for (int c = 0; c < k; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int prev = 0; prev < c; ++prev) {
        v.col(c) -= v.col(prev).dot(v.col(c)) * v.col(prev);
      }
    }
    v.col(c) /= v.col(c).norm();
  }
  Eigen::MatrixXd contrasts = v.rightCols(k - 1) * std::sqrt(static_cast<double>(k));
  for (int c = 0; c < k - 1; ++c) {
    if (contrasts(0, c) < 0) contrasts.col(c) = -contrasts.col(c);
  }
  return contrasts;
}

/// One contiguous column block of the design, owned by one term.
struct DesignBlock {
  Term vars;
  int offset = 0;
  int width = 0;
};

/// Ordered blocks partitioning the design columns; intercept is column 0.
struct DesignBlockMap {
  std::vector<DesignBlock> blocks;
  int cols = 0;

  int find(const Term& t) const {
    for (size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].vars == t) return static_cast<int>(i);
    }
    return -1;
  }
};

struct DesignResult {
  Eigen::MatrixXd matrix;  // m rows in canonical cell order
  DesignBlockMap map;
};

/// Evaluates term blocks and model scores at cells without materializing
/// the full design; holds the per-variable contrast matrices of a schema.
class TermEvaluator {
 public:
  explicit TermEvaluator(const VariableSchema& schema) : schema_(schema) {
    contrasts_.reserve(schema.levels.size());
    for (int k : schema.levels) contrasts_.push_back(poly_contrasts(k));
  }

  const VariableSchema& schema() const { return schema_; }
  const Eigen::MatrixXd& contrasts(int v) const { return contrasts_[v]; }

  /// Value of the design column (term, column-within-block) at a cell.
  /// Within a block, columns enumerate contrast indices mixed-radix with
  /// the last variable of the term fastest.
  double column_value(const Term& term, int col, const Cell& cell) const {
    double prod = 1.0;
    for (int i = static_cast<int>(term.size()) - 1; i >= 0; --i) {
      const int v = term[i];
      const int w = schema_.levels[v] - 1;
      const int j = col % w;
      col /= w;
      prod *= contrasts_[v](cell[v], j);
    }
    return prod;
  }

  /// Inner product of a coefficient block with the term's design row.
  double term_value(const Term& term, const Eigen::VectorXd& coef,
                    const Cell& cell) const {
    double sum = 0.0;
    for (int c = 0; c < coef.size(); ++c) {
      sum += coef[c] * column_value(term, c, cell);
    }
    return sum;
  }

 private:
  VariableSchema schema_;
  std::vector<Eigen::MatrixXd> contrasts_;
};

/// Builds the orthogonal design over all cells of `schema` for the given
/// terms (closed or not; exactly the terms passed become blocks). Blocks
/// are ordered by interaction order then lexicographically; the intercept
/// must be present and lands in column 0. Columns are mutually orthogonal
/// with squared norm m.
inline DesignResult build_design(const VariableSchema& schema,
                                 const std::vector<Term>& terms,
                                 int64_t max_cells = kDefaultMaxCells) {
  schema.validate();
  const int64_t m = schema.cell_count(max_cells);
  std::vector<Term> ordered = terms;
  std::sort(ordered.begin(), ordered.end(), term_less);
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
  if (ordered.empty() || !ordered.front().empty()) {
    throw ValidationError("build_design: intercept term required");
  }
  DesignResult res;
  int offset = 0;
  for (const Term& t : ordered) {
    check_term(schema, t);
    const int w = term_width(schema, t);
    res.map.blocks.push_back({t, offset, w});
    offset += w;
  }
  res.map.cols = offset;
  if (m > 0 && offset > (int64_t{1} << 40) / m) {
    throw CapacityError("build_design: design too large to materialize");
  }
  TermEvaluator eval(schema);
  res.matrix.resize(m, offset);
  for (int64_t i = 0; i < m; ++i) {
    const Cell cell = cell_of_index(schema, i);
    for (const DesignBlock& blk : res.map.blocks) {
      for (int c = 0; c < blk.width; ++c) {
        res.matrix(i, blk.offset + c) = eval.column_value(blk.vars, c, cell);
      }
    }
  }
  return res;
}

/// One coefficient block of a log-linear model.
struct TermCoef {
  Term vars;
  Eigen::VectorXd coef;
};

/// A log-linear model over a schema: log p(i) = score(i) - log_partition.
/// Terms are kept downward closed; blocks may be identically zero.
struct LogLinearModel {
  VariableSchema schema;
  std::vector<TermCoef> terms;  // ordered by term_less
  std::optional<double> log_partition;

  int find_term(const Term& t) const {
    for (size_t i = 0; i < terms.size(); ++i) {
      if (terms[i].vars == t) return static_cast<int>(i);
    }
    return -1;
  }

  void validate() const {
    schema.validate();
    for (const auto& tc : terms) {
      check_term(schema, tc.vars);
      if (tc.coef.size() != term_width(schema, tc.vars)) {
        throw ValidationError("model: coefficient block width mismatch");
      }
    }
    for (size_t i = 1; i < terms.size(); ++i) {
      if (!term_less(terms[i - 1].vars, terms[i].vars)) {
        throw ValidationError("model: terms out of canonical order");
      }
    }
  }
};

/// Unnormalized log score (X beta at the cell, intercept included).
inline double log_score(const LogLinearModel& model, const TermEvaluator& eval,
                        const Cell& cell) {
  double s = 0.0;
  for (const auto& tc : model.terms) {
    s += eval.term_value(tc.vars, tc.coef, cell);
  }
  return s;
}

/// Normalized log probability; requires log_partition to be set.
inline double log_prob(const LogLinearModel& model, const TermEvaluator& eval,
                       const Cell& cell) {
  if (!model.log_partition) {
    throw ValidationError("model: log_partition not set; normalize first");
  }
  return log_score(model, eval, cell) - *model.log_partition;
}

/// Nonzero non-intercept terms of a model (blocks with positive l2 norm).
inline std::vector<Term> active_terms(const LogLinearModel& model) {
  std::vector<Term> out;
  for (const auto& tc : model.terms) {
    if (!tc.vars.empty() && tc.coef.norm() > 0.0) out.push_back(tc.vars);
  }
  return out;
}

}  // namespace loglin
