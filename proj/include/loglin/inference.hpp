#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "loglin/design.hpp"
#include "loglin/graph.hpp"
#include "loglin/schema.hpp"

namespace loglin {

/// Probability table over a margin: global variable indices (increasing)
/// plus probabilities in canonical cell order of the restricted schema.
struct ProbTable {
  std::vector<int> vars;
  std::vector<double> probs;
};

inline ProbTable prob_table_from_counts(const ContingencyTable& table) {
  ProbTable out;
  out.vars = table.vars;
  const double n = static_cast<double>(table.total());
  out.probs.resize(table.counts.size());
  for (size_t i = 0; i < table.counts.size(); ++i) {
    out.probs[i] = n > 0 ? static_cast<double>(table.counts[i]) / n : 0.0;
  }
  return out;
}

namespace detail {

inline double logsumexp(std::span<const double> xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

/// Collapses a probability table onto a subset of its variables.
inline ProbTable collapse_prob(const VariableSchema& full_schema,
                               const ProbTable& table,
                               const std::vector<int>& sub_vars) {
  const auto pos = positions_in(table.vars, sub_vars);
  const VariableSchema schema = full_schema.restricted(table.vars);
  const VariableSchema sub_schema = full_schema.restricted(sub_vars);
  ProbTable out;
  out.vars = sub_vars;
  out.probs.assign(static_cast<size_t>(sub_schema.cell_count()), 0.0);
  const auto map = margin_index_map(schema, pos);
  for (size_t i = 0; i < table.probs.size(); ++i) {
    out.probs[static_cast<size_t>(map[i])] += table.probs[i];
  }
  return out;
}

}  // namespace detail

/// Evaluates the clique/separator product density at one cell from
/// precomputed marginal tables. Marginals must be normalized and mutually
/// consistent; a zero separator marginal facing a nonzero clique marginal
/// raises SingularityError. Computed in log space.
inline double decomposable_density(const VariableSchema& schema,
                                   const Cell& cell,
                                   std::span<const ProbTable> clique_marginals,
                                   std::span<const ProbTable> sep_marginals,
                                   const CliqueDecomposition& decomp) {
  check_cell(schema, cell);
  if (clique_marginals.size() != decomp.cliques.size() ||
      sep_marginals.size() != decomp.separators.size()) {
    throw ValidationError("decomposable_density: marginals do not match decomposition");
  }
  const auto check_normalized = [](const ProbTable& t) {
    double s = 0.0;
    for (double p : t.probs) {
      if (!(p >= 0.0)) throw ValidationError("decomposable_density: negative marginal");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-10) {
      throw ValidationError("decomposable_density: marginal not normalized");
    }
  };
  for (const auto& t : clique_marginals) check_normalized(t);
  for (const auto& t : sep_marginals) check_normalized(t);
  // Consistency: adjacent cliques agree on their junction separators, and
  // agree with the provided separator tables.
  for (const auto& e : decomp.tree_edges) {
    const auto from_a =
        detail::collapse_prob(schema, clique_marginals[e.a], e.separator);
    const auto from_b =
        detail::collapse_prob(schema, clique_marginals[e.b], e.separator);
    for (size_t i = 0; i < from_a.probs.size(); ++i) {
      if (std::abs(from_a.probs[i] - from_b.probs[i]) > 1e-10) {
        throw ValidationError("decomposable_density: inconsistent clique marginals");
      }
    }
    for (size_t si = 0; si < decomp.separators.size(); ++si) {
      if (decomp.separators[si].vars != e.separator) continue;
      for (size_t i = 0; i < from_a.probs.size(); ++i) {
        if (std::abs(from_a.probs[i] - sep_marginals[si].probs[i]) > 1e-10) {
          throw ValidationError("decomposable_density: separator marginal mismatch");
        }
      }
    }
  }

  double log_p = 0.0;
  for (size_t ci = 0; ci < decomp.cliques.size(); ++ci) {
    const auto sub = marginal_cell(schema, cell, decomp.cliques[ci]);
    const VariableSchema sub_schema = schema.restricted(decomp.cliques[ci]);
    const double p = clique_marginals[ci].probs[static_cast<size_t>(
        cell_index(sub_schema, sub))];
    if (p <= 0.0) return 0.0;
    log_p += std::log(p);
  }
  for (size_t si = 0; si < decomp.separators.size(); ++si) {
    const auto& sep = decomp.separators[si];
    if (sep.vars.empty()) continue;
    const auto sub = marginal_cell(schema, cell, sep.vars);
    const VariableSchema sub_schema = schema.restricted(sep.vars);
    const double p =
        sep_marginals[si].probs[static_cast<size_t>(cell_index(sub_schema, sub))];
    if (p <= 0.0) {
      // All adjacent cliques were nonzero at this cell (we returned above
      // otherwise), so the quotient is singular.
      throw SingularityError(
          "decomposable_density: zero separator marginal under nonzero clique marginal");
    }
    log_p -= sep.nu * std::log(p);
  }
  return std::exp(log_p);
}

/// Calibrated junction forest over a log-linear model: exact normalization,
/// marginals, and forward sampling. Cliques must cover every model term and
/// every schema variable.
class JunctionEngine {
 public:
  JunctionEngine(const LogLinearModel& model, const CliqueDecomposition& decomp,
                 int64_t max_cells = kDefaultMaxCells)
      : schema_(model.schema), decomp_(decomp) {
    model.validate();
    const int p = schema_.size();
    std::vector<bool> covered(p, false);
    for (const auto& c : decomp.cliques) {
      for (int v : c) {
        if (v < 0 || v >= p) {
          throw ValidationError("junction: clique variable out of range");
        }
        covered[v] = true;
      }
    }
    for (int v = 0; v < p; ++v) {
      if (!covered[v]) {
        throw CoverageError("junction: variable '" + schema_.names[v] +
                            "' not covered by any clique");
      }
    }
    // Assign every term to the first clique containing it; the intercept is
    // carried separately as a constant.
    const int nc = static_cast<int>(decomp.cliques.size());
    std::vector<std::vector<int>> assigned(nc);
    for (size_t ti = 0; ti < model.terms.size(); ++ti) {
      const Term& t = model.terms[ti].vars;
      if (t.empty()) {
        intercept_ += model.terms[ti].coef[0];
        continue;
      }
      int home = -1;
      for (int ci = 0; ci < nc && home < 0; ++ci) {
        if (std::includes(decomp.cliques[ci].begin(), decomp.cliques[ci].end(),
                          t.begin(), t.end())) {
          home = ci;
        }
      }
      if (home < 0) {
        throw CoverageError("junction: term not covered by any clique");
      }
      assigned[home].push_back(static_cast<int>(ti));
    }
    // Potential tables.
    TermEvaluator eval(schema_);
    nodes_.resize(nc);
    for (int ci = 0; ci < nc; ++ci) {
      Node& node = nodes_[ci];
      node.vars = decomp.cliques[ci];
      node.schema = schema_.restricted(node.vars);
      const int64_t m = node.schema.cell_count(max_cells);
      node.log_pot.assign(static_cast<size_t>(m), 0.0);
      Cell full(p, 0);
      for (int64_t i = 0; i < m; ++i) {
        const Cell sub = cell_of_index(node.schema, i);
        for (size_t j = 0; j < node.vars.size(); ++j) full[node.vars[j]] = sub[j];
        double s = 0.0;
        for (int ti : assigned[ci]) {
          s += eval.term_value(model.terms[ti].vars, model.terms[ti].coef, full);
        }
        node.log_pot[static_cast<size_t>(i)] = s;
      }
    }
    // Forest structure: BFS from the lowest-index clique of each component.
    std::vector<std::vector<int>> adj(nc);
    for (const auto& e : decomp.tree_edges) {
      adj[e.a].push_back(e.b);
      adj[e.b].push_back(e.a);
    }
    std::vector<bool> seen(nc, false);
    for (int s = 0; s < nc; ++s) {
      if (seen[s]) continue;
      roots_.push_back(s);
      seen[s] = true;
      bfs_order_.push_back(s);
      std::vector<int> queue{s};
      for (size_t qi = 0; qi < queue.size(); ++qi) {
        const int u = queue[qi];
        for (int v : adj[u]) {
          if (seen[v]) continue;
          seen[v] = true;
          nodes_[v].parent = u;
          nodes_[u].children.push_back(v);
          nodes_[v].sep = detail::sorted_intersection(nodes_[u].vars, nodes_[v].vars);
          queue.push_back(v);
          bfs_order_.push_back(v);
        }
      }
    }
    for (int ci = 0; ci < nc; ++ci) {
      Node& node = nodes_[ci];
      if (node.parent >= 0) {
        const VariableSchema sep_schema = schema_.restricted(node.sep);
        node.sep_cells = sep_schema.cell_count();
        node.cell_to_sep = detail::margin_index_map(
            node.schema, detail::positions_in(node.vars, node.sep));
        node.parent_to_sep = detail::margin_index_map(
            nodes_[node.parent].schema,
            detail::positions_in(nodes_[node.parent].vars, node.sep));
      }
    }
    calibrate();
  }

  const VariableSchema& schema() const { return schema_; }
  const CliqueDecomposition& decomposition() const { return decomp_; }

  /// log of the sum over all cells of exp(score), score including the
  /// model intercept.
  double log_partition() const { return log_partition_; }

  /// Unnormalized log score of a full cell via the clique potentials.
  double log_score(const Cell& cell) const {
    check_cell(schema_, cell);
    double s = intercept_;
    for (const Node& node : nodes_) {
      int64_t idx = 0;
      for (size_t j = 0; j < node.vars.size(); ++j) {
        idx = idx * node.schema.levels[j] + cell[node.vars[j]];
      }
      s += node.log_pot[static_cast<size_t>(idx)];
    }
    return s;
  }

  double log_prob(const Cell& cell) const {
    return log_score(cell) - log_partition_;
  }

  /// Calibrated marginal probability table of one clique.
  ProbTable clique_marginal(int ci) const {
    const Node& node = nodes_[ci];
    ProbTable out;
    out.vars = node.vars;
    out.probs.resize(node.belief.size());
    const double log_z = component_logz_[component_of_[ci]];
    for (size_t i = 0; i < node.belief.size(); ++i) {
      out.probs[i] = std::exp(node.belief[i] - log_z);
    }
    return out;
  }

  /// Exact probabilities of a margin over arbitrary variables (sorted
  /// indices). Eliminates over the junction forest; throws CapacityError
  /// with a cost estimate when an intermediate factor would exceed
  /// max_cells. Empty margin returns {1}.
  std::vector<double> margin(const std::vector<int>& vars,
                             int64_t max_cells = kDefaultMaxCells) const {
    check_subset(schema_, vars);
    if (vars.empty()) return {1.0};
    std::vector<double> result{0.0};  // log-space accumulator, outer product
    std::vector<int> result_vars;
    for (size_t r = 0; r < roots_.size(); ++r) {
      std::vector<int> comp_query;
      for (int ci = 0; ci < static_cast<int>(nodes_.size()); ++ci) {
        if (component_of_[ci] != static_cast<int>(r)) continue;
        for (int v : nodes_[ci].vars) {
          if (std::binary_search(vars.begin(), vars.end(), v)) {
            comp_query.push_back(v);
          }
        }
      }
      std::sort(comp_query.begin(), comp_query.end());
      comp_query.erase(std::unique(comp_query.begin(), comp_query.end()),
                       comp_query.end());
      if (comp_query.empty()) continue;
      Factor f = eliminate(roots_[r], comp_query, max_cells);
      // Normalize by the component partition function.
      for (double& x : f.log_vals) x -= component_logz_[r];
      // Outer sum (log space) with accumulated result.
      std::vector<int> merged = result_vars;
      merged.insert(merged.end(), f.vars.begin(), f.vars.end());
      std::sort(merged.begin(), merged.end());
      const VariableSchema ms = schema_.restricted(merged);
      const int64_t mm = ms.cell_count(max_cells);
      std::vector<double> merged_vals(static_cast<size_t>(mm));
      const VariableSchema rs = schema_.restricted(result_vars);
      const VariableSchema fs = schema_.restricted(f.vars);
      const auto rpos = detail::positions_in(merged, result_vars);
      const auto fpos = detail::positions_in(merged, f.vars);
      const auto rmap = detail::margin_index_map(ms, rpos);
      const auto fmap = detail::margin_index_map(ms, fpos);
      for (int64_t i = 0; i < mm; ++i) {
        merged_vals[static_cast<size_t>(i)] =
            result[static_cast<size_t>(rmap[i])] +
            f.log_vals[static_cast<size_t>(fmap[i])];
      }
      result = std::move(merged_vals);
      result_vars = std::move(merged);
    }
    // Expand to the requested margin (query vars in no clique are already
    // rejected by coverage; result_vars == vars here).
    if (result_vars != vars) {
      throw ValidationError("margin: query variables not covered by cliques");
    }
    std::vector<double> out(result.size());
    for (size_t i = 0; i < result.size(); ++i) out[i] = std::exp(result[i]);
    return out;
  }

  /// Forward sampling along the junction forest; deterministic given seed.
  Dataset sample(int64_t n, uint64_t seed) const {
    if (n < 0) throw ValidationError("sample: negative count");
    Dataset data;
    data.schema = schema_;
    data.values.reserve(static_cast<size_t>(n) * schema_.size());
    std::mt19937_64 gen(seed);
    std::vector<int> row(schema_.size(), 0);
    for (int64_t t = 0; t < n; ++t) {
      for (int ci : bfs_order_) {
        const Node& node = nodes_[ci];
        int64_t drawn;
        if (node.parent < 0) {
          drawn = draw_from(node.root_cdf, gen);
        } else {
          int64_t sep_idx = 0;
          {
            const VariableSchema sep_schema = schema_.restricted(node.sep);
            for (size_t j = 0; j < node.sep.size(); ++j) {
              sep_idx = sep_idx * sep_schema.levels[j] + row[node.sep[j]];
            }
          }
          const auto& bucket = node.cond[static_cast<size_t>(sep_idx)];
          const size_t k = draw_from(bucket.cdf, gen);
          drawn = bucket.cells[k];
        }
        const Cell sub = cell_of_index(node.schema, drawn);
        for (size_t j = 0; j < node.vars.size(); ++j) {
          row[node.vars[j]] = sub[j];
        }
      }
      data.values.insert(data.values.end(), row.begin(), row.end());
    }
    return data;
  }

 private:
  struct CondBucket {
    std::vector<double> cdf;
    std::vector<int64_t> cells;
  };
  struct Node {
    std::vector<int> vars;
    VariableSchema schema;
    std::vector<double> log_pot;
    std::vector<double> belief;     // calibrated, LSE(belief) = logZ of component
    int parent = -1;
    std::vector<int> children;
    std::vector<int> sep;           // separator with parent
    int64_t sep_cells = 0;
    std::vector<int64_t> cell_to_sep;
    std::vector<int64_t> parent_to_sep;
    std::vector<double> up_msg;     // message to parent, indexed by sep cell
    std::vector<double> root_cdf;   // roots only
    std::vector<CondBucket> cond;   // non-roots: conditional cdfs per sep cell
  };

  struct Factor {
    std::vector<int> vars;  // sorted global indices
    std::vector<double> log_vals;
  };

  static size_t draw_from(const std::vector<double>& cdf, std::mt19937_64& gen) {
    const double u = rng::uniform01(gen);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    size_t idx = static_cast<size_t>(it - cdf.begin());
    if (idx >= cdf.size()) idx = cdf.size() - 1;
    return idx;
  }

  static std::vector<double> grouped_lse(const std::vector<double>& vals,
                                         const std::vector<int64_t>& groups,
                                         int64_t n_groups) {
    std::vector<double> mx(static_cast<size_t>(n_groups),
                           -std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < vals.size(); ++i) {
      mx[static_cast<size_t>(groups[i])] =
          std::max(mx[static_cast<size_t>(groups[i])], vals[i]);
    }
    std::vector<double> sum(static_cast<size_t>(n_groups), 0.0);
    for (size_t i = 0; i < vals.size(); ++i) {
      const auto g = static_cast<size_t>(groups[i]);
      if (std::isfinite(mx[g])) sum[g] += std::exp(vals[i] - mx[g]);
    }
    std::vector<double> out(static_cast<size_t>(n_groups));
    for (size_t g = 0; g < out.size(); ++g) {
      out[g] = std::isfinite(mx[g]) ? mx[g] + std::log(sum[g]) : mx[g];
    }
    return out;
  }

  void calibrate() {
    const int nc = static_cast<int>(nodes_.size());
    component_of_.assign(nc, -1);
    for (size_t r = 0; r < roots_.size(); ++r) {
      // Mark component membership via BFS order (children follow parents).
      component_of_[roots_[r]] = static_cast<int>(r);
    }
    for (int ci : bfs_order_) {
      if (nodes_[ci].parent >= 0) {
        component_of_[ci] = component_of_[nodes_[ci].parent];
      }
    }
    // Upward pass in reverse BFS order.
    for (auto it = bfs_order_.rbegin(); it != bfs_order_.rend(); ++it) {
      Node& node = nodes_[*it];
      std::vector<double> work = node.log_pot;
      for (int ch : node.children) {
        const Node& child = nodes_[ch];
        for (size_t i = 0; i < work.size(); ++i) {
          work[i] += child.up_msg[static_cast<size_t>(child.parent_to_sep[i])];
        }
      }
      node.belief = work;  // provisional: potential + child messages
      if (node.parent >= 0) {
        node.up_msg = grouped_lse(work, node.cell_to_sep, node.sep_cells);
      }
    }
    // Downward pass in BFS order.
    component_logz_.assign(roots_.size(), 0.0);
    for (int ci : bfs_order_) {
      Node& node = nodes_[ci];
      if (node.parent < 0) {
        component_logz_[component_of_[ci]] = detail::logsumexp(node.belief);
        continue;
      }
      const Node& par = nodes_[node.parent];
      // Parent belief marginalized onto the separator, minus our upward
      // message, broadcast back over our cells.
      const auto sep_lse =
          grouped_lse(par.belief, node.parent_to_sep, node.sep_cells);
      for (size_t i = 0; i < node.belief.size(); ++i) {
        const auto s = static_cast<size_t>(node.cell_to_sep[i]);
        node.belief[i] += sep_lse[s] - node.up_msg[s];
      }
    }
    log_partition_ = intercept_;
    for (double z : component_logz_) log_partition_ += z;
    // Sampling tables.
    for (int ci : bfs_order_) {
      Node& node = nodes_[ci];
      if (node.parent < 0) {
        const double z = component_logz_[component_of_[ci]];
        node.root_cdf.resize(node.belief.size());
        double acc = 0.0;
        for (size_t i = 0; i < node.belief.size(); ++i) {
          acc += std::exp(node.belief[i] - z);
          node.root_cdf[i] = acc;
        }
        if (!node.root_cdf.empty()) node.root_cdf.back() = 1.0;
      } else {
        const auto sep_lse =
            grouped_lse(node.belief, node.cell_to_sep, node.sep_cells);
        node.cond.assign(static_cast<size_t>(node.sep_cells), {});
        for (size_t i = 0; i < node.belief.size(); ++i) {
          const auto s = static_cast<size_t>(node.cell_to_sep[i]);
          node.cond[s].cells.push_back(static_cast<int64_t>(i));
        }
        for (size_t s = 0; s < node.cond.size(); ++s) {
          auto& bucket = node.cond[s];
          bucket.cdf.resize(bucket.cells.size());
          double acc = 0.0;
          for (size_t k = 0; k < bucket.cells.size(); ++k) {
            const double lp =
                node.belief[static_cast<size_t>(bucket.cells[k])] - sep_lse[s];
            acc += std::isfinite(lp) ? std::exp(lp) : 0.0;
            bucket.cdf[k] = acc;
          }
          if (!bucket.cdf.empty() && acc > 0.0) {
            for (double& c : bucket.cdf) c /= acc;
            bucket.cdf.back() = 1.0;
          }
        }
      }
    }
  }

  /// Eliminates the subtree rooted at `ci` down to (separator ∪ query vars
  /// in the subtree); query vars are kept un-summed.
  Factor eliminate(int ci, const std::vector<int>& query,
                   int64_t max_cells) const {
    const Node& node = nodes_[ci];
    Factor f;
    f.vars = node.vars;
    f.log_vals = node.log_pot;
    for (int ch : node.children) {
      const Factor sub = eliminate(ch, query, max_cells);
      // Multiply sub into f, extending f's scope as needed.
      std::vector<int> merged;
      std::set_union(f.vars.begin(), f.vars.end(), sub.vars.begin(),
                     sub.vars.end(), std::back_inserter(merged));
      const VariableSchema ms = schema_.restricted(merged);
      int64_t mm;
      try {
        mm = ms.cell_count(max_cells);
      } catch (const CapacityError&) {
        throw CapacityError(
            "margin: elimination factor over " +
            std::to_string(merged.size()) +
            " variables exceeds the cell limit of " + std::to_string(max_cells));
      }
      std::vector<double> vals(static_cast<size_t>(mm));
      const auto fmap =
          detail::margin_index_map(ms, detail::positions_in(merged, f.vars));
      const auto smap =
          detail::margin_index_map(ms, detail::positions_in(merged, sub.vars));
      for (int64_t i = 0; i < mm; ++i) {
        vals[static_cast<size_t>(i)] =
            f.log_vals[static_cast<size_t>(fmap[i])] +
            sub.log_vals[static_cast<size_t>(smap[i])];
      }
      f.vars = std::move(merged);
      f.log_vals = std::move(vals);
    }
    // Keep separator-with-parent plus query variables, sum out the rest.
    std::vector<int> keep;
    for (int v : f.vars) {
      const bool in_sep = node.parent >= 0 &&
                          std::binary_search(node.sep.begin(), node.sep.end(), v);
      const bool in_query = std::binary_search(query.begin(), query.end(), v);
      if (in_sep || in_query) keep.push_back(v);
    }
    if (keep == f.vars) return f;
    const VariableSchema fs = schema_.restricted(f.vars);
    const VariableSchema ks = schema_.restricted(keep);
    const auto kmap =
        detail::margin_index_map(fs, detail::positions_in(f.vars, keep));
    Factor out;
    out.vars = keep;
    out.log_vals = grouped_lse(f.log_vals, kmap, ks.cell_count());
    return out;
  }

  VariableSchema schema_;
  CliqueDecomposition decomp_;
  std::vector<Node> nodes_;
  std::vector<int> roots_;
  std::vector<int> bfs_order_;
  std::vector<int> component_of_;
  std::vector<double> component_logz_;
  double intercept_ = 0.0;
  double log_partition_ = 0.0;
};

/// Exact log normalizing constant of a model over a covering decomposition.
inline double junction_normalize(const LogLinearModel& model,
                                 const CliqueDecomposition& decomp,
                                 int64_t max_cells = kDefaultMaxCells) {
  return JunctionEngine(model, decomp, max_cells).log_partition();
}

/// A covering chordal decomposition derived from the model's own nonzero
/// interaction structure (triangulated when needed).
inline CliqueDecomposition decomposition_for_model(const LogLinearModel& model) {
  const Graph g = interaction_graph(active_terms(model), model.schema.size());
  return cliques_and_separators(minimal_triangulation(g));
}

/// Exact probabilities p(i_a) for a collection of (sub-)cells; each query
/// cell lists this margin's variables. Model must be normalized.
inline std::vector<double> marginal_query(const LogLinearModel& model,
                                          const CliqueDecomposition& decomp,
                                          const std::vector<int>& vars,
                                          const std::vector<Cell>& cells,
                                          int64_t max_cells = kDefaultMaxCells) {
  if (!model.log_partition) {
    throw ValidationError("marginal_query: model not normalized");
  }
  JunctionEngine engine(model, decomp, max_cells);
  // The engine recomputes the partition function; an externally stored
  // log_partition must agree for the model to be considered normalized.
  if (std::abs(engine.log_partition() - *model.log_partition) > 1e-6) {
    throw ValidationError("marginal_query: stored log_partition is stale");
  }
  const VariableSchema sub_schema = model.schema.restricted(vars);
  const auto table = engine.margin(vars, max_cells);
  std::vector<double> out;
  out.reserve(cells.size());
  for (const Cell& c : cells) {
    if (vars.empty()) {
      out.push_back(1.0);
      continue;
    }
    out.push_back(table[static_cast<size_t>(cell_index(sub_schema, c))]);
  }
  return out;
}

/// Forward sampling from a normalized model along its junction forest.
inline Dataset sample_from_model(const LogLinearModel& model,
                                 const CliqueDecomposition& decomp, int64_t n,
                                 uint64_t seed,
                                 int64_t max_cells = kDefaultMaxCells) {
  JunctionEngine engine(model, decomp, max_cells);
  return engine.sample(n, seed);
}

}  // namespace loglin
