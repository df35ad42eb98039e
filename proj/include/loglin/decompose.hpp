#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "loglin/graph.hpp"
#include "loglin/schema.hpp"

namespace loglin {

/// One split-off step: clique C, its separator S toward the remaining
/// graph, and the residual A = C \ S removed from play.
struct PlanRecord {
  std::vector<int> clique;
  std::vector<int> separator;
  std::vector<int> residual;
};

/// Full output of the recursive thinning decomposition.
struct DecompositionPlan {
  int p = 0;
  int s_max = 0;
  std::vector<PlanRecord> records;                 // in split-off order
  std::vector<std::pair<int, int>> deleted_edges;  // in deletion order
  std::vector<std::pair<int, int>> fill_edges;     // fills persisted into G
  CliqueDecomposition final_decomp;                // over the clique union
  std::vector<std::string> names;                  // optional variable names

  /// Distinct nonempty separators with their multiplicity in the records.
  std::vector<Separator> record_separators() const {
    std::vector<Separator> out;
    for (const auto& rec : records) {
      if (rec.separator.empty()) continue;
      bool found = false;
      for (auto& s : out) {
        if (s.vars == rec.separator) {
          ++s.nu;
          found = true;
        }
      }
      if (!found) out.push_back({rec.separator, 1});
    }
    return out;
  }
};

/// Recursive decomposition driven by the symmetrized rank matrix: starting
/// from the complete graph, repeatedly split off a small-enough leaf clique
/// of the (minimally triangulated) graph, otherwise delete the present edge
/// with the smallest finite rank. Deterministic: ties resolve
/// lexicographically.
inline DecompositionPlan decompose(const Eigen::MatrixXd& rtilde, int s_max) {
  const int p = static_cast<int>(rtilde.rows());
  if (rtilde.cols() != p || p < 1) {
    throw ValidationError("decompose: rank matrix must be square");
  }
  if (s_max < 2) throw ValidationError("decompose: s_max must be >= 2");
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const double a = rtilde(i, j), b = rtilde(j, i);
      if (std::isfinite(a) != std::isfinite(b) ||
          (std::isfinite(a) && std::abs(a - b) > 1e-9)) {
        throw ValidationError("decompose: rank matrix must be symmetric");
      }
    }
  }

  DecompositionPlan plan;
  plan.p = p;
  plan.s_max = s_max;

  Eigen::MatrixXd work = rtilde;
  Graph g = Graph::complete(p);
  std::vector<int> active(p);
  std::iota(active.begin(), active.end(), 0);

  while (!active.empty()) {
    // Current induced graph; local index i maps to active[i].
    const Graph ga = g.induced(active);
    const auto chord = is_decomposable(ga);
    const Graph gt = chord.chordal ? ga : minimal_triangulation(ga);
    const auto dec = cliques_and_separators(gt);

    // Leaf cliques of the junction forest (degree <= 1).
    std::vector<int> degree(dec.cliques.size(), 0);
    for (const auto& e : dec.tree_edges) {
      ++degree[static_cast<size_t>(e.a)];
      ++degree[static_cast<size_t>(e.b)];
    }
    int pick = -1;
    for (size_t ci = 0; ci < dec.cliques.size(); ++ci) {
      if (degree[ci] > 1) continue;
      if (pick < 0 ||
          dec.cliques[ci].size() < dec.cliques[static_cast<size_t>(pick)].size()) {
        pick = static_cast<int>(ci);
      }
    }

    if (pick >= 0 &&
        static_cast<int>(dec.cliques[static_cast<size_t>(pick)].size()) <=
            s_max) {
      // Split off the chosen leaf clique.
      const auto& local_clique = dec.cliques[static_cast<size_t>(pick)];
      std::vector<int> sep_local;
      for (const auto& e : dec.tree_edges) {
        if (e.a == pick || e.b == pick) {
          sep_local = e.separator;
          break;
        }
      }
      PlanRecord rec;
      for (int v : local_clique) rec.clique.push_back(active[static_cast<size_t>(v)]);
      for (int v : sep_local) rec.separator.push_back(active[static_cast<size_t>(v)]);
      std::sort(rec.clique.begin(), rec.clique.end());
      std::sort(rec.separator.begin(), rec.separator.end());
      std::set_difference(rec.clique.begin(), rec.clique.end(),
                          rec.separator.begin(), rec.separator.end(),
                          std::back_inserter(rec.residual));
      // Persist triangulation fill into the working graph before shrinking.
      for (const auto& [u, v] : gt.edges()) {
        const int gu = active[static_cast<size_t>(u)];
        const int gv = active[static_cast<size_t>(v)];
        if (!g.has_edge(gu, gv)) {
          g.add_edge(gu, gv);
          plan.fill_edges.emplace_back(std::min(gu, gv), std::max(gu, gv));
        }
      }
      std::vector<int> remaining;
      std::set_difference(active.begin(), active.end(), rec.residual.begin(),
                          rec.residual.end(), std::back_inserter(remaining));
      active = std::move(remaining);
      plan.records.push_back(std::move(rec));
      continue;
    }

    // No small-enough leaf clique: delete the present edge with the
    // smallest finite rank (fill edges never qualify, their entries were
    // set to infinity when the original edge was deleted).
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < active.size(); ++i) {
      for (size_t j = i + 1; j < active.size(); ++j) {
        const int u = active[i], v = active[j];
        if (!g.has_edge(u, v)) continue;
        const double val = work(u, v);
        if (std::isfinite(val) && val < best) {
          best = val;
          bi = u;
          bj = v;
        }
      }
    }
    if (bi < 0) {
      throw ConvergenceError(
          "decompose: no deletable edge left but no clique fits s_max=" +
          std::to_string(s_max) + "; increase s_max");
    }
    g.remove_edge(bi, bj);
    work(bi, bj) = work(bj, bi) = std::numeric_limits<double>::infinity();
    plan.deleted_edges.emplace_back(bi, bj);
  }

  // Final decomposition over the union of the recorded cliques. The union
  // of overlapping split-off cliques is not always chordal, so triangulate
  // before extracting the junction scaffold.
  Graph h(p);
  for (const auto& rec : plan.records) {
    for (size_t i = 0; i < rec.clique.size(); ++i) {
      for (size_t j = i + 1; j < rec.clique.size(); ++j) {
        if (!h.has_edge(rec.clique[i], rec.clique[j])) {
          h.add_edge(rec.clique[i], rec.clique[j]);
        }
      }
    }
  }
  plan.final_decomp = cliques_and_separators(minimal_triangulation(h));
  return plan;
}

/// Collapsed tables for a plan: one per recorded clique, plus one per
/// distinct nonempty separator with its record multiplicity.
struct PlanTables {
  std::vector<ContingencyTable> clique_tables;     // aligned with records
  std::vector<ContingencyTable> separator_tables;  // aligned with separators
  std::vector<Separator> separators;               // distinct, with nu
};

inline PlanTables collapse_on_plan(const Dataset& data,
                                   const DecompositionPlan& plan,
                                   int64_t max_cells = kDefaultMaxCells) {
  PlanTables out;
  for (const auto& rec : plan.records) {
    out.clique_tables.push_back(tabulate(data, rec.clique, max_cells));
  }
  out.separators = plan.record_separators();
  for (const auto& sep : out.separators) {
    out.separator_tables.push_back(tabulate(data, sep.vars, max_cells));
  }
  return out;
}

}  // namespace loglin
