#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "loglin/errors.hpp"

namespace loglin {

/// Simple undirected graph on vertices 0..n-1, dense adjacency.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int n) : n_(n), adj_(static_cast<size_t>(n) * n, 0) {}

  static Graph complete(int n) {
    Graph g(n);
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) g.add_edge(u, v);
    }
    return g;
  }

  int size() const { return n_; }

  bool has_edge(int u, int v) const {
    return u != v && adj_[idx(u, v)] != 0;
  }

  void add_edge(int u, int v) {
    check(u);
    check(v);
    if (u == v) throw ValidationError("graph: self-loops not allowed");
    if (!adj_[idx(u, v)]) ++edges_;
    adj_[idx(u, v)] = adj_[idx(v, u)] = 1;
  }

  void remove_edge(int u, int v) {
    check(u);
    check(v);
    if (u == v) return;
    if (adj_[idx(u, v)]) --edges_;
    adj_[idx(u, v)] = adj_[idx(v, u)] = 0;
  }

  int64_t edge_count() const { return edges_; }

  std::vector<int> neighbors(int u) const {
    check(u);
    std::vector<int> out;
    for (int v = 0; v < n_; ++v) {
      if (v != u && adj_[idx(u, v)]) out.push_back(v);
    }
    return out;
  }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<size_t>(edges_));
    for (int u = 0; u < n_; ++u) {
      for (int v = u + 1; v < n_; ++v) {
        if (adj_[idx(u, v)]) out.emplace_back(u, v);
      }
    }
    return out;
  }

  /// Subgraph induced on `verts`; vertex i of the result is verts[i].
  Graph induced(const std::vector<int>& verts) const {
    Graph sub(static_cast<int>(verts.size()));
    for (size_t i = 0; i < verts.size(); ++i) {
      for (size_t j = i + 1; j < verts.size(); ++j) {
        if (has_edge(verts[i], verts[j])) {
          sub.add_edge(static_cast<int>(i), static_cast<int>(j));
        }
      }
    }
    return sub;
  }

  bool is_clique(const std::vector<int>& verts) const {
    for (size_t i = 0; i < verts.size(); ++i) {
      for (size_t j = i + 1; j < verts.size(); ++j) {
        if (!has_edge(verts[i], verts[j])) return false;
      }
    }
    return true;
  }

  std::vector<int> component_labels() const {
    std::vector<int> label(n_, -1);
    int next = 0;
    std::vector<int> stack;
    for (int s = 0; s < n_; ++s) {
      if (label[s] >= 0) continue;
      label[s] = next;
      stack.assign(1, s);
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < n_; ++v) {
          if (v != u && adj_[idx(u, v)] && label[v] < 0) {
            label[v] = next;
            stack.push_back(v);
          }
        }
      }
      ++next;
    }
    return label;
  }

  int component_count() const {
    const auto labels = component_labels();
    return labels.empty() ? 0 : 1 + *std::max_element(labels.begin(), labels.end());
  }

  bool operator==(const Graph&) const = default;

 private:
  size_t idx(int u, int v) const {
    return static_cast<size_t>(u) * n_ + v;
  }
  void check(int u) const {
    if (u < 0 || u >= n_) throw ValidationError("graph: vertex out of range");
  }

  int n_ = 0;
  int64_t edges_ = 0;
  std::vector<uint8_t> adj_;
};

/// Result of the maximum-cardinality-search chordality test.
struct ChordalityResult {
  bool chordal = false;
  /// Perfect elimination order when chordal: order[0] is eliminated first.
  std::vector<int> elimination_order;
};

namespace detail {

/// Maximum cardinality search. Returns the visit order reversed into an
/// elimination candidate order (position 0 eliminated first).
inline std::vector<int> mcs_order(const Graph& g) {
  const int n = g.size();
  std::vector<int> weight(n, 0), order(n, -1);
  std::vector<bool> numbered(n, false);
  for (int i = n - 1; i >= 0; --i) {
    int best = -1;
    for (int v = 0; v < n; ++v) {
      if (!numbered[v] && (best < 0 || weight[v] > weight[best])) best = v;
    }
    order[i] = best;
    numbered[best] = true;
    for (int u = 0; u < n; ++u) {
      if (!numbered[u] && g.has_edge(best, u)) ++weight[u];
    }
  }
  return order;
}

/// Checks that `order` is a perfect elimination order of g.
inline bool verify_peo(const Graph& g, const std::vector<int>& order) {
  const int n = g.size();
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) pos[order[i]] = i;
  for (int i = 0; i < n; ++i) {
    const int v = order[i];
    // Later neighbors of v; the earliest of them must dominate the rest.
    int u = -1;
    for (int w : g.neighbors(v)) {
      if (pos[w] > i && (u < 0 || pos[w] < pos[u])) u = w;
    }
    if (u < 0) continue;
    for (int w : g.neighbors(v)) {
      if (pos[w] > i && w != u && !g.has_edge(u, w)) return false;
    }
  }
  return true;
}

}  // namespace detail

/// Chordality test via maximum cardinality search; when the graph is
/// chordal the returned order is a perfect elimination order.
inline ChordalityResult is_decomposable(const Graph& g) {
  ChordalityResult res;
  res.elimination_order = detail::mcs_order(g);
  res.chordal = detail::verify_peo(g, res.elimination_order);
  if (!res.chordal) res.elimination_order.clear();
  return res;
}

/// Minimal triangulation (MCS-M): returns a chordal supergraph whose fill
/// is inclusion-minimal. Chordal inputs come back unchanged.
inline Graph minimal_triangulation(const Graph& g) {
  const int n = g.size();
  Graph h = g;
  std::vector<int> weight(n, 0);
  std::vector<bool> numbered(n, false);
  // Minimax path keys; -1 encodes "no intermediate vertex on the path".
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> key(n);
  for (int step = n - 1; step >= 0; --step) {
    int v = -1;
    for (int u = 0; u < n; ++u) {
      if (!numbered[u] && (v < 0 || weight[u] > weight[v])) v = u;
    }
    // Lightest-intermediate-first search from v over unnumbered vertices:
    // key[u] = min over v..u paths of the max intermediate weight.
    std::fill(key.begin(), key.end(), kInf);
    std::vector<std::vector<int>> bucket(static_cast<size_t>(n) + 2);
    for (int u : g.neighbors(v)) {
      if (!numbered[u]) {
        key[u] = -1;
        bucket[0].push_back(u);
      }
    }
    for (int b = 0; b < static_cast<int>(bucket.size()); ++b) {
      for (size_t qi = 0; qi < bucket[b].size(); ++qi) {
        const int u = bucket[b][qi];
        if (key[u] != b - 1) continue;  // stale entry
        const int through = std::max(key[u], weight[u]);
        for (int z : g.neighbors(u)) {
          if (numbered[z] || z == v) continue;
          if (through < key[z]) {
            key[z] = through;
            bucket[static_cast<size_t>(through) + 1].push_back(z);
          }
        }
      }
    }
    for (int u = 0; u < n; ++u) {
      if (u == v || numbered[u] || key[u] == kInf) continue;
      if (key[u] < weight[u] || key[u] == -1) {
        ++weight[u];
        if (!h.has_edge(v, u)) h.add_edge(v, u);
      }
    }
    numbered[v] = true;
  }
  return h;
}

/// One junction-forest edge: adjacent cliques plus their separator.
struct JunctionEdge {
  int a = 0;
  int b = 0;
  std::vector<int> separator;
};

/// Separator with its junction-tree multiplicity.
struct Separator {
  std::vector<int> vars;
  int nu = 0;
};

/// Cliques, junction forest, and separator multiplicities of a chordal
/// graph. Cliques are sorted vertex lists, ordered lexicographically.
struct CliqueDecomposition {
  std::vector<std::vector<int>> cliques;
  std::vector<JunctionEdge> tree_edges;
  std::vector<Separator> separators;  // distinct separators with nu

  int nu_of(const std::vector<int>& s) const {
    for (const auto& sep : separators) {
      if (sep.vars == s) return sep.nu;
    }
    return 0;
  }
};

namespace detail {

inline std::vector<int> sorted_intersection(const std::vector<int>& a,
                                            const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace detail

/// Maximal cliques of a chordal graph, each sorted, in lexicographic order.
inline std::vector<std::vector<int>> maximal_cliques_chordal(
    const Graph& g, const std::vector<int>& elimination_order) {
  const int n = g.size();
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) pos[elimination_order[i]] = i;
  std::vector<std::vector<int>> cand;
  cand.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int v = elimination_order[i];
    std::vector<int> c{v};
    for (int w : g.neighbors(v)) {
      if (pos[w] > i) c.push_back(w);
    }
    std::sort(c.begin(), c.end());
    cand.push_back(std::move(c));
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  std::vector<std::vector<int>> cliques;
  for (size_t i = 0; i < cand.size(); ++i) {
    bool maximal = true;
    for (size_t j = 0; j < cand.size() && maximal; ++j) {
      if (i != j && cand[j].size() > cand[i].size() &&
          std::includes(cand[j].begin(), cand[j].end(), cand[i].begin(),
                        cand[i].end())) {
        maximal = false;
      }
    }
    if (maximal) cliques.push_back(cand[i]);
  }
  return cliques;
}

/// Cliques, maximum-weight junction forest, and separator indices of a
/// chordal graph. Throws on non-chordal input.
inline CliqueDecomposition cliques_and_separators(const Graph& g) {
  const auto chord = is_decomposable(g);
  if (!chord.chordal) {
    throw ValidationError("cliques_and_separators: graph is not chordal");
  }
  CliqueDecomposition dec;
  dec.cliques = maximal_cliques_chordal(g, chord.elimination_order);
  const int nc = static_cast<int>(dec.cliques.size());

  struct Candidate {
    int w;
    int a;
    int b;
  };
  std::vector<Candidate> cands;
  for (int a = 0; a < nc; ++a) {
    for (int b = a + 1; b < nc; ++b) {
      const auto inter = detail::sorted_intersection(dec.cliques[a], dec.cliques[b]);
      if (!inter.empty()) {
        cands.push_back({static_cast<int>(inter.size()), a, b});
      }
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
    if (x.w != y.w) return x.w > y.w;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  detail::UnionFind uf(nc);
  std::map<std::vector<int>, int> nu;
  for (const auto& c : cands) {
    if (!uf.merge(c.a, c.b)) continue;
    JunctionEdge e;
    e.a = c.a;
    e.b = c.b;
    e.separator = detail::sorted_intersection(dec.cliques[c.a], dec.cliques[c.b]);
    ++nu[e.separator];
    dec.tree_edges.push_back(std::move(e));
  }
  for (auto& [vars, count] : nu) {
    dec.separators.push_back({vars, count});
  }
  return dec;
}

}  // namespace loglin
