#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "loglin/rng.hpp"
#include "loglin/schema.hpp"

namespace loglin {

struct ForestConfig {
  int trees = 500;
  int mtry = 0;            // 0 = floor(sqrt(#covariates)), at least 1
  int min_leaf = 5;        // minimum rows in each child of a split
  int max_depth = -1;      // -1 = unbounded
  double boot_frac = 1.0;  // bootstrap draws = round(boot_frac * n)
  int64_t max_oob = 5000;  // cap on out-of-bag rows scored per tree; 0 = all
  uint64_t seed = 0;
};

/// Classification tree over categorical covariates; splits are binary
/// level partitions chosen by Gini decrease.
class DecisionTree {
 public:
  struct Node {
    int16_t feature = -1;    // covariate position; -1 for leaves
    int16_t prediction = 0;  // majority class at this node
    uint32_t left_mask = 0;  // covariate levels routed left
    int32_t left = -1;
    int32_t right = -1;
  };

  explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  /// Predicts from covariate levels; `override_feature`, when >= 0, reads
  /// `override_level` instead of the row value (permutation hook).
  int predict(const int32_t* covariates, int override_feature = -1,
              int32_t override_level = 0) const {
    int cur = 0;
    for (;;) {
      const Node& node = nodes_[static_cast<size_t>(cur)];
      if (node.feature < 0) return node.prediction;
      const int32_t level = node.feature == override_feature
                                ? override_level
                                : covariates[node.feature];
      cur = (node.left_mask >> level) & 1u ? node.left : node.right;
    }
  }

  size_t node_count() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

/// Random forest for one node-wise regression: response = one schema
/// variable, covariates = all others (in schema order, response skipped).
class RandomForest {
 public:
  RandomForest(const Dataset& data, int response, ForestConfig cfg)
      : cfg_(cfg), response_(response), p_(data.schema.size()) {
    data.validate();
    if (p_ < 2) throw ValidationError("forest: need at least 2 variables");
    if (response < 0 || response >= p_) {
      throw ValidationError("forest: response index out of range");
    }
    if (cfg.trees < 1) throw ValidationError("forest: tree count must be >= 1");
    const int64_t n = data.n();
    if (n < std::max(1, cfg.min_leaf)) {
      throw ValidationError("forest: fewer rows than the leaf size");
    }
    for (int v = 0; v < p_; ++v) {
      if (v != response && data.schema.levels[v] > 31) {
        throw CapacityError("forest: covariates limited to 31 levels");
      }
    }
    covariates_.clear();
    for (int v = 0; v < p_; ++v) {
      if (v != response) covariates_.push_back(v);
    }
    const int q = static_cast<int>(covariates_.size());
    mtry_ = cfg.mtry > 0 ? std::min(cfg.mtry, q)
                         : std::max(1, static_cast<int>(std::sqrt(
                                           static_cast<double>(q))));
    // Column-major covariate matrix for cache-friendly traversal.
    columns_.assign(static_cast<size_t>(q) * n, 0);
    for (int f = 0; f < q; ++f) {
      const int v = covariates_[static_cast<size_t>(f)];
      for (int64_t r = 0; r < n; ++r) {
        columns_[static_cast<size_t>(f) * n + r] = data.at(r, v);
      }
    }
    response_col_.resize(static_cast<size_t>(n));
    for (int64_t r = 0; r < n; ++r) {
      response_col_[static_cast<size_t>(r)] = data.at(r, response);
    }
    k_response_ = data.schema.levels[response];
    degenerate_ = true;
    for (int64_t r = 1; r < n && degenerate_; ++r) {
      degenerate_ = response_col_[static_cast<size_t>(r)] == response_col_[0];
    }
    feature_levels_.resize(static_cast<size_t>(q));
    for (int f = 0; f < q; ++f) {
      feature_levels_[static_cast<size_t>(f)] =
          data.schema.levels[covariates_[static_cast<size_t>(f)]];
    }
    grow(n);
  }

  bool degenerate_response() const { return degenerate_; }
  int response() const { return response_; }
  const std::vector<int>& covariates() const { return covariates_; }
  int tree_count() const { return static_cast<int>(trees_.size()); }
  const DecisionTree& tree(int t) const { return trees_[static_cast<size_t>(t)]; }
  const std::vector<int64_t>& oob_rows(int t) const {
    return oob_[static_cast<size_t>(t)];
  }

  int predict_row(int t, int64_t row, int override_feature = -1,
                  int32_t override_level = 0) const {
    // Gather the covariate row on the fly.
    const int q = static_cast<int>(covariates_.size());
    small_row_.resize(static_cast<size_t>(q));
    const int64_t n = static_cast<int64_t>(response_col_.size());
    for (int f = 0; f < q; ++f) {
      small_row_[static_cast<size_t>(f)] =
          columns_[static_cast<size_t>(f) * n + row];
    }
    return trees_[static_cast<size_t>(t)].predict(small_row_.data(),
                                                  override_feature,
                                                  override_level);
  }

  /// OOB accuracy of one tree, optionally with covariate `feature` replaced
  /// by a permutation of its OOB values (perm indexes into the OOB list).
  double oob_accuracy(int t, int feature = -1,
                      const std::vector<uint32_t>* perm = nullptr) const {
    const auto& rows = oob_[static_cast<size_t>(t)];
    if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
    const int64_t n = static_cast<int64_t>(response_col_.size());
    int64_t hits = 0;
    for (size_t i = 0; i < rows.size(); ++i) {
      int32_t override_level = 0;
      if (feature >= 0) {
        const int64_t src = rows[perm ? (*perm)[i] : static_cast<uint32_t>(i)];
        override_level = columns_[static_cast<size_t>(feature) * n + src];
      }
      const int pred = predict_row(t, rows[i], feature, override_level);
      if (pred == response_col_[static_cast<size_t>(rows[i])]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.size());
  }

 private:
  void grow(int64_t n) {
    const int64_t n_boot = std::max<int64_t>(
        1, static_cast<int64_t>(std::llround(cfg_.boot_frac * static_cast<double>(n))));
    trees_.reserve(static_cast<size_t>(cfg_.trees));
    oob_.resize(static_cast<size_t>(cfg_.trees));
    std::vector<uint8_t> inbag(static_cast<size_t>(n));
    std::vector<int64_t> indices;
    for (int t = 0; t < cfg_.trees; ++t) {
      std::mt19937_64 gen(rng::derive_seed(cfg_.seed, static_cast<uint64_t>(t)));
      std::fill(inbag.begin(), inbag.end(), 0);
      indices.clear();
      indices.reserve(static_cast<size_t>(n_boot));
      for (int64_t d = 0; d < n_boot; ++d) {
        const auto r = static_cast<int64_t>(
            rng::uniform_below(gen, static_cast<uint64_t>(n)));
        indices.push_back(r);
        inbag[static_cast<size_t>(r)] = 1;
      }
      auto& oob = oob_[static_cast<size_t>(t)];
      oob.clear();
      for (int64_t r = 0; r < n; ++r) {
        if (!inbag[static_cast<size_t>(r)]) oob.push_back(r);
      }
      if (cfg_.max_oob > 0 &&
          static_cast<int64_t>(oob.size()) > cfg_.max_oob) {
        rng::shuffle(oob, gen);
        oob.resize(static_cast<size_t>(cfg_.max_oob));
        std::sort(oob.begin(), oob.end());
      }
      std::vector<DecisionTree::Node> nodes;
      build_node(indices, 0, gen, nodes);
      trees_.emplace_back(std::move(nodes));
    }
  }

  int build_node(std::vector<int64_t>& rows, int depth, std::mt19937_64& gen,
                 std::vector<DecisionTree::Node>& nodes) {
    const int64_t n = static_cast<int64_t>(response_col_.size());
    const int idx = static_cast<int>(nodes.size());
    nodes.emplace_back();

    std::vector<int64_t> hist(static_cast<size_t>(k_response_), 0);
    for (int64_t r : rows) ++hist[static_cast<size_t>(response_col_[static_cast<size_t>(r)])];
    int majority = 0;
    for (int c = 1; c < k_response_; ++c) {
      if (hist[static_cast<size_t>(c)] > hist[static_cast<size_t>(majority)]) {
        majority = c;
      }
    }
    nodes[static_cast<size_t>(idx)].prediction = static_cast<int16_t>(majority);

    const auto total = static_cast<int64_t>(rows.size());
    const bool pure =
        hist[static_cast<size_t>(majority)] == total;
    if (pure || total < 2 * std::max(1, cfg_.min_leaf) ||
        (cfg_.max_depth >= 0 && depth >= cfg_.max_depth)) {
      return idx;
    }

    // Sample mtry distinct candidate features (partial Fisher-Yates).
    const int q = static_cast<int>(covariates_.size());
    feature_buf_.resize(static_cast<size_t>(q));
    for (int f = 0; f < q; ++f) feature_buf_[static_cast<size_t>(f)] = f;
    for (int i = 0; i < mtry_; ++i) {
      const auto j = static_cast<int>(
          rng::uniform_below(gen, static_cast<uint64_t>(q - i))) + i;
      std::swap(feature_buf_[static_cast<size_t>(i)], feature_buf_[static_cast<size_t>(j)]);
    }

    double parent_impurity = 1.0;
    for (int c = 0; c < k_response_; ++c) {
      const double frac = static_cast<double>(hist[static_cast<size_t>(c)]) /
                          static_cast<double>(total);
      parent_impurity -= frac * frac;
    }

    double best_gain = 0.0;
    int best_feature = -1;
    uint32_t best_mask = 0;
    std::vector<int64_t> cnt;
    for (int i = 0; i < mtry_; ++i) {
      const int f = feature_buf_[static_cast<size_t>(i)];
      const int k = feature_levels_[static_cast<size_t>(f)];
      cnt.assign(static_cast<size_t>(k) * k_response_, 0);
      std::vector<int64_t> level_tot(static_cast<size_t>(k), 0);
      const int32_t* col = columns_.data() + static_cast<size_t>(f) * n;
      for (int64_t r : rows) {
        const int32_t level = col[r];
        ++cnt[static_cast<size_t>(level) * k_response_ +
              response_col_[static_cast<size_t>(r)]];
        ++level_tot[static_cast<size_t>(level)];
      }
      // Candidate binary partitions: exact subset scan for <= 4 levels
      // (level 0 pinned left to skip complements), one-vs-rest otherwise.
      std::vector<uint32_t> masks;
      if (k <= 4) {
        for (uint32_t m = 1; m < (1u << k) - 1; ++m) {
          if (m & 1u) masks.push_back(m);
        }
      } else {
        for (int l = 0; l < k; ++l) masks.push_back(1u << l);
      }
      for (const uint32_t mask : masks) {
        int64_t n_left = 0;
        left_hist_.assign(static_cast<size_t>(k_response_), 0);
        for (int l = 0; l < k; ++l) {
          if ((mask >> l) & 1u) {
            n_left += level_tot[static_cast<size_t>(l)];
            for (int c = 0; c < k_response_; ++c) {
              left_hist_[static_cast<size_t>(c)] +=
                  cnt[static_cast<size_t>(l) * k_response_ + c];
            }
          }
        }
        const int64_t n_right = total - n_left;
        if (n_left < cfg_.min_leaf || n_right < cfg_.min_leaf) continue;
        double gini_left = 1.0, gini_right = 1.0;
        for (int c = 0; c < k_response_; ++c) {
          const double fl = static_cast<double>(left_hist_[static_cast<size_t>(c)]) /
                            static_cast<double>(n_left);
          const double fr =
              static_cast<double>(hist[static_cast<size_t>(c)] -
                                  left_hist_[static_cast<size_t>(c)]) /
              static_cast<double>(n_right);
          gini_left -= fl * fl;
          gini_right -= fr * fr;
        }
        const double child =
            (static_cast<double>(n_left) * gini_left +
             static_cast<double>(n_right) * gini_right) /
            static_cast<double>(total);
        const double gain = parent_impurity - child;
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_feature = f;
          best_mask = mask;
        }
      }
    }
    if (best_feature < 0) return idx;

    const int32_t* col = columns_.data() + static_cast<size_t>(best_feature) * n;
    std::vector<int64_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (int64_t r : rows) {
      if ((best_mask >> col[r]) & 1u) {
        left_rows.push_back(r);
      } else {
        right_rows.push_back(r);
      }
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes[static_cast<size_t>(idx)].feature = static_cast<int16_t>(best_feature);
    nodes[static_cast<size_t>(idx)].left_mask = best_mask;
    const int left = build_node(left_rows, depth + 1, gen, nodes);
    nodes[static_cast<size_t>(idx)].left = left;
    const int right = build_node(right_rows, depth + 1, gen, nodes);
    nodes[static_cast<size_t>(idx)].right = right;
    return idx;
  }

  ForestConfig cfg_;
  int response_;
  int p_;
  int mtry_ = 1;
  int k_response_ = 2;
  bool degenerate_ = false;
  std::vector<int> covariates_;
  std::vector<int> feature_levels_;
  std::vector<int32_t> columns_;  // column-major covariates
  std::vector<int32_t> response_col_;
  std::vector<DecisionTree> trees_;
  std::vector<std::vector<int64_t>> oob_;
  // scratch
  mutable std::vector<int32_t> small_row_;
  std::vector<int> feature_buf_;
  std::vector<int64_t> left_hist_;
};

inline RandomForest fit_forest(const Dataset& data, int response,
                               const ForestConfig& cfg) {
  return RandomForest(data, response, cfg);
}

/// Mean over trees of (OOB accuracy - OOB accuracy after permuting one
/// covariate within the out-of-bag rows); one entry per covariate of the
/// forest. Zero for degenerate responses.
inline std::vector<double> permutation_importance(const RandomForest& forest,
                                                  uint64_t seed) {
  const int q = static_cast<int>(forest.covariates().size());
  std::vector<double> imp(static_cast<size_t>(q), 0.0);
  if (forest.degenerate_response()) return imp;
  std::vector<int> used(static_cast<size_t>(q), 0);
  for (int t = 0; t < forest.tree_count(); ++t) {
    if (forest.oob_rows(t).empty()) continue;
    const double base = forest.oob_accuracy(t);
    for (int f = 0; f < q; ++f) {
      std::mt19937_64 gen(rng::derive_seed(
          seed, static_cast<uint64_t>(t) * static_cast<uint64_t>(q) +
                    static_cast<uint64_t>(f)));
      const auto perm = rng::permutation(forest.oob_rows(t).size(), gen);
      imp[static_cast<size_t>(f)] += base - forest.oob_accuracy(t, f, &perm);
      ++used[static_cast<size_t>(f)];
    }
  }
  for (int f = 0; f < q; ++f) {
    if (used[static_cast<size_t>(f)] > 0) {
      imp[static_cast<size_t>(f)] /= used[static_cast<size_t>(f)];
    }
  }
  return imp;
}

/// M, the within-row rank matrix R, and the symmetrized rank matrix.
/// Diagonals: M is NaN, R is 0, rtilde holds +infinity sentinels.
struct ImportanceMatrices {
  Eigen::MatrixXd m;
  Eigen::MatrixXd r;
  Eigen::MatrixXd rtilde;
};

/// Within-row ranks of the off-diagonal entries of `m` (1 = smallest);
/// ties broken by covariate index. Diagonal left at 0.
inline Eigen::MatrixXd rank_within_rows(const Eigen::MatrixXd& m) {
  const int p = static_cast<int>(m.rows());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    std::vector<int> cols;
    for (int j = 0; j < p; ++j) {
      if (j != i) cols.push_back(j);
    }
    std::sort(cols.begin(), cols.end(), [&](int a, int b) {
      if (m(i, a) != m(i, b)) return m(i, a) < m(i, b);
      return a < b;
    });
    for (size_t rank = 0; rank < cols.size(); ++rank) {
      r(i, cols[rank]) = static_cast<double>(rank + 1);
    }
  }
  return r;
}

/// p node-wise forest regressions filling M row by row; each response uses
/// seed base+i, so results are independent of execution order. `threads`
/// caps worker parallelism.
inline ImportanceMatrices importance_matrix(const Dataset& data,
                                            const ForestConfig& cfg,
                                            int threads = 1) {
  data.validate();
  const int p = data.schema.size();
  if (p < 2) throw ValidationError("importance: need at least 2 variables");
  ImportanceMatrices out;
  out.m = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  const auto run_response = [&](int i) {
    ForestConfig local = cfg;
    local.seed = cfg.seed + static_cast<uint64_t>(i);
    const RandomForest forest(data, i, local);
    const auto imp = permutation_importance(
        forest, rng::derive_seed(local.seed, 0x706d75746174ULL));
    const auto& covs = forest.covariates();
    for (size_t f = 0; f < covs.size(); ++f) {
      out.m(i, covs[f]) = imp[f];
    }
  };
  threads = std::max(1, threads);
  if (threads == 1 || p == 1) {
    for (int i = 0; i < p; ++i) run_response(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < std::min(threads, p); ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= p) break;
          run_response(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  out.r = rank_within_rows(out.m);
  out.rtilde = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::infinity());
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (i != j) out.rtilde(i, j) = std::max(out.r(i, j), out.r(j, i));
    }
  }
  return out;
}

}  // namespace loglin
