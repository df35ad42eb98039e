#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "loglin/errors.hpp"
#include "loglin/rng.hpp"

namespace loglin {

/// A cell: one level code per variable of the governing schema.
using Cell = std::vector<int>;

/// Default ceiling on the number of cells any dense table or design may
/// materialize. Operations that would exceed it throw CapacityError.
constexpr int64_t kDefaultMaxCells = int64_t{1} << 20;

/// The variable set: names plus per-variable level counts. Levels are dense
/// codes 0..k_v-1. Immutable after construction by convention.
struct VariableSchema {
  std::vector<std::string> names;
  std::vector<int> levels;

  int size() const { return static_cast<int>(names.size()); }

  void validate() const {
    if (names.size() != levels.size()) {
      throw ValidationError("schema: names/levels size mismatch");
    }
    std::unordered_set<std::string> seen;
    for (const auto& nm : names) {
      if (!seen.insert(nm).second) {
        throw ValidationError("schema: duplicate variable name '" + nm + "'");
      }
    }
    for (int k : levels) {
      if (k < 2) throw ValidationError("schema: level count must be >= 2");
    }
  }

  /// Total cell count m = prod k_v, guarded against overflow and max_cells.
  int64_t cell_count(int64_t max_cells = kDefaultMaxCells) const {
    int64_t m = 1;
    for (int k : levels) {
      if (m > max_cells / k) {
        throw CapacityError("schema: cell count exceeds limit of " +
                            std::to_string(max_cells) + " cells");
      }
      m *= k;
    }
    return m;
  }

  std::optional<int> index_of(const std::string& name) const {
    for (int v = 0; v < size(); ++v) {
      if (names[v] == name) return v;
    }
    return std::nullopt;
  }

  /// Sub-schema on the given variable indices, in the given order.
  VariableSchema restricted(std::span<const int> vars) const {
    VariableSchema sub;
    sub.names.reserve(vars.size());
    sub.levels.reserve(vars.size());
    for (int v : vars) {
      if (v < 0 || v >= size()) {
        throw ValidationError("schema: variable index out of range");
      }
      sub.names.push_back(names[v]);
      sub.levels.push_back(levels[v]);
    }
    return sub;
  }

  bool operator==(const VariableSchema&) const = default;
};

inline void check_cell(const VariableSchema& schema, const Cell& cell) {
  if (static_cast<int>(cell.size()) != schema.size()) {
    throw ValidationError("cell: wrong number of coordinates");
  }
  for (int v = 0; v < schema.size(); ++v) {
    if (cell[v] < 0 || cell[v] >= schema.levels[v]) {
      throw ValidationError("cell: coordinate out of range for variable '" +
                            schema.names[v] + "'");
    }
  }
}

/// Canonical linear index of a cell: mixed radix, last variable fastest.
inline int64_t cell_index(const VariableSchema& schema, const Cell& cell) {
  check_cell(schema, cell);
  int64_t idx = 0;
  for (int v = 0; v < schema.size(); ++v) {
    idx = idx * schema.levels[v] + cell[v];
  }
  return idx;
}

/// Inverse of cell_index.
inline Cell cell_of_index(const VariableSchema& schema, int64_t index) {
  Cell cell(schema.size());
  for (int v = schema.size() - 1; v >= 0; --v) {
    cell[v] = static_cast<int>(index % schema.levels[v]);
    index /= schema.levels[v];
  }
  if (index != 0) throw ValidationError("cell_of_index: index out of range");
  return cell;
}

/// Validates that `subset` holds strictly increasing in-range variable
/// indices of `schema`.
inline void check_subset(const VariableSchema& schema,
                         std::span<const int> subset) {
  int prev = -1;
  for (int v : subset) {
    if (v < 0 || v >= schema.size()) {
      throw ValidationError("subset: variable index out of range");
    }
    if (v <= prev) {
      throw ValidationError("subset: indices must be strictly increasing");
    }
    prev = v;
  }
}

/// Coordinates of `cell` restricted to `subset`, in schema order.
inline Cell marginal_cell(const VariableSchema& schema, const Cell& cell,
                          std::span<const int> subset) {
  check_cell(schema, cell);
  check_subset(schema, subset);
  Cell sub;
  sub.reserve(subset.size());
  for (int v : subset) sub.push_back(cell[v]);
  return sub;
}

/// Raw observations: one row (cell) per classified individual. Rows are the
/// primary storage; dense tables are only materialized on collapsed margins.
struct Dataset {
  VariableSchema schema;
  std::vector<int32_t> values;  // row-major, n x p

  int64_t n() const {
    return schema.size() == 0
               ? 0
               : static_cast<int64_t>(values.size()) / schema.size();
  }

  std::span<const int32_t> row(int64_t r) const {
    return {values.data() + r * schema.size(),
            static_cast<size_t>(schema.size())};
  }

  int32_t at(int64_t r, int v) const { return values[r * schema.size() + v]; }

  void append_row(const Cell& cell) {
    check_cell(schema, cell);
    values.insert(values.end(), cell.begin(), cell.end());
  }

  void validate() const {
    schema.validate();
    const int p = schema.size();
    if (p == 0) {
      if (!values.empty()) throw ValidationError("dataset: rows without schema");
      return;
    }
    if (values.size() % p != 0) {
      throw ValidationError("dataset: ragged row storage");
    }
    for (size_t i = 0; i < values.size(); ++i) {
      const int v = static_cast<int>(i % p);
      if (values[i] < 0 || values[i] >= schema.levels[v]) {
        throw ValidationError("dataset: level out of range for variable '" +
                              schema.names[v] + "'");
      }
    }
  }
};

/// Dense table of counts over a (small) sub-schema, canonical cell order.
struct ContingencyTable {
  VariableSchema schema;   // collapsed sub-schema
  std::vector<int> vars;   // indices into the source schema, increasing
  std::vector<int64_t> counts;

  int64_t total() const {
    int64_t t = 0;
    for (int64_t c : counts) t += c;
    return t;
  }
};

/// Counts of dataset rows on the margin `subset` (nonempty, increasing
/// indices). Throws CapacityError when the margin is too large to hold.
inline ContingencyTable tabulate(const Dataset& data,
                                 std::span<const int> subset,
                                 int64_t max_cells = kDefaultMaxCells) {
  check_subset(data.schema, subset);
  if (subset.empty()) throw ValidationError("tabulate: empty margin");
  ContingencyTable table;
  table.vars.assign(subset.begin(), subset.end());
  table.schema = data.schema.restricted(subset);
  const int64_t m = table.schema.cell_count(max_cells);
  table.counts.assign(static_cast<size_t>(m), 0);
  const int64_t n = data.n();
  for (int64_t r = 0; r < n; ++r) {
    const auto row = data.row(r);
    int64_t idx = 0;
    for (int v : subset) idx = idx * data.schema.levels[v] + row[v];
    ++table.counts[static_cast<size_t>(idx)];
  }
  return table;
}

/// Collapses an existing table onto a subset of its variables, given as
/// source-schema indices (must be a subset of table.vars).
inline ContingencyTable collapse(const ContingencyTable& table,
                                 std::span<const int> subset,
                                 int64_t max_cells = kDefaultMaxCells) {
  // Positions of `subset` within table.vars.
  std::vector<int> pos;
  pos.reserve(subset.size());
  for (int v : subset) {
    auto it = std::find(table.vars.begin(), table.vars.end(), v);
    if (it == table.vars.end()) {
      throw ValidationError("collapse: variable not in table margin");
    }
    pos.push_back(static_cast<int>(it - table.vars.begin()));
  }
  ContingencyTable out;
  out.vars.assign(subset.begin(), subset.end());
  out.schema = table.schema.restricted(pos);
  const int64_t m_out = out.schema.cell_count(max_cells);
  out.counts.assign(static_cast<size_t>(m_out), 0);
  const int64_t m_in = static_cast<int64_t>(table.counts.size());
  for (int64_t i = 0; i < m_in; ++i) {
    const Cell cell = cell_of_index(table.schema, i);
    int64_t idx = 0;
    for (size_t j = 0; j < pos.size(); ++j) {
      idx = idx * out.schema.levels[j] + cell[pos[j]];
    }
    out.counts[static_cast<size_t>(idx)] += table.counts[i];
  }
  return out;
}

namespace detail {

/// For each cell of `schema`, the index of its margin cell on the given
/// positions (positions index into schema variables, increasing).
inline std::vector<int64_t> margin_index_map(const VariableSchema& schema,
                                             const std::vector<int>& positions) {
  const int64_t m = schema.cell_count();
  std::vector<int64_t> map(static_cast<size_t>(m));
  for (int64_t i = 0; i < m; ++i) {
    const Cell cell = cell_of_index(schema, i);
    int64_t idx = 0;
    for (int pos : positions) idx = idx * schema.levels[pos] + cell[pos];
    map[static_cast<size_t>(i)] = idx;
  }
  return map;
}

/// Positions of `sub` (sorted) within `super` (sorted); throws when sub is
/// not contained in super.
inline std::vector<int> positions_in(const std::vector<int>& super,
                                     const std::vector<int>& sub) {
  std::vector<int> pos;
  pos.reserve(sub.size());
  size_t j = 0;
  for (size_t i = 0; i < super.size() && j < sub.size(); ++i) {
    if (super[i] == sub[j]) {
      pos.push_back(static_cast<int>(i));
      ++j;
    }
  }
  if (j != sub.size()) {
    throw ValidationError("positions_in: set is not contained in superset");
  }
  return pos;
}

}  // namespace detail

/// Draws multinomial counts over `prob` with n trials. Deterministic given
/// the seed; prob must be nonnegative and sum to 1 within 1e-12.
inline std::vector<int64_t> sample_multinomial(std::span<const double> prob,
                                               int64_t n, uint64_t seed) {
  if (n < 0) throw ValidationError("sample_multinomial: negative count");
  double sum = 0.0;
  for (double p : prob) {
    if (!(p >= 0.0)) {
      throw ValidationError("sample_multinomial: negative probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ValidationError("sample_multinomial: probabilities must sum to 1");
  }
  std::vector<double> cdf(prob.size());
  double acc = 0.0;
  for (size_t i = 0; i < prob.size(); ++i) {
    acc += prob[i];
    cdf[i] = acc;
  }
  if (!cdf.empty()) cdf.back() = 1.0;
  std::vector<int64_t> counts(prob.size(), 0);
  std::mt19937_64 gen(seed);
  for (int64_t t = 0; t < n; ++t) {
    const double u = rng::uniform01(gen);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    size_t idx = static_cast<size_t>(it - cdf.begin());
    if (idx >= counts.size()) idx = counts.size() - 1;
    ++counts[idx];
  }
  return counts;
}

}  // namespace loglin
