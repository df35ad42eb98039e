#include "loglin/schema.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using namespace loglin;

VariableSchema make_schema(std::vector<int> levels) {
  VariableSchema s;
  for (size_t i = 0; i < levels.size(); ++i) {
    s.names.push_back("v" + std::to_string(i + 1));
  }
  s.levels = std::move(levels);
  return s;
}

TEST(CellIndex, MixedRadixExamples) {
  EXPECT_EQ(cell_index(make_schema({2, 2}), {0, 1}), 1);
  EXPECT_EQ(cell_index(make_schema({2, 2}), {1, 1}), 3);
  EXPECT_EQ(cell_index(make_schema({2, 3}), {1, 2}), 5);
}

TEST(CellIndex, OutOfRangeCoordinateThrows) {
  EXPECT_THROW(cell_index(make_schema({2, 2}), {0, 2}), ValidationError);
  EXPECT_THROW(cell_index(make_schema({2, 2}), {-1, 0}), ValidationError);
  EXPECT_THROW(cell_index(make_schema({2, 2}), {0}), ValidationError);
}

TEST(CellIndex, RoundTripExhaustive) {
  const std::vector<std::vector<int>> schemas = {
      {2, 2}, {3, 2, 4}, {2, 2, 2, 2, 2}, {4, 3, 2, 3, 2}, {5}};
  for (const auto& levels : schemas) {
    const auto schema = make_schema(levels);
    const int64_t m = schema.cell_count();
    for (int64_t i = 0; i < m; ++i) {
      const Cell c = cell_of_index(schema, i);
      EXPECT_EQ(cell_index(schema, c), i);
    }
  }
}

TEST(MarginalCell, Examples) {
  const auto schema = make_schema({2, 2});
  // Margin along the second variable of cell (0,1).
  const std::vector<int> second = {1};
  EXPECT_EQ(marginal_cell(schema, {0, 1}, second), Cell{1});
  const std::vector<int> all = {0, 1};
  EXPECT_EQ(marginal_cell(schema, {0, 1}, all), (Cell{0, 1}));
  EXPECT_EQ(marginal_cell(schema, {0, 1}, std::vector<int>{}), Cell{});
}

TEST(MarginalCell, BadSubsetThrows) {
  const auto schema = make_schema({2, 2});
  EXPECT_THROW(marginal_cell(schema, {0, 1}, std::vector<int>{2}),
               ValidationError);
  EXPECT_THROW(marginal_cell(schema, {0, 1}, std::vector<int>{1, 1}),
               ValidationError);
}

Dataset make_dataset(std::vector<int> levels, std::vector<Cell> rows) {
  Dataset d;
  d.schema = make_schema(std::move(levels));
  for (const auto& r : rows) d.append_row(r);
  return d;
}

TEST(Tabulate, HandCounts) {
  const auto data = make_dataset({2, 2}, {{0, 0}, {0, 1}, {0, 1}});
  const auto t = tabulate(data, std::vector<int>{1});
  ASSERT_EQ(t.counts.size(), 2u);
  EXPECT_EQ(t.counts[0], 1);
  EXPECT_EQ(t.counts[1], 2);
}

TEST(Tabulate, FullSchemaIsRawCounts) {
  const auto data =
      make_dataset({2, 2}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 1}});
  const auto t = tabulate(data, std::vector<int>{0, 1});
  EXPECT_EQ(t.counts, (std::vector<int64_t>{1, 1, 1, 2}));
  EXPECT_EQ(t.total(), data.n());
}

TEST(Tabulate, EmptyMarginThrows) {
  const auto data = make_dataset({2, 2}, {{0, 0}});
  EXPECT_THROW(tabulate(data, std::vector<int>{}), ValidationError);
}

TEST(Tabulate, CapacityError) {
  const auto data = make_dataset({9, 9, 9, 9, 9}, {{0, 0, 0, 0, 0}});
  EXPECT_THROW(tabulate(data, std::vector<int>{0, 1, 2, 3, 4}, 1000),
               CapacityError);
}

Dataset random_dataset(std::vector<int> levels, int64_t n, uint64_t seed) {
  Dataset d;
  d.schema = make_schema(std::move(levels));
  std::mt19937_64 gen(seed);
  for (int64_t i = 0; i < n; ++i) {
    Cell c(d.schema.size());
    for (int v = 0; v < d.schema.size(); ++v) {
      c[v] = static_cast<int>(rng::uniform_below(gen, d.schema.levels[v]));
    }
    d.append_row(c);
  }
  return d;
}

TEST(Tabulate, CommutesWithCollapsing) {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto data = random_dataset({3, 2, 4, 2, 3}, 200, 1000 + rep);
    // Random a strictly inside random b.
    std::vector<int> b;
    for (int v = 0; v < 5; ++v) {
      if (rng::uniform01(gen) < 0.7) b.push_back(v);
    }
    if (b.size() < 2) b = {0, 2, 4};
    std::vector<int> a;
    for (int v : b) {
      if (rng::uniform01(gen) < 0.5) a.push_back(v);
    }
    if (a.empty() || a.size() == b.size()) a.assign(1, b.front());
    const auto direct = tabulate(data, a);
    const auto via_b = collapse(tabulate(data, b), a);
    EXPECT_EQ(direct.counts, via_b.counts);
    EXPECT_EQ(direct.schema, via_b.schema);
    EXPECT_EQ(direct.total(), data.n());
  }
}

TEST(SampleMultinomial, EmptySample) {
  const std::vector<double> p = {0.25, 0.25, 0.25, 0.25};
  EXPECT_EQ(sample_multinomial(p, 0, 1),
            (std::vector<int64_t>{0, 0, 0, 0}));
}

TEST(SampleMultinomial, DegenerateDistribution) {
  const std::vector<double> p = {1.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(sample_multinomial(p, 7, 42),
            (std::vector<int64_t>{7, 0, 0, 0}));
}

TEST(SampleMultinomial, RejectsUnnormalized) {
  EXPECT_THROW(sample_multinomial(std::vector<double>{0.5, 0.6}, 3, 1),
               ValidationError);
  EXPECT_THROW(sample_multinomial(std::vector<double>{1.2, -0.2}, 3, 1),
               ValidationError);
}

TEST(SampleMultinomial, SeedReproducibility) {
  const std::vector<double> p = {0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(sample_multinomial(p, 5000, 99), sample_multinomial(p, 5000, 99));
  EXPECT_NE(sample_multinomial(p, 5000, 99), sample_multinomial(p, 5000, 100));
}

TEST(SampleMultinomial, UniformChiSquare) {
  // chi^2(7) 0.999 quantile = 24.3219.
  const std::vector<double> p(8, 0.125);
  const int64_t n = 100000;
  const auto counts = sample_multinomial(p, n, 2024);
  double stat = 0.0;
  for (int64_t c : counts) {
    const double expected = static_cast<double>(n) / 8.0;
    stat += (c - expected) * (c - expected) / expected;
  }
  EXPECT_LT(stat, 24.3219);
}

TEST(Schema, Validation) {
  VariableSchema s = make_schema({2, 2});
  EXPECT_NO_THROW(s.validate());
  s.levels[1] = 1;
  EXPECT_THROW(s.validate(), ValidationError);
  s = make_schema({2, 2});
  s.names[1] = s.names[0];
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Schema, CellCountOverflowGuard) {
  EXPECT_THROW(make_schema(std::vector<int>(50, 9)).cell_count(),
               CapacityError);
  EXPECT_EQ(make_schema(std::vector<int>(20, 2)).cell_count(), 1 << 20);
  EXPECT_THROW(make_schema(std::vector<int>(21, 2)).cell_count(),
               CapacityError);
}

}  // namespace
