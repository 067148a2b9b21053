#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "civ/baselines/auc.hpp"
#include "civ/baselines/bench.hpp"
#include "civ/baselines/impute.hpp"
#include "civ/error.hpp"
#include "civ/rng.hpp"
#include "oracles.hpp"

using namespace civ;
using civtest::oracle_knn;
using civtest::oracle_mode;
using civtest::random_mixed_table;
using civtest::trapezoid_oracle;

namespace {

RawTable numeric_table(const std::vector<std::vector<Cell>>& feature_rows) {
  RawTable t;
  const std::size_t w = feature_rows.front().size();
  for (std::size_t c = 0; c < w; ++c) t.columns.push_back("f" + std::to_string(c));
  t.columns.push_back("y");
  t.kinds.assign(w + 1, ColumnKind::numeric);
  t.label = "y";
  double y = 0.0;
  for (auto r : feature_rows) {
    r.push_back(y++);
    t.rows.push_back(r);
  }
  return t;
}

void check_observed_untouched(const RawTable& in, const ImputedTable& out) {
  REQUIRE(out.table.rows.size() == in.rows.size());
  std::size_t filled = 0;
  for (std::size_t r = 0; r < in.rows.size(); ++r)
    for (std::size_t c = 0; c < in.columns.size(); ++c) {
      if (is_missing(in.rows[r][c])) {
        CHECK_FALSE(is_missing(out.table.rows[r][c]));
        CHECK(out.imputed[r][c] == 1);
        ++filled;
      } else {
        CHECK(out.table.rows[r][c] == in.rows[r][c]);
        CHECK(out.imputed[r][c] == 0);
      }
    }
  CHECK(out.imputed_cells() == filled);
  CHECK(out.table.missing_cells() == 0);
}

BenchConfig small_bench() {
  BenchConfig cfg;
  SynthSpec spec;
  spec.rows = 240;
  cfg.synthetic = spec;
  cfg.encoder.hidden_dims = {8, 4};
  cfg.encoder.embedding_dim = 4;
  cfg.pretrain.epochs = 3;
  cfg.train.epochs = 3;
  cfg.seeds = {0, 1, 2};
  return cfg;
}

}  // namespace

TEST_CASE("most frequent examples") {
  const RawTable t = numeric_table({{1.0}, {2.0}, {2.0}, {Cell{}}});
  const ImputedTable out = impute_most_frequent(t);
  CHECK(out.table.rows[3][0] == Cell{2.0});
  check_observed_untouched(t, out);

  const RawTable tie = numeric_table({{1.0}, {1.0}, {2.0}, {2.0}, {Cell{}}});
  CHECK(impute_most_frequent(tie).table.rows[4][0] == Cell{1.0});
  const RawTable tie_rev = numeric_table({{2.0}, {2.0}, {1.0}, {1.0}, {Cell{}}});
  CHECK(impute_most_frequent(tie_rev).table.rows[4][0] == Cell{1.0});

  RawTable cat = numeric_table({{std::string("z")}, {std::string("b")}, {Cell{}}, {std::string("z")}, {std::string("b")}});
  cat.kinds[0] = ColumnKind::categorical;
  CHECK(impute_most_frequent(cat).table.rows[2][0] == Cell{std::string("b")});
}

TEST_CASE("imputation of a complete table is the identity") {
  const RawTable t = numeric_table({{1.0, 3.0}, {2.0, 4.0}, {5.0, 6.0}});
  for (const ImputedTable& out : {impute_most_frequent(t), impute_knn(t, 2)}) {
    CHECK(out.table.rows == t.rows);
    CHECK(out.imputed_cells() == 0);
  }
}

TEST_CASE("fully missing column is an error naming it") {
  const RawTable t = numeric_table({{1.0, Cell{}}, {2.0, Cell{}}});
  for (int which = 0; which < 2; ++which) {
    try {
      if (which == 0)
        (void)impute_most_frequent(t);
      else
        (void)impute_knn(t, 1);
      FAIL("expected ImputationError");
    } catch (const ImputationError& e) {
      CHECK(std::string(e.what()).find("f1") != std::string::npos);
    }
  }
  CHECK_THROWS_AS(impute_knn(numeric_table({{1.0}}), 0), ConfigError);
}

TEST_CASE("label column is left alone") {
  RawTable t = numeric_table({{1.0}, {Cell{}}, {1.0}});
  t.rows[1][1] = Cell{};
  const ImputedTable out = impute_most_frequent(t);
  CHECK(is_missing(out.table.rows[1][1]));
  CHECK(out.table.rows[1][0] == Cell{1.0});
}

TEST_CASE("knn with k covering every row fills the column mean") {
  Rng rng(2);
  std::vector<std::vector<Cell>> rows;
  for (int r = 0; r < 12; ++r) rows.push_back({rng.uniform(), rng.uniform(0, 10)});
  rows[4][1] = Cell{};
  const RawTable t = numeric_table(rows);
  double mean = 0.0;
  for (int r = 0; r < 12; ++r)
    if (r != 4) mean += std::get<double>(t.rows[r][1]) / 11.0;
  const ImputedTable out = impute_knn(t, 12);
  CHECK(std::abs(std::get<double>(out.table.rows[4][1]) - mean) < 1e-12);
}

TEST_CASE("knn five-row toy") {
  // Row 4 misses f1; on f0 its neighbours are rows 3 (0.9) and 2 (0.6).
  const RawTable t = numeric_table({{0.0, 10.0}, {0.2, 20.0}, {0.6, 30.0}, {0.9, 40.0}, {1.0, Cell{}}});
  const ImputedTable out = impute_knn(t, 2);
  CHECK(std::get<double>(out.table.rows[4][1]) == doctest::Approx(35.0));
  check_observed_untouched(t, out);
}

TEST_CASE("knn without shared features falls back to the mode") {
  const RawTable t = numeric_table({{Cell{}, 5.0}, {1.0, Cell{}}, {2.0, Cell{}}, {3.0, 5.0}, {Cell{}, 7.0}});
  const ImputedTable out = impute_knn(t, 1);
  // Row 0 shares only f1 with rows 3 and 4; row 1 shares f0 with row 3 only.
  CHECK(out.table.rows[0][0] == Cell{3.0});
  CHECK(out.table.rows[1][1] == Cell{5.0});
  RawTable lonely = numeric_table({{Cell{}, 5.0}, {1.0, Cell{}}, {1.0, Cell{}}, {2.0, Cell{}}});
  const ImputedTable out2 = impute_knn(lonely, 1);
  CHECK(out2.table.rows[0][0] == Cell{1.0});
  CHECK(out2.table.rows[1][1] == Cell{5.0});
}

TEST_CASE("knn equals a brute-force oracle") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    const std::size_t rows = 3 + rng.below(48);
    const RawTable t = random_mixed_table(rng, rows, 1 + rng.below(4), rng.below(3), rng.uniform(0.05, 0.5));
    const std::size_t k = 1 + rng.below(7);
    const ImputedTable out = impute_knn(t, k);
    check_observed_untouched(t, out);
    const RawTable expected = oracle_knn(t, k);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < t.columns.size(); ++c) {
        const Cell& a = out.table.rows[r][c];
        const Cell& b = expected.rows[r][c];
        if (const double* x = std::get_if<double>(&a)) {
          REQUIRE(std::holds_alternative<double>(b));
          CHECK(std::abs(*x - std::get<double>(b)) < 1e-12);
        } else {
          CHECK(a == b);
        }
      }
  }
}

TEST_CASE("most frequent equals a counting oracle") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(500 + seed);
    const RawTable t = random_mixed_table(rng, 5 + rng.below(40), 2, 2, 0.3);
    const ImputedTable out = impute_most_frequent(t);
    check_observed_untouched(t, out);
    for (std::size_t c = 0; c + 1 < t.columns.size(); ++c) {
      std::vector<Cell> observed;
      for (const auto& row : t.rows)
        if (!is_missing(row[c])) observed.push_back(row[c]);
      const Cell mode = oracle_mode(observed);
      for (std::size_t r = 0; r < t.rows.size(); ++r)
        if (is_missing(t.rows[r][c])) CHECK(out.table.rows[r][c] == mode);
    }
  }
}

TEST_CASE("auc rank statistic equals the trapezoidal integral") {
  CHECK(auc_rank(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == doctest::Approx(0.75));
  CHECK(auc_rank(std::vector<double>{1, 2}, std::vector<int>{0, 1}) == 1.0);
  CHECK(auc_rank(std::vector<double>{2, 1}, std::vector<int>{0, 1}) == 0.0);
  CHECK(auc_rank(std::vector<double>{1, 1, 1}, std::vector<int>{0, 1, 1}) == 0.5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(8)) / 8.0;
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    const double r = auc_rank(s, y);
    CHECK(std::abs(r - auc_trapezoid(s, y)) < 1e-12);
    CHECK(std::abs(r - trapezoid_oracle(s, y)) < 1e-12);
  }
  CHECK_THROWS_AS(auc_rank(std::vector<double>{1, 2}, std::vector<int>{1, 1}), ConfigError);
  CHECK_THROWS_AS(auc_trapezoid(std::vector<double>{1}, std::vector<int>{1, 0}), ShapeError);
}

TEST_CASE("bench report structure and determinism") {
  const BenchConfig cfg = small_bench();
  const BenchReport a = run_bench(cfg);
  CHECK(a.metric == "mse");
  REQUIRE(a.seeds.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) {
    const SeedResult& r = a.seeds[s];
    CHECK(r.seed == cfg.seeds[s]);
    REQUIRE(r.methods.size() == 4);
    CHECK_FALSE(r.test_rows.empty());
    for (std::size_t m = 0; m < 4; ++m) {
      CHECK(r.methods[m].method == kBenchMethods[m]);
      CHECK(r.methods[m].failure.empty());
      REQUIRE(r.methods[m].mse.has_value());
      CHECK(std::isfinite(*r.methods[m].mse));
      CHECK(*r.methods[m].mse >= 0.0);
    }
  }
  REQUIRE(a.summary.size() == 4);
  for (const MethodSummary& m : a.summary) {
    CHECK(m.runs == 3);
    CHECK(m.mean.has_value());
    CHECK(m.stdev.has_value());
  }

  const BenchReport b = run_bench(cfg);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(a.seeds[s].test_rows == b.seeds[s].test_rows);
    for (std::size_t m = 0; m < 4; ++m) CHECK(a.seeds[s].methods[m].mse == b.seeds[s].methods[m].mse);
  }
  const Json j = to_json(a);
  CHECK(j["seeds"].size() == 3);
  CHECK(j["seeds"][0]["methods"].size() == 4);
  const std::string text = bench_text(a);
  for (const auto& m : kBenchMethods) CHECK(text.find(m) != std::string::npos);
}

TEST_CASE("bench on a classification table reports accuracy and auc") {
  BenchConfig cfg = small_bench();
  cfg.synthetic->task = Task::classification;
  cfg.seeds = {4};
  const BenchReport r = run_bench(cfg);
  CHECK(r.metric == "acc");
  REQUIRE(r.seeds.size() == 1);
  for (const MethodResult& m : r.seeds[0].methods) {
    CHECK(m.failure.empty());
    REQUIRE(m.acc.has_value());
    CHECK(*m.acc >= 0.0);
    CHECK(*m.acc <= 1.0);
    if (m.auc) CHECK(*m.auc >= 0.0);
  }
}

TEST_CASE("bench configuration errors") {
  BenchConfig none = small_bench();
  none.synthetic.reset();
  CHECK_THROWS_AS(run_bench(none), ConfigError);
  BenchConfig no_seeds = small_bench();
  no_seeds.seeds.clear();
  CHECK_THROWS_AS(run_bench(no_seeds), ConfigError);
}

TEST_CASE("diverging training yields a partial report") {
  BenchConfig cfg = small_bench();
  cfg.seeds = {0};
  cfg.train.learning_rate = 1e300;
  const BenchReport r = run_bench(cfg);
  REQUIRE(r.seeds.size() == 1);
  const auto& methods = r.seeds[0].methods;
  CHECK_FALSE(methods[2].failure.empty());
  CHECK_FALSE(methods[3].failure.empty());
  CHECK_FALSE(r.summary.empty());
}
