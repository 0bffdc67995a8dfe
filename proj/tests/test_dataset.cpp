#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "srcsel/dataset.hpp"
#include "srcsel/error.hpp"
#include "support.hpp"

using namespace srcsel;
using testing::TempDir;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected srcsel::Error");
  return ErrorCode::Io;
}

Source labelled(std::size_t n_pos, std::size_t n_neg) {
  const std::size_t n = n_pos + n_neg;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    y.push_back(i < n_pos ? 1 : 0);
  }
  return Source("s", x, y, std::vector<std::string>(n, "g"), {"x"});
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("load_csv parses a small clean file") {
  TempDir dir("load");
  testing::write_file(dir / "site_a.csv", "f1,f2,label,group\n1,2,0,a\n3,4,1,b\n5,6,1,a\n");
  const Source s = load_csv(dir / "site_a.csv", SchemaConfig{});
  CHECK(s.id() == "site_a");
  CHECK(s.rows() == 3);
  CHECK(s.dims() == 2);
  CHECK(s.labels() == std::vector<int>{0, 1, 1});
  CHECK(s.groups() == std::vector<std::string>{"a", "b", "a"});
  CHECK(s.features()(2, 1) == 6.0);
}

TEST_CASE("missing cell gains an indicator column under indicator_zero_fill") {
  TempDir dir("missing");
  testing::write_file(dir / "m.csv", "age,bp,label,group\n50,120,0,a\n,130,1,a\n70,,0,b\n");
  const Source s = load_csv(dir / "m.csv", SchemaConfig{});
  REQUIRE(s.dims() == 4);
  CHECK(s.feature_names() == std::vector<std::string>{"age", "age_missing", "bp", "bp_missing"});
  CHECK(s.features()(1, 0) == 0.0);
  CHECK(s.features()(1, 1) == 1.0);
  CHECK(s.features()(0, 1) == 0.0);
  CHECK(s.features()(2, 3) == 1.0);
  CHECK(s.rows() == 3);
  CHECK(s.features().allFinite());
}

TEST_CASE("loader contract errors") {
  TempDir dir("errors");
  testing::write_file(dir / "badlabel.csv", "f,label,group\n1,0,a\n2,2,a\n");
  testing::write_file(dir / "short.csv", "f,label,group\n1,0,a\n2,1\n");
  testing::write_file(dir / "nolabel.csv", "f,group\n1,a\n");
  testing::write_file(dir / "hole.csv", "f,label,group\n,0,a\n");
  testing::write_file(dir / "text.csv", "f,label,group\nabc,0,a\n");
  CHECK(code_of([&] { load_csv(dir / "badlabel.csv", {}); }) == ErrorCode::BadLabel);
  CHECK(code_of([&] { load_csv(dir / "short.csv", {}); }) == ErrorCode::MalformedCsv);
  CHECK(code_of([&] { load_csv(dir / "nolabel.csv", {}); }) == ErrorCode::MissingColumn);
  CHECK(code_of([&] { load_csv(dir / "text.csv", {}); }) == ErrorCode::MalformedCsv);
  SchemaConfig strict;
  strict.missing_policy = MissingPolicy::Reject;
  CHECK(code_of([&] { load_csv(dir / "hole.csv", strict); }) == ErrorCode::MissingValueRejected);
}

TEST_CASE("quoted fields, explicit feature list and absent group column") {
  TempDir dir("quoted");
  testing::write_file(dir / "q.csv", "\"a,b\",c,y\r\n1.5,9,1\r\n-2,8,0\r\n");
  SchemaConfig schema;
  schema.label_column = "y";
  schema.group_column = "";
  schema.feature_columns = {"a,b"};
  const Source s = load_csv(dir / "q.csv", schema);
  CHECK(s.dims() == 1);
  CHECK(s.feature_names().front() == "a,b");
  CHECK(s.features()(1, 0) == -2.0);
  CHECK(s.groups() == std::vector<std::string>{"all", "all"});
}

TEST_CASE("schema configuration file") {
  TempDir dir("schema");
  testing::write_file(dir / "schema.cfg",
                      "label_column = outcome\ngroup_column = site\nfeature_columns = a, b\nmissing_policy = reject\n");
  const SchemaConfig s = read_schema_config(dir / "schema.cfg");
  CHECK(s.label_column == "outcome");
  CHECK(s.group_column == "site");
  CHECK(s.feature_columns == std::vector<std::string>{"a", "b"});
  CHECK(s.missing_policy == MissingPolicy::Reject);

  testing::write_file(dir / "typo.cfg", "lable_column = y\n");
  CHECK(code_of([&] { read_schema_config(dir / "typo.cfg"); }) == ErrorCode::BadConfig);
  testing::write_file(dir / "overlap.cfg", "label_column = y\nfeature_columns = y,x\n");
  CHECK(code_of([&] { read_schema_config(dir / "overlap.cfg"); }) == ErrorCode::BadConfig);
}

TEST_CASE("write_csv round-trips through load_csv") {
  TempDir dir("roundtrip");
  const Source s = testing::gaussian_source("rt", 25, {0.3, -1.0, 2.0}, 5);
  write_csv(s, dir / "rt.csv");
  const Source back = load_csv(dir / "rt.csv", {});
  CHECK(back.features() == s.features());
  CHECK(back.labels() == s.labels());
  CHECK(back.groups() == s.groups());
  CHECK(back.feature_names() == s.feature_names());
}

TEST_CASE("Source enforces its invariants") {
  Eigen::MatrixXd x(2, 1);
  x << 1, 2;
  CHECK(code_of([&] { Source("s", x, {0, 2}, {"a", "a"}, {"f"}); }) == ErrorCode::BadLabel);
  CHECK(code_of([&] { Source("s", x, {0}, {"a", "a"}, {"f"}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { Source("s", x, {0, 1}, {"a", "a"}, {"f", "g"}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("stratified folds with 5 positives and 5 negatives") {
  const Source s = labelled(5, 5);
  const auto folds = stratified_folds(s, {5, 1, 3});
  REQUIRE(folds.size() == 5);
  for (const auto& f : folds) {
    REQUIRE(f.validation.size() == 2);
    int pos = 0;
    for (auto i : f.validation) pos += s.labels()[i];
    CHECK(pos == 1);
  }
}

TEST_CASE("fold counts and partition for 1500 rows, 5 folds, 5 repeats") {
  const Source s = labelled(450, 1050);
  const auto folds = stratified_folds(s, {5, 5, 11});
  REQUIRE(folds.size() == 25);
  for (std::size_t rep = 0; rep < 5; ++rep) {
    std::vector<int> seen(1500, 0);
    for (const auto& f : folds) {
      if (f.repeat != rep) continue;
      CHECK(f.validation.size() == 300);
      CHECK(f.train.size() == 1200);
      for (auto i : f.validation) ++seen[i];
      // train and validation are complementary
      std::set<std::size_t> all(f.train.begin(), f.train.end());
      all.insert(f.validation.begin(), f.validation.end());
      CHECK(all.size() == 1500);
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("fold determinism and per-fold stratification") {
  const Source s = testing::gaussian_source("g", 237, {0.4, -0.2}, 17);
  const SplitSpec spec{4, 3, 99};
  const auto a = stratified_folds(s, spec);
  const auto b = stratified_folds(s, spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].validation == b[i].validation);
    CHECK(a[i].train == b[i].train);
  }
  const double rate = s.positive_rate();
  for (const auto& f : a) {
    double pos = 0;
    for (auto i : f.validation) pos += s.labels()[i];
    const double n = static_cast<double>(f.validation.size());
    CHECK(std::abs(pos / n - rate) <= 1.0 / n + 1e-12);
  }
  const auto other = stratified_folds(s, {4, 3, 100});
  CHECK(other[0].validation != a[0].validation);
}

TEST_CASE("too few examples of a class") {
  CHECK(code_of([] { stratified_folds(labelled(3, 20), {5, 1, 1}); }) == ErrorCode::TooFewExamples);
}

TEST_CASE("subsample boundaries") {
  const Source s = testing::gaussian_source("g", 40, {0.0}, 1);
  const Source all = subsample(s, 40, 8);
  CHECK(all.id() == "g:sub");
  std::vector<double> a(s.features().data(), s.features().data() + 40);
  std::vector<double> b(all.features().data(), all.features().data() + 40);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
  CHECK(subsample(s, 0, 8).rows() == 0);
  CHECK(code_of([&] { subsample(s, 41, 8); }) == ErrorCode::NotEnoughRows);
  CHECK(subsample(s, 10, 8).features() == subsample(s, 10, 8).features());
}

TEST_CASE("subsample means stay within 3 standard errors of the full mean") {
  const Source s = testing::gaussian_source("g", 2000, {1.0, -3.0}, 21);
  const std::size_t n = 400;
  const double big_n = 2000.0;
  for (Eigen::Index c = 0; c < 2; ++c) {
    const auto col = s.features().col(c);
    const double mu = col.mean();
    const double sd = std::sqrt((col.array() - mu).square().sum() / (big_n - 1.0));
    const double se = sd / std::sqrt(static_cast<double>(n)) * std::sqrt(1.0 - n / big_n);
    int outside = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const double m = subsample(s, n, seed).features().col(c).mean();
      if (std::abs(m - mu) > 3.0 * se) ++outside;
    }
    CHECK(outside <= 2);
  }
}

TEST_CASE("concat identity, block order and schema checks") {
  const Source a = testing::gaussian_source("A", 1500, {0.0, 0.0}, 1);
  const Source b = testing::gaussian_source("B", 1500, {1.0, 1.0}, 2);
  const Source one[] = {a};
  const Source single = concat(one);
  CHECK(single.features() == a.features());
  CHECK(single.labels() == a.labels());

  const Source two[] = {a, b};
  const Source ab = concat(two);
  CHECK(ab.rows() == 3000);
  CHECK(ab.id() == "A+B");
  CHECK(std::equal(a.labels().begin(), a.labels().end(), ab.labels().begin()));
  CHECK(std::equal(b.labels().begin(), b.labels().end(), ab.labels().begin() + 1500));

  const Source c = testing::gaussian_source("C", 5, {0.0, 0.0, 0.0}, 3);
  const Source bad[] = {a, c};
  CHECK(code_of([&] { concat(bad); }) == ErrorCode::SchemaMismatch);
  CHECK(code_of([] { concat(std::span<const Source>{}); }) == ErrorCode::EmptySource);
}

TEST_CASE("concat is associative on row content") {
  const Source a = testing::gaussian_source("A", 7, {0.0}, 1);
  const Source b = testing::gaussian_source("B", 5, {1.0}, 2);
  const Source c = testing::gaussian_source("C", 9, {2.0}, 3);
  const Source bc[] = {b, c};
  const Source left[] = {a, concat(bc)};
  const Source ab[] = {a, b};
  const Source right[] = {concat(ab), c};
  const Source l = concat(left);
  const Source r = concat(right);
  CHECK(l.features() == r.features());
  CHECK(l.labels() == r.labels());
  CHECK(l.groups() == r.groups());
}

TEST_CASE("split_rows gives disjoint parts covering the source") {
  const Source s = labelled(30, 30);
  auto [first, rest] = split_rows(s, 20, 4);
  CHECK(first.rows() == 20);
  CHECK(rest.rows() == 40);
  std::set<double> seen;
  for (Eigen::Index i = 0; i < 20; ++i) seen.insert(first.features()(i, 0));
  for (Eigen::Index i = 0; i < 40; ++i) seen.insert(rest.features()(i, 0));
  CHECK(seen.size() == 60);
}

}  // TEST_SUITE
