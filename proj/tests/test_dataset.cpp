#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "srcsel/csv.hpp"
#include "srcsel/dataset.hpp"
#include "support.hpp"

using namespace srcsel;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Csv, ParsesQuotedFieldsAndCrlf) {
  const auto t = csv::parse("\xEF\xBB\xBF" "a,b,c\r\n1,\"x, \"\"y\"\"\",3\r\n\r\n4,5,6\n");
  ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].fields[1], "x, \"y\"");
  EXPECT_EQ(t.rows[1].line, 4u);
}

TEST(Csv, NumberRoundTrip) {
  for (double v : {0.1, -3.25e-12, 1.0 / 3.0, 12345678.9, 0.0}) {
    EXPECT_EQ(*csv::parse_double(csv::format_double(v)), v);
  }
  EXPECT_FALSE(csv::parse_double("").has_value());
  EXPECT_FALSE(csv::parse_double("1.5x").has_value());
  EXPECT_EQ(*csv::parse_double(" 2.5 "), 2.5);
}

TEST(LoadCsv, ThreeRowFile) {
  test::TempDir dir("csv");
  test::write_file(dir / "d.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
  const Dataset d = load_csv((dir / "d.csv").string(), {.response_column = "y"});
  EXPECT_EQ(d.features.rows(), 3);
  EXPECT_EQ(d.features.cols(), 2);
  EXPECT_EQ(d.response.size(), 3);
  EXPECT_EQ(d.features(2, 1), 8.0);
  EXPECT_EQ(d.response(1), 6.0);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
}

TEST(LoadCsv, BlankCellNamesRowAndColumn) {
  test::TempDir dir("csv");
  test::write_file(dir / "d.csv", "a,b,y\n1,2,3\n4,,6\n");
  const std::string msg = error_of([&] { load_csv((dir / "d.csv").string(), {.response_column = "y"}); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
}

TEST(LoadCsv, DropIncompleteRowsWhenAsked) {
  test::TempDir dir("csv");
  test::write_file(dir / "d.csv", "a,b,y\n1,2,3\n4,,6\n7,8,9\n");
  LoadReport report;
  CsvOptions opts{.response_column = "y"};
  opts.drop_incomplete_rows = true;
  const Dataset d = load_csv((dir / "d.csv").string(), opts, &report);
  EXPECT_EQ(d.rows(), 2u);
  EXPECT_EQ(report.dropped_rows, 1u);
  EXPECT_EQ(d.origin, (std::vector<RowIndex>{0, 2}));
}

TEST(LoadCsv, Errors) {
  test::TempDir dir("csv");
  EXPECT_THROW(load_csv((dir / "missing.csv").string(), {.response_column = "y"}), Error);
  test::write_file(dir / "d.csv", "a,b,y\n1,2,3\n");
  EXPECT_THROW(load_csv((dir / "d.csv").string(), {.response_column = "nope"}), DataError);
  test::write_file(dir / "bad.csv", "a,b,y\n1,abc,3\n");
  const std::string msg = error_of([&] { load_csv((dir / "bad.csv").string(), {.response_column = "y"}); });
  EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
  test::write_file(dir / "inf.csv", "a,b,y\n1,inf,3\n");
  EXPECT_THROW(load_csv((dir / "inf.csv").string(), {.response_column = "y"}), DataError);
  test::write_file(dir / "short.csv", "a,b,y\n1,2\n");
  EXPECT_THROW(load_csv((dir / "short.csv").string(), {.response_column = "y"}), DataError);
}

TEST(LoadCsv, MetaColumnsExcludedFromFeaturesByDefault) {
  test::TempDir dir("csv");
  const std::string text =
      "longitude,latitude,rooms,income,value,ocean\n"
      "-122.2,37.9,5,8.3,450000,NEAR BAY\n"
      "-118.3,34.1,3,2.1,150000,INLAND\n";
  test::write_file(dir / "h.csv", text);
  CsvOptions opts{.response_column = "value", .meta_columns = {"longitude", "latitude"}, .ignore_columns = {"ocean"}};
  const Dataset d = load_csv((dir / "h.csv").string(), opts);
  // Header has 6 columns: response, two meta and one ignored leave 2 features.
  const auto header = csv::parse(text).header;
  EXPECT_EQ(d.cols(), header.size() - 4);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"rooms", "income"}));
  EXPECT_EQ(d.meta_numeric("latitude")[1], 34.1);

  opts.meta_as_features = true;
  const Dataset with = load_csv((dir / "h.csv").string(), opts);
  EXPECT_EQ(with.cols(), 4u);
  EXPECT_TRUE(with.has_meta("longitude"));
}

TEST(LoadCsv, TextMetaColumn) {
  test::TempDir dir("csv");
  test::write_file(dir / "f.csv", "f1,hospital,label\n0.5,A,1\n0.1,B,0\n");
  const Dataset d = load_csv((dir / "f.csv").string(), {.response_column = "label", .meta_columns = {"hospital"}});
  EXPECT_FALSE(d.meta_column("hospital").is_numeric);
  EXPECT_EQ(d.meta_column("hospital").text[1], "B");
}

TEST(LoadCsv, DeterministicAndRoundTrips) {
  test::TempDir dir("csv");
  test::write_file(dir / "d.csv", "a,b,z,y\n0.1,2,1,3\n4,5.5,2,6\n");
  CsvOptions opts{.response_column = "y", .meta_columns = {"z"}};
  const Dataset a = load_csv((dir / "d.csv").string(), opts);
  const Dataset b = load_csv((dir / "d.csv").string(), opts);
  EXPECT_TRUE(a == b);
  write_csv((dir / "out.csv").string(), a);
  const Dataset c = load_csv((dir / "out.csv").string(), opts);
  EXPECT_EQ(c.features, a.features);
  EXPECT_EQ(c.response, a.response);
  EXPECT_EQ(c.meta_numeric("z"), a.meta_numeric("z"));
}

TEST(Split, RangeOnZ) {
  std::vector<double> z(10);
  std::iota(z.begin(), z.end(), 1.0);
  const Dataset d = test::with_z(z);
  const auto s = split_target_source(d, SplitSpec::range("z", 8.0, std::numeric_limits<double>::infinity()));
  EXPECT_EQ(s.target_rows, (std::vector<RowIndex>{8, 9}));
  EXPECT_EQ(s.source.rows(), 8u);
  EXPECT_EQ(s.target.meta_numeric("z"), (std::vector<double>{9, 10}));
}

TEST(Split, BoxIsConjunctionOfRanges) {
  Dataset d = test::with_z({1, 2, 3, 4});
  d.meta.push_back(MetaColumn::from_numbers("lat", {10, 20, 30, 40}));
  SplitSpec spec = SplitSpec::range("z", 1.5, 4.0);
  spec.ranges.push_back({"lat", 15.0, 30.0});
  const auto s = split_target_source(d, spec);
  EXPECT_EQ(s.target_rows, (std::vector<RowIndex>{1, 2}));
}

TEST(Split, EqualityAndRowList) {
  Dataset d = test::with_z({1, 2, 3, 4});
  d.meta.push_back(MetaColumn::from_text("h", {"a", "b", "a", "c"}));
  EXPECT_EQ(split_target_source(d, SplitSpec::equality("h", "a")).target_rows, (std::vector<RowIndex>{0, 2}));
  EXPECT_EQ(split_target_source(d, SplitSpec::row_list({3, 1})).source_rows, (std::vector<RowIndex>{0, 2}));
  EXPECT_THROW(split_target_source(d, SplitSpec::row_list({7})), Error);
}

TEST(Split, Errors) {
  const Dataset d = test::with_z({1, 2, 3});
  const std::string empty_source =
      error_of([&] { split_target_source(d, SplitSpec::range("z", 0.0, 10.0)); });
  EXPECT_NE(empty_source.find("empty source"), std::string::npos) << empty_source;
  EXPECT_THROW(split_target_source(d, SplitSpec::range("z", 5.0, 10.0)), DataError);
  EXPECT_THROW(split_target_source(d, SplitSpec::range("nope", 0.0, 1.0)), DataError);
}

TEST(Split, DisjointCoverExhaustive) {
  // Every row-index subset of a 6-row dataset that is neither empty nor full.
  const Dataset d = test::with_z({1, 2, 3, 4, 5, 6});
  for (unsigned mask = 1; mask + 1 < (1u << 6); ++mask) {
    std::vector<RowIndex> rows;
    for (RowIndex i = 0; i < 6; ++i) {
      if (mask & (1u << i)) rows.push_back(i);
    }
    const auto s = split_target_source(d, SplitSpec::row_list(rows));
    std::set<RowIndex> all(s.target_rows.begin(), s.target_rows.end());
    for (auto r : s.source_rows) EXPECT_TRUE(all.insert(r).second);
    EXPECT_EQ(all.size(), 6u);
    EXPECT_EQ(s.target.rows() + s.source.rows(), 6u);
  }
  // Same for thresholds on z.
  for (double t = 1.0; t < 6.0; t += 0.5) {
    const auto s = split_target_source(d, SplitSpec::range("z", t, 100.0));
    EXPECT_EQ(s.target.rows() + s.source.rows(), 6u);
    for (double z : s.target.meta_numeric("z")) EXPECT_GT(z, t);
    for (double z : s.source.meta_numeric("z")) EXPECT_LE(z, t);
  }
}
