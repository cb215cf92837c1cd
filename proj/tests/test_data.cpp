#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "neutral/registry.hpp"

using namespace neutral;

namespace {

std::string series(std::size_t len, double start) {
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += (i ? "," : "") + std::to_string(start + static_cast<double>(i));
  return s;
}

// One case line with `channels` identical-length channels.
std::string ts_case(std::size_t channels, std::size_t len, const std::string& label, double start = 1.0) {
  std::string s;
  for (std::size_t c = 0; c < channels; ++c) s += series(len, start + 100.0 * static_cast<double>(c)) + ":";
  return s + label + "\n";
}

std::string ts_header(std::size_t dims, const std::string& labels) {
  return "@problemName toy\n@timeStamps false\n@missing false\n@univariate false\n@dimensions " +
         std::to_string(dims) + "\n@equalLength false\n@classLabel true " + labels + "\n@data\n";
}

// Toy archive: `per_class` train and test cases for each of `classes`.
TimeSeriesDataset toy_dataset(std::size_t classes, std::size_t per_train, std::size_t per_test) {
  TimeSeriesDataset ds;
  ds.name = "toy";
  ds.channels = 2;
  ds.length = 4;
  for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back(std::to_string(c));
  std::size_t id = 0;
  for (bool test : {false, true})
    for (std::size_t c = 0; c < classes; ++c)
      for (std::size_t i = 0; i < (test ? per_test : per_train); ++i, ++id) {
        std::vector<double> v(8);
        for (std::size_t j = 0; j < 8; ++j) v[j] = static_cast<double>(c) + 0.01 * static_cast<double>(id + j);
        ds.samples.push_back(v);
        ds.labels.push_back(c);
        ds.test_partition.push_back(test);
      }
  return ds;
}

std::set<std::size_t> ids(const SampleSet& s) { return {s.ids.begin(), s.ids.end()}; }

void check_no_anomaly_in_train(const DatasetSplit& s) { EXPECT_EQ(s.train.anomalies(), 0u); }

}  // namespace

TEST(UeaParser, SadPadsToFiftyWithTrailingZeros) {
  std::stringstream in(ts_header(13, "1 2") + ts_case(13, 35, "1") + ts_case(13, 15, "2") + ts_case(13, 50, "2"));
  auto ds = parse_uea_ts(in, "SpokenArabicDigits");
  ASSERT_EQ(ds.size(), 2u);  // the length-15 case is dropped
  EXPECT_EQ(ds.sample_shape(), (Shape{13, 50}));
  const auto& s = ds.samples[0];
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[34], 35.0);
  for (std::size_t t = 35; t < 50; ++t) EXPECT_EQ(s[t], 0.0);
  EXPECT_EQ(s[50], 101.0);  // channel 1 starts at 101
  EXPECT_EQ(ds.labels[1], 1u);
}

TEST(UeaParser, SadLengthBounds) {
  std::stringstream in(ts_header(13, "a") + ts_case(13, 19, "a") + ts_case(13, 20, "a") + ts_case(13, 51, "a"));
  auto ds = parse_uea_ts(in, "sad");
  EXPECT_EQ(ds.size(), 1u);
}

TEST(UeaParser, CharacterTrajectoriesTruncatedTo182) {
  std::stringstream in(ts_header(3, "x") + ts_case(3, 200, "x"));
  auto ds = parse_uea_ts(in, "CharacterTrajectories");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.sample_shape(), (Shape{3, 182}));
  EXPECT_EQ(ds.samples[0][181], 182.0);
  EXPECT_EQ(ds.samples[0][182], 101.0);
}

TEST(UeaParser, TrailingMissingValuesArePadding) {
  std::stringstream in(ts_header(3, "x") + "1,2,NaN,NaN:3,4,?,?:5,6,NaN,NaN:x\n");
  auto ds = parse_uea_ts(in, "ct");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.samples[0][0], 1.0);
  EXPECT_EQ(ds.samples[0][2], 0.0);
}

TEST(UeaParser, RaggedChannelsReportLine) {
  std::stringstream in(ts_header(2, "a") + ts_case(2, 5, "a") + "1,2,3:a\n");
  try {
    parse_uea_ts(in, "toy");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 10u);
  }
}

TEST(UeaParser, MalformedHeaderReportsLine) {
  std::stringstream in("@problemName x\n@bogus 1\n@data\n");
  try {
    parse_uea_ts(in, "toy");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::stringstream no_data("@problemName x\n");
  EXPECT_THROW(parse_uea_ts(no_data, "toy"), ParseError);
  std::stringstream bad_value(ts_header(1, "a") + "1,zz,3:a\n");
  EXPECT_THROW(parse_uea_ts(bad_value, "toy"), ParseError);
  std::stringstream undeclared(ts_header(1, "a") + "1,2,3:b\n");
  EXPECT_THROW(parse_uea_ts(undeclared, "toy"), ParseError);
}

TEST(UeaParser, UnequalLengthsRejectedForOtherDatasets) {
  std::stringstream in(ts_header(1, "a") + ts_case(1, 5, "a") + ts_case(1, 6, "a"));
  EXPECT_THROW(parse_uea_ts(in, "toy"), ParseError);
}

TEST(UeaParser, KnownShapeMismatchFailsLoudly) {
  std::stringstream in(ts_header(20, "a") + ts_case(20, 51, "a"));
  EXPECT_THROW(parse_uea_ts(in, "NATOPS"), DimensionError);
  std::stringstream ok(ts_header(24, "a") + ts_case(24, 51, "a"));
  EXPECT_EQ(parse_uea_ts(ok, "NATOPS").sample_shape(), (Shape{24, 51}));
}

TEST(UeaParser, RoundTrip) {
  auto ds = toy_dataset(3, 2, 2);
  ds.samples[0][3] = 0.1234567890123456789;
  ds.samples[1][5] = -3.5e-12;
  std::stringstream train_out, test_out;
  write_uea_ts(train_out, ds, false);
  write_uea_ts(test_out, ds, true);
  auto back = merge_partitions(parse_uea_ts(train_out, "toy", false), parse_uea_ts(test_out, "toy", true));
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(back.class_names, ds.class_names);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.test_partition, ds.test_partition);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(back.samples[i], ds.samples[i]);
}

TEST(UeaParser, RoundTripAfterSadPadding) {
  std::stringstream in(ts_header(13, "1 2") + ts_case(13, 35, "1") + ts_case(13, 22, "2"));
  auto ds = parse_uea_ts(in, "sad");
  std::stringstream out;
  write_uea_ts(out, ds);
  auto back = parse_uea_ts(out, "sad");
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(back.samples[i], ds.samples[i]);
}

TEST(Tabular, ThyroidKeepsSixContinuousAttributes) {
  std::string raw;
  for (int cls : {1, 2, 3, 3}) {
    raw += "0.73";
    for (int j = 1; j < 16; ++j) raw += " 0";
    raw += " 0.0006 0.015 0.12 0.082 0.146 " + std::to_string(cls) + "\n";
  }
  std::stringstream in(raw);
  auto ds = parse_tabular(in, TabularKind::thyroid);
  EXPECT_EQ(ds.features, 6u);
  ASSERT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.rows[0], (std::vector<double>{0.73, 0.0006, 0.015, 0.12, 0.082, 0.146}));
  EXPECT_EQ(ds.labels, (std::vector<int>{1, 0, 0, 0}));  // hyperfunction is the anomaly
}

TEST(Tabular, ArrhythmiaDropsMissingValueColumns) {
  std::string row;
  for (int j = 0; j < 279; ++j) row += (j >= 10 && j <= 14) ? "?," : std::to_string(j) + ",";
  std::stringstream in(row + "3\n" + row + "1\n");
  auto ds = parse_tabular(in, TabularKind::arrhythmia);
  EXPECT_EQ(ds.features, 274u);
  ASSERT_EQ(ds.rows[0].size(), 274u);
  EXPECT_EQ(ds.rows[0][9], 9.0);
  EXPECT_EQ(ds.rows[0][10], 15.0);
  EXPECT_EQ(ds.labels, (std::vector<int>{1, 0}));
}

namespace {

std::string kdd_row(const std::string& proto, const std::string& service, const std::string& flag,
                    const std::string& label) {
  std::string r = "0," + proto + "," + service + "," + flag;
  for (int j = 4; j < 41; ++j) r += (j == 6 || j == 11 || j == 20 || j == 21) ? ",0" : "," + std::to_string(j);
  return r + "," + label + "\n";
}

}  // namespace

TEST(Tabular, KddOneHotExpansion) {
  std::stringstream in(kdd_row("tcp", "http", "SF", "smurf.") + kdd_row("udp", "private", "S0", "normal.") +
                       kdd_row("icmp", "ecr_i", "REJ", "neptune."));
  auto ds = parse_tabular(in, TabularKind::kdd);
  // 34 continuous + protocol 3 + observed services 3 + flag 11 + 4 binary x 2
  EXPECT_EQ(ds.features, 34u + 3 + 3 + 11 + 8);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 0}));  // attacks are the normal class
  double onehots = 0;
  for (std::size_t j = 34; j < ds.features; ++j) onehots += ds.rows[0][j];
  EXPECT_EQ(onehots, 7.0);
}

TEST(Tabular, KddUnknownLevelIsParseError) {
  std::stringstream in(kdd_row("tcp", "http", "SF", "smurf.") + kdd_row("sctp", "http", "SF", "normal."));
  try {
    parse_tabular(in, TabularKind::kdd);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Tabular, KddRevSubsamplesAttacks) {
  std::string raw;
  for (int i = 0; i < 10; ++i) raw += kdd_row("tcp", "http", "SF", "normal.");
  for (int i = 0; i < 40; ++i) raw += kdd_row("tcp", "http", "SF", "smurf.");
  std::stringstream in(raw);
  auto ds = parse_tabular(in, TabularKind::kddrev, 7);
  EXPECT_EQ(std::count(ds.labels.begin(), ds.labels.end(), 0), 10);
  EXPECT_EQ(std::count(ds.labels.begin(), ds.labels.end(), 1), 3);  // round(0.25 * 10)
}

TEST(Tabular, CsvWithHeader) {
  std::stringstream in("a,b,label\n1,2,0\n3,4,1\n");
  auto ds = parse_tabular(in, TabularKind::csv, 0, "toy");
  EXPECT_EQ(ds.features, 2u);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1}));
  std::stringstream bad("1,2,0\n3,1\n");
  EXPECT_THROW(parse_tabular(bad, TabularKind::csv), ParseError);
}

TEST(Split, OneVsRestTrainHasOnlyNormalClass) {
  auto ds = toy_dataset(2, 5, 10);
  auto s = split_one_vs_rest(ds, 0, 1);
  EXPECT_EQ(s.train.size(), 5u);
  for (auto id : s.train.ids) EXPECT_EQ(ds.labels[id], 0u);
  check_no_anomaly_in_train(s);
  // pool is the test partition: 20 samples, half anomalous
  EXPECT_EQ(s.validation.size() + s.test.size(), 20u);
  EXPECT_EQ(s.validation.size(), 2u);
  EXPECT_EQ(s.validation.anomalies() + s.test.anomalies(), 10u);
  EXPECT_EQ(s.validation.anomalies(), 1u);  // stratified
  for (std::size_t i = 0; i < s.test.size(); ++i) EXPECT_EQ(s.test.labels[i], ds.labels[s.test.ids[i]] != 0 ? 1 : 0);
}

TEST(Split, ValidationIsDisjointTenPercent) {
  for (std::size_t per_test : {3u, 7u, 13u}) {
    auto ds = toy_dataset(3, 4, per_test);
    auto s = split_one_vs_rest(ds, 1, 5);
    const std::size_t pool = 3 * per_test;
    EXPECT_EQ(s.validation.size(), static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(pool))));
    auto v = ids(s.validation), t = ids(s.test);
    for (auto i : v) EXPECT_FALSE(t.count(i));
    EXPECT_EQ(v.size() + t.size(), pool);
  }
}

TEST(Split, Deterministic) {
  auto ds = toy_dataset(3, 4, 20);
  auto a = split_one_vs_rest(ds, 2, 9), b = split_one_vs_rest(ds, 2, 9);
  EXPECT_EQ(a.validation.ids, b.validation.ids);
  EXPECT_EQ(a.test.ids, b.test.ids);
  EXPECT_EQ(a.train.values, b.train.values);
  auto c = split_one_vs_rest(ds, 2, 10);
  EXPECT_NE(a.validation.ids, c.validation.ids);
}

TEST(Split, AbsentClassIsConfigError) {
  auto ds = toy_dataset(2, 2, 2);
  EXPECT_THROW(split_one_vs_rest(ds, 5, 0), ConfigError);
}

TEST(Split, NVsRestIsCyclic) {
  auto ds = toy_dataset(10, 2, 2);
  auto s = split_n_vs_rest(ds, 8, 3, 0);
  EXPECT_EQ(s.descriptor.normal_classes, (std::vector<std::size_t>{8, 9, 0}));
  std::set<std::size_t> train_classes;
  for (auto id : s.train.ids) train_classes.insert(ds.labels[id]);
  EXPECT_EQ(train_classes, (std::set<std::size_t>{0, 8, 9}));
  check_no_anomaly_in_train(s);
}

TEST(Split, NVsRestWithNMinusOneLeavesOneAnomalousClass) {
  auto ds = toy_dataset(4, 2, 5);
  auto s = split_n_vs_rest(ds, 1, 3, 0);
  std::set<std::size_t> anomalous;
  for (const auto* part : {&s.validation, &s.test})
    for (std::size_t i = 0; i < part->size(); ++i)
      if (part->labels[i]) anomalous.insert(ds.labels[part->ids[i]]);
  EXPECT_EQ(anomalous, (std::set<std::size_t>{0}));
}

TEST(Split, NVsRestWithOneMatchesOneVsRest) {
  auto ds = toy_dataset(4, 3, 5);
  auto a = split_n_vs_rest(ds, 2, 1, 4), b = split_one_vs_rest(ds, 2, 4);
  EXPECT_EQ(a.train.ids, b.train.ids);
  EXPECT_EQ(a.validation.ids, b.validation.ids);
  EXPECT_EQ(a.test.ids, b.test.ids);
}

TEST(Split, NVsRestRejectsBadN) {
  auto ds = toy_dataset(4, 2, 2);
  EXPECT_THROW(split_n_vs_rest(ds, 0, 4, 0), ConfigError);
  EXPECT_THROW(split_n_vs_rest(ds, 0, 0, 0), ConfigError);
}

TEST(Split, TabularHalvesNormals) {
  TabularDataset ds{"t", 2};
  for (int i = 0; i < 120; ++i) {
    ds.rows.push_back({static_cast<double>(i), 1.0});
    ds.labels.push_back(i < 100 ? 0 : 1);
  }
  auto s = split_tabular(ds, 3);
  EXPECT_EQ(s.train.size(), 50u);
  check_no_anomaly_in_train(s);
  EXPECT_EQ(s.validation.size() + s.test.size(), 70u);
  EXPECT_EQ(s.validation.size(), 7u);
  EXPECT_EQ(s.validation.anomalies() + s.test.anomalies(), 20u);
  auto other = split_tabular(ds, 4);
  EXPECT_NE(ids(s.train), ids(other.train));
}

TEST(Standardize, TrainStatisticsOnly) {
  DatasetSplit s;
  s.train.sample_shape = s.validation.sample_shape = s.test.sample_shape = {2};
  for (double v : {1.0, 2.0, 3.0}) s.train.push_back(std::vector<double>{v, 5.0}, 0, 0);
  s.test.push_back(std::vector<double>{12.0, 5.0}, 1, 1);  // shifted by +10
  auto st = standardize(s);
  EXPECT_NEAR(st.mean[0], 2.0, 1e-15);
  double m = 0;
  for (std::size_t i = 0; i < 3; ++i) m += s.train.sample(i)[0];
  EXPECT_LT(std::abs(m / 3), 1e-10);
  const double sd = std::sqrt(2.0 / 3.0);
  EXPECT_NEAR(s.test.sample(0)[0], 10.0 / sd, 1e-12);
  // constant feature stays 0 everywhere
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(s.train.sample(i)[1], 0.0);
  EXPECT_EQ(s.test.sample(0)[1], 0.0);
}

TEST(Standardize, PerChannelForTimeSeries) {
  auto ds = toy_dataset(2, 3, 3);
  auto s = split_one_vs_rest(ds, 0, 0);
  auto st = standardize(s);
  ASSERT_EQ(st.mean.size(), 2u);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0;
    for (std::size_t i = 0; i < s.train.size(); ++i)
      for (std::size_t t = 0; t < 4; ++t) m += s.train.sample(i)[c * 4 + t];
    EXPECT_LT(std::abs(m), 1e-10);
  }
}

TEST(Registry, SaveLoadAndResolve) {
  const auto dir = std::filesystem::temp_directory_path() / "neutral_registry_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "toy.csv") << "1,2,0\n3,4,0\n5,6,1\n";
    Registry r(dir / "reg.json");
    r.add({"ToyTab", "csv", {"toy.csv"}});
    EXPECT_THROW(r.add({"bad", "uea", {"only_one.ts"}}), ConfigError);
    EXPECT_THROW(r.add({"bad", "parquet", {"x"}}), ConfigError);
    r.save();
  }
  Registry r(dir / "reg.json");
  auto e = r.find("toytab");
  ASSERT_TRUE(e.has_value());
  auto ds = load_dataset(*e);
  ASSERT_FALSE(is_time_series(ds));
  EXPECT_EQ(std::get<TabularDataset>(ds).size(), 3u);
  EXPECT_FALSE(r.find("missing").has_value());
  EXPECT_THROW(load_dataset(RegistryEntry{"x", "csv", {dir / "nope.csv"}}), ConfigError);
  std::filesystem::remove_all(dir);
}
