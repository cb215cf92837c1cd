#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "neutral/nn.hpp"

namespace neutral {

// Multivariate series with one class label each. Samples are flat C*L
// arrays, channel-major. `test_partition` records which archive split a
// case came from.
struct TimeSeriesDataset {
  std::string name;
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<std::vector<double>> samples;
  std::vector<std::size_t> labels;
  std::vector<bool> test_partition;
  std::vector<std::string> class_names;

  std::size_t size() const { return samples.size(); }
  std::size_t num_classes() const { return class_names.size(); }
  Shape sample_shape() const { return {channels, length}; }
};

// Rows with binary labels: 1 = anomaly, 0 = normal.
struct TabularDataset {
  std::string name;
  std::size_t features = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;

  std::size_t size() const { return rows.size(); }
};

// A flat block of equally shaped samples with binary anomaly labels.
struct SampleSet {
  Shape sample_shape;
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::size_t> ids;  // index into the source dataset

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::size_t sample_size() const { return numel(sample_shape); }
  std::size_t anomalies() const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1)); }

  std::span<const double> sample(std::size_t i) const {
    return std::span<const double>(values).subspan(i * sample_size(), sample_size());
  }

  void push_back(std::span<const double> x, int label, std::size_t id) {
    if (x.size() != sample_size()) throw DimensionError("sample has " + std::to_string(x.size()) + " values, expected " +
                                                        std::to_string(sample_size()));
    values.insert(values.end(), x.begin(), x.end());
    labels.push_back(label);
    ids.push_back(id);
  }

  // [n x sample_shape] tensor of the listed samples.
  Tensor batch(std::span<const std::size_t> indices) const {
    std::vector<double> v;
    v.reserve(indices.size() * sample_size());
    for (auto i : indices) {
      auto s = sample(i);
      v.insert(v.end(), s.begin(), s.end());
    }
    Shape shape{indices.size()};
    shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
    return Tensor(std::move(shape), std::move(v));
  }

  Tensor all() const {
    std::vector<std::size_t> idx(size());
    std::iota(idx.begin(), idx.end(), 0);
    return batch(idx);
  }
};

struct SplitDescriptor {
  std::string dataset;
  std::string protocol;  // one_vs_rest, n_vs_rest, tabular
  std::vector<std::size_t> normal_classes;
  std::uint64_t seed = 0;
};

struct DatasetSplit {
  SampleSet train;
  SampleSet validation;
  SampleSet test;
  SplitDescriptor descriptor;
};

// Known per-dataset sample shapes after preprocessing.
struct KnownShape {
  const char* key;
  std::size_t channels;
  std::size_t length;
};

inline constexpr KnownShape kKnownTimeSeries[] = {
    {"sad", 13, 50}, {"natops", 24, 51}, {"ct", 3, 182}, {"epilepsy", 3, 203}, {"rs", 6, 30}};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    out.emplace_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* b = t.data();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, t.data() + t.size(), out);
  return ec == std::errc() && p == t.data() + t.size();
}

inline double to_double(std::string_view s, std::size_t line, const char* what) {
  double v = 0.0;
  if (!parse_double(s, v)) throw ParseError(std::string("bad ") + what + " value '" + trim(s) + "'", line);
  return v;
}

inline bool is_missing(std::string_view s) {
  const auto t = lower(trim(s));
  return t == "?" || t == "nan";
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return in;
}

inline const KnownShape* known_shape(std::string_view name) {
  const auto key = canonical_dataset_name(name);
  for (const auto& k : kKnownTimeSeries)
    if (key == k.key) return &k;
  return nullptr;
}

}  // namespace detail

// Parses one UEA `.ts` file. Header lines start with `@`, each case is one
// line of `:`-separated channels of comma-separated values with the class
// label last. Trailing missing values (`?` or NaN) are treated as padding
// of a shorter series.
//
// Dataset rules: SAD keeps series of length 20..50 and pads them with
// trailing zeros to 50; CT truncates to 182 (shorter cases are zero padded);
// every other dataset must have one common length.
inline TimeSeriesDataset parse_uea_ts(std::istream& in, std::string_view dataset_name, bool test_partition = false) {
  TimeSeriesDataset ds;
  ds.name = std::string(dataset_name);
  const std::string key = canonical_dataset_name(dataset_name);
  std::size_t declared_dims = 0;
  bool has_labels = true, in_data = false;
  std::string line;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!in_data) {
      if (t[0] != '@') throw ParseError("expected a header line starting with '@'", lineno);
      auto words = detail::split_ws(t);
      const std::string tag = detail::lower(words[0]);
      if (tag == "@data") {
        in_data = true;
      } else if (tag == "@classlabel") {
        if (words.size() < 2) throw ParseError("@classLabel needs true/false", lineno);
        has_labels = detail::lower(words[1]) == "true";
        if (has_labels && words.size() < 3) throw ParseError("@classLabel true lists no classes", lineno);
        for (std::size_t i = 2; i < words.size(); ++i) ds.class_names.push_back(words[i]);
      } else if (tag == "@dimensions") {
        if (words.size() != 2) throw ParseError("@dimensions needs one value", lineno);
        declared_dims = static_cast<std::size_t>(detail::to_double(words[1], lineno, "@dimensions"));
        if (declared_dims == 0) throw ParseError("@dimensions must be positive", lineno);
      } else if (tag == "@problemname" || tag == "@timestamps" || tag == "@missing" || tag == "@univariate" ||
                 tag == "@equallength" || tag == "@serieslength" || tag == "@targetlabel") {
        if (words.size() < 2) throw ParseError(words[0] + " needs a value", lineno);
      } else {
        throw ParseError("unknown header " + words[0], lineno);
      }
      continue;
    }

    auto fields = detail::split(t, ':');
    std::string label;
    if (has_labels) {
      if (fields.size() < 2) throw ParseError("case has no class label", lineno);
      label = detail::trim(fields.back());
      fields.pop_back();
    }
    if (declared_dims && fields.size() != declared_dims)
      throw ParseError("case has " + std::to_string(fields.size()) + " channels, header declares " +
                           std::to_string(declared_dims),
                       lineno);
    if (ds.channels == 0) ds.channels = fields.size();
    if (fields.size() != ds.channels)
      throw ParseError("case has " + std::to_string(fields.size()) + " channels, earlier cases have " +
                           std::to_string(ds.channels),
                       lineno);

    std::vector<std::vector<double>> channels;
    std::size_t len = 0;
    for (const auto& f : fields) {
      auto vals = detail::split(f, ',');
      while (!vals.empty() && detail::is_missing(vals.back())) vals.pop_back();
      std::vector<double> ch;
      ch.reserve(vals.size());
      for (const auto& v : vals) {
        if (detail::is_missing(v)) throw ParseError("missing value inside a series", lineno);
        ch.push_back(detail::to_double(v, lineno, "series"));
      }
      if (!channels.empty() && ch.size() != len) throw ParseError("channels of one case differ in length", lineno);
      len = ch.size();
      channels.push_back(std::move(ch));
    }
    if (len == 0) throw ParseError("empty series", lineno);

    std::size_t target = len;
    if (key == "sad") {
      if (len < 20 || len > 50) continue;
      target = 50;
    } else if (key == "ct") {
      target = 182;
    }
    std::vector<double> flat(ds.channels * target, 0.0);
    for (std::size_t c = 0; c < ds.channels; ++c)
      for (std::size_t i = 0; i < std::min(len, target); ++i) flat[c * target + i] = channels[c][i];

    if (ds.length == 0) ds.length = target;
    if (target != ds.length)
      throw ParseError("series length " + std::to_string(target) + " differs from " + std::to_string(ds.length) +
                           " (only SAD and CT are length-normalised)",
                       lineno);

    std::size_t cls = 0;
    if (has_labels) {
      auto it = std::find(ds.class_names.begin(), ds.class_names.end(), label);
      if (it == ds.class_names.end()) throw ParseError("class label '" + label + "' not declared in header", lineno);
      cls = static_cast<std::size_t>(it - ds.class_names.begin());
    }
    ds.samples.push_back(std::move(flat));
    ds.labels.push_back(cls);
    ds.test_partition.push_back(test_partition);
  }
  if (!in_data) throw ParseError("no @data section", lineno);
  if (!has_labels) ds.class_names = {"0"};

  if (const auto* k = detail::known_shape(dataset_name); k && !ds.samples.empty())
    if (ds.channels != k->channels || ds.length != k->length)
      throw DimensionError(ds.name + " should be " + std::to_string(k->channels) + "x" + std::to_string(k->length) +
                           " after preprocessing, got " + std::to_string(ds.channels) + "x" +
                           std::to_string(ds.length));
  return ds;
}

inline TimeSeriesDataset load_uea_ts(const std::filesystem::path& path, std::string_view dataset_name,
                                     bool test_partition = false) {
  auto in = detail::open_input(path);
  try {
    return parse_uea_ts(in, dataset_name, test_partition);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// Concatenates an archive's train and test files. Class indices follow the
// train file's header order; labels new in the test file are appended.
inline TimeSeriesDataset merge_partitions(TimeSeriesDataset train, const TimeSeriesDataset& test) {
  if (train.samples.empty()) return test;
  if (!test.samples.empty() && (train.channels != test.channels || train.length != test.length))
    throw DimensionError("train and test partitions differ in shape");
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& name = test.class_names[test.labels[i]];
    auto it = std::find(train.class_names.begin(), train.class_names.end(), name);
    if (it == train.class_names.end()) {
      train.class_names.push_back(name);
      it = train.class_names.end() - 1;
    }
    train.samples.push_back(test.samples[i]);
    train.labels.push_back(static_cast<std::size_t>(it - train.class_names.begin()));
    train.test_partition.push_back(true);
  }
  for (const auto& name : test.class_names)
    if (std::find(train.class_names.begin(), train.class_names.end(), name) == train.class_names.end())
      train.class_names.push_back(name);
  return train;
}

inline TimeSeriesDataset load_uea(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                                  std::string_view dataset_name) {
  return merge_partitions(load_uea_ts(train_path, dataset_name, false), load_uea_ts(test_path, dataset_name, true));
}

// Writes the cases of one partition (or all, when `partition` is empty).
inline void write_uea_ts(std::ostream& out, const TimeSeriesDataset& ds, std::optional<bool> test_partition = {}) {
  out << "@problemName " << ds.name << "\n@timeStamps false\n@missing false\n@univariate "
      << (ds.channels == 1 ? "true" : "false") << "\n@dimensions " << ds.channels << "\n@equalLength true\n@seriesLength "
      << ds.length << "\n@classLabel true";
  for (const auto& c : ds.class_names) out << ' ' << c;
  out << "\n@data\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (test_partition && ds.test_partition[i] != *test_partition) continue;
    for (std::size_t c = 0; c < ds.channels; ++c) {
      for (std::size_t t = 0; t < ds.length; ++t) out << (t ? "," : "") << ds.samples[i][c * ds.length + t];
      out << ':';
    }
    out << ds.class_names[ds.labels[i]] << '\n';
  }
}

// ---------------------------------------------------------------- tabular

enum class TabularKind { arrhythmia, thyroid, kdd, kddrev, csv };

inline TabularKind parse_tabular_kind(std::string_view s) {
  const auto k = canonical_dataset_name(s);
  if (k == "arrhythmia") return TabularKind::arrhythmia;
  if (k == "thyroid") return TabularKind::thyroid;
  if (k == "kdd") return TabularKind::kdd;
  if (k == "kddrev") return TabularKind::kddrev;
  if (k == "csv") return TabularKind::csv;
  throw ConfigError("unknown tabular format '" + std::string(s) + "' (expected arrhythmia, thyroid, kdd, kddrev, csv)");
}

namespace detail {

// Raw UCI arrhythmia: 279 attributes + class (1..16). Columns 10..14 carry
// missing values and are dropped, leaving 274. A prepared file with 274
// features and a 0/1 label is accepted as is.
inline TabularDataset parse_arrhythmia(std::istream& in) {
  static const std::vector<int> anomalous{3, 4, 5, 7, 8, 9, 14, 15};
  TabularDataset ds{"arrhythmia", 274};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(trim(line), ',');
    std::vector<double> row;
    int label = 0;
    if (f.size() == 280) {
      for (std::size_t j = 0; j < 279; ++j) {
        if (j >= 10 && j <= 14) continue;
        row.push_back(to_double(f[j], lineno, "arrhythmia attribute"));
      }
      const int cls = static_cast<int>(to_double(f[279], lineno, "class"));
      label = std::find(anomalous.begin(), anomalous.end(), cls) != anomalous.end() ? 1 : 0;
    } else if (f.size() == 275) {
      for (std::size_t j = 0; j < 274; ++j) row.push_back(to_double(f[j], lineno, "arrhythmia attribute"));
      label = static_cast<int>(to_double(f[274], lineno, "label"));
      if (label != 0 && label != 1) throw ParseError("prepared arrhythmia label must be 0 or 1", lineno);
    } else {
      throw ParseError("arrhythmia row has " + std::to_string(f.size()) + " fields (expected 280 raw or 275 prepared)",
                       lineno);
    }
    ds.rows.push_back(std::move(row));
    ds.labels.push_back(label);
  }
  return ds;
}

// UCI ann-thyroid: 21 attributes + class (1 hyperfunction, 2 subnormal,
// 3 normal), whitespace separated. The six continuous attributes are
// columns 0 and 16..20; hyperfunction is the anomaly. A prepared 6 + 0/1
// label file is accepted too.
inline TabularDataset parse_thyroid(std::istream& in) {
  TabularDataset ds{"thyroid", 6};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    std::replace(t.begin(), t.end(), ',', ' ');
    auto f = split_ws(t);
    std::vector<double> row;
    int label = 0;
    if (f.size() == 22) {
      for (std::size_t j : {0u, 16u, 17u, 18u, 19u, 20u}) row.push_back(to_double(f[j], lineno, "thyroid attribute"));
      const int cls = static_cast<int>(to_double(f[21], lineno, "class"));
      if (cls < 1 || cls > 3) throw ParseError("thyroid class must be 1, 2 or 3", lineno);
      label = cls == 1 ? 1 : 0;
    } else if (f.size() == 7) {
      for (std::size_t j = 0; j < 6; ++j) row.push_back(to_double(f[j], lineno, "thyroid attribute"));
      label = static_cast<int>(to_double(f[6], lineno, "label"));
      if (label != 0 && label != 1) throw ParseError("prepared thyroid label must be 0 or 1", lineno);
    } else {
      throw ParseError("thyroid row has " + std::to_string(f.size()) + " fields (expected 22 raw or 7 prepared)", lineno);
    }
    ds.rows.push_back(std::move(row));
    ds.labels.push_back(label);
  }
  return ds;
}

// KDD Cup 99: 41 attributes + connection label. The seven symbolic
// attributes are one-hot expanded: protocol_type, flag and the four binary
// flags against fixed vocabularies, service against the sorted set seen in
// the file. Rows labelled "normal." are the non-attack traffic.
struct KddVocabulary {
  static const std::vector<std::string>& protocols() {
    static const std::vector<std::string> v{"icmp", "tcp", "udp"};
    return v;
  }
  static const std::vector<std::string>& flags() {
    static const std::vector<std::string> v{"OTH", "REJ", "RSTO", "RSTOS0", "RSTR", "S0", "S1", "S2", "S3", "SF", "SH"};
    return v;
  }
  static const std::vector<std::string>& binary() {
    static const std::vector<std::string> v{"0", "1"};
    return v;
  }
  static constexpr std::size_t kProtocol = 1, kService = 2, kFlag = 3;
  static constexpr std::size_t kBinary[] = {6, 11, 20, 21};  // land, logged_in, is_host_login, is_guest_login
};

inline std::size_t level_index(const std::vector<std::string>& vocab, const std::string& v, std::size_t line,
                               const char* column) {
  auto it = std::find(vocab.begin(), vocab.end(), v);
  if (it == vocab.end()) throw ParseError(std::string("unknown ") + column + " level '" + v + "'", line);
  return static_cast<std::size_t>(it - vocab.begin());
}

struct KddRows {
  std::vector<std::vector<double>> rows;
  std::vector<bool> attack;
};

inline KddRows parse_kdd(std::istream& in, const std::vector<std::string>* service_vocab = nullptr) {
  using V = KddVocabulary;
  std::vector<std::vector<std::string>> raw;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(trim(line), ',');
    if (f.size() != 42) throw ParseError("KDD row has " + std::to_string(f.size()) + " fields (expected 42)", lineno);
    for (auto& s : f) s = trim(s);
    raw.push_back(std::move(f));
    lines.push_back(lineno);
  }
  std::vector<std::string> services;
  if (service_vocab) {
    services = *service_vocab;
  } else {
    for (const auto& r : raw) services.push_back(r[V::kService]);
    std::sort(services.begin(), services.end());
    services.erase(std::unique(services.begin(), services.end()), services.end());
  }
  auto is_binary = [](std::size_t j) {
    return std::find(std::begin(V::kBinary), std::end(V::kBinary), j) != std::end(V::kBinary);
  };
  KddRows out;
  for (std::size_t r = 0; r < raw.size(); ++r) {
    const auto& f = raw[r];
    std::vector<double> row;
    for (std::size_t j = 0; j < 41; ++j) {
      if (j == V::kProtocol || j == V::kService || j == V::kFlag || is_binary(j)) continue;
      row.push_back(to_double(f[j], lines[r], "KDD attribute"));
    }
    auto one_hot = [&](const std::vector<std::string>& vocab, const std::string& v, const char* col) {
      const std::size_t i = level_index(vocab, v, lines[r], col);
      for (std::size_t k = 0; k < vocab.size(); ++k) row.push_back(k == i ? 1.0 : 0.0);
    };
    one_hot(V::protocols(), f[V::kProtocol], "protocol_type");
    one_hot(services, f[V::kService], "service");
    one_hot(V::flags(), f[V::kFlag], "flag");
    for (auto j : V::kBinary) one_hot(V::binary(), f[j], "binary attribute");
    std::string label = f[41];
    if (!label.empty() && label.back() == '.') label.pop_back();
    out.rows.push_back(std::move(row));
    out.attack.push_back(label != "normal");
  }
  return out;
}

// Generic CSV: numeric features, last column the 0/1 anomaly label. A
// non-numeric first line is taken as a header.
inline TabularDataset parse_csv(std::istream& in, std::string name) {
  TabularDataset ds{std::move(name), 0};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(trim(line), ',');
    double probe = 0.0;
    if (ds.rows.empty() && ds.features == 0 && !parse_double(f[0], probe)) continue;  // header
    if (f.size() < 2) throw ParseError("csv row needs at least one feature and a label", lineno);
    if (ds.features == 0) ds.features = f.size() - 1;
    if (f.size() - 1 != ds.features)
      throw ParseError("csv row has " + std::to_string(f.size() - 1) + " features, expected " +
                           std::to_string(ds.features),
                       lineno);
    std::vector<double> row;
    for (std::size_t j = 0; j + 1 < f.size(); ++j) row.push_back(to_double(f[j], lineno, "feature"));
    const int label = static_cast<int>(to_double(f.back(), lineno, "label"));
    if (label != 0 && label != 1) throw ParseError("label must be 0 or 1", lineno);
    ds.rows.push_back(std::move(row));
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace detail

// Parses a tabular stream. For KDDRev, attack rows are subsampled (without
// replacement, seeded) to round(0.25 * non-attack count).
inline TabularDataset parse_tabular(std::istream& in, TabularKind kind, std::uint64_t seed = 0,
                                    std::string name = {}) {
  switch (kind) {
    case TabularKind::arrhythmia: return detail::parse_arrhythmia(in);
    case TabularKind::thyroid: return detail::parse_thyroid(in);
    case TabularKind::csv: return detail::parse_csv(in, name.empty() ? "csv" : std::move(name));
    case TabularKind::kdd:
    case TabularKind::kddrev: break;
  }
  auto kdd = detail::parse_kdd(in);
  TabularDataset ds{kind == TabularKind::kdd ? "kdd" : "kddrev", kdd.rows.empty() ? 0 : kdd.rows[0].size()};
  if (kind == TabularKind::kdd) {
    // Attacks are the majority and play the normal role.
    for (std::size_t i = 0; i < kdd.rows.size(); ++i) {
      ds.rows.push_back(std::move(kdd.rows[i]));
      ds.labels.push_back(kdd.attack[i] ? 0 : 1);
    }
    return ds;
  }
  std::vector<std::size_t> normal, attack;
  for (std::size_t i = 0; i < kdd.rows.size(); ++i) (kdd.attack[i] ? attack : normal).push_back(i);
  const auto keep = static_cast<std::size_t>(std::llround(0.25 * static_cast<double>(normal.size())));
  if (keep > attack.size())
    throw ConfigError("KDDRev needs " + std::to_string(keep) + " attack rows, file has " + std::to_string(attack.size()));
  CounterRng rng(seed, 0x6b646472);
  std::shuffle(attack.begin(), attack.end(), rng);
  attack.resize(keep);
  std::sort(attack.begin(), attack.end());
  std::vector<std::size_t> order = normal;
  order.insert(order.end(), attack.begin(), attack.end());
  std::sort(order.begin(), order.end());
  for (auto i : order) {
    ds.rows.push_back(std::move(kdd.rows[i]));
    ds.labels.push_back(kdd.attack[i] ? 1 : 0);
  }
  return ds;
}

// Loads and concatenates one or more files of the same tabular format.
inline TabularDataset load_tabular(const std::vector<std::filesystem::path>& paths, TabularKind kind,
                                   std::uint64_t seed = 0, std::string name = {}) {
  if (paths.empty()) throw ConfigError("no input files for tabular dataset");
  std::stringstream joined;
  for (const auto& p : paths) {
    auto in = detail::open_input(p);
    joined << in.rdbuf() << '\n';
  }
  try {
    auto ds = parse_tabular(joined, kind, seed, std::move(name));
    if (!ds.rows.empty()) ds.features = ds.rows[0].size();
    return ds;
  } catch (const ParseError& e) {
    throw ParseError(paths.front().string() + (paths.size() > 1 ? " (+ more)" : "") + ": " + e.what());
  }
}

inline TabularDataset load_tabular(const std::filesystem::path& path, TabularKind kind, std::uint64_t seed = 0) {
  return load_tabular(std::vector<std::filesystem::path>{path}, kind, seed);
}

// ---------------------------------------------------------------- splits

namespace detail {

// Moves round(fraction * |pool|) samples from the pool to validation,
// stratified by label with largest-remainder allocation.
inline void carve_validation(const SampleSet& pool, double fraction, CounterRng& rng, SampleSet& validation,
                             SampleSet& test) {
  validation = SampleSet{pool.sample_shape};
  test = SampleSet{pool.sample_shape};
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < pool.size(); ++i) strata[pool.labels[i]].push_back(i);
  std::size_t take[2];
  double rem[2];
  std::size_t assigned = 0;
  for (int s = 0; s < 2; ++s) {
    const double exact = static_cast<double>(n_val) * static_cast<double>(strata[s].size()) /
                         static_cast<double>(std::max<std::size_t>(1, pool.size()));
    take[s] = static_cast<std::size_t>(std::floor(exact));
    rem[s] = exact - static_cast<double>(take[s]);
    assigned += take[s];
  }
  while (assigned < n_val) {
    const int s = (rem[1] > rem[0] && take[1] < strata[1].size()) || take[0] >= strata[0].size() ? 1 : 0;
    ++take[s];
    rem[s] = -1.0;
    ++assigned;
  }
  std::vector<bool> to_val(pool.size(), false);
  for (int s = 0; s < 2; ++s) {
    std::shuffle(strata[s].begin(), strata[s].end(), rng);
    for (std::size_t i = 0; i < take[s]; ++i) to_val[strata[s][i]] = true;
  }
  for (std::size_t i = 0; i < pool.size(); ++i)
    (to_val[i] ? validation : test).push_back(pool.sample(i), pool.labels[i], pool.ids[i]);
}

inline DatasetSplit split_classes(const TimeSeriesDataset& ds, std::vector<std::size_t> normal, std::uint64_t seed,
                                  std::string protocol) {
  DatasetSplit split;
  split.descriptor = {ds.name, std::move(protocol), normal, seed};
  const Shape shape = ds.sample_shape();
  split.train.sample_shape = shape;
  SampleSet pool{shape};
  auto is_normal = [&](std::size_t c) { return std::find(normal.begin(), normal.end(), c) != normal.end(); };
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int label = is_normal(ds.labels[i]) ? 0 : 1;
    if (!ds.test_partition[i]) {
      if (label == 0) split.train.push_back(ds.samples[i], 0, i);
    } else {
      pool.push_back(ds.samples[i], label, i);
    }
  }
  CounterRng rng(seed, 0x5b117);
  carve_validation(pool, 0.1, rng, split.validation, split.test);
  return split;
}

}  // namespace detail

// Train: the archive's train-partition samples of normal_class. The test
// partition forms the pool (anomaly iff class != normal_class); 10% of it,
// stratified and seeded, becomes validation.
inline DatasetSplit split_one_vs_rest(const TimeSeriesDataset& ds, std::size_t normal_class, std::uint64_t seed) {
  if (normal_class >= ds.num_classes() ||
      std::find(ds.labels.begin(), ds.labels.end(), normal_class) == ds.labels.end())
    throw ConfigError("class " + std::to_string(normal_class) + " is not present in " + ds.name);
  return detail::split_classes(ds, {normal_class}, seed, "one_vs_rest");
}

// Normal classes start_class, start_class+1, ... (n of them, wrapping
// around). n = 1 is the one-vs-rest split.
inline DatasetSplit split_n_vs_rest(const TimeSeriesDataset& ds, std::size_t start_class, std::size_t n,
                                    std::uint64_t seed) {
  const std::size_t N = ds.num_classes();
  if (n < 1 || n >= N)
    throw ConfigError("n-vs-rest needs 1 <= n < N = " + std::to_string(N) + ", got n = " + std::to_string(n));
  if (start_class >= N) throw ConfigError("start class " + std::to_string(start_class) + " out of range");
  std::vector<std::size_t> normal;
  for (std::size_t j = 0; j < n; ++j) normal.push_back((start_class + j) % N);
  if (n == 1) return split_one_vs_rest(ds, start_class, seed);
  return detail::split_classes(ds, normal, seed, "n_vs_rest");
}

// Half of the normal rows (seeded) train; the other half plus every anomaly
// form the pool, 10% of which becomes validation.
inline DatasetSplit split_tabular(const TabularDataset& ds, std::uint64_t seed) {
  DatasetSplit split;
  split.descriptor = {ds.name, "tabular", {0}, seed};
  const Shape shape{ds.features};
  split.train.sample_shape = shape;
  std::vector<std::size_t> normal;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.labels[i] == 0) normal.push_back(i);
  CounterRng rng(seed, 0x7ab);
  std::shuffle(normal.begin(), normal.end(), rng);
  std::vector<bool> in_train(ds.size(), false);
  for (std::size_t i = 0; i < normal.size() / 2; ++i) in_train[normal[i]] = true;
  SampleSet pool{shape};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (in_train[i])
      split.train.push_back(ds.rows[i], 0, i);
    else
      pool.push_back(ds.rows[i], ds.labels[i], i);
  }
  detail::carve_validation(pool, 0.1, rng, split.validation, split.test);
  return split;
}

// ---------------------------------------------------------------- scaling

// Per-feature (tabular) or per-channel (time series) statistics.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;

  bool empty() const { return mean.empty(); }

  void apply(SampleSet& s) const {
    if (empty() || s.empty()) return;
    const std::size_t groups = mean.size(), per = s.sample_size() / groups;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const std::size_t g = (i % s.sample_size()) / per;
      s.values[i] = (s.values[i] - mean[g]) / stddev[g];
    }
  }

  std::vector<double> apply(std::span<const double> x, std::size_t sample_size) const {
    std::vector<double> out(x.begin(), x.end());
    if (empty()) return out;
    const std::size_t per = sample_size / mean.size();
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::size_t g = (i % sample_size) / per;
      out[i] = (out[i] - mean[g]) / stddev[g];
    }
    return out;
  }
};

inline constexpr double kStdFloor = 1e-8;

// Statistics from the train partition only, applied to every partition.
inline Standardization fit_standardization(const SampleSet& train) {
  if (train.empty()) throw ConfigError("cannot standardize with an empty train partition");
  const std::size_t groups = train.sample_shape.size() == 2 ? train.sample_shape[0] : train.sample_size();
  const std::size_t per = train.sample_size() / groups;
  Standardization st{std::vector<double>(groups, 0.0), std::vector<double>(groups, 0.0)};
  const double count = static_cast<double>(train.size() * per);
  for (std::size_t i = 0; i < train.values.size(); ++i) st.mean[(i % train.sample_size()) / per] += train.values[i];
  for (auto& m : st.mean) m /= count;
  for (std::size_t i = 0; i < train.values.size(); ++i) {
    const std::size_t g = (i % train.sample_size()) / per;
    const double d = train.values[i] - st.mean[g];
    st.stddev[g] += d * d;
  }
  for (auto& s : st.stddev) s = std::max(std::sqrt(s / count), kStdFloor);
  return st;
}

inline Standardization standardize(DatasetSplit& split) {
  auto st = fit_standardization(split.train);
  st.apply(split.train);
  st.apply(split.validation);
  st.apply(split.test);
  return st;
}

}  // namespace neutral
