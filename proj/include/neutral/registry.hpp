#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "neutral/data.hpp"

namespace neutral {

// One registered dataset. format is "uea" (files = {train, test}) or a
// tabular format name (arrhythmia, thyroid, kdd, kddrev, csv) with one or
// more files that are concatenated.
struct RegistryEntry {
  std::string name;
  std::string format;
  std::vector<std::filesystem::path> files;
};

using Dataset = std::variant<TimeSeriesDataset, TabularDataset>;

inline bool is_time_series(const Dataset& d) { return std::holds_alternative<TimeSeriesDataset>(d); }

// Name -> files map stored as JSON:
//   {"version": 1, "datasets": {"epilepsy": {"format": "uea", "files": [...]}}}
// Relative paths are resolved against the registry file's directory.
class Registry {
 public:
  Registry() = default;
  explicit Registry(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("registry " + path_.string() + " is not valid JSON: " + e.what());
    }
    if (!j.contains("datasets") || !j["datasets"].is_object())
      throw ConfigError("registry " + path_.string() + " has no \"datasets\" object");
    for (auto& [name, e] : j["datasets"].items()) {
      RegistryEntry entry{name, e.value("format", ""), {}};
      for (const auto& f : e.value("files", std::vector<std::string>{})) entry.files.emplace_back(f);
      entries_[canonical_dataset_name(name)] = std::move(entry);
    }
  }

  // NEUTRAL_REGISTRY, else ./neutral_registry.json.
  static std::filesystem::path default_path() {
    if (const char* p = std::getenv("NEUTRAL_REGISTRY"); p && *p) return p;
    return "neutral_registry.json";
  }

  const std::filesystem::path& path() const { return path_; }

  void add(RegistryEntry entry) {
    validate(entry);
    entries_[canonical_dataset_name(entry.name)] = std::move(entry);
  }

  std::optional<RegistryEntry> find(std::string_view name) const {
    auto it = entries_.find(canonical_dataset_name(name));
    if (it == entries_.end()) return std::nullopt;
    RegistryEntry e = it->second;
    for (auto& f : e.files)
      if (f.is_relative() && !path_.empty()) f = path_.parent_path() / f;
    return e;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_) out.push_back(e.name);
    return out;
  }

  void save() const {
    nlohmann::json j;
    j["version"] = 1;
    j["datasets"] = nlohmann::json::object();
    for (const auto& [k, e] : entries_) {
      std::vector<std::string> files;
      for (const auto& f : e.files) files.push_back(f.string());
      j["datasets"][e.name] = {{"format", e.format}, {"files", files}};
    }
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_);
    if (!out) throw ConfigError("cannot write registry " + path_.string());
    out << j.dump(2) << '\n';
  }

  static void validate(const RegistryEntry& e) {
    if (e.name.empty()) throw ConfigError("dataset name is empty");
    if (e.format == "uea") {
      if (e.files.size() != 2) throw ConfigError("uea datasets need exactly two files: train and test");
    } else {
      parse_tabular_kind(e.format);
      if (e.files.empty()) throw ConfigError("tabular dataset needs at least one file");
    }
  }

 private:
  std::filesystem::path path_;
  std::map<std::string, RegistryEntry> entries_;
};

namespace detail {

inline std::optional<std::filesystem::path> first_existing(const std::filesystem::path& dir,
                                                           const std::vector<std::string>& names) {
  for (const auto& n : names)
    if (std::filesystem::exists(dir / n)) return dir / n;
  return std::nullopt;
}

}  // namespace detail

// Looks for a dataset under NEUTRAL_DATA_DIR using the archives' usual file
// names: <Name>/<Name>_TRAIN.ts and _TEST.ts for UEA sets, ann-train.data +
// ann-test.data, arrhythmia.data, kddcup.data_10_percent[_corrected].
inline std::optional<RegistryEntry> discover_in_data_dir(std::string_view name) {
  const char* root = std::getenv("NEUTRAL_DATA_DIR");
  if (!root || !*root || !std::filesystem::is_directory(root)) return std::nullopt;
  const std::filesystem::path dir(root);
  const std::string key = canonical_dataset_name(name);
  static const std::map<std::string, std::string> archive_names{{"sad", "SpokenArabicDigits"},
                                                                {"natops", "NATOPS"},
                                                                {"ct", "CharacterTrajectories"},
                                                                {"epilepsy", "Epilepsy"},
                                                                {"rs", "RacketSports"}};
  if (auto it = archive_names.find(key); it != archive_names.end()) {
    for (const auto& sub : {dir / it->second, dir}) {
      auto train = sub / (it->second + "_TRAIN.ts");
      auto test = sub / (it->second + "_TEST.ts");
      if (std::filesystem::exists(train) && std::filesystem::exists(test)) return RegistryEntry{key, "uea", {train, test}};
    }
    return std::nullopt;
  }
  for (const auto& sub : {dir / key, dir}) {
    if (key == "thyroid") {
      auto train = sub / "ann-train.data", test = sub / "ann-test.data";
      if (std::filesystem::exists(train) && std::filesystem::exists(test)) return RegistryEntry{key, key, {train, test}};
      if (auto f = detail::first_existing(sub, {"thyroid.csv"})) return RegistryEntry{key, key, {*f}};
    } else if (key == "arrhythmia") {
      if (auto f = detail::first_existing(sub, {"arrhythmia.data", "arrhythmia.csv"})) return RegistryEntry{key, key, {*f}};
    } else if (key == "kdd" || key == "kddrev") {
      if (auto f = detail::first_existing(sub, {"kddcup.data_10_percent_corrected", "kddcup.data_10_percent"}))
        return RegistryEntry{key, key, {*f}};
    }
  }
  return std::nullopt;
}

// Registry entry if present, otherwise NEUTRAL_DATA_DIR discovery.
inline std::optional<RegistryEntry> resolve_dataset(const Registry& registry, std::string_view name) {
  if (auto e = registry.find(name)) return e;
  return discover_in_data_dir(name);
}

inline Dataset load_dataset(const RegistryEntry& e, std::uint64_t seed = 0) {
  Registry::validate(e);
  for (const auto& f : e.files)
    if (!std::filesystem::exists(f)) throw ConfigError("dataset " + e.name + ": file " + f.string() + " does not exist");
  if (e.format == "uea") return load_uea(e.files[0], e.files[1], e.name);
  auto ds = load_tabular(e.files, parse_tabular_kind(e.format), seed, e.name);
  ds.name = e.name;
  return ds;
}

}  // namespace neutral
