#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "neutral/cli.hpp"
#include "neutral/synthetic.hpp"

namespace neutral::testing {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out, err;
};

inline CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "neutral");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

inline fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("neutral_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes a toy UEA archive pair under dir and returns {train, test}.
inline std::pair<fs::path, fs::path> write_toy_uea(const fs::path& dir, const TimeSeriesDataset& ds) {
  const auto train = dir / (ds.name + "_TRAIN.ts"), test = dir / (ds.name + "_TEST.ts");
  std::ofstream a(train), b(test);
  write_uea_ts(a, ds, false);
  write_uea_ts(b, ds, true);
  return {train, test};
}

// Tabular CSV with the label in the last column.
inline fs::path write_toy_csv(const fs::path& path, const TabularDataset& ds) {
  std::ofstream out(path);
  out << std::setprecision(17);
  for (std::size_t f = 0; f < ds.features; ++f) out << 'x' << f << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.rows[i]) out << v << ',';
    out << ds.labels[i] << '\n';
  }
  return path;
}

}  // namespace neutral::testing
