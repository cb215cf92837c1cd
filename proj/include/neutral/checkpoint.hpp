#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "neutral/train.hpp"

namespace neutral {

inline constexpr int kCheckpointVersion = 1;

// A checkpoint is a directory: manifest.json (architecture, standardization,
// parameter list) and one little-endian float32 file per parameter tensor.
// Weights are stored in single precision, so reloaded scores agree with the
// in-memory model to about 1e-6 relative.
inline void save_checkpoint(Model& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["version"] = kCheckpointVersion;
  m["dataset"] = model.dataset;
  m["objective"] = std::string(to_string(model.objective));
  m["K"] = model.K;
  m["temperature"] = model.temperature;
  m["seed"] = model.seed;
  m["input_shape"] = model.input_shape();
  if (model.stack) m["mode"] = std::string(to_string(model.stack->mode()));
  m["standardization"] = {{"mean", model.standardization.mean}, {"stddev", model.standardization.stddev}};
  m["parameters"] = nlohmann::json::array();
  for (auto& [name, p] : model.named_parameters()) {
    const std::string file = name + ".bin";
    m["parameters"].push_back({{"name", name}, {"shape", p->shape()}, {"file", file}});
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir / file).string());
    for (double v : p->data()) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                            static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
      out.write(reinterpret_cast<const char*>(b), 4);
    }
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ConfigError("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

inline Model load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("no checkpoint manifest at " + manifest_path.string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint manifest is not valid JSON: " + std::string(e.what()));
  }
  if (m.value("version", 0) != kCheckpointVersion)
    throw ConfigError("checkpoint version " + m.value("version", nlohmann::json()).dump() + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  try {
    TrainConfig cfg;
    cfg.objective = parse_objective(m.at("objective").get<std::string>());
    cfg.K = m.at("K").get<std::size_t>();
    cfg.temperature = m.at("temperature").get<double>();
    cfg.seed = m.at("seed").get<std::uint64_t>();
    if (m.contains("mode")) cfg.mode = parse_parametrization(m["mode"].get<std::string>());
    const auto shape = m.at("input_shape").get<Shape>();
    Model model = make_model(m.at("dataset").get<std::string>(), shape, cfg);
    model.standardization.mean = m.at("standardization").at("mean").get<std::vector<double>>();
    model.standardization.stddev = m.at("standardization").at("stddev").get<std::vector<double>>();

    auto named = model.named_parameters();
    const auto& params = m.at("parameters");
    if (params.size() != named.size())
      throw ConfigError("checkpoint has " + std::to_string(params.size()) + " parameters, architecture needs " +
                        std::to_string(named.size()));
    std::vector<Tensor> values;
    for (std::size_t i = 0; i < named.size(); ++i) {
      const auto& e = params[i];
      if (e.at("name").get<std::string>() != named[i].first)
        throw ConfigError("checkpoint parameter " + e.at("name").get<std::string>() + " where " + named[i].first +
                          " was expected");
      const auto pshape = e.at("shape").get<Shape>();
      if (pshape != named[i].second->shape())
        throw DimensionError("checkpoint parameter " + named[i].first + " has shape " + to_string(pshape));
      const auto path = dir / e.at("file").get<std::string>();
      std::ifstream bin(path, std::ios::binary);
      if (!bin) throw ConfigError("missing parameter file " + path.string());
      std::vector<double> data(numel(pshape));
      for (auto& v : data) {
        unsigned char b[4];
        if (!bin.read(reinterpret_cast<char*>(b), 4)) throw ConfigError("parameter file " + path.string() + " is truncated");
        const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
        v = std::bit_cast<float>(bits);
      }
      if (bin.peek() != std::char_traits<char>::eof())
        throw ConfigError("parameter file " + path.string() + " is longer than its shape");
      values.emplace_back(pshape, std::move(data));
    }
    model.set_parameters(values);
    model.encoder.freeze();
    if (model.stack) model.stack->freeze();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed checkpoint manifest: " + std::string(e.what()));
  }
}

}  // namespace neutral
