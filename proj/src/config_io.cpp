// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#include "redapt/config_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace redapt {

namespace {

using nlohmann::json;

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

std::size_t get_size(const json& v, const std::string& key, const std::string& source) {
  if (!v.is_number_unsigned()) {
    throw ConfigError(source + ": key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<std::size_t> get_sizes(const json& v, const std::string& key, const std::string& source) {
  if (!v.is_array()) throw ConfigError(source + ": key '" + key + "' must be an array of integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) out.push_back(get_size(e, key, source));
  return out;
}

bool get_bool(const json& v, const std::string& key, const std::string& source) {
  if (!v.is_boolean()) throw ConfigError(source + ": key '" + key + "' must be true or false");
  return v.get<bool>();
}

}  // namespace

std::optional<EncoderConfig> preset_config(const std::string& name) {
  if (name == "desk") return EncoderConfig::desk();
  if (name == "w2v2-large" || name == "w2v2-large-analytical") return EncoderConfig::w2v2_large();
  return std::nullopt;
}

std::vector<std::string> preset_names() { return {"desk", "w2v2-large"}; }

EncoderConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source + ": top level must be a JSON object");

  EncoderConfig cfg = EncoderConfig::desk();
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw ConfigError(source + ": key 'preset' must be a string");
    auto p = preset_config(j["preset"].get<std::string>());
    if (!p) throw ConfigError(source + ": key 'preset' names unknown preset '" + j["preset"].get<std::string>() + "'");
    cfg = *p;
  }
  for (const auto& [key, v] : j.items()) {
    if (key == "preset") continue;
    else if (key == "layers") cfg.layers = get_size(v, key, source);
    else if (key == "d_model") cfg.d_model = get_size(v, key, source);
    else if (key == "n_heads") cfg.n_heads = get_size(v, key, source);
    else if (key == "d_ffn") cfg.d_ffn = get_size(v, key, source);
    else if (key == "fe_kernels") cfg.feature_extractor.kernels = get_sizes(v, key, source);
    else if (key == "fe_strides") cfg.feature_extractor.strides = get_sizes(v, key, source);
    else if (key == "fe_channels") cfg.feature_extractor.channels = get_size(v, key, source);
    else if (key == "positions") cfg.positions.positions = get_sizes(v, key, source);
    else if (key == "reinit_top_k") cfg.reinit_top_k = get_size(v, key, source);
    else if (key == "redapt.k1") cfg.redapt.block1.kernel = get_size(v, key, source);
    else if (key == "redapt.s1") cfg.redapt.block1.stride = get_size(v, key, source);
    else if (key == "redapt.p1") cfg.redapt.block1.padding = get_size(v, key, source);
    else if (key == "redapt.k2") cfg.redapt.block2.kernel = get_size(v, key, source);
    else if (key == "redapt.s2") cfg.redapt.block2.stride = get_size(v, key, source);
    else if (key == "redapt.p2") cfg.redapt.block2.padding = get_size(v, key, source);
    else if (key == "redapt.second_cnn") cfg.redapt.enable_second_cnn = get_bool(v, key, source);
    else if (key == "redapt.layernorm") cfg.redapt.enable_layernorm = get_bool(v, key, source);
    else if (key == "redapt.gelu") cfg.redapt.enable_gelu = get_bool(v, key, source);
    else throw ConfigError(source + ": unknown key '" + key + "'");
  }
  // Strides determine the downsampling factor; keep the two consistent.
  std::size_t product = 1;
  for (std::size_t s : cfg.feature_extractor.strides) product *= s;
  cfg.feature_extractor.downsample = product;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

EncoderConfig load_config(const std::string& preset_or_path) {
  if (auto p = preset_config(preset_or_path)) return *p;
  std::ifstream f(preset_or_path);
  if (!f) {
    throw ConfigError("'" + preset_or_path + "' is neither a preset (desk, w2v2-large) nor a readable file");
  }
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), preset_or_path);
}

std::string config_to_json(const EncoderConfig& cfg) {
  nlohmann::ordered_json j;
  j["layers"] = cfg.layers;
  j["d_model"] = cfg.d_model;
  j["n_heads"] = cfg.n_heads;
  j["d_ffn"] = cfg.d_ffn;
  j["fe_kernels"] = cfg.feature_extractor.kernels;
  j["fe_strides"] = cfg.feature_extractor.strides;
  j["fe_channels"] = cfg.feature_extractor.channels;
  j["positions"] = cfg.positions.positions;
  j["reinit_top_k"] = cfg.reinit_top_k;
  j["redapt.k1"] = cfg.redapt.block1.kernel;
  j["redapt.s1"] = cfg.redapt.block1.stride;
  j["redapt.p1"] = cfg.redapt.block1.padding;
  j["redapt.k2"] = cfg.redapt.block2.kernel;
  j["redapt.s2"] = cfg.redapt.block2.stride;
  j["redapt.p2"] = cfg.redapt.block2.padding;
  j["redapt.second_cnn"] = cfg.redapt.enable_second_cnn;
  j["redapt.layernorm"] = cfg.redapt.enable_layernorm;
  j["redapt.gelu"] = cfg.redapt.enable_gelu;
  return j.dump();
}

std::string config_digest(const EncoderConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config_to_json(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PositionConfig parse_positions(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ConfigError("positions '" + text + "': missing ']'");
    s = s.substr(1, s.size() - 2);
  }
  PositionConfig pc;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || !std::all_of(item.begin(), item.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw ConfigError("positions '" + text + "': '" + item + "' is not a layer index");
    }
    pc.positions.push_back(std::stoul(item));
  }
  if (!s.empty() && s.back() == ',') throw ConfigError("positions '" + text + "': trailing comma");
  for (std::size_t i = 1; i < pc.positions.size(); ++i) {
    if (pc.positions[i] <= pc.positions[i - 1]) {
      throw ConfigError("positions '" + text + "' must be strictly increasing");
    }
  }
  return pc;
}

std::vector<PositionConfig> parse_position_list(const std::string& text) {
  std::vector<PositionConfig> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) out.push_back(parse_positions(item));
  if (out.empty()) out.emplace_back();
  return out;
}

std::string positions_str(const PositionConfig& positions) {
  std::string s = "[";
  for (std::size_t i = 0; i < positions.positions.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(positions.positions[i]);
  }
  return s + "]";
}

}  // namespace redapt
