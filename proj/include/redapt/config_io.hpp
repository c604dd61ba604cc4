// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_CONFIG_IO_HPP_
#define REDAPT_CONFIG_IO_HPP_

#include <optional>
#include <string>
#include <vector>

#include "redapt/encoder.hpp"

namespace redapt {

// Flat JSON config. Recognised keys (all optional, unspecified ones come from
// "preset", default "desk"):
//   preset, layers, d_model, n_heads, d_ffn, fe_kernels, fe_strides,
//   fe_channels, positions, reinit_top_k,
//   redapt.k1, redapt.s1, redapt.p1, redapt.k2, redapt.s2, redapt.p2,
//   redapt.second_cnn, redapt.layernorm, redapt.gelu

/// "desk" or "w2v2-large" (alias "w2v2-large-analytical").
std::optional<EncoderConfig> preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Throws ConfigError naming the line (syntax) or the key (unknown key,
/// wrong type, invalid value).
EncoderConfig parse_config(const std::string& json_text, const std::string& source = "<config>");

/// A preset name, or a path to a JSON file.
EncoderConfig load_config(const std::string& preset_or_path);

/// Canonical JSON with every key, in a fixed order.
std::string config_to_json(const EncoderConfig& cfg);

/// 16 hex digits of FNV-1a over config_to_json().
std::string config_digest(const EncoderConfig& cfg);

/// "15,18,19", "[15, 18, 19]", "" or "[]". Throws ConfigError on junk.
PositionConfig parse_positions(const std::string& text);
/// Several configurations separated by ';'.
std::vector<PositionConfig> parse_position_list(const std::string& text);
std::string positions_str(const PositionConfig& positions);

}  // namespace redapt

#endif  // REDAPT_CONFIG_IO_HPP_
