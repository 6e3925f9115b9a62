// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slimsplit/dataset.hpp"
#include "slimsplit/error.hpp"
#include "slimsplit/model_zoo.hpp"
#include "slimsplit/trainer.hpp"
#include "slimsplit/width.hpp"

namespace slimsplit::cli {

// Bad key or value in a config file or on the command line.
class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Everything a run needs. Empty paths resolve to files under out_dir.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string data;
  std::string teacher;
  std::string student;
  std::string input;
  std::string output;

  std::size_t train_size = 2000;
  std::size_t val_size = 500;

  std::size_t teacher_epochs = 12;
  double teacher_lr = 0.1;

  std::size_t epochs = 12;
  std::size_t batch_size = 8;
  std::size_t n_sandwich = 3;
  double lr0 = 0.3;
  std::optional<std::size_t> lr_halving;  // mode default when unset
  double momentum = 0.9;
  bool post_bn_recalibrate = false;
  std::vector<double> tap_weights{1.0, 1.0};
  Precision precision = Precision::infer32;

  WidthSet widths = WidthSet::default_set();
  SplitMode mode = SplitMode::bandwidth_only;
  CompressorVariant variant = CompressorVariant::last_layer_pair;
  std::size_t channels = 48;
  bool pretrained_encoder = true;
  bool allow_extrapolation = false;
  std::vector<int> bits{8};

  std::optional<WidthMultiplier> alpha;
  double bandwidth = 1e6;
  double rtt = 0.0;
  double compute_rate = 1e9;
  std::optional<std::uint64_t> max_bytes;
  std::optional<std::uint64_t> max_mac;
  std::size_t image_index = 0;

  std::string path_or(const std::string& explicit_path, const std::string& file) const;
  SyntheticDatasetSpec dataset_spec() const;
  TrainConfig teacher_config() const;
  TrainConfig distill_config() const;
  BottleneckSpec bottleneck() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, std::string_view)> set;
  // nullopt when the key is unset.
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

// Applies one `key = value` assignment.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

// `key = value` lines; `#` starts a comment; blank lines ignored.
void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin);
void apply_config_file(RunConfig& cfg, const std::string& path);

// Every key in canonical order, in the same file format.
std::string render_config(const RunConfig& cfg);

}  // namespace slimsplit::cli
