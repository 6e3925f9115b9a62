// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slimsplit/codec.hpp"

namespace slimsplit::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key '" + std::string(key) + "': expected an integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

std::size_t parse_count(std::string_view key, std::string_view v) {
  return parse_int<std::size_t>(key, v);
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  if (v == "inf") return INFINITY;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || std::isnan(out)) {
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" +
                      std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '" +
                    std::string(v) + "'");
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= v.size(); ++i) {
    if (i == v.size() || v[i] == ',') {
      out.push_back(trim(v.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <class Fn>
auto wrap(std::string_view key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

using Get = std::function<std::optional<std::string>(const RunConfig&)>;
using Set = std::function<void(RunConfig&, std::string_view)>;

ConfigKey string_key(std::string name, std::string help, std::string RunConfig::*field) {
  return {name, std::move(help),
          [field](RunConfig& c, std::string_view v) { c.*field = std::string(v); },
          [field](const RunConfig& c) -> std::optional<std::string> { return c.*field; }};
}

ConfigKey count_key(std::string name, std::string help, std::size_t RunConfig::*field) {
  return {name, std::move(help),
          [field, name](RunConfig& c, std::string_view v) { c.*field = parse_count(name, v); },
          [field](const RunConfig& c) -> std::optional<std::string> {
            return std::to_string(c.*field);
          }};
}

ConfigKey real_key(std::string name, std::string help, double RunConfig::*field) {
  return {name, std::move(help),
          [field, name](RunConfig& c, std::string_view v) { c.*field = parse_real(name, v); },
          [field](const RunConfig& c) -> std::optional<std::string> { return fmt(c.*field); }};
}

ConfigKey bool_key(std::string name, std::string help, bool RunConfig::*field) {
  return {name, std::move(help),
          [field, name](RunConfig& c, std::string_view v) { c.*field = parse_bool(name, v); },
          [field](const RunConfig& c) -> std::optional<std::string> { return fmt(c.*field); }};
}

ConfigKey opt_u64_key(std::string name, std::string help,
                      std::optional<std::uint64_t> RunConfig::*field) {
  return {name, std::move(help),
          [field, name](RunConfig& c, std::string_view v) {
            if (v.empty()) {
              (c.*field).reset();
            } else {
              c.*field = parse_int<std::uint64_t>(name, v);
            }
          },
          [field](const RunConfig& c) -> std::optional<std::string> {
            if (!(c.*field)) return std::nullopt;
            return std::to_string(*(c.*field));
          }};
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k;
  k.push_back({"seed", "master seed",
               [](RunConfig& c, std::string_view v) { c.seed = parse_int<std::uint64_t>("seed", v); },
               [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.seed); }});
  k.push_back(string_key("out_dir", "directory receiving every output", &RunConfig::out_dir));
  k.push_back(string_key("data", "dataset file (default <out_dir>/dataset.scod)", &RunConfig::data));
  k.push_back(string_key("teacher", "teacher checkpoint (default <out_dir>/teacher.scod)", &RunConfig::teacher));
  k.push_back(string_key("student", "student checkpoint (default <out_dir>/student.scod)", &RunConfig::student));
  k.push_back(string_key("input", "input file for encode/decode", &RunConfig::input));
  k.push_back(string_key("output", "output file name for encode/decode, inside out_dir", &RunConfig::output));
  k.push_back(count_key("train_size", "synthetic training images", &RunConfig::train_size));
  k.push_back(count_key("val_size", "synthetic validation images", &RunConfig::val_size));
  k.push_back(count_key("teacher_epochs", "teacher training epochs", &RunConfig::teacher_epochs));
  k.push_back(real_key("teacher_lr", "teacher initial learning rate", &RunConfig::teacher_lr));
  k.push_back(count_key("epochs", "distillation epochs", &RunConfig::epochs));
  k.push_back(count_key("batch_size", "batch size", &RunConfig::batch_size));
  k.push_back(count_key("n_sandwich", "widths sampled per batch", &RunConfig::n_sandwich));
  k.push_back(real_key("lr0", "distillation initial learning rate", &RunConfig::lr0));
  k.push_back({"lr_halving", "epochs between learning-rate halvings (mode default when unset)",
               [](RunConfig& c, std::string_view v) {
                 if (v.empty()) {
                   c.lr_halving.reset();
                 } else {
                   c.lr_halving = parse_count("lr_halving", v);
                 }
               },
               [](const RunConfig& c) -> std::optional<std::string> {
                 if (!c.lr_halving) return std::nullopt;
                 return std::to_string(*c.lr_halving);
               }});
  k.push_back(real_key("momentum", "SGD momentum", &RunConfig::momentum));
  k.push_back(bool_key("post_bn_recalibrate", "recompute batch-norm statistics after training",
                       &RunConfig::post_bn_recalibrate));
  k.push_back({"tap_weights", "loss weights of the decompressor and decoder taps",
               [](RunConfig& c, std::string_view v) {
                 std::vector<double> w;
                 for (auto item : split_list(v)) w.push_back(parse_real("tap_weights", item));
                 c.tap_weights = std::move(w);
               },
               [](const RunConfig& c) -> std::optional<std::string> {
                 std::string s;
                 for (std::size_t i = 0; i < c.tap_weights.size(); ++i) {
                   s += (i ? "," : "") + fmt(c.tap_weights[i]);
                 }
                 return s;
               }});
  k.push_back({"precision", "training graph precision: infer32 or train64",
               [](RunConfig& c, std::string_view v) {
                 if (v == "infer32") {
                   c.precision = Precision::infer32;
                 } else if (v == "train64") {
                   c.precision = Precision::train64;
                 } else {
                   throw ConfigError("config key 'precision': expected infer32 or train64");
                 }
               },
               [](const RunConfig& c) -> std::optional<std::string> {
                 return c.precision == Precision::train64 ? "train64" : "infer32";
               }});
  k.push_back({"widths", "trained width set, e.g. 0.25,0.5,1.0",
               [](RunConfig& c, std::string_view v) {
                 c.widths = wrap("widths", [&] { return WidthSet::parse(v); });
               },
               [](const RunConfig& c) -> std::optional<std::string> { return c.widths.str(); }});
  k.push_back({"mode", "bandwidth_only or full_config",
               [](RunConfig& c, std::string_view v) {
                 c.mode = wrap("mode", [&] { return parse_mode(std::string(v)); });
               },
               [](const RunConfig& c) -> std::optional<std::string> { return mode_name(c.mode); }});
  k.push_back({"variant", "sru_cru, last_layer_pair or decompressor_only",
               [](RunConfig& c, std::string_view v) {
                 c.variant = wrap("variant", [&] { return parse_variant(std::string(v)); });
               },
               [](const RunConfig& c) -> std::optional<std::string> {
                 return variant_name(c.variant);
               }});
  k.push_back(count_key("channels", "bottleneck channels C", &RunConfig::channels));
  k.push_back(bool_key("pretrained_encoder", "initialize the encoder from the teacher",
                       &RunConfig::pretrained_encoder));
  k.push_back(bool_key("allow_extrapolation", "allow widths outside the trained set",
                       &RunConfig::allow_extrapolation));
  k.push_back({"bits", "quantization bit depths, e.g. 8,4",
               [](RunConfig& c, std::string_view v) {
                 std::vector<int> b;
                 for (auto item : split_list(v)) {
                   const int bits = parse_int<int>("bits", item);
                   if (bits < kMinQuantBits || bits > kMaxQuantBits) {
                     throw ConfigError("config key 'bits': " + std::to_string(bits) +
                                       " is outside [2, 8]");
                   }
                   b.push_back(bits);
                 }
                 if (b.empty()) throw ConfigError("config key 'bits': empty list");
                 c.bits = std::move(b);
               },
               [](const RunConfig& c) -> std::optional<std::string> {
                 std::string s;
                 for (std::size_t i = 0; i < c.bits.size(); ++i) {
                   s += (i ? "," : "") + std::to_string(c.bits[i]);
                 }
                 return s;
               }});
  k.push_back({"alpha", "width for encode/simulate (simulate picks one when unset)",
               [](RunConfig& c, std::string_view v) {
                 if (v.empty()) {
                   c.alpha.reset();
                 } else {
                   c.alpha = wrap("alpha", [&] { return WidthMultiplier::parse(v); });
                 }
               },
               [](const RunConfig& c) -> std::optional<std::string> {
                 if (!c.alpha) return std::nullopt;
                 return c.alpha->str();
               }});
  k.push_back(real_key("bandwidth", "link bandwidth in bytes per second", &RunConfig::bandwidth));
  k.push_back(real_key("rtt", "link round-trip time in seconds", &RunConfig::rtt));
  k.push_back(real_key("compute_rate", "client MACs per second", &RunConfig::compute_rate));
  k.push_back(opt_u64_key("max_bytes", "packet byte budget", &RunConfig::max_bytes));
  k.push_back(opt_u64_key("max_mac", "encoder MAC budget", &RunConfig::max_mac));
  k.push_back(count_key("image_index", "validation image used by simulate", &RunConfig::image_index));
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const ConfigKey& k : config_keys()) {
    if (k.name == key) {
      k.set(cfg, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

std::string render_config(const RunConfig& cfg) {
  std::string out = "# resolved slimsplit configuration\n";
  for (const ConfigKey& k : config_keys()) {
    if (auto v = k.get(cfg)) {
      out += k.name + " = " + *v + "\n";
    } else {
      out += "# " + k.name + " unset\n";
    }
  }
  return out;
}

std::string RunConfig::path_or(const std::string& explicit_path, const std::string& file) const {
  if (!explicit_path.empty()) return explicit_path;
  return (std::filesystem::path(out_dir) / file).string();
}

SyntheticDatasetSpec RunConfig::dataset_spec() const {
  SyntheticDatasetSpec s;
  s.train_size = train_size;
  s.val_size = val_size;
  return s;
}

TrainConfig RunConfig::teacher_config() const {
  TrainConfig c = default_train_config(SplitMode::bandwidth_only);
  c.epochs = teacher_epochs;
  c.batch_size = batch_size;
  c.lr0 = teacher_lr;
  c.momentum = momentum;
  c.seed = seed;
  c.precision = precision;
  c.halving_period = std::min(c.halving_period, teacher_epochs);
  return c;
}

TrainConfig RunConfig::distill_config() const {
  TrainConfig c = default_train_config(mode);
  c.epochs = epochs;
  c.batch_size = batch_size;
  c.n_sandwich = n_sandwich;
  c.widths = widths;
  c.lr0 = lr0;
  c.halving_period = lr_halving ? *lr_halving : std::min(c.halving_period, epochs);
  c.momentum = momentum;
  c.post_bn_recalibrate = post_bn_recalibrate;
  c.seed = seed;
  c.tap_weights = tap_weights;
  c.precision = precision;
  return c;
}

BottleneckSpec RunConfig::bottleneck() const { return {channels, variant}; }

}  // namespace slimsplit::cli
