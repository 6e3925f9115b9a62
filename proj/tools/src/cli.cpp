// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "slimsplit/checkpoint.hpp"
#include "slimsplit/cli/run_config.hpp"
#include "slimsplit/codec.hpp"
#include "slimsplit/split_sim.hpp"
#include "slimsplit/tradeoff_csv.hpp"
#include "slimsplit/trainer.hpp"

namespace slimsplit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;

  std::string out_path(const std::string& name) const {
    return (fs::path(cfg.out_dir) / name).string();
  }
};

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::ofstream open_log(const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError(path, "cannot open for writing");
  return f;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path, "cannot open for writing");
  f << text;
  if (!f.flush()) throw IoError(path, "write failed");
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path, "cannot open for reading");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Output file names are always placed directly inside out_dir.
std::string output_name(const RunConfig& cfg, const std::string& fallback) {
  if (cfg.output.empty()) return fallback;
  const fs::path name = fs::path(cfg.output).filename();
  if (name.empty() || name == "." || name == "..") {
    throw ConfigError("output must name a file, got '" + cfg.output + "'");
  }
  return name.string();
}

SplitStudent load_configured_student(const RunConfig& cfg) {
  SplitStudent s = load_student(cfg.path_or(cfg.student, "student.scod"));
  s.allow_extrapolation = cfg.allow_extrapolation;
  return s;
}

int cmd_gen_data(Context& ctx) {
  const Dataset d = gen_dataset(ctx.cfg.dataset_spec(), ctx.cfg.seed);
  const std::string path = ctx.out_path("dataset.scod");
  save_dataset(d, path);
  ctx.out << json{{"dataset", path},
                  {"train", d.train.size()},
                  {"val", d.val.size()},
                  {"hash", hex64(dataset_hash(d))}}
                 .dump()
          << '\n';
  return kExitOk;
}

int cmd_train_teacher(Context& ctx) {
  const Dataset d = load_dataset(ctx.cfg.path_or(ctx.cfg.data, "dataset.scod"));
  TeacherNet t = build_teacher(ctx.cfg.seed);
  std::ofstream log = open_log(ctx.out_path("teacher_log.jsonl"));
  const TeacherReport r = train_teacher(t, d, ctx.cfg.teacher_config(), &log);
  const std::string path = ctx.out_path("teacher.scod");
  save_teacher(t, path);
  ctx.out << json{{"teacher", path},
                  {"initial_loss", r.initial_loss},
                  {"final_loss", r.epoch_mean_loss.back()},
                  {"val_toy_ap", r.val_toy_ap}}
                 .dump()
          << '\n';
  return kExitOk;
}

int cmd_distill(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Dataset d = load_dataset(cfg.path_or(cfg.data, "dataset.scod"));
  TeacherNet t = load_teacher(cfg.path_or(cfg.teacher, "teacher.scod"));
  StudentOptions opts;
  opts.pretrained_encoder = cfg.pretrained_encoder;
  opts.allow_extrapolation = cfg.allow_extrapolation;
  opts.seed = cfg.seed;
  SplitStudent s = build_student(t, cfg.bottleneck(), cfg.widths, cfg.mode, opts);
  const TrainConfig tc = cfg.distill_config();
  std::ofstream log = open_log(ctx.out_path("distill_log.jsonl"));
  const auto stats = distill(s, t, d, tc, &log);
  const std::string path = ctx.out_path("student.scod");
  save_student(s, path);
  json summary{{"student", path},
               {"epochs", stats.size()},
               {"halving_period", tc.halving_period},
               {"lr_final", stats.back().lr}};
  ctx.out << summary.dump() << '\n';
  return kExitOk;
}

int cmd_eval(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Dataset d = load_dataset(cfg.path_or(cfg.data, "dataset.scod"));
  SplitStudent s = load_configured_student(cfg);
  std::unique_ptr<TeacherNet> t;
  const std::string tpath = cfg.path_or(cfg.teacher, "teacher.scod");
  if (fs::exists(tpath)) t = std::make_unique<TeacherNet>(load_teacher(tpath));

  std::string csv = "alpha,bits,toy_ap,feature_mse,teacher_variance,recalibrated\n";
  auto row = [&](const EvalResult& r, bool recal) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.6g,%s,%.6g,%.6g,%.6g,%s\n", r.alpha.value(),
                  r.bits ? std::to_string(*r.bits).c_str() : "none", r.toy_ap, r.feature_mse,
                  r.teacher_variance, recal ? "true" : "false");
    csv += buf;
  };
  for (const WidthMultiplier& a : cfg.widths) {
    row(evaluate(s, t.get(), d.val, a), false);
    for (int b : cfg.bits) row(evaluate(s, t.get(), d.val, a, b), false);
    if (cfg.post_bn_recalibrate) {
      SplitStudent copy = s;
      post_bn_recalibrate(copy, d.train, a, cfg.batch_size);
      row(evaluate(copy, t.get(), d.val, a), true);
    }
  }
  write_text(ctx.out_path("eval.csv"), csv);
  ctx.out << csv;
  return kExitOk;
}

int cmd_encode(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  if (cfg.input.empty()) throw ConfigError("encode needs --input <tensor file>");
  const Tensor32 t = load_tensor(cfg.input);
  PacketInfo info;
  info.alpha = cfg.alpha.value_or(WidthMultiplier{});
  info.variant = cfg.variant;
  info.c_max = std::max(cfg.channels, t.shape().c);
  info.extrapolated = !cfg.widths.contains(info.alpha);
  const auto packet = encode_packet(t, cfg.bits.front(), info);
  const std::string path = ctx.out_path(output_name(cfg, "packet.bin"));
  write_text(path, std::string(packet.begin(), packet.end()));
  ctx.out << json{{"packet", path}, {"bytes", packet.size()}, {"bits", cfg.bits.front()}}.dump()
          << '\n';
  return kExitOk;
}

int cmd_decode(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  if (cfg.input.empty()) throw ConfigError("decode needs --input <packet file>");
  const DecodedPacket p = decode_packet(read_bytes(cfg.input));
  const std::string path = ctx.out_path(output_name(cfg, "decoded.scod"));
  save_tensor(p.values, path);
  const PacketHeader& h = p.header;
  ctx.out << json{{"tensor", path},    {"bits", h.bits},   {"alpha", h.alpha},
                  {"c_active", h.c_active}, {"c_max", h.c_max}, {"h", h.h},
                  {"w", h.w},          {"n", h.n},         {"extrapolated", (h.flags & 1) != 0}}
                 .dump()
          << '\n';
  return kExitOk;
}

int cmd_sweep(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Dataset d = load_dataset(cfg.path_or(cfg.data, "dataset.scod"));
  SplitStudent s = load_configured_student(cfg);
  const auto points = sweep(s, d.val, cfg.widths, cfg.bits);
  export_tradeoff_csv(points, ctx.out_path("tradeoff.csv"));
  ctx.out << tradeoff_csv(points);
  return kExitOk;
}

int cmd_simulate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Dataset d = load_dataset(cfg.path_or(cfg.data, "dataset.scod"));
  SplitStudent s = load_configured_student(cfg);
  if (cfg.image_index >= d.val.size()) {
    throw ConfigError("image_index " + std::to_string(cfg.image_index) + " is outside the " +
                      std::to_string(d.val.size()) + " validation images");
  }
  const int bits = cfg.bits.front();
  WidthMultiplier alpha = s.widths.max();
  bool chosen = false;
  if (cfg.alpha) {
    alpha = *cfg.alpha;
  } else if (cfg.max_bytes || cfg.max_mac) {
    alpha = choose_alpha(s.widths, cost_model(s, bits), Budget{cfg.max_bytes, cfg.max_mac});
    chosen = true;
  }
  const NetworkModel net{cfg.bandwidth, cfg.rtt};
  const LatencyBreakdown r = simulate_inference(
      s, batch_slice(d.val.images, cfg.image_index, 1), alpha, bits, net, cfg.compute_rate);
  json j{{"alpha", alpha.str()},
         {"chosen_by_budget", chosen},
         {"bits", bits},
         {"encoder_mac", r.encoder_mac},
         {"packet_bytes", r.packet_bytes},
         {"encode_time", r.encode_time},
         {"transfer_time", r.transfer_time},
         {"total", r.total},
         {"objectness", r.decode_result.storage()}};
  write_text(ctx.out_path("simulate.json"), j.dump(2) + "\n");
  j.erase("objectness");
  ctx.out << j.dump() << '\n';
  return kExitOk;
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"slimsplit: configurable split inference toolkit", "slimsplit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");
  std::map<std::string, std::string> flag_values;
  for (const ConfigKey& k : config_keys()) {
    app.add_option(flag_name(k.name), flag_values[k.name], k.help);
  }

  using Handler = std::function<int(Context&)>;
  const std::vector<std::tuple<std::string, std::string, Handler>> commands{
      {"gen-data", "generate the synthetic dataset", cmd_gen_data},
      {"train-teacher", "train and freeze the teacher", cmd_train_teacher},
      {"distill", "distill a slimmable split student", cmd_distill},
      {"eval", "ToyAP and feature error per width", cmd_eval},
      {"encode", "quantize a saved tensor into a feature packet", cmd_encode},
      {"decode", "decode a feature packet into a tensor file", cmd_decode},
      {"sweep", "tradeoff CSV over widths and bit depths", cmd_sweep},
      {"simulate", "one client/server inference with latency accounting", cmd_simulate},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : commands) subs.push_back(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  Context ctx{RunConfig{}, out, err};
  try {
    if (!config_path.empty()) apply_config_file(ctx.cfg, config_path);
    for (const ConfigKey& k : config_keys()) {
      if (app.count(flag_name(k.name)) > 0) apply_setting(ctx.cfg, k.name, flag_values[k.name]);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      fs::create_directories(ctx.cfg.out_dir);
      write_text(ctx.out_path("config.resolved"), render_config(ctx.cfg));
      return std::get<2>(commands[i])(ctx);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitRuntime;
    }
  }
  err << app.help();
  return kExitUsage;
}

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"slimsplit"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace slimsplit::cli
