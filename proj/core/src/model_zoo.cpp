// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/model_zoo.hpp"

#include <cstring>

namespace slimsplit {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void rename_block(ConvBlock& b, const std::string& name) {
  b.conv.name = name;
  b.conv.weight.name = name + ".weight";
  b.conv.bias.name = name + ".bias";
  if (b.bn) {
    b.bn->gamma.name = name + ".bn.gamma";
    b.bn->beta.name = name + ".bn.beta";
  }
}

ConvBlock make_block(const std::string& name, std::size_t c_in, std::size_t c_out,
                     std::size_t k, std::size_t stride, bool slim_in,
                     bool slim_out, bool bn, Activation act, Rng& rng,
                     double gain = 1.0) {
  SlimmableConv conv(name, c_in, c_out, k, ConvGeometry{stride, k / 2}, slim_in,
                     slim_out);
  conv.init_he(rng, gain);
  return ConvBlock(std::move(conv), bn, act);
}

std::size_t block_param_count(const ConvBlock& b) {
  std::size_t n = b.conv.weight.value.size() + b.conv.bias.value.size();
  if (b.bn) n += b.bn->gamma.value.size() + b.bn->beta.value.size();
  return n;
}

void append_report(std::vector<ConvBlock>& blocks, Section section,
                   const WidthMultiplier& alpha, std::size_t& h, std::size_t& w,
                   MacReport& report) {
  for (const ConvBlock& b : blocks) {
    if (b.upsample_input) {
      h *= 2;
      w *= 2;
    }
    const std::size_t k = b.conv.kernel();
    h = conv_out_extent(h, k, b.conv.geom.stride, b.conv.geom.pad);
    w = conv_out_extent(w, k, b.conv.geom.stride, b.conv.geom.pad);
    report.layers.push_back({b.conv.name, section, mac_count(b.conv, alpha, h, w)});
  }
}

}  // namespace

std::uint64_t hash_tensors(const std::vector<NamedTensor>& tensors,
                           bool include_statistics) {
  std::uint64_t h = kFnvOffset;
  for (const auto& t : tensors) {
    if (!include_statistics && t.kind == NamedTensor::Kind::statistic) continue;
    fnv_bytes(h, t.name.data(), t.name.size());
    fnv_bytes(h, t.tensor->data(), t.tensor->size() * sizeof(double));
  }
  return h;
}

void collect_tensors(std::vector<ConvBlock>& blocks, std::vector<NamedTensor>& out) {
  for (ConvBlock& b : blocks) {
    out.push_back({b.conv.weight.name, &b.conv.weight.value, NamedTensor::Kind::parameter});
    out.push_back({b.conv.bias.name, &b.conv.bias.value, NamedTensor::Kind::parameter});
    if (b.bn) {
      const std::string base = b.conv.name + ".bn";
      out.push_back({b.bn->gamma.name, &b.bn->gamma.value, NamedTensor::Kind::parameter});
      out.push_back({b.bn->beta.name, &b.bn->beta.value, NamedTensor::Kind::parameter});
      out.push_back({base + ".running_mean", &b.bn->running_mean, NamedTensor::Kind::statistic});
      out.push_back({base + ".running_var", &b.bn->running_var, NamedTensor::Kind::statistic});
    }
  }
}

// ---------------------------------------------------------------------------
// Teacher

TeacherNet build_teacher(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 101));
  TeacherNet t;
  std::size_t c_in = kImageChannels;
  for (std::size_t i = 0; i < TeacherNet::kChannels.size(); ++i) {
    const std::size_t stride = i + 1 < TeacherNet::kChannels.size() ? 2 : 1;
    t.blocks.push_back(make_block("block" + std::to_string(i + 1), c_in,
                                  TeacherNet::kChannels[i], 3, stride, false,
                                  false, true, Activation::relu, rng));
    c_in = TeacherNet::kChannels[i];
  }
  // Near-zero head so the initial prediction is ~0.5 everywhere.
  t.head = make_block("head", c_in, 1, 1, 1, false, false, false,
                      Activation::none, rng, 0.01);
  return t;
}

template <class T>
TeacherNet::Outputs TeacherNet::forward(Graph<T>& g, Var image, bool training) {
  Outputs out;
  const WidthMultiplier full;
  Var x = image;
  for (ConvBlock& b : blocks) {
    x = block_forward(g, b, x, full, training);
    out.blocks.push_back(x);
  }
  out.logits = block_forward(g, head, x, full, training);
  out.probs = g.sigmoid(out.logits);
  return out;
}

std::vector<Parameter*> TeacherNet::parameters() {
  std::vector<Parameter*> out;
  for (ConvBlock& b : blocks) {
    for (Parameter* p : b.parameters()) out.push_back(p);
  }
  for (Parameter* p : head.parameters()) out.push_back(p);
  return out;
}

std::vector<NamedTensor> TeacherNet::tensors() {
  std::vector<NamedTensor> out;
  collect_tensors(blocks, out);
  out.push_back({head.conv.weight.name, &head.conv.weight.value, NamedTensor::Kind::parameter});
  out.push_back({head.conv.bias.name, &head.conv.bias.value, NamedTensor::Kind::parameter});
  return out;
}

std::size_t TeacherNet::parameter_count() const {
  std::size_t n = block_param_count(head);
  for (const ConvBlock& b : blocks) n += block_param_count(b);
  return n;
}

void TeacherNet::freeze() {
  for (Parameter* p : parameters()) p->trainable = false;
}

template TeacherNet::Outputs TeacherNet::forward<float>(Graph<float>&, Var, bool);
template TeacherNet::Outputs TeacherNet::forward<double>(Graph<double>&, Var, bool);

// ---------------------------------------------------------------------------
// Names

const char* variant_name(CompressorVariant v) {
  switch (v) {
    case CompressorVariant::sru_cru:
      return "sru_cru";
    case CompressorVariant::last_layer_pair:
      return "last_layer_pair";
    case CompressorVariant::decompressor_only:
      return "decompressor_only";
  }
  return "unknown";
}

CompressorVariant parse_variant(const std::string& name) {
  if (name == "sru_cru") return CompressorVariant::sru_cru;
  if (name == "last_layer_pair") return CompressorVariant::last_layer_pair;
  if (name == "decompressor_only") return CompressorVariant::decompressor_only;
  throw ArgumentError("unknown compressor variant '" + name + "'");
}

const char* mode_name(SplitMode m) {
  return m == SplitMode::full_config ? "full_config" : "bandwidth_only";
}

SplitMode parse_mode(const std::string& name) {
  if (name == "bandwidth_only") return SplitMode::bandwidth_only;
  if (name == "full_config") return SplitMode::full_config;
  throw ArgumentError("unknown split mode '" + name + "'");
}

// ---------------------------------------------------------------------------
// Student

SplitStudent build_student(const TeacherNet& teacher, const BottleneckSpec& spec,
                           const WidthSet& widths, SplitMode mode,
                           const StudentOptions& options) {
  if (widths.empty()) throw ArgumentError("build_student: width set is empty");
  if (spec.channels < 1) throw ArgumentError("build_student: bottleneck channels must be >= 1");
  if (teacher.blocks.size() != TeacherNet::kChannels.size()) {
    throw ArgumentError("build_student: teacher is not a 4-block TeacherNet");
  }

  Rng rng(mix_seed(options.seed, 202));
  const bool full = mode == SplitMode::full_config;
  const std::size_t c = spec.channels;
  const auto& plan = TeacherNet::kChannels;
  const bool encoder_emits = spec.variant == CompressorVariant::decompressor_only;

  SplitStudent s;
  s.spec = spec;
  s.mode = mode;
  s.widths = widths;
  s.allow_extrapolation = options.allow_extrapolation;

  // Encoder: teacher blocks 1-3, optionally slimmed, optionally pretrained.
  std::size_t c_in = kImageChannels;
  for (std::size_t i = 0; i < 3; ++i) {
    const bool last = i == 2;
    const std::size_t c_out = last && encoder_emits ? c : plan[i];
    const bool slim_in = full && i > 0;
    const bool slim_out = full || (last && encoder_emits);
    ConvBlock b = make_block("encoder.block" + std::to_string(i + 1), c_in, c_out,
                             3, 2, slim_in, slim_out, true, Activation::relu, rng);
    const ConvBlock& src = teacher.blocks[i];
    if (options.pretrained_encoder &&
        src.conv.weight.value.shape() == b.conv.weight.value.shape()) {
      b.conv.weight.value = src.conv.weight.value;
      b.conv.bias.value = src.conv.bias.value;
      b.bn->gamma.value = src.bn->gamma.value;
      b.bn->beta.value = src.bn->beta.value;
      b.bn->running_mean = src.bn->running_mean;
      b.bn->running_var = src.bn->running_var;
    }
    s.encoder.push_back(std::move(b));
    c_in = c_out;
  }

  const std::size_t feat = plan[2];
  switch (spec.variant) {
    case CompressorVariant::sru_cru: {
      s.compressor.push_back(make_block("compressor.sru", feat, feat, 3, 2, full,
                                        full, true, Activation::relu, rng));
      s.compressor.push_back(make_block("compressor.cru", feat, c, 1, 1, full,
                                        true, false, Activation::relu, rng));
      s.decompressor.push_back(make_block("decompressor.cru", c, feat, 1, 1, true,
                                          false, true, Activation::relu, rng));
      ConvBlock up = make_block("decompressor.sru", feat, feat, 3, 1, false, false,
                                true, Activation::relu, rng);
      up.upsample_input = true;
      s.decompressor.push_back(std::move(up));
      break;
    }
    case CompressorVariant::last_layer_pair:
      s.compressor.push_back(make_block("compressor.ll", feat, c, 3, 1, full, true,
                                        true, Activation::relu, rng));
      s.decompressor.push_back(make_block("decompressor.ll", c, feat, 3, 1, true,
                                          false, true, Activation::relu, rng));
      break;
    case CompressorVariant::decompressor_only:
      s.decompressor.push_back(make_block("decompressor.ll", c, feat, 3, 1, true,
                                          false, true, Activation::relu, rng));
      break;
  }

  ConvBlock block4 = teacher.blocks[3];
  rename_block(block4, "decoder.block4");
  ConvBlock head = teacher.head;
  rename_block(head, "decoder.head");
  block4.set_trainable(false);
  head.set_trainable(false);
  s.decoder.push_back(std::move(block4));
  s.decoder.push_back(std::move(head));
  return s;
}

bool SplitStudent::is_extrapolated(const WidthMultiplier& alpha) const {
  return !widths.contains(alpha);
}

void SplitStudent::check_width(const WidthMultiplier& alpha) const {
  if (is_extrapolated(alpha) && !allow_extrapolation) {
    throw ArgumentError("width " + alpha.str() + " is not in the trained set {" +
                        widths.str() + "}; enable extrapolation to evaluate it");
  }
}

std::size_t SplitStudent::bottleneck_channels(const WidthMultiplier& alpha) const {
  return resolve_width(alpha, spec.channels);
}

std::size_t SplitStudent::bottleneck_extent() const {
  return spec.variant == CompressorVariant::sru_cru ? kGridSize / 2 : kGridSize;
}

template <class T>
Var SplitStudent::encode(Graph<T>& g, Var image, const WidthMultiplier& alpha,
                         bool training) {
  check_width(alpha);
  Var x = image;
  for (ConvBlock& b : encoder) x = block_forward(g, b, x, alpha, training);
  for (ConvBlock& b : compressor) x = block_forward(g, b, x, alpha, training);
  return x;
}

template <class T>
SplitStudent::Taps SplitStudent::decode(Graph<T>& g, Var bottleneck,
                                        const WidthMultiplier& alpha,
                                        bool training) {
  check_width(alpha);
  const std::size_t expected = bottleneck_channels(alpha);
  const std::size_t got = g.value(bottleneck).shape().c;
  if (got != expected) throw ShapeError("decode", "bottleneck channels", expected, got);
  Taps taps;
  Var x = bottleneck;
  for (ConvBlock& b : decompressor) x = block_forward(g, b, x, alpha, training);
  taps.decompressed = x;
  // The decoder is frozen: always inference-mode batch norm.
  taps.decoder_block = block_forward(g, decoder[0], x, alpha, false);
  taps.logits = block_forward(g, decoder[1], taps.decoder_block, alpha, false);
  taps.probs = g.sigmoid(taps.logits);
  return taps;
}

template Var SplitStudent::encode<float>(Graph<float>&, Var, const WidthMultiplier&, bool);
template Var SplitStudent::encode<double>(Graph<double>&, Var, const WidthMultiplier&, bool);
template SplitStudent::Taps SplitStudent::decode<float>(Graph<float>&, Var, const WidthMultiplier&, bool);
template SplitStudent::Taps SplitStudent::decode<double>(Graph<double>&, Var, const WidthMultiplier&, bool);

MacReport SplitStudent::mac_report(const WidthMultiplier& alpha, std::size_t image_h,
                                   std::size_t image_w) const {
  MacReport r;
  r.alpha = alpha;
  std::size_t h = image_h;
  std::size_t w = image_w;
  auto& self = const_cast<SplitStudent&>(*this);
  append_report(self.encoder, Section::encoder, alpha, h, w, r);
  append_report(self.compressor, Section::compressor, alpha, h, w, r);
  append_report(self.decompressor, Section::decompressor, alpha, h, w, r);
  append_report(self.decoder, Section::decoder, alpha, h, w, r);
  return r;
}

std::vector<Parameter*> SplitStudent::trainable_parameters() {
  std::vector<Parameter*> out;
  for (auto* section : {&encoder, &compressor, &decompressor}) {
    for (ConvBlock& b : *section) {
      for (Parameter* p : b.parameters()) out.push_back(p);
    }
  }
  return out;
}

std::vector<NamedTensor> SplitStudent::tensors() {
  std::vector<NamedTensor> out;
  collect_tensors(encoder, out);
  collect_tensors(compressor, out);
  collect_tensors(decompressor, out);
  collect_tensors(decoder, out);
  return out;
}

std::vector<NamedTensor> SplitStudent::decoder_tensors() {
  std::vector<NamedTensor> out;
  collect_tensors(decoder, out);
  return out;
}

std::size_t SplitStudent::compressor_parameter_count() const {
  std::size_t n = 0;
  for (const ConvBlock& b : compressor) n += block_param_count(b);
  return n;
}

std::size_t SplitStudent::storage_elements() {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.tensor->size();
  return n;
}

Tensor32 encode(SplitStudent& student, const Tensor32& images,
                const WidthMultiplier& alpha) {
  Graph<float> g(Graph<float>::Options{.record = false, .checked = true});
  Var z = student.encode(g, g.input(images), alpha, false);
  return g.value(z);
}

Tensor32 decode(SplitStudent& student, const Tensor32& bottleneck,
                const WidthMultiplier& alpha) {
  Graph<float> g(Graph<float>::Options{.record = false, .checked = true});
  auto taps = student.decode(g, g.input(bottleneck), alpha, false);
  return g.value(taps.probs);
}

}  // namespace slimsplit
