// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "slimsplit/slim_layers.hpp"
#include "slimsplit/width.hpp"

namespace slimsplit {

inline constexpr std::size_t kImageSize = 64;
inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kGridSize = 8;

// A tensor owned by a model, exposed for hashing and checkpoints.
struct NamedTensor {
  enum class Kind : std::uint8_t { parameter, statistic };
  std::string name;
  Tensor64* tensor = nullptr;
  Kind kind = Kind::parameter;
};

// FNV-1a over names and raw element bytes of the selected tensors.
std::uint64_t hash_tensors(const std::vector<NamedTensor>& tensors,
                           bool include_statistics = true);

// Names, parameters and batch-norm statistics of a list of blocks.
void collect_tensors(std::vector<ConvBlock>& blocks,
                     std::vector<NamedTensor>& out);

// Four stride-2/2/2/1 conv-bn-relu blocks over a 64x64x3 image, then a 1x1
// conv head producing per-cell objectness logits on the 8x8 grid.
struct TeacherNet {
  static constexpr std::array<std::size_t, 4> kChannels{16, 32, 64, 64};

  std::vector<ConvBlock> blocks;
  ConvBlock head;

  struct Outputs {
    std::vector<Var> blocks;  // post-activation output of each block
    Var logits;
    Var probs;
  };

  template <class T>
  Outputs forward(Graph<T>& g, Var image, bool training);

  std::vector<Parameter*> parameters();
  std::vector<NamedTensor> tensors();
  std::size_t parameter_count() const;
  void freeze();
};

TeacherNet build_teacher(std::uint64_t seed);

// Compressor/decompressor designs around the split point.
//  sru_cru           : 3x3 stride-2 spatial reduction + 1x1 channel reduction
//                      (+ReLU); mirrored by 1x1 expansion + upsample + 3x3.
//                      The bottleneck is 4x4 spatially.
//  last_layer_pair   : a copy of the last encoder block as compressor and as
//                      decompressor, emitting C channels at 8x8.
//  decompressor_only : the last encoder block itself emits C channels; only a
//                      decompressor is added.
enum class CompressorVariant : std::uint8_t {
  sru_cru = 0,
  last_layer_pair = 1,
  decompressor_only = 2,
};
const char* variant_name(CompressorVariant v);
CompressorVariant parse_variant(const std::string& name);

// bandwidth_only slims just the layers touching the bottleneck; full_config
// slims every encoder and compressor convolution.
enum class SplitMode : std::uint8_t { bandwidth_only = 0, full_config = 1 };
const char* mode_name(SplitMode m);
SplitMode parse_mode(const std::string& name);

struct BottleneckSpec {
  std::size_t channels = 48;
  CompressorVariant variant = CompressorVariant::last_layer_pair;
};

struct StudentOptions {
  bool pretrained_encoder = true;
  bool allow_extrapolation = false;  // evaluate widths outside the trained set
  std::uint64_t seed = 0;
};

// Client-side encoder + compressor and server-side decompressor + frozen
// teacher decoder, sharing one weight set across every width.
struct SplitStudent {
  BottleneckSpec spec;
  SplitMode mode = SplitMode::bandwidth_only;
  WidthSet widths;
  bool allow_extrapolation = false;

  std::vector<ConvBlock> encoder;
  std::vector<ConvBlock> compressor;
  std::vector<ConvBlock> decompressor;
  std::vector<ConvBlock> decoder;  // teacher block 4 + head, frozen

  struct Taps {
    Var decompressed;   // full-width decompressor output
    Var decoder_block;  // decoder block output before the head
    Var logits;
    Var probs;
  };

  // Throws when alpha is outside the trained set and extrapolation is off.
  void check_width(const WidthMultiplier& alpha) const;
  bool is_extrapolated(const WidthMultiplier& alpha) const;

  std::size_t bottleneck_channels(const WidthMultiplier& alpha) const;
  // Spatial size of the bottleneck for a 64x64 input.
  std::size_t bottleneck_extent() const;

  template <class T>
  Var encode(Graph<T>& g, Var image, const WidthMultiplier& alpha, bool training);
  template <class T>
  Taps decode(Graph<T>& g, Var bottleneck, const WidthMultiplier& alpha,
                 bool training);

  // Formula-based per-layer MAC counts for one image of the given size.
  MacReport mac_report(const WidthMultiplier& alpha,
                       std::size_t image_h = kImageSize,
                       std::size_t image_w = kImageSize) const;

  std::vector<Parameter*> trainable_parameters();
  std::vector<NamedTensor> tensors();
  std::vector<NamedTensor> decoder_tensors();
  std::size_t compressor_parameter_count() const;
  std::size_t storage_elements();
};

SplitStudent build_student(const TeacherNet& teacher, const BottleneckSpec& spec,
                           const WidthSet& widths, SplitMode mode,
                           const StudentOptions& options = {});

// Inference-mode (32-bit) entry points used by the codec and simulator.
Tensor32 encode(SplitStudent& student, const Tensor32& images,
                const WidthMultiplier& alpha);
Tensor32 decode(SplitStudent& student, const Tensor32& bottleneck,
                const WidthMultiplier& alpha);

}  // namespace slimsplit
