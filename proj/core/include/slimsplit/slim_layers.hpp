// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slimsplit/autodiff.hpp"
#include "slimsplit/rng.hpp"
#include "slimsplit/width.hpp"

namespace slimsplit {

// Convolution stored at maximum width and executed on a channel prefix.
// slim_in / slim_out say which side follows alpha; an unslimmed side always
// runs at its maximum.
struct SlimmableConv {
  std::string name;
  Parameter weight;  // (c_out_max, c_in_max, k, k)
  Parameter bias;    // (c_out_max, 1, 1, 1)
  ConvGeometry geom;
  bool slim_in = false;
  bool slim_out = false;

  SlimmableConv() = default;
  SlimmableConv(std::string name, std::size_t c_in_max, std::size_t c_out_max,
                std::size_t k, ConvGeometry geom, bool slim_in, bool slim_out);

  std::size_t c_in_max() const { return weight.value.shape().c; }
  std::size_t c_out_max() const { return weight.value.shape().n; }
  std::size_t kernel() const { return weight.value.shape().h; }

  ChannelSlice active(const WidthMultiplier& alpha) const;

  // He fan-in initialization of the weights, zero bias.
  void init_he(Rng& rng, double gain = 1.0);
};

// Runs `layer` at width alpha; raises ShapeError when x does not carry the
// channel count alpha resolves to.
template <class T>
Var slim_forward(Graph<T>& g, SlimmableConv& layer, Var x,
                 const WidthMultiplier& alpha);

// out_h * out_w * k^2 * active_in * active_out for one image.
std::uint64_t mac_count(const SlimmableConv& layer, const WidthMultiplier& alpha,
                        std::size_t out_h, std::size_t out_w);

// [2x nearest upsample ->] conv -> optional batch norm -> activation.
struct ConvBlock {
  SlimmableConv conv;
  std::optional<BatchNormState> bn;
  Activation act = Activation::relu;
  bool upsample_input = false;

  ConvBlock() = default;
  ConvBlock(SlimmableConv conv, bool with_bn, Activation act);

  // Every trainable parameter in declaration order.
  std::vector<Parameter*> parameters();
  void set_trainable(bool on);
};

template <class T>
Var block_forward(Graph<T>& g, ConvBlock& block, Var x,
                  const WidthMultiplier& alpha, bool training);

// Which side of the split a layer belongs to.
enum class Section : std::uint8_t { encoder, compressor, decompressor, decoder };
const char* section_name(Section s);

struct LayerMacs {
  std::string layer;
  Section section = Section::encoder;
  std::uint64_t macs = 0;
};

// Per-layer MAC counts of one forward pass at one width.
struct MacReport {
  WidthMultiplier alpha;
  std::vector<LayerMacs> layers;

  std::uint64_t total() const;
  std::uint64_t total(Section s) const;
  // Client-side work: encoder plus compressor.
  std::uint64_t client() const {
    return total(Section::encoder) + total(Section::compressor);
  }
};

// CSV with header `layer,section,alpha,macs`, one row per layer.
std::string mac_report_csv(const std::vector<MacReport>& reports);

}  // namespace slimsplit
