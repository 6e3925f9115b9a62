// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/slim_layers.hpp"

#include <cmath>
#include <sstream>

namespace slimsplit {

SlimmableConv::SlimmableConv(std::string name_, std::size_t c_in_max,
                             std::size_t c_out_max, std::size_t k,
                             ConvGeometry geom_, bool slim_in_, bool slim_out_)
    : name(std::move(name_)),
      weight(name + ".weight", {c_out_max, c_in_max, k, k}),
      bias(name + ".bias", vector_shape(c_out_max)),
      geom(geom_),
      slim_in(slim_in_),
      slim_out(slim_out_) {
  if (c_in_max < 1 || c_out_max < 1 || k < 1) {
    throw ArgumentError("SlimmableConv " + name + ": channel and kernel sizes must be >= 1");
  }
}

ChannelSlice SlimmableConv::active(const WidthMultiplier& alpha) const {
  return ChannelSlice{slim_in ? resolve_width(alpha, c_in_max()) : c_in_max(),
                      slim_out ? resolve_width(alpha, c_out_max()) : c_out_max()};
}

void SlimmableConv::init_he(Rng& rng, double gain) {
  const double fan_in = static_cast<double>(c_in_max() * kernel() * kernel());
  const double std = gain * std::sqrt(2.0 / fan_in);
  for (auto& v : weight.value.storage()) v = rng.normal(0.0, std);
  bias.value.fill(0.0);
}

template <class T>
Var slim_forward(Graph<T>& g, SlimmableConv& layer, Var x,
                 const WidthMultiplier& alpha) {
  const ChannelSlice slice = layer.active(alpha);
  const std::size_t got = g.value(x).shape().c;
  if (got != slice.c_in) {
    throw ShapeError("slim_forward[" + layer.name + "]", "input channels",
                     slice.c_in, got);
  }
  return g.conv2d(x, layer.weight, layer.bias, slice, layer.geom, layer.name);
}

std::uint64_t mac_count(const SlimmableConv& layer, const WidthMultiplier& alpha,
                        std::size_t out_h, std::size_t out_w) {
  const ChannelSlice s = layer.active(alpha);
  const std::uint64_t k = layer.kernel();
  return static_cast<std::uint64_t>(out_h) * out_w * k * k * s.c_in * s.c_out;
}

ConvBlock::ConvBlock(SlimmableConv conv_, bool with_bn, Activation act_)
    : conv(std::move(conv_)), act(act_) {
  if (with_bn) bn.emplace(conv.name + ".bn", conv.c_out_max());
}

std::vector<Parameter*> ConvBlock::parameters() {
  std::vector<Parameter*> out{&conv.weight, &conv.bias};
  if (bn) {
    out.push_back(&bn->gamma);
    out.push_back(&bn->beta);
  }
  return out;
}

void ConvBlock::set_trainable(bool on) {
  for (Parameter* p : parameters()) p->trainable = on;
}

template <class T>
Var block_forward(Graph<T>& g, ConvBlock& block, Var x,
                  const WidthMultiplier& alpha, bool training) {
  if (block.upsample_input) x = g.upsample2x(x);
  Var y = slim_forward(g, block.conv, x, alpha);
  if (block.bn) y = g.batch_norm(y, *block.bn, training);
  return g.activate(y, block.act);
}

template Var slim_forward<float>(Graph<float>&, SlimmableConv&, Var, const WidthMultiplier&);
template Var slim_forward<double>(Graph<double>&, SlimmableConv&, Var, const WidthMultiplier&);
template Var block_forward<float>(Graph<float>&, ConvBlock&, Var, const WidthMultiplier&, bool);
template Var block_forward<double>(Graph<double>&, ConvBlock&, Var, const WidthMultiplier&, bool);

const char* section_name(Section s) {
  switch (s) {
    case Section::encoder:
      return "encoder";
    case Section::compressor:
      return "compressor";
    case Section::decompressor:
      return "decompressor";
    case Section::decoder:
      return "decoder";
  }
  return "unknown";
}

std::uint64_t MacReport::total() const {
  std::uint64_t sum = 0;
  for (const auto& l : layers) sum += l.macs;
  return sum;
}

std::uint64_t MacReport::total(Section s) const {
  std::uint64_t sum = 0;
  for (const auto& l : layers) {
    if (l.section == s) sum += l.macs;
  }
  return sum;
}

std::string mac_report_csv(const std::vector<MacReport>& reports) {
  std::ostringstream out;
  out << "layer,section,alpha,macs\n";
  for (const auto& r : reports) {
    for (const auto& l : r.layers) {
      out << l.layer << ',' << section_name(l.section) << ',' << r.alpha.str()
          << ',' << l.macs << '\n';
    }
  }
  return out.str();
}

}  // namespace slimsplit
