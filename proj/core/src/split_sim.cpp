// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/split_sim.hpp"

#include <algorithm>
#include <cmath>

#include "slimsplit/codec.hpp"
#include "slimsplit/trainer.hpp"

namespace slimsplit {

void NetworkModel::validate() const {
  if (!(bandwidth > 0.0)) throw ArgumentError("network bandwidth must be > 0");
  if (!(rtt >= 0.0) || !std::isfinite(rtt)) throw ArgumentError("network rtt must be >= 0");
}

double NetworkModel::transfer_time(std::uint64_t bytes) const {
  validate();
  return static_cast<double>(bytes) / bandwidth + rtt;
}

void Budget::validate() const {
  if (!max_bytes && !max_mac) throw ArgumentError("budget needs max_bytes or max_mac");
}

std::uint64_t CostModel::bytes(const WidthMultiplier& alpha) const {
  return payload_size(resolve_width(alpha, bottleneck_channels), extent, extent, 1, bits);
}

CostModel cost_model(const SplitStudent& student, int bits) {
  CostModel m;
  m.bottleneck_channels = student.spec.channels;
  m.extent = student.bottleneck_extent();
  m.bits = bits;
  m.encoder_mac = [&student](const WidthMultiplier& a) {
    return student.mac_report(a).total(Section::encoder);
  };
  return m;
}

WidthMultiplier choose_alpha(const WidthSet& widths, const CostModel& costs,
                             const Budget& budget) {
  if (widths.empty()) throw ArgumentError("choose_alpha: width set is empty");
  budget.validate();
  if (budget.max_mac && !costs.encoder_mac) {
    throw ArgumentError("choose_alpha: MAC bound set but the cost model has no MAC function");
  }
  // Costs are monotone in alpha, but the search does not rely on it.
  std::optional<WidthMultiplier> best;
  std::uint64_t min_bytes = UINT64_MAX;
  std::optional<std::uint64_t> min_mac;
  for (const WidthMultiplier& a : widths) {
    const std::uint64_t b = costs.bytes(a);
    min_bytes = std::min(min_bytes, b);
    bool ok = !budget.max_bytes || b <= *budget.max_bytes;
    if (costs.encoder_mac) {
      const std::uint64_t m = costs.encoder_mac(a);
      min_mac = min_mac ? std::min(*min_mac, m) : m;
      if (budget.max_mac && m > *budget.max_mac) ok = false;
    }
    if (ok && (!best || a > *best)) best = a;
  }
  if (!best) {
    std::string what = "infeasible budget: minimum packet is " + std::to_string(min_bytes) + " bytes";
    if (min_mac) what += ", minimum encoder cost " + std::to_string(*min_mac) + " MAC";
    throw InfeasibleBudget(what, min_bytes, min_mac);
  }
  return *best;
}

LatencyBreakdown simulate_inference(SplitStudent& student, const Tensor32& image,
                                    const WidthMultiplier& alpha, int bits,
                                    const NetworkModel& net, double compute_rate) {
  if (!(compute_rate > 0.0)) throw ArgumentError("compute_rate must be > 0");
  net.validate();
  if (image.shape().n != 1) throw ShapeError("simulate_inference", "batch", 1, image.shape().n);

  const Tensor32 z = encode(student, image, alpha);
  PacketInfo info;
  info.alpha = alpha;
  info.variant = student.spec.variant;
  info.c_max = student.spec.channels;
  info.extrapolated = student.is_extrapolated(alpha);
  const auto packet = encode_packet(z, bits, info);
  const DecodedPacket received = decode_packet(packet);

  LatencyBreakdown r;
  r.encoder_mac = student.mac_report(alpha).total(Section::encoder);
  r.packet_bytes = packet.size();
  r.encode_time = static_cast<double>(r.encoder_mac) / compute_rate;
  r.transfer_time = net.transfer_time(r.packet_bytes);
  r.total = r.encode_time + r.transfer_time;
  r.decode_result = decode(student, received.values, alpha);
  return r;
}

std::vector<TradeoffPoint> sweep(SplitStudent& student, const DatasetSplit& data,
                                 const WidthSet& widths, const std::vector<int>& bits_list) {
  if (widths.empty()) throw ArgumentError("sweep: width set is empty");
  if (bits_list.empty()) throw ArgumentError("sweep: bits list is empty");
  const std::uint64_t before = hash_tensors(student.tensors());
  std::vector<TradeoffPoint> points;
  for (int bits : bits_list) {
    const CostModel costs = cost_model(student, bits);
    for (const WidthMultiplier& a : widths) {
      TradeoffPoint p;
      p.alpha = a;
      p.bits = bits;
      p.payload_bytes = costs.bytes(a);
      p.encoder_mac = costs.encoder_mac(a);
      p.toy_ap = evaluate(student, nullptr, data, a, bits).toy_ap;
      points.push_back(p);
    }
  }
  if (hash_tensors(student.tensors()) != before) {
    throw Error("sweep: student weights changed during the sweep");
  }
  std::stable_sort(points.begin(), points.end(), [](const TradeoffPoint& x, const TradeoffPoint& y) {
    return x.bits != y.bits ? x.bits < y.bits : x.alpha < y.alpha;
  });
  return points;
}

}  // namespace slimsplit
