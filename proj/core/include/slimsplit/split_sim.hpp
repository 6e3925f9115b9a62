// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "slimsplit/dataset.hpp"
#include "slimsplit/error.hpp"
#include "slimsplit/model_zoo.hpp"
#include "slimsplit/width.hpp"

namespace slimsplit {

// Deterministic link: transfer time = bytes / bandwidth + rtt.
struct NetworkModel {
  double bandwidth = 1e6;  // bytes per second, may be +inf
  double rtt = 0.0;        // seconds

  void validate() const;
  double transfer_time(std::uint64_t bytes) const;
};

struct Budget {
  std::optional<std::uint64_t> max_bytes;  // packet bytes per inference
  std::optional<std::uint64_t> max_mac;    // encoder MACs per inference

  void validate() const;
};

// Costs of one inference (one image) at width alpha.
struct CostModel {
  std::size_t bottleneck_channels = 48;
  std::size_t extent = kGridSize;  // bottleneck H = W
  int bits = 8;
  std::function<std::uint64_t(const WidthMultiplier&)> encoder_mac;  // optional

  std::uint64_t bytes(const WidthMultiplier& alpha) const;
};

CostModel cost_model(const SplitStudent& student, int bits);

class InfeasibleBudget : public Error {
 public:
  InfeasibleBudget(const std::string& what, std::uint64_t min_bytes,
                   std::optional<std::uint64_t> min_mac)
      : Error(what), min_bytes_(min_bytes), min_mac_(min_mac) {}
  std::uint64_t min_bytes() const { return min_bytes_; }
  const std::optional<std::uint64_t>& min_mac() const { return min_mac_; }

 private:
  std::uint64_t min_bytes_;
  std::optional<std::uint64_t> min_mac_;
};

// Largest alpha in the set whose costs satisfy every bound of the budget.
WidthMultiplier choose_alpha(const WidthSet& widths, const CostModel& costs,
                             const Budget& budget);

struct LatencyBreakdown {
  double encode_time = 0.0;
  double transfer_time = 0.0;
  double total = 0.0;
  std::uint64_t encoder_mac = 0;
  std::uint64_t packet_bytes = 0;
  Tensor32 decode_result;  // (1, 1, 8, 8) objectness
};

// Encodes one image, ships it through the codec and decodes it.
LatencyBreakdown simulate_inference(SplitStudent& student, const Tensor32& image,
                                    const WidthMultiplier& alpha, int bits,
                                    const NetworkModel& net, double compute_rate);

struct TradeoffPoint {
  WidthMultiplier alpha;
  int bits = 8;
  std::uint64_t payload_bytes = 0;  // full packet, header included
  std::uint64_t encoder_mac = 0;
  double toy_ap = 0.0;

  friend bool operator==(const TradeoffPoint&, const TradeoffPoint&) = default;
};

// Evaluates every (alpha, bits) pair on `data`; rows sorted by (bits, alpha).
// Throws if the student's tensors change during the sweep.
std::vector<TradeoffPoint> sweep(SplitStudent& student, const DatasetSplit& data,
                                 const WidthSet& widths, const std::vector<int>& bits_list);

}  // namespace slimsplit
