// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "slimsplit/split_sim.hpp"

namespace slimsplit {

inline constexpr std::string_view kTradeoffHeader = "alpha,bits,payload_bytes,encoder_mac,toy_ap";

// Header plus one LF-terminated row per point, sorted by (bits, alpha).
// alpha and toy_ap use 6 significant digits; counts are written exactly.
std::string tradeoff_csv(std::vector<TradeoffPoint> points);
void export_tradeoff_csv(const std::vector<TradeoffPoint>& points, const std::string& path);

std::vector<TradeoffPoint> parse_tradeoff_csv(std::string_view text);

}  // namespace slimsplit
