// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include "slimsplit/tradeoff_csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

namespace slimsplit {
namespace {

std::string sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, std::size_t row) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ArgumentError("tradeoff csv row " + std::to_string(row) + ": bad number '" +
                        std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string tradeoff_csv(std::vector<TradeoffPoint> points) {
  if (points.empty()) throw ArgumentError("tradeoff csv: no points");
  std::stable_sort(points.begin(), points.end(), [](const TradeoffPoint& x, const TradeoffPoint& y) {
    return x.bits != y.bits ? x.bits < y.bits : x.alpha < y.alpha;
  });
  std::string out(kTradeoffHeader);
  out += '\n';
  for (const TradeoffPoint& p : points) {
    out += sig6(p.alpha.value()) + ',' + std::to_string(p.bits) + ',' +
           std::to_string(p.payload_bytes) + ',' + std::to_string(p.encoder_mac) + ',' +
           sig6(p.toy_ap) + '\n';
  }
  return out;
}

void export_tradeoff_csv(const std::vector<TradeoffPoint>& points, const std::string& path) {
  const std::string text = tradeoff_csv(points);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path, "cannot open for writing");
  f << text;
  if (!f.flush()) throw IoError(path, "write failed");
}

std::vector<TradeoffPoint> parse_tradeoff_csv(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines.front() != kTradeoffHeader) {
    throw ArgumentError("tradeoff csv: missing or wrong header");
  }
  std::vector<TradeoffPoint> points;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 5) throw ArgumentError("tradeoff csv row " + std::to_string(i) + ": expected 5 fields");
    TradeoffPoint p;
    p.alpha = WidthMultiplier::parse(f[0]);
    p.bits = parse_number<int>(f[1], i);
    p.payload_bytes = parse_number<std::uint64_t>(f[2], i);
    p.encoder_mac = parse_number<std::uint64_t>(f[3], i);
    p.toy_ap = parse_number<double>(f[4], i);
    points.push_back(p);
  }
  return points;
}

}  // namespace slimsplit
