// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The slimsplit Authors

#include <gtest/gtest.h>

#include <limits>

#include "oracles.hpp"
#include "slimsplit/codec.hpp"
#include "slimsplit/dataset.hpp"
#include "slimsplit/split_sim.hpp"
#include "slimsplit/tradeoff_csv.hpp"

namespace slimsplit {
namespace {

WidthMultiplier W(std::string_view s) { return WidthMultiplier::parse(s); }

CostModel bytes_only(std::size_t c, int bits) {
  CostModel m;
  m.bottleneck_channels = c;
  m.bits = bits;
  return m;
}

TEST(ChooseAlpha, ByteCapPicksLargestFeasible) {
  const WidthSet set = WidthSet::parse("0.25,0.5,0.75,1.0");
  Budget b;
  b.max_bytes = 2000;
  EXPECT_EQ(choose_alpha(set, bytes_only(48, 8), b), W("0.5"));
  b.max_bytes = 3106;
  EXPECT_EQ(choose_alpha(set, bytes_only(48, 8), b), W("1"));
}

TEST(ChooseAlpha, InfeasibleCarriesMinimumCost) {
  const WidthSet set = WidthSet::parse("0.25,0.5,0.75,1.0");
  Budget b;
  b.max_bytes = 801;
  try {
    choose_alpha(set, bytes_only(48, 8), b);
    FAIL();
  } catch (const InfeasibleBudget& e) {
    EXPECT_EQ(e.min_bytes(), 802u);
  }
}

TEST(ChooseAlpha, NeedsSomeBound) {
  EXPECT_THROW(choose_alpha(WidthSet::default_set(), bytes_only(48, 8), Budget{}), ArgumentError);
}

TEST(ChooseAlpha, MatchesExhaustiveSearch) {
  TeacherNet t = build_teacher(0);
  SplitStudent s = build_student(t, {}, WidthSet::default_set(), SplitMode::full_config);
  const CostModel costs = cost_model(s, 4);
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    Budget b;
    if (rng.uniform() < 0.8) b.max_bytes = static_cast<std::uint64_t>(rng.uniform_int(300, 1700));
    if (!b.max_bytes || rng.uniform() < 0.5) {
      b.max_mac = static_cast<std::uint64_t>(rng.uniform_int(100'000, 3'000'000));
    }
    std::optional<WidthMultiplier> best;
    for (const auto& a : s.widths) {
      const std::uint64_t bytes = payload_size(resolve_width(a, 48), 8, 8, 1, 4);
      std::uint64_t mac = 0;
      for (const auto& l : s.mac_report(a).layers) {
        if (l.section == Section::encoder) mac += l.macs;
      }
      if ((!b.max_bytes || bytes <= *b.max_bytes) && (!b.max_mac || mac <= *b.max_mac)) best = a;
    }
    if (best) {
      EXPECT_EQ(choose_alpha(s.widths, costs, b), *best);
    } else {
      EXPECT_THROW(choose_alpha(s.widths, costs, b), InfeasibleBudget);
    }
  }
}

TEST(Network, TransferTime) {
  NetworkModel fast{std::numeric_limits<double>::infinity(), 0.0};
  EXPECT_EQ(fast.transfer_time(3106), 0.0);
  NetworkModel slow{31060.0, 0.05};
  EXPECT_NEAR(slow.transfer_time(3106), 0.15, 1e-15);
  EXPECT_THROW((NetworkModel{0.0, 0.0}.validate()), ArgumentError);
  EXPECT_THROW((NetworkModel{1.0, -1.0}.validate()), ArgumentError);
}

Tensor32 image(std::uint64_t seed) {
  Rng rng(seed);
  return testing::random_tensor32({1, 3, 64, 64}, rng);
}

TEST(Simulate, LatencyBreakdown) {
  TeacherNet t = build_teacher(0);
  SplitStudent s = build_student(t, {}, WidthSet::default_set(), SplitMode::bandwidth_only);
  auto r = simulate_inference(s, image(1), W("1"), 8, {31060.0, 0.05}, 1e9);
  EXPECT_EQ(r.packet_bytes, 3106u);
  EXPECT_NEAR(r.transfer_time, 0.15, 1e-15);
  EXPECT_EQ(r.encode_time, static_cast<double>(r.encoder_mac) / 1e9);
  EXPECT_EQ(r.total, r.encode_time + r.transfer_time);
  EXPECT_EQ(r.decode_result.shape(), (Shape{1, 1, 8, 8}));
  auto again = simulate_inference(s, image(1), W("1"), 8, {31060.0, 0.05}, 1e9);
  EXPECT_EQ(again.decode_result, r.decode_result);
  EXPECT_THROW(simulate_inference(s, image(1), W("1"), 8, {1.0, 0.0}, 0.0), ArgumentError);
}

TEST(Simulate, FullConfigHalvingCutsInteriorCostFourfold) {
  TeacherNet t = build_teacher(0);
  SplitStudent s = build_student(t, {}, WidthSet::parse("0.5,1.0"), SplitMode::full_config);
  auto full = simulate_inference(s, image(2), W("1"), 8, {1e6, 0.0}, 1e9);
  auto half = simulate_inference(s, image(2), W("0.5"), 8, {1e6, 0.0}, 1e9);
  const double ratio = full.encode_time / half.encode_time;
  // block1 reads the image, so only blocks 2-3 scale quadratically
  EXPECT_GT(ratio, 3.0);
  EXPECT_LE(ratio, 4.0);
}

TEST(Sweep, CartesianSortedAndPure) {
  TeacherNet t = build_teacher(0);
  SplitStudent s = build_student(t, {}, WidthSet::default_set(), SplitMode::full_config);
  SyntheticDatasetSpec spec;
  DatasetSplit val = gen_split(spec, 1, SplitKind::val, 6);
  const auto before = hash_tensors(s.tensors());
  auto pts = sweep(s, val, WidthSet::default_set(), {8, 4});
  EXPECT_EQ(hash_tensors(s.tensors()), before);
  ASSERT_EQ(pts.size(), 10u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(pts[i].bits, i < 5 ? 4 : 8);
    EXPECT_EQ(pts[i].payload_bytes,
              payload_size(resolve_width(pts[i].alpha, 48), 8, 8, 1, pts[i].bits));
    EXPECT_EQ(pts[i].encoder_mac, s.mac_report(pts[i].alpha).total(Section::encoder));
    if (i % 5 != 0) {
      EXPECT_LT(pts[i - 1].alpha, pts[i].alpha);
      EXPECT_LT(pts[i - 1].payload_bytes, pts[i].payload_bytes);
    }
  }
}

TEST(TradeoffCsv, RoundTripAndFormatting) {
  std::vector<TradeoffPoint> pts{{W("1"), 8, 3106, 2800000, 0.8765432109},
                                 {W("0.25"), 8, 802, 500000, 0.5},
                                 {W("0.33"), 4, 834, 600000, 1.0 / 3.0}};
  const std::string csv = tradeoff_csv(pts);
  EXPECT_EQ(csv.substr(0, kTradeoffHeader.size() + 1), std::string(kTradeoffHeader) + "\n");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_NE(csv.find("0.33,4,834,600000,0.333333\n"), std::string::npos);
  EXPECT_NE(csv.find("1,8,3106,2800000,0.876543\n"), std::string::npos);
  auto back = parse_tradeoff_csv(csv);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].alpha, W("0.33"));
  EXPECT_EQ(back[1].alpha, W("0.25"));
  EXPECT_EQ(back[2].payload_bytes, 3106u);
  EXPECT_NEAR(back[2].toy_ap, 0.8765432109, 1e-6);
  EXPECT_EQ(tradeoff_csv(pts), csv);
  EXPECT_EQ(tradeoff_csv(back), csv);
}

TEST(TradeoffCsv, Errors) {
  EXPECT_THROW(tradeoff_csv({}), ArgumentError);
  EXPECT_THROW(parse_tradeoff_csv("a,b\n1,2\n"), ArgumentError);
  EXPECT_THROW(export_tradeoff_csv({{W("1"), 8, 1, 1, 0.5}}, "/nonexistent-dir/x.csv"), IoError);
}

}  // namespace
}  // namespace slimsplit
