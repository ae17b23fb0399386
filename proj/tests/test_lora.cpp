#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "iotsim/lora_network.hpp"
#include "iotsim/runner.hpp"

using namespace iotsim;
using namespace iotsim::lora;
using iotsim::testing::lora_perfect;
using iotsim::testing::lora_star;

namespace {

void expect_steady_cap(const RunResult& r, std::uint64_t cap) {
  ASSERT_TRUE(r.all_joined_at.has_value());
  const auto steady = r.steady_windows();
  ASSERT_FALSE(steady.empty());
  for (const auto& w : steady) {
    EXPECT_EQ(w.dps_ok, cap) << "node " << w.node << " window " << w.start.seconds();
    EXPECT_EQ(w.drps_sent, cap);
    EXPECT_EQ(w.drp_repeats, 0u);
    EXPECT_EQ(w.dps_crc_err, 0u);
  }
}

}  // namespace

TEST(LoraConfigTest, SlotArithmetic) {
  LoraConfig c2;
  EXPECT_NEAR(c2.slot_s(), 0.862, 1e-9);
  EXPECT_EQ(c2.max_packets_per_window(6, 900), 174u);
  LoraConfig c1;
  c1.radio = airtime::make_config(9, 125000);
  EXPECT_EQ(c1.max_packets_per_window(6, 900), 12u);
  EXPECT_GT(c1.timeout_s(), c1.exchange_s() - c1.gw_delay_s);
}

TEST(LoraNetworkTest, ConfigTwoPollsCapPerWindow) {
  const auto r = run_scenario(lora_perfect(7, 500, 6));
  EXPECT_EQ(r.max_packets, 174u);
  expect_steady_cap(r, 174);
  EXPECT_EQ(r.overlapping_starts, 0u);
  EXPECT_LE(r.max_drps_per_poll, 1);
}

TEST(LoraNetworkTest, ConfigOnePollsCapPerWindow) {
  const auto r = run_scenario(lora_perfect(9, 125, 6));
  EXPECT_EQ(r.max_packets, 12u);
  expect_steady_cap(r, 12);
  EXPECT_EQ(r.overlapping_starts, 0u);
}

TEST(LoraNetworkTest, CapMatchesFloorFormulaForOtherSizes) {
  for (int n : {1, 3, 7}) {
    const auto s = lora_perfect(7, 500, n, 2700);
    const auto r = run_scenario(s);
    // Each node can answer at most once per ToA(DP) / duty.
    const double dp_period = airtime::time_on_air(s.lora.radio, s.lora.dp_payload).total / 0.01;
    const auto cap = static_cast<std::uint64_t>(std::floor(900.0 / std::max(n * s.lora.slot_s(), dp_period)));
    EXPECT_EQ(r.max_packets, cap) << n;
    expect_steady_cap(r, cap);
  }
}

TEST(LoraNetworkTest, DutyBudgetHoldsOverSeveralHours) {
  for (int sf : {7, 9, 12}) {
    const auto r = run_scenario(lora_perfect(sf, 125, 6, 4 * 3600, 3));
    for (const auto& d : r.duty) EXPECT_LE(d.peak_airtime_s, 36.0 + 1e-9) << "sf " << sf << " device " << d.device;
    EXPECT_GT(r.duty[0].total_airtime_s, 0);
  }
}

TEST(LoraNetworkTest, UnreachableNodeStaysInPollOrder) {
  auto s = lora_perfect(7, 500, 2, 3600);
  Engine engine;
  Medium medium;
  metrics::Collector collector;
  ChannelModel channel = s.channel_model();
  LoraNetwork net(engine, medium, channel, s.lora_config(), s.lora_nodes(), 2, collector);
  net.start();
  engine.run_until(SimTime::from_seconds(120));
  ASSERT_TRUE(net.all_joined_at().has_value());
  channel.link.matrix.erase({0, 2});
  channel.link.matrix.erase({2, 0});
  engine.run_until(SimTime::from_seconds(3600));
  EXPECT_EQ(net.gateway().registry.size(), 2u);
  const auto windows = metrics::build_windows(collector.records(), 2, SimTime::from_seconds(900),
                                              SimTime::from_seconds(3600));
  for (const auto& w : windows) {
    if (w.start < SimTime::from_seconds(900)) continue;
    if (w.node == 1) EXPECT_GT(w.dps_ok, 0u);
    if (w.node == 2) {
      // An epoch boundary may cut the last retry sequence short.
      EXPECT_GE(w.drps_sent, 4u);
      EXPECT_EQ(w.dps_ok, 0u);
    } else {
      EXPECT_EQ(w.dps_ok, w.drps_sent);
    }
  }
}

TEST(LoraNetworkTest, LateNodeJoinsAtNextRefresh) {
  auto s = lora_perfect(7, 500, 2, 3600);
  s.nodes[1].start_time_s = 1200;
  const auto r = run_scenario(s);
  ASSERT_TRUE(r.all_joined_at.has_value());
  EXPECT_GE(r.all_joined_at->seconds(), 1800);
  EXPECT_LE(r.all_joined_at->seconds(), 1800 + s.lora.join_window_s + 1);
  EXPECT_EQ(r.steady_from, SimTime::from_seconds(2700));
}

TEST(LoraNetworkTest, AlwaysCorruptingUplinkExhaustsRetries) {
  auto s = lora_perfect(7, 500, 1, 3600);
  Engine engine;
  Medium medium;
  metrics::Collector collector;
  ChannelModel channel = s.channel_model();
  channel.sensitivity_dbm = -116;
  channel.p_corrupt = CorruptionCurve({{7, 1.0}, {8, 0.0}});
  LoraNetwork net(engine, medium, channel, s.lora_config(), s.lora_nodes(), 5, collector);
  net.start();
  engine.run_until(SimTime::from_seconds(120));
  ASSERT_TRUE(net.all_joined_at().has_value());
  // From here on every DP arrives 6 dB above sensitivity and is corrupted.
  channel.link.matrix[{1, 0}] = -110;
  engine.run_until(SimTime::from_seconds(3600));
  const auto windows = metrics::build_windows(collector.records(), 1, SimTime::from_seconds(900),
                                              SimTime::from_seconds(3600));
  for (const auto& w : windows) {
    if (w.start < SimTime::from_seconds(900)) continue;
    EXPECT_GT(w.drps_sent, 0u);
    EXPECT_EQ(w.dps_ok, 0u);
    EXPECT_EQ(w.dps_crc_err, w.drps_sent);
    EXPECT_NEAR(*metrics::retx_ratio(w), 0.75, 4.0 / static_cast<double>(w.drps_sent));
    EXPECT_DOUBLE_EQ(*metrics::pdr(w), 0.0);
  }
  EXPECT_EQ(net.max_drps_per_poll(), 4);
}

TEST(LoraNetworkTest, NeverMoreThanFourDrpsPerPoll) {
  auto s = lora_star(7, 500, {-50, -95, -112, -114}, 3600, 9);
  s.channel.jitter_sd_db = 3;
  s.channel.sensitivity_dbm = -116;
  const auto r = run_scenario(s);
  EXPECT_LE(r.max_drps_per_poll, 4);
  EXPECT_GE(r.max_drps_per_poll, 2);
  for (const auto& w : r.windows) EXPECT_LE(w.dps_ok + w.dps_crc_err, w.drps_sent);
}

TEST(NodeHandleDrp, RepliesToIntactAddressedPolls) {
  LoraNodeState node;
  node.joined = true;
  node.pir_pending = true;
  Frame drp;
  drp.kind = FrameKind::Drp;
  drp.dst = 3;
  drp.seq = 77;
  auto dp = node_handle_drp(node, 3, drp, true, 60);
  ASSERT_TRUE(dp.has_value());
  EXPECT_EQ(dp->kind, FrameKind::Dp);
  EXPECT_EQ(dp->seq, 77u);
  EXPECT_EQ(dp->dst, kGateway);
  EXPECT_TRUE(dp->pir_flag);
  EXPECT_FALSE(node.pir_pending);
  EXPECT_EQ(dp->payload.size(), 60u);
  EXPECT_TRUE(crc_ok(*dp));
  dp->payload[10] ^= 0x01;
  EXPECT_FALSE(crc_ok(*dp));

  EXPECT_FALSE(node_handle_drp(node, 3, drp, false, 60).has_value());
  EXPECT_FALSE(node_handle_drp(node, 4, drp, true, 60).has_value());
  node.joined = false;
  EXPECT_FALSE(node_handle_drp(node, 3, drp, true, 60).has_value());
}

TEST(NodeHandleDrp, PirFlagProbabilityMatchesClosedForm) {
  for (int k : {1, 3, 6}) {
    LoraNodeState node;
    node.joined = true;
    node.occupancy = 0.3;
    node.rng = Rng(100 + k);
    Frame drp;
    drp.kind = FrameKind::Drp;
    drp.dst = 1;
    int flagged = 0;
    const int polls = 20000;
    for (int i = 0; i < polls; ++i) {
      for (int j = 0; j < k; ++j) sample_pir(node);
      flagged += node_handle_drp(node, 1, drp, true, 60)->pir_flag;
    }
    EXPECT_NEAR(flagged / double(polls), 1 - std::pow(0.7, k), 0.02) << k;
  }
  LoraNodeState idle;
  for (int i = 0; i < 100; ++i) sample_pir(idle);
  EXPECT_FALSE(idle.pir_pending);
}
