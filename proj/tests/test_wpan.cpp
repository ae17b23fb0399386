#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "helpers.hpp"
#include "iotsim/runner.hpp"
#include "iotsim/wpan_network.hpp"

using namespace iotsim;
using namespace iotsim::wpan;
using iotsim::testing::full_mesh;
using iotsim::testing::Link;
using iotsim::testing::wpan_net;

namespace {

struct Harness {
  explicit Harness(const Scenario& s) : channel(s.channel_model()) {
    net = std::make_unique<WpanNetwork>(engine, medium, channel, s.wpan, s.wpan_nodes(), s.seed, collector);
    net->keep_trails(true);
    net->start();
  }
  void run(double seconds) { engine.run_until(SimTime::from_seconds(seconds)); }
  std::size_t on_air(FrameKind kind) const {
    std::size_t n = 0;
    for (const auto& r : medium.airtime_log()) n += r.kind == kind;
    return n;
  }
  std::uint64_t count(metrics::CounterKind kind, DeviceId node) const {
    std::uint64_t n = 0;
    for (const auto& r : collector.records()) n += r.kind == kind && r.node == node;
    return n;
  }

  Engine engine;
  Medium medium;
  metrics::Collector collector;
  ChannelModel channel;
  std::unique_ptr<WpanNetwork> net;
};

}  // namespace

TEST(WpanFrames, DurationAtTwoHundredFiftyKbps) {
  EXPECT_EQ(frame_duration(6, 100, 250000), SimTime::from_ns(3392000));
  EXPECT_EQ(frame_duration(6, 5, 250000), SimTime::from_ns(352000));
}

TEST(TreeJoin, SelectionRule) {
  const ParentCandidate gw_strong[] = {{0, 0, -60}, {1, 1, -40}};
  EXPECT_EQ(tree_join(gw_strong, -90)->id, 0u);
  const ParentCandidate gw_weak[] = {{0, 0, -95}, {1, 1, -70}};
  EXPECT_EQ(tree_join(gw_weak, -90)->id, 1u);
  const ParentCandidate ties[] = {{2, 1, -80}, {3, 1, -70}, {4, 2, -50}};
  EXPECT_EQ(tree_join(ties, -90)->id, 3u);
  const ParentCandidate none[] = {{0, 0, -95}, {1, 1, -91}};
  EXPECT_FALSE(tree_join(none, -90).has_value());
  const ParentCandidate edge[] = {{0, 0, -90}};
  EXPECT_EQ(tree_join(edge, -90)->id, 0u);
}

TEST(WpanNetworkTest, SingleHopPerfectLinkOneFrameOneAck) {
  Harness h(wpan_net(1, {{"gw", "node1", -50}}, 1800));
  h.run(1800);
  const auto delivered = h.count(metrics::CounterKind::EdpDelivered, 1);
  EXPECT_GT(delivered, 170u);
  EXPECT_EQ(h.on_air(FrameKind::Edp), delivered + h.net->stats()[1].queue_drops);
  EXPECT_EQ(h.net->stats()[1].data_attempts, delivered);
  const std::size_t join_frames = h.on_air(FrameKind::JoinReq) + h.on_air(FrameKind::JoinAck);
  EXPECT_EQ(h.on_air(FrameKind::Ack), delivered + join_frames);
  EXPECT_EQ(h.net->tree()[1].depth, 1);
}

TEST(WpanNetworkTest, TwoHopPerfectChainTwoFramesTwoAcks) {
  auto s = wpan_net(2, {{"gw", "node1", -50}, {"node1", "node2", -50}}, 1800);
  s.nodes[0].sensing = false;
  Harness h(s);
  h.run(1800);
  ASSERT_TRUE(h.net->tree_consistent());
  EXPECT_EQ(h.net->tree()[2].parent, DeviceId{1});
  EXPECT_EQ(h.net->tree()[2].depth, 2);
  const auto delivered = h.count(metrics::CounterKind::EdpDelivered, 2);
  EXPECT_GT(delivered, 170u);
  EXPECT_EQ(h.on_air(FrameKind::Edp), 2 * delivered);
  const std::size_t join_frames = h.on_air(FrameKind::JoinReq) + h.on_air(FrameKind::JoinAck);
  EXPECT_EQ(h.on_air(FrameKind::Ack), 2 * delivered + join_frames);
}

TEST(WpanNetworkTest, NinetyEdpsPerWindowOnPerfectChannel) {
  const auto r = run_scenario(wpan_net(4, full_mesh(4, -55), 3600, 7));
  EXPECT_EQ(r.max_packets, 90u);
  ASSERT_TRUE(r.all_joined_at.has_value());
  for (const auto& w : r.steady_windows()) EXPECT_EQ(w.edp_delivered, 90u) << w.node;
  for (DeviceId id = 1; id <= 4; ++id) EXPECT_EQ(r.tree[id].parent, DeviceId{0});
}

TEST(WpanNetworkTest, RelayLossMultipliesAlongPath) {
  // Relay uplink sits 12 dB above sensitivity where every frame corrupts with
  // probability q; q^4 = 0.5 makes the per-hop delivery after retries 0.5.
  auto s = wpan_net(2, {{"gw", "node1", -80}, {"node1", "node2", -50}}, 3000, 3);
  s.nodes[0].sensing = false;
  s.wpan.edp_period_s = 1.0;
  s.wpan.rssi_join_threshold_dbm = -85;
  const double q = std::pow(0.5, 0.25);
  s.channel.p_corrupt = {{12.0, q}, {13.0, 0.0}};
  const auto r = run_scenario(s);
  ASSERT_TRUE(r.all_joined_at.has_value());
  const double offered = static_cast<double>(r.device_stats[2].offered_from_origin.at(2));
  const double relayed = static_cast<double>(r.device_stats[1].received_from_origin.at(2));
  const double delivered = static_cast<double>(r.device_stats[0].received_from_origin.at(2));
  EXPECT_GT(offered, 2000);
  EXPECT_NEAR(relayed / offered, 1.0, 1e-3);
  EXPECT_NEAR(delivered / offered, 0.5, 0.04);
}

TEST(WpanNetworkTest, ContentionReducesPerSenderGoodput) {
  auto saturated = [](int n) {
    auto s = wpan_net(n, full_mesh(n, -50), 120, 11);
    s.wpan.edp_period_s = 0.004;
    return run_scenario(s);
  };
  const auto one = saturated(1);
  const auto two = saturated(2);
  const double solo = static_cast<double>(one.device_stats[0].received_from_origin.at(1));
  std::uint64_t losses = 0;
  for (DeviceId id : {1u, 2u}) {
    const double goodput = static_cast<double>(two.device_stats[0].received_from_origin.at(id));
    EXPECT_LT(goodput, solo) << id;
    losses += two.device_stats[id].channel_access_failures + two.device_stats[id].retry_failures;
  }
  EXPECT_GT(losses, 0u);
}

TEST(WpanNetworkTest, PdpRateFollowsOccupancy) {
  auto s = wpan_net(1, {{"gw", "node1", -50}}, 7200, 5);
  s.nodes[0].occupancy = 0.2;
  const auto r = run_scenario(s);
  double generated = 0, delivered = 0;
  const auto steady = r.steady_windows();
  for (const auto& w : steady) {
    generated += static_cast<double>(w.pdp_generated);
    delivered += static_cast<double>(w.pdp_delivered);
  }
  const double per_window = generated / static_cast<double>(steady.size());
  EXPECT_NEAR(per_window, 450 * 0.2, 3 * std::sqrt(450 * 0.2 * 0.8 / static_cast<double>(steady.size())));
  EXPECT_EQ(delivered, generated);

  s.nodes[0].occupancy = 0.0;
  for (const auto& w : run_scenario(s).windows) EXPECT_EQ(w.pdp_generated, 0u);
}

TEST(WpanNetworkTest, QueueOverflowDropsAreCountedAndConserved) {
  auto s = wpan_net(3, full_mesh(3, -50), 60, 2);
  s.wpan.edp_period_s = 0.002;
  const auto r = run_scenario(s);
  for (DeviceId id = 1; id <= 3; ++id) {
    const auto& st = r.device_stats[id];
    EXPECT_GT(st.queue_drops, 0u);
    const std::uint64_t offered = st.offered_from_origin.at(id);
    const std::uint64_t delivered = r.device_stats[0].received_from_origin.at(id);
    // A retry failure may still have reached the gateway when only the ack was lost.
    const std::uint64_t never_sent = st.queue_drops + st.channel_access_failures;
    EXPECT_LE(delivered + never_sent, offered);
    EXPECT_GE(delivered + never_sent + st.retry_failures + static_cast<std::uint64_t>(s.wpan.queue_depth) + 1, offered);
  }
  std::uint64_t drop_records = 0;
  for (const auto& rec : r.records) drop_records += rec.kind == metrics::CounterKind::QueueDrop;
  EXPECT_EQ(drop_records, r.device_stats[1].queue_drops + r.device_stats[2].queue_drops +
                              r.device_stats[3].queue_drops);
}

TEST(WpanNetworkTest, TreeConsistentAndTrailsDescend) {
  // Line of five nodes: each hears only its neighbours.
  std::vector<Link> links{{"gw", "node1", -60}};
  for (int i = 1; i < 5; ++i) links.push_back({"node" + std::to_string(i), "node" + std::to_string(i + 1), -60});
  links.push_back({"gw", "node2", -91});
  Harness h(wpan_net(5, links, 1800, 4));
  h.run(1800);
  ASSERT_TRUE(h.net->all_joined_at().has_value());
  EXPECT_TRUE(h.net->tree_consistent());
  for (DeviceId id = 1; id <= 5; ++id) EXPECT_EQ(h.net->tree()[id].depth, static_cast<int>(id));
  ASSERT_FALSE(h.net->delivered_trails().empty());
  for (const auto& trail : h.net->delivered_trails()) {
    ASSERT_GE(trail.size(), 2u);
    EXPECT_EQ(trail.back(), kGateway);
    for (std::size_t i = 1; i < trail.size(); ++i)
      EXPECT_EQ(h.net->tree()[trail[i]].depth + 1, h.net->tree()[trail[i - 1]].depth);
  }
}

TEST(WpanNetworkTest, DuplicateFramesAreNotDeliveredTwice) {
  // Acks back to node1 corrupt often, so the gateway sees retransmissions.
  auto s = wpan_net(1, {{"gw", "node1", -50}}, 1800, 6);
  s.channel.rssi_links = {{"gw", "node1", -82, false}, {"node1", "gw", -50, false}};
  s.channel.p_corrupt = {{10.0, 0.6}, {11.0, 0.0}};
  s.wpan.rssi_join_threshold_dbm = -90;
  const auto r = run_scenario(s);
  ASSERT_TRUE(r.all_joined_at.has_value());
  EXPECT_GT(r.device_stats[0].duplicates, 0u);
  const auto generated = r.device_stats[1].offered_from_origin.at(1);
  EXPECT_LE(r.device_stats[0].received_from_origin.at(1), generated);
}

TEST(WpanConfigTest, Validation) {
  WpanConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.max_packets_per_window(900), 90u);
  c.csma.max_be = 2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = WpanConfig{};
  c.edp_payload = 101;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
