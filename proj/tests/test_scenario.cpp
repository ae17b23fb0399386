#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include <json.hpp>

#include "helpers.hpp"
#include "iotsim/scenario.hpp"

using namespace iotsim;
using Json = nlohmann::ordered_json;

namespace {

const char* kMinimal = R"({
  "schema_version": 1,
  "technology": "lora",
  "gateway": {"name": "gw"},
  "nodes": [{"name": "a"}, {"name": "b", "occupancy": 0.25}],
  "channel": {"link_mode": "explicit", "rssi_links": [{"from": "gw", "to": "a", "rssi_dbm": -60}]}
})";

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

std::string with(const char* pointer, Json value) {
  Json j = Json::parse(kMinimal);
  j[Json::json_pointer(pointer)] = std::move(value);
  return j.dump();
}

std::string without(const char* key) {
  Json j = Json::parse(kMinimal);
  j.erase(key);
  return j.dump();
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

TEST(ScenarioParse, MinimalDocumentUsesDefaults) {
  const auto s = parse_scenario(kMinimal);
  EXPECT_EQ(s.technology, Technology::Lora);
  EXPECT_EQ(s.node_count(), 2u);
  EXPECT_EQ(s.nodes[1].occupancy, 0.25);
  EXPECT_EQ(s.lora.radio.sf, 7);
  EXPECT_EQ(s.lora.radio.bandwidth_hz, 500000u);
  EXPECT_EQ(s.device_id("gw"), kGateway);
  EXPECT_EQ(s.device_id("b"), 2u);
  EXPECT_THROW(s.device_id("zz"), ScenarioError);
  // Two nodes: each DP reply is limited to one per 2.8224 s by the node budget.
  EXPECT_EQ(s.max_packets_per_window(), 318u);
  const auto ch = s.channel_model();
  EXPECT_DOUBLE_EQ(ch.link.mean_rssi(0, 1, 14), -60);
  EXPECT_DOUBLE_EQ(ch.link.mean_rssi(1, 0, 14), -60);
  EXPECT_FALSE(ch.link.has_link(0, 2));
}

TEST(ScenarioParse, RoundTripIsIdentity) {
  for (const auto& entry : std::filesystem::directory_iterator(IOTSIM_PRESET_DIR)) {
    const auto s = load_scenario(entry.path().string());
    const std::string text = serialize_scenario(s);
    const auto again = parse_scenario(text);
    EXPECT_EQ(again, s) << entry.path();
    EXPECT_EQ(serialize_scenario(again), text);
    EXPECT_EQ(scenario_hash(again), scenario_hash(s));
  }
}

TEST(ScenarioParse, HashChangesWithContent) {
  auto a = parse_scenario(kMinimal);
  auto b = a;
  b.seed = 2;
  EXPECT_NE(scenario_hash(a), scenario_hash(b));
}

TEST(ScenarioParse, ErrorsNameTheField) {
  EXPECT_TRUE(starts_with(error_of(with("/nodes/1/colour", "red")), "nodes[1].colour: unknown field"));
  EXPECT_TRUE(starts_with(error_of(with("/lora/sf", 13)), "lora"));
  EXPECT_TRUE(starts_with(error_of(with("/lora/sf", "seven")), "lora.sf: expected an integer"));
  EXPECT_TRUE(starts_with(error_of(with("/technology", "zigbee")), "technology: unknown value"));
  EXPECT_TRUE(starts_with(error_of(with("/schema_version", 2)), "schema_version"));
  EXPECT_TRUE(starts_with(error_of(with("/nodes/1/name", "a")), "nodes[1].name: duplicate"));
  EXPECT_TRUE(starts_with(error_of(with("/nodes/0/occupancy", 1.5)), "nodes[0].occupancy"));
  EXPECT_TRUE(starts_with(error_of(with("/channel/rssi_links/0/to", "ghost")), "channel.rssi_links[0].to"));
  EXPECT_TRUE(starts_with(error_of(with("/channel/p_corrupt", Json::array({Json::array({0, 2})}))),
                          "channel.p_corrupt"));
  EXPECT_TRUE(starts_with(error_of(with("/duration_s", -1)), "duration_s"));
  EXPECT_TRUE(starts_with(error_of(without("schema_version")), "schema_version: missing required field"));
  EXPECT_TRUE(starts_with(error_of(without("technology")), "technology: missing required field"));
  EXPECT_TRUE(starts_with(error_of(without("gateway")), "gateway"));
  EXPECT_TRUE(starts_with(error_of("{ not json"), "(root): malformed JSON"));
  EXPECT_TRUE(starts_with(error_of("[1, 2]"), "(root)"));
}

TEST(ScenarioParse, PathLossNeedsPositions) {
  Json j = Json::parse(kMinimal);
  j["channel"] = {{"link_mode", "path_loss"}};
  EXPECT_TRUE(starts_with(error_of(j.dump()), "gateway.position"));
  j["gateway"]["position"] = {{"x", 0}, {"y", 0}, {"floor", 0}};
  j["nodes"][0]["position"] = {{"x", 10}, {"y", 0}, {"floor", 0}};
  EXPECT_TRUE(starts_with(error_of(j.dump()), "nodes[1].position"));
  j["nodes"][1]["position"] = {{"x", 0}, {"y", 10}, {"floor", 1}};
  const auto s = parse_scenario(j.dump());
  EXPECT_NEAR(s.channel_model().link.mean_rssi(0, 1, 14), 14 - (40 + 30), 1e-9);
}

TEST(ScenarioParse, WpanSection) {
  Json j = Json::parse(kMinimal);
  j["technology"] = "wpan";
  j["wpan"] = {{"edp_period_s", 5}, {"csma", {{"max_be", 6}}}};
  const auto s = parse_scenario(j.dump());
  EXPECT_EQ(s.wpan.csma.max_be, 6);
  EXPECT_EQ(s.max_packets_per_window(), 180u);
  j["wpan"]["csma"]["min_be"] = 7;
  EXPECT_TRUE(starts_with(error_of(j.dump()), "wpan"));
}

TEST(ScenarioParse, MaxPacketsOverride) {
  Json j = Json::parse(kMinimal);
  j["reporting"] = {{"max_packets", 100}};
  EXPECT_EQ(parse_scenario(j.dump()).max_packets_per_window(), 100u);
}

TEST(Presets, LoadAndMatchExpectedShapes) {
  const std::string dir = IOTSIM_PRESET_DIR;
  const auto c1 = load_scenario(dir + "/lora_school_a_conf1.json");
  EXPECT_EQ(c1.lora.radio.sf, 9);
  EXPECT_EQ(c1.node_count(), 6u);
  EXPECT_EQ(c1.max_packets_per_window(), 12u);
  const auto c2 = load_scenario(dir + "/lora_school_a_conf2.json");
  EXPECT_EQ(c2.max_packets_per_window(), 174u);
  const auto b = load_scenario(dir + "/lora_school_b.json");
  EXPECT_EQ(b.node_count(), 7u);
  const auto x = load_scenario(dir + "/xbee_school_c.json");
  EXPECT_EQ(x.technology, Technology::Wpan);
  EXPECT_EQ(x.max_packets_per_window(), 90u);
  EXPECT_THROW(load_scenario(dir + "/missing.json"), ScenarioError);
}
