#pragma once

// Scenario files: a JSON document describing one simulated deployment.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iotsim/airtime.hpp"
#include "iotsim/channel.hpp"
#include "iotsim/lora_network.hpp"
#include "iotsim/wpan_network.hpp"

namespace iotsim {

inline constexpr int kSchemaVersion = 1;

/// Parse or validation failure; the message starts with the offending field path.
class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Technology { Lora, Wpan };

struct DeviceSpec {
  std::string name;
  std::optional<Position> position;
  double occupancy = 0.0;
  double start_time_s = 0.0;
  bool sensing = true;
  bool operator==(const DeviceSpec&) const = default;
};

struct RssiLink {
  std::string from;
  std::string to;
  double rssi_dbm = 0;
  bool symmetric = true;
  bool operator==(const RssiLink&) const = default;
};

struct ChannelSettings {
  LinkMode link_mode = LinkMode::PathLoss;
  std::vector<RssiLink> rssi_links;
  double pl0_db = 40.0;
  double d0_m = 1.0;
  double gamma = 3.0;
  double wall_loss_db = 5.0;
  double floor_loss_db = 15.0;
  double floor_height_m = 3.0;
  double jitter_sd_db = 0.0;
  std::optional<double> sensitivity_dbm;
  double capture_margin_db = 6.0;
  std::vector<std::pair<double, double>> p_corrupt{{0.0, 0.5}, {20.0, 0.0}};
  bool operator==(const ChannelSettings&) const = default;
};

struct ReportingSettings {
  double window_s = 900.0;
  double series_window_s = 300.0;
  std::optional<std::uint64_t> max_packets;  ///< NDR denominator override
  bool operator==(const ReportingSettings&) const = default;
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name;
  std::uint64_t seed = 1;
  double duration_s = 3600.0;
  Technology technology = Technology::Lora;
  lora::LoraConfig lora;
  wpan::WpanConfig wpan;
  airtime::RegulatoryLimit regulatory;
  DeviceSpec gateway{"gw", std::nullopt};
  std::vector<DeviceSpec> nodes;
  std::vector<Wall> walls;
  ChannelSettings channel;
  ReportingSettings reporting;

  bool operator==(const Scenario&) const = default;

  /// Throws ScenarioError naming the first invalid field.
  void validate() const;

  DeviceId node_count() const { return static_cast<DeviceId>(nodes.size()); }
  /// 0 for the gateway, 1..n for nodes in file order; throws ScenarioError if unknown.
  DeviceId device_id(const std::string& name) const;
  std::vector<std::string> node_names() const;

  ChannelModel channel_model() const;
  lora::LoraConfig lora_config() const;
  std::vector<lora::LoraNodeSpec> lora_nodes() const;
  std::vector<wpan::WpanNodeSpec> wpan_nodes() const;
  /// NDR denominator per node per reporting window.
  std::uint64_t max_packets_per_window() const;
};

/// Parses and validates; unknown keys and type mismatches are errors.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
/// Canonical JSON (every field, fixed key order, 2-space indent).
std::string serialize_scenario(const Scenario& s);
/// FNV-1a over the canonical JSON.
std::uint64_t scenario_hash(const Scenario& s);

std::string_view to_string(Technology t);

}  // namespace iotsim
