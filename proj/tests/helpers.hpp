#pragma once

#include <string>
#include <vector>

#include "iotsim/scenario.hpp"

namespace iotsim::testing {

inline std::string node_name(int i) { return "node" + std::to_string(i); }

/// LoRa star with explicit gateway links.
inline Scenario lora_star(int sf, double bw_khz, const std::vector<double>& gw_rssi, double duration_s = 3600.0,
                          std::uint64_t seed = 1) {
  Scenario s;
  s.name = "lora test";
  s.seed = seed;
  s.duration_s = duration_s;
  s.technology = Technology::Lora;
  s.lora.radio = airtime::make_config(sf, static_cast<std::uint32_t>(bw_khz * 1000));
  s.channel.link_mode = LinkMode::ExplicitMatrix;
  for (std::size_t i = 0; i < gw_rssi.size(); ++i) {
    s.nodes.push_back({node_name(static_cast<int>(i + 1)), std::nullopt, 0.0, 0.0, true});
    s.channel.rssi_links.push_back({"gw", node_name(static_cast<int>(i + 1)), gw_rssi[i], true});
  }
  s.channel.jitter_sd_db = 0.0;
  return s;
}

inline Scenario lora_perfect(int sf, double bw_khz, int n, double duration_s = 3600.0, std::uint64_t seed = 1) {
  return lora_star(sf, bw_khz, std::vector<double>(static_cast<std::size_t>(n), -50.0), duration_s, seed);
}

struct Link {
  std::string a, b;
  double rssi;
};

/// 802.15.4 network with explicit symmetric links; unlisted pairs cannot hear each other.
inline Scenario wpan_net(int n, const std::vector<Link>& links, double duration_s = 3600.0, std::uint64_t seed = 1) {
  Scenario s;
  s.name = "wpan test";
  s.seed = seed;
  s.duration_s = duration_s;
  s.technology = Technology::Wpan;
  s.channel.link_mode = LinkMode::ExplicitMatrix;
  s.channel.sensitivity_dbm = -92.0;
  s.channel.jitter_sd_db = 0.0;
  s.channel.p_corrupt = {{0.0, 0.0}};
  for (int i = 1; i <= n; ++i) s.nodes.push_back({node_name(i), std::nullopt, 0.0, 0.0, true});
  for (const auto& l : links) s.channel.rssi_links.push_back({l.a, l.b, l.rssi, true});
  return s;
}

/// Every pair of devices hears every other at `rssi`.
inline std::vector<Link> full_mesh(int n, double rssi) {
  std::vector<std::string> names{"gw"};
  for (int i = 1; i <= n; ++i) names.push_back(node_name(i));
  std::vector<Link> out;
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) out.push_back({names[i], names[j], rssi});
  return out;
}

}  // namespace iotsim::testing
