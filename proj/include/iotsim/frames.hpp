#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "iotsim/sim_time.hpp"

namespace iotsim {

/// Index into a scenario's device table; the gateway is always 0.
using DeviceId = std::uint32_t;
inline constexpr DeviceId kGateway = 0;
inline constexpr DeviceId kBroadcast = std::numeric_limits<DeviceId>::max();

enum class FrameKind : std::uint8_t {
  Beacon,
  JoinReq,
  JoinAck,
  Drp,  ///< LoRa data request (gateway poll)
  Dp,   ///< LoRa data reply
  Edp,  ///< 802.15.4 periodic environmental data
  Pdp,  ///< 802.15.4 motion-triggered data
  Ack,  ///< 802.15.4 MAC acknowledgement
};

std::string_view to_string(FrameKind kind);

/// An over-the-air message of either network.
struct Frame {
  FrameKind kind = FrameKind::Beacon;
  DeviceId src = kGateway;  ///< transmitter of this hop
  DeviceId dst = kBroadcast;
  DeviceId origin = kGateway;  ///< originating node of multihop data
  std::uint32_t seq = 0;      ///< per-origin sequence number
  std::uint32_t mac_seq = 0;  ///< per-hop sequence number (802.15.4 DSN)
  int payload_len = 0;
  std::vector<std::uint8_t> payload;  ///< application bytes (LoRa data frames)
  std::uint16_t app_crc = 0;
  bool pir_flag = false;
  SimTime generated = SimTime::zero();
  int hops = 0;
  std::uint64_t draw_key = 0;  ///< per-frame reception draws; 0 uses the receiver's stream
};

}  // namespace iotsim
