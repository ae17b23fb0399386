#pragma once

// Gateway-coordinated LoRa star PAN.
//
// The gateway announces itself with a beacon every refresh interval; unjoined
// nodes answer with a JoinReq after a random delay (ALOHA) and are confirmed
// with a JoinAck. Joined nodes are polled in join order with a DRP and reply
// with a DP after their sensor latency. A corrupted or missing reply is
// retried up to `max_retries` times before the gateway moves on.

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "iotsim/airtime.hpp"
#include "iotsim/channel.hpp"
#include "iotsim/duty_ledger.hpp"
#include "iotsim/engine.hpp"
#include "iotsim/metrics.hpp"
#include "iotsim/rng.hpp"

namespace iotsim::lora {

enum class DutyPacing { FixedGap, RollingLedger };

struct LoraConfig {
  airtime::RadioConfig radio = airtime::make_config(7, 500000);
  int channel = 0;
  int drp_payload = 4;
  int dp_payload = 60;
  int beacon_payload = 2;
  int join_req_payload = 2;
  int join_ack_payload = 2;
  double gw_delay_s = 0.050;
  double sensor_latency_s = 0.0376;
  double join_window_s = 60.0;
  double refresh_interval_s = 900.0;
  double pir_period_s = 2.0;
  double timeout_margin_s = 0.010;
  int max_retries = 3;
  DutyPacing pacing = DutyPacing::FixedGap;
  double tx_power_dbm = 14.0;
  airtime::RegulatoryLimit limit{};

  bool operator==(const LoraConfig&) const = default;

  ChannelKey key() const { return {Band::SubGhz868, channel, radio.sf, radio.bandwidth_hz}; }
  /// Fixed-gap slot between consecutive DRPs.
  double slot_s() const;
  /// Fixed-gap spacing for `n_nodes` polled nodes: the slot, stretched so that
  /// each node's DP rate stays within its own duty budget.
  double poll_gap_s(int n_nodes) const;
  /// Shortest physical poll exchange: DRP, node latency, DP, gateway delay.
  double exchange_s() const;
  /// DRP reply timeout, measured from the DRP start.
  double timeout_s() const;
  /// Theoretical per-node DPs per window for `n_nodes` (NDR denominator).
  std::uint64_t max_packets_per_window(int n_nodes, double window_s) const;
};

struct LoraNodeSpec {
  std::string name;
  double occupancy = 0.0;   ///< motion probability per PIR sample
  double start_time_s = 0;  ///< power-on instant
};

struct LoraNodeState {
  bool powered = false;
  bool joined = false;
  bool join_scheduled = false;
  bool pir_pending = false;
  double occupancy = 0.0;
  SimTime sensor_latency;
  std::uint32_t seq = 0;
  DutyCycleLedger ledger;
  Rng rng;     ///< sensing, join delays, payload bytes
  Rng rx_rng;  ///< reception draws at this node
};

/// One PIR sample: motion with the node's occupancy probability latches
/// pir_pending until the next DP.
void sample_pir(LoraNodeState& node);

/// Builds the DP a node sends for an intact DRP addressed to it, clearing
/// pir_pending. Returns nullopt for a corrupted DRP or an unjoined node.
std::optional<Frame> node_handle_drp(LoraNodeState& node, DeviceId self, const Frame& drp, bool drp_intact,
                                     int dp_payload);

/// Payload bytes plus CRC-16 for a LoRa frame.
void seal(Frame& frame);
/// True when the received payload matches its CRC.
bool crc_ok(const Frame& frame);

struct GatewayState {
  std::vector<DeviceId> registry;   ///< join order; never shrinks
  std::vector<DeviceId> poll_list;  ///< registry snapshot for the current epoch
  std::size_t cursor = 0;
  int retry_count = 0;
  DutyCycleLedger ledger;
  SimTime epoch_end;
  SimTime next_slot;
  SimTime poll_gap;  ///< fixed-gap spacing for the current poll list
  SimTime ready_at;  ///< earliest next transmission (after rx + gw_delay or own tx)
  std::int64_t polls_remaining = 0;
  bool polling = false;
  bool beacon_due = false;
  bool reserved = false;  ///< a transmission is scheduled
  std::optional<DeviceId> awaiting;
  std::uint32_t awaiting_seq = 0;
  EventId timeout_event = 0;
  std::deque<DeviceId> pending_acks;
  std::uint32_t seq = 0;
  std::uint64_t max_drps_to_one_node_in_cycle = 0;
};

class LoraNetwork {
 public:
  LoraNetwork(Engine& engine, Medium& medium, const ChannelModel& channel, LoraConfig config,
              std::vector<LoraNodeSpec> nodes, std::uint64_t seed, metrics::Collector& collector);

  LoraNetwork(const LoraNetwork&) = delete;
  LoraNetwork& operator=(const LoraNetwork&) = delete;

  /// Schedules the first beacon at t = 0 and every node's power-on.
  void start();

  const LoraConfig& config() const { return config_; }
  const GatewayState& gateway() const { return gw_; }
  /// Index 0 is unused (gateway); nodes are 1..n.
  const std::vector<LoraNodeState>& nodes() const { return nodes_; }

  /// Instant the last configured node joined, if all have.
  std::optional<SimTime> all_joined_at() const { return all_joined_at_; }
  /// Transmissions that started while another same-key frame was on air.
  std::uint64_t overlapping_starts() const { return overlapping_starts_; }
  /// Largest number of DRPs sent to one node for a single poll.
  int max_drps_per_poll() const { return max_drps_per_poll_; }

 private:
  void epoch_start();
  void begin_polling();
  void pump();
  void send_beacon(SimTime at);
  void send_join_ack(DeviceId node);
  void send_drp();
  void on_drp_timeout(std::uint32_t seq);
  void exchange_done(bool success);

  void node_power_on(DeviceId node);
  void node_pir_tick(DeviceId node);
  void node_send_join_req(DeviceId node);

  const Transmission& transmit(DeviceId sender, Frame frame, SimTime duration);
  /// Delivers `tx` to `receiver` at tx end; returns nullopt when the receiver was deaf.
  std::optional<std::pair<ReceptionOutcome, Frame>> receive(const Transmission& tx, DeviceId receiver);
  void on_air_end(const Transmission& tx);

  SimTime toa(int payload) const;

  Engine& engine_;
  Medium& medium_;
  const ChannelModel& channel_;
  LoraConfig config_;
  std::vector<LoraNodeSpec> specs_;
  metrics::Collector& collector_;
  std::uint64_t seed_;

  GatewayState gw_;
  Rng gw_rx_rng_;
  std::vector<LoraNodeState> nodes_;

  SimTime slot_, timeout_, gw_delay_, join_window_, refresh_, pir_period_;
  SimTime toa_drp_, toa_dp_, toa_beacon_, toa_join_req_, toa_join_ack_;

  std::optional<SimTime> all_joined_at_;
  std::uint64_t overlapping_starts_ = 0;
  int drps_this_poll_ = 0;
  int max_drps_per_poll_ = 0;
};

}  // namespace iotsim::lora
