#pragma once

// 802.15.4-style multihop tree: RSSI-threshold parent selection, unslotted
// CSMA/CA with per-hop acknowledgement and retries, store-and-forward relays,
// periodic EDPs and motion-triggered PDPs.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "iotsim/channel.hpp"
#include "iotsim/engine.hpp"
#include "iotsim/metrics.hpp"
#include "iotsim/rng.hpp"

namespace iotsim::wpan {

struct CsmaParams {
  int min_be = 3;
  int max_be = 5;
  int max_backoffs = 4;
  double backoff_unit_s = 320e-6;
  double cca_duration_s = 128e-6;
  double ack_timeout_s = 864e-6;
  double turnaround_s = 192e-6;
  int max_frame_retries = 3;
  double bit_rate = 250000.0;
  double cca_threshold_dbm = -82.0;

  bool operator==(const CsmaParams&) const = default;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct WpanConfig {
  CsmaParams csma;
  int channel = 12;
  int phy_overhead = 6;  ///< preamble + SFD + length byte
  int ack_length = 5;
  double edp_period_s = 10.0;
  double pir_period_s = 2.0;
  int edp_payload = 60;
  int pdp_payload = 12;
  int join_payload = 8;
  double rssi_join_threshold_dbm = -90.0;
  double join_retry_s = 10.0;
  double join_jitter_s = 5.0;
  int queue_depth = 4;
  double tx_power_dbm = 0.0;

  bool operator==(const WpanConfig&) const = default;
  void validate() const;

  ChannelKey key() const { return {Band::Ism2400, channel, 0, 0}; }
  /// Maximum EDPs one node can originate per window (NDR denominator).
  std::uint64_t max_packets_per_window(double window_s) const;
};

struct WpanNodeSpec {
  std::string name;
  double occupancy = 0.0;
  double start_time_s = 0.0;
  bool sensing = true;  ///< relay-only nodes originate no traffic
};

/// On-air duration at the configured bit rate.
SimTime frame_duration(int phy_overhead, int payload_len, double bit_rate);

struct ParentCandidate {
  DeviceId id = 0;
  int depth = 0;  ///< 0 for the gateway
  double rssi_dbm = 0;
};

/// Parent selection: the gateway when its link meets the threshold, otherwise
/// the shallowest candidate meeting it, stronger RSSI breaking depth ties.
std::optional<ParentCandidate> tree_join(std::span<const ParentCandidate> candidates, double threshold_dbm);

struct TreeState {
  bool joined = false;
  std::optional<DeviceId> parent;
  std::set<DeviceId> children;
  int depth = 0;
};

/// Per-device counters that the metric windows do not carry.
struct DeviceStats {
  std::uint64_t data_attempts = 0;  ///< data frame transmissions, retries included
  std::uint64_t acks_sent = 0;
  std::uint64_t channel_access_failures = 0;
  std::uint64_t retry_failures = 0;
  std::uint64_t queue_drops = 0;
  std::uint64_t duplicates = 0;
  /// Unique data frames received intact, keyed by origin.
  std::map<DeviceId, std::uint64_t> received_from_origin;
  /// Data frames of each origin handed to this device's MAC (own or forwarded).
  std::map<DeviceId, std::uint64_t> offered_from_origin;
};

class WpanNetwork {
 public:
  WpanNetwork(Engine& engine, Medium& medium, const ChannelModel& channel, WpanConfig config,
              std::vector<WpanNodeSpec> nodes, std::uint64_t seed, metrics::Collector& collector);

  WpanNetwork(const WpanNetwork&) = delete;
  WpanNetwork& operator=(const WpanNetwork&) = delete;

  void start();

  const WpanConfig& config() const { return config_; }
  /// Index 0 is the gateway.
  const std::vector<TreeState>& tree() const { return tree_; }
  const std::vector<DeviceStats>& stats() const { return stats_; }
  std::optional<SimTime> all_joined_at() const { return all_joined_at_; }

  /// Checks single-parent, acyclicity and depth consistency of the tree.
  bool tree_consistent() const;

  /// Hop trail (device ids, origin first) of every frame delivered to the gateway.
  const std::vector<std::vector<DeviceId>>& delivered_trails() const { return trails_; }
  void keep_trails(bool on) { keep_trails_ = on; }

 private:
  enum class MacState { Idle, Backoff, Cca, Transmitting, WaitAck };

  struct Pending {
    Frame frame;
    std::vector<DeviceId> trail;
  };

  struct Mac {
    MacState state = MacState::Idle;
    std::deque<Pending> queue;
    std::optional<Pending> current;
    int nb = 0;
    int be = 0;
    int retries = 0;
    std::uint32_t dsn = 0;
    SimTime busy_until;  ///< own radio transmitting until
    EventId ack_timer = 0;
    std::map<DeviceId, std::uint32_t> last_dsn_from;
    Rng rng;
    Rng rx_rng;
  };

  void power_on(DeviceId id);
  void attempt_join(DeviceId id);
  void joined(DeviceId id, DeviceId parent);
  void edp_tick(DeviceId id);
  void pir_tick(DeviceId id);
  void originate(DeviceId id, FrameKind kind);

  void enqueue(DeviceId id, Pending item);
  void mac_start_next(DeviceId id);
  void mac_begin_attempt(DeviceId id);
  void mac_backoff(DeviceId id);
  void mac_cca_done(DeviceId id, SimTime cca_start);
  void mac_transmit(DeviceId id);
  void mac_ack_timeout(DeviceId id, std::uint32_t dsn);
  void mac_finish(DeviceId id, bool success);
  void drop(DeviceId id, const Frame& frame, metrics::CounterKind reason);

  const Transmission& transmit(DeviceId sender, Frame frame, SimTime duration);
  void on_frame_end(const Transmission& tx);
  void on_frame_received(DeviceId rx, const Frame& frame, const std::vector<DeviceId>& trail);
  void send_ack(DeviceId from, DeviceId to, std::uint32_t dsn, std::uint64_t draw_key);

  std::uint32_t origin_seq(DeviceId id) { return origin_seq_[id]++; }

  Engine& engine_;
  Medium& medium_;
  std::uint64_t seed_;
  const ChannelModel& channel_;
  WpanConfig config_;
  std::vector<WpanNodeSpec> specs_;
  metrics::Collector& collector_;

  std::vector<TreeState> tree_;
  std::vector<Mac> mac_;
  std::vector<DeviceStats> stats_;
  std::vector<Rng> traffic_rng_;
  std::vector<std::uint32_t> origin_seq_;
  std::vector<SimTime> edp_phase_;
  std::vector<bool> join_in_progress_;
  std::vector<EventId> join_retry_;
  /// Hop trail of frames currently on air, keyed by transmission id.
  std::map<std::uint64_t, std::vector<DeviceId>> air_trails_;

  SimTime unit_, cca_, ack_timeout_, turnaround_, ack_duration_;
  std::optional<SimTime> all_joined_at_;
  bool keep_trails_ = false;
  std::vector<std::vector<DeviceId>> trails_;
};

}  // namespace iotsim::wpan
