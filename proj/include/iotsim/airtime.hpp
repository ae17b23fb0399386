#pragma once

// LoRa time-on-air, regulatory transmit period, and polled-network capacity.
//
// Symbol and payload formulas follow the Semtech SX1276 datasheet:
//   T_sym      = 2^SF / BW
//   T_preamble = (n_preamble + 4.25) * T_sym
//   n_payload  = 8 + max(ceil((8PL - 4SF + 28 + 16CRC - 20IH) / (4(SF - 2DE))) * (CR + 4), 0)

#include <cstdint>
#include <stdexcept>

namespace iotsim::airtime {

enum class Ldro { Off, On, Auto };

struct RadioConfig {
  int sf = 7;
  std::uint32_t bandwidth_hz = 125000;
  int coding_rate = 1;  ///< 1..4 for 4/5..4/8
  int preamble_symbols = 8;
  bool explicit_header = true;
  bool crc_on = true;
  Ldro ldro = Ldro::Auto;

  bool operator==(const RadioConfig&) const = default;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

RadioConfig make_config(int sf, std::uint32_t bandwidth_hz);

struct AirtimeBreakdown {
  double symbol_time = 0;  ///< seconds
  double preamble_duration = 0;
  int payload_symbols = 0;
  double payload_duration = 0;
  double total = 0;
};

struct RegulatoryLimit {
  double duty_cycle = 0.01;
  double window_s = 3600.0;

  /// Allowed time on air per window; 36 s at 1 % over an hour.
  double budget_per_window() const { return duty_cycle * window_s; }
  bool operator==(const RegulatoryLimit&) const = default;
};

double symbol_time(const RadioConfig& cfg);

/// Whether low-data-rate optimisation is active (auto: symbol time >= 16 ms).
bool low_data_rate_optimize(const RadioConfig& cfg);

int payload_symbol_count(const RadioConfig& cfg, int payload_len);

AirtimeBreakdown time_on_air(const RadioConfig& cfg, int payload_len);

/// Shortest legal period between transmissions of `toa` seconds.
double min_tx_period(double toa, const RegulatoryLimit& limit = {});

struct PolledCapacity {
  double per_node_period = 0;  ///< seconds between polls of one node
  double max_packets = 0;      ///< per window, real-valued
};

/// Gateway-limited capacity when one DRP is spent per node per round.
PolledCapacity polled_capacity(int n_nodes, const RadioConfig& drp_cfg, int drp_len, double window,
                               const RegulatoryLimit& limit = {});

struct SlotParams {
  int drp_len = 4;
  int dp_len = 60;
  RegulatoryLimit limit{};
};

/// Per-poll slot used by the fixed-gap pacer:
///   max(min_tx_period(ToA(DRP)), ToA(DRP) + ToA(DP)) + gw_delay + sensor_latency
double poll_slot_duration(const RadioConfig& drp_cfg, double gw_delay, double sensor_latency,
                          const SlotParams& params = {});

/// Whole polls each node gets in `window` with `n_nodes` polled back to back.
int polls_per_window(int n_nodes, double slot, double window);

}  // namespace iotsim::airtime
