#include "iotsim/airtime.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace iotsim::airtime {

void RadioConfig::validate() const {
  if (sf < 6 || sf > 12) throw std::invalid_argument("sf must be in [6, 12], got " + std::to_string(sf));
  if (bandwidth_hz != 125000 && bandwidth_hz != 250000 && bandwidth_hz != 500000)
    throw std::invalid_argument("bandwidth_hz must be 125000, 250000 or 500000, got " +
                                std::to_string(bandwidth_hz));
  if (coding_rate < 1 || coding_rate > 4)
    throw std::invalid_argument("coding_rate must be in [1, 4], got " + std::to_string(coding_rate));
  if (preamble_symbols < 6)
    throw std::invalid_argument("preamble_symbols must be >= 6, got " + std::to_string(preamble_symbols));
}

RadioConfig make_config(int sf, std::uint32_t bandwidth_hz) {
  RadioConfig cfg;
  cfg.sf = sf;
  cfg.bandwidth_hz = bandwidth_hz;
  return cfg;
}

double symbol_time(const RadioConfig& cfg) {
  return std::ldexp(1.0, cfg.sf) / static_cast<double>(cfg.bandwidth_hz);
}

bool low_data_rate_optimize(const RadioConfig& cfg) {
  switch (cfg.ldro) {
    case Ldro::On:
      return true;
    case Ldro::Off:
      return false;
    case Ldro::Auto:
      break;
  }
  return symbol_time(cfg) >= 16e-3;
}

int payload_symbol_count(const RadioConfig& cfg, int payload_len) {
  if (payload_len < 0) throw std::invalid_argument("payload_len must be >= 0");
  const int de = low_data_rate_optimize(cfg) ? 1 : 0;
  const int denom = 4 * (cfg.sf - 2 * de);
  if (denom <= 0) throw std::invalid_argument("SF - 2*DE must be positive");
  const int ih = cfg.explicit_header ? 0 : 1;
  const int crc = cfg.crc_on ? 1 : 0;
  const int num = 8 * payload_len - 4 * cfg.sf + 28 + 16 * crc - 20 * ih;
  // Integer ceil for positive numerators; non-positive collapse to zero blocks.
  const int blocks = num > 0 ? (num + denom - 1) / denom : 0;
  return 8 + blocks * (cfg.coding_rate + 4);
}

AirtimeBreakdown time_on_air(const RadioConfig& cfg, int payload_len) {
  if (payload_len > 255) throw std::invalid_argument("payload_len must be <= 255");
  AirtimeBreakdown out;
  out.symbol_time = symbol_time(cfg);
  out.preamble_duration = (cfg.preamble_symbols + 4.25) * out.symbol_time;
  out.payload_symbols = payload_symbol_count(cfg, payload_len);
  out.payload_duration = out.payload_symbols * out.symbol_time;
  out.total = out.preamble_duration + out.payload_duration;
  return out;
}

double min_tx_period(double toa, const RegulatoryLimit& limit) { return toa / limit.duty_cycle; }

PolledCapacity polled_capacity(int n_nodes, const RadioConfig& drp_cfg, int drp_len, double window,
                               const RegulatoryLimit& limit) {
  if (n_nodes < 1) throw std::invalid_argument("n_nodes must be >= 1");
  PolledCapacity cap;
  cap.per_node_period = n_nodes * min_tx_period(time_on_air(drp_cfg, drp_len).total, limit);
  cap.max_packets = window / cap.per_node_period;
  return cap;
}

double poll_slot_duration(const RadioConfig& drp_cfg, double gw_delay, double sensor_latency,
                          const SlotParams& params) {
  if (gw_delay < 0 || sensor_latency < 0) throw std::invalid_argument("delays must be >= 0");
  const double drp = time_on_air(drp_cfg, params.drp_len).total;
  const double dp = time_on_air(drp_cfg, params.dp_len).total;
  return std::max(min_tx_period(drp, params.limit), drp + dp) + gw_delay + sensor_latency;
}

int polls_per_window(int n_nodes, double slot, double window) {
  if (n_nodes < 1) return 0;
  return static_cast<int>(std::floor(window / (n_nodes * slot)));
}

}  // namespace iotsim::airtime
