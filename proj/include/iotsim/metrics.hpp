#pragma once

// Windowed network-quality statistics: PDR, CRC error and re-transmission
// ratios, NDR, RSSI, and the EDP/PDP ratio series.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iotsim/frames.hpp"
#include "iotsim/sim_time.hpp"

namespace iotsim::metrics {

class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-node counters over one reporting window.
struct MetricsWindow {
  DeviceId node = 0;
  SimTime start;
  SimTime length;
  std::uint64_t drps_sent = 0;
  std::uint64_t dps_ok = 0;
  std::uint64_t dps_crc_err = 0;
  std::uint64_t drp_repeats = 0;
  std::uint64_t edp_delivered = 0;
  std::uint64_t pdp_delivered = 0;
  std::vector<double> rssi_samples;

  // Diagnostics, not part of the fixed CSV.
  std::uint64_t edp_generated = 0;
  std::uint64_t pdp_generated = 0;
  std::uint64_t queue_drops = 0;
  std::uint64_t channel_access_failures = 0;
  std::uint64_t retry_failures = 0;
  std::uint64_t duty_skips = 0;

  bool operator==(const MetricsWindow&) const = default;
};

/// dps_ok / drps_sent; nullopt when no DRP was sent.
std::optional<double> pdr(const MetricsWindow& w);
std::optional<double> crc_error_ratio(const MetricsWindow& w);
std::optional<double> retx_ratio(const MetricsWindow& w);

/// delivered / max_packets. Throws InconsistencyError when delivered exceeds
/// the maximum, std::invalid_argument when max_packets is zero.
double ndr(std::uint64_t delivered, std::uint64_t max_packets);

struct StatRow {
  double avg = 0;
  double sd = 0;  ///< population standard deviation
  double min = 0;
  double max = 0;
  std::size_t n = 0;
};

/// Throws std::invalid_argument on an empty input.
StatRow stat_row(std::span<const double> values);

/// Per-window totals for the whole network.
struct SeriesPoint {
  SimTime start;
  double edp = 0;
  double pdp = 0;
  double aggregated() const { return edp + pdp; }
};

struct RatioPoint {
  double aggregated = 0;
  double edp = 0;
  double pdp = 0;
};

/// Divides every count by the observed maximum of the aggregated series. An
/// all-zero series maps to all zeros.
std::vector<RatioPoint> packet_ratio_series(std::span<const SeriesPoint> series);

/// Counts at the windows where one series reaches its extreme. Ties average
/// over every window attaining the extreme.
struct ExtremeColumn {
  double aggregated = 0;
  double pdp = 0;
  double edp = 0;
};

struct SaturationTable {
  ExtremeColumn average;
  ExtremeColumn aggregated_max, aggregated_min;
  ExtremeColumn pdp_max, pdp_min;
  ExtremeColumn edp_max, edp_min;
};

SaturationTable saturation_table(std::span<const SeriesPoint> series);

// --- counter records ------------------------------------------------------

enum class CounterKind : std::uint8_t {
  DrpSent,
  DrpRepeat,
  DpOk,
  DpCrcError,
  EdpDelivered,
  PdpDelivered,
  Rssi,
  EdpGenerated,
  PdpGenerated,
  QueueDrop,
  ChannelAccessFailure,
  RetryFailure,
  DutySkip,
};

std::string_view to_string(CounterKind kind);
std::optional<CounterKind> counter_kind_from_string(std::string_view s);

/// One countable event, attributed to `node` at time `t`.
struct CounterRecord {
  SimTime t;
  DeviceId node = 0;
  CounterKind kind = CounterKind::DrpSent;
  double value = 0;  ///< RSSI for CounterKind::Rssi, else unused

  bool operator==(const CounterRecord&) const = default;
};

class Collector {
 public:
  void add(SimTime t, DeviceId node, CounterKind kind, double value = 0) { records_.push_back({t, node, kind, value}); }
  const std::vector<CounterRecord>& records() const { return records_; }

 private:
  std::vector<CounterRecord> records_;
};

/// Windows aligned to t = 0 for nodes 1..n_nodes; partial trailing windows are
/// dropped. Output is ordered by (window, node).
std::vector<MetricsWindow> build_windows(std::span<const CounterRecord> records, DeviceId n_nodes,
                                         SimTime window, SimTime duration);

/// Event log as `t_ns,node,kind,value` lines (value printed round-trip exact).
void write_event_log(std::ostream& os, std::span<const CounterRecord> records);
std::vector<CounterRecord> read_event_log(std::istream& is);

/// Fixed CSV header shared by every run.
inline constexpr const char* kWindowCsvHeader =
    "window_start_s,node_id,drps_sent,dps_ok,dps_crc_err,drp_repeats,edp,pdp,pdr,ndr,crc_err_ratio,retx_ratio,"
    "rssi_avg,rssi_sd";

/// Writes one row per window. `source` selects the NDR numerator (dps_ok for
/// LoRa, edp_delivered for 802.15.4). NDR is left empty for windows starting
/// before `ndr_from` (network still forming). Undefined ratios are empty fields.
enum class NdrSource { DataPackets, EnvironmentalPackets };
void write_windows_csv(std::ostream& os, std::span<const MetricsWindow> windows,
                       std::span<const std::string> node_names, NdrSource source, std::uint64_t max_packets,
                       SimTime ndr_from = SimTime::zero());

std::uint64_t ndr_numerator(const MetricsWindow& w, NdrSource source);

}  // namespace iotsim::metrics
