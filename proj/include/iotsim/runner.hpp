#pragma once

// Runs one scenario end to end and writes its output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "iotsim/channel.hpp"
#include "iotsim/metrics.hpp"
#include "iotsim/scenario.hpp"
#include "iotsim/wpan_network.hpp"

namespace iotsim {

/// Independent rolling-window check over a device's airtime log.
struct DutyCheck {
  DeviceId device = 0;
  double peak_airtime_s = 0;  ///< largest airtime within any window of the regulatory length
  double total_airtime_s = 0;
  std::uint64_t transmissions = 0;
};

/// Largest airtime overlapping any half-open interval of length `window`.
double peak_window_airtime(std::span<const Medium::AirtimeRecord> records, SimTime window);

std::vector<DutyCheck> verify_duty(std::span<const Medium::AirtimeRecord> log, DeviceId n_devices, SimTime window);

struct RunResult {
  Scenario scenario;
  std::vector<metrics::CounterRecord> records;
  std::vector<metrics::MetricsWindow> windows;         ///< reporting windows
  std::vector<metrics::MetricsWindow> series_windows;  ///< packet-ratio series windows
  std::uint64_t max_packets = 0;
  std::optional<SimTime> all_joined_at;
  SimTime steady_from;  ///< first window start at or after every node joined
  std::uint64_t trace_hash = 0;
  std::uint64_t events_executed = 0;
  std::uint64_t transmissions = 0;
  std::vector<DutyCheck> duty;
  std::vector<Medium::AirtimeRecord> airtime_log;

  // LoRa only.
  std::uint64_t overlapping_starts = 0;
  int max_drps_per_poll = 0;

  // 802.15.4 only.
  std::vector<wpan::TreeState> tree;
  std::vector<wpan::DeviceStats> device_stats;
  bool tree_consistent = true;

  /// Windows starting at or after steady_from.
  std::vector<metrics::MetricsWindow> steady_windows() const;
  std::vector<metrics::SeriesPoint> series() const;
  metrics::NdrSource ndr_source() const;
};

/// Runs `scenario` (seed taken from the scenario). Throws DutyViolation or
/// metrics::InconsistencyError on internal inconsistencies.
RunResult run_scenario(const Scenario& scenario);

/// Per-window CSV bytes for `result`.
std::string windows_csv(const RunResult& result);
std::string summary_markdown(const RunResult& result);
std::string manifest_json(const RunResult& result);

/// Writes windows.csv, events.csv, summary.md, manifest.json and scenario.json into `dir`.
void write_run(const RunResult& result, const std::filesystem::path& dir);

std::string hex64(std::uint64_t v);

}  // namespace iotsim
