#include "iotsim/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "iotsim/duty_ledger.hpp"
#include "iotsim/engine.hpp"
#include "iotsim/lora_network.hpp"
#include "iotsim/rng.hpp"

namespace iotsim {

namespace {

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::vector<std::string> device_names(const Scenario& s) {
  std::vector<std::string> names{s.gateway.name};
  for (const auto& n : s.nodes) names.push_back(n.name);
  return names;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double peak_window_airtime(std::span<const Medium::AirtimeRecord> records, SimTime window) {
  if (records.empty()) return 0.0;
  std::vector<std::pair<SimTime, SimTime>> iv;
  for (const auto& r : records) iv.emplace_back(r.start, r.start + r.duration);
  std::sort(iv.begin(), iv.end());
  std::vector<std::int64_t> prefix(iv.size() + 1, 0);
  for (std::size_t i = 0; i < iv.size(); ++i) prefix[i + 1] = prefix[i] + (iv[i].second - iv[i].first).ns();
  // Airtime within [0, t).
  auto covered = [&](SimTime t) {
    const auto it = std::lower_bound(iv.begin(), iv.end(), t, [](const auto& p, SimTime v) { return p.first < v; });
    const std::size_t n = static_cast<std::size_t>(it - iv.begin());
    if (n == 0) return std::int64_t{0};
    const auto& last = iv[n - 1];
    return prefix[n - 1] + (std::min(last.second, t) - last.first).ns();
  };
  std::int64_t peak = 0;
  for (const auto& [s, e] : iv) {
    peak = std::max(peak, covered(s + window) - covered(s));
    peak = std::max(peak, covered(e) - covered(e - window));
  }
  return SimTime::from_ns(peak).seconds();
}

std::vector<DutyCheck> verify_duty(std::span<const Medium::AirtimeRecord> log, DeviceId n_devices, SimTime window) {
  std::vector<std::vector<Medium::AirtimeRecord>> per(n_devices);
  for (const auto& r : log)
    if (r.sender < n_devices) per[r.sender].push_back(r);
  std::vector<DutyCheck> out;
  for (DeviceId d = 0; d < n_devices; ++d) {
    DutyCheck c;
    c.device = d;
    c.transmissions = per[d].size();
    for (const auto& r : per[d]) c.total_airtime_s += r.duration.seconds();
    c.peak_airtime_s = peak_window_airtime(per[d], window);
    out.push_back(c);
  }
  return out;
}

std::vector<metrics::MetricsWindow> RunResult::steady_windows() const {
  std::vector<metrics::MetricsWindow> out;
  for (const auto& w : windows)
    if (w.start >= steady_from) out.push_back(w);
  return out;
}

std::vector<metrics::SeriesPoint> RunResult::series() const {
  std::map<SimTime, metrics::SeriesPoint> by_start;
  for (const auto& w : series_windows) {
    if (w.start < steady_from) continue;
    auto& p = by_start[w.start];
    p.start = w.start;
    p.edp += static_cast<double>(ndr_source() == metrics::NdrSource::DataPackets ? w.dps_ok : w.edp_delivered);
    p.pdp += static_cast<double>(w.pdp_delivered);
  }
  std::vector<metrics::SeriesPoint> out;
  for (auto& [_, p] : by_start) out.push_back(p);
  return out;
}

metrics::NdrSource RunResult::ndr_source() const {
  return scenario.technology == Technology::Lora ? metrics::NdrSource::DataPackets
                                                 : metrics::NdrSource::EnvironmentalPackets;
}

RunResult run_scenario(const Scenario& scenario) {
  scenario.validate();
  RunResult r;
  r.scenario = scenario;
  Engine engine;
  Medium medium;
  metrics::Collector collector;
  const ChannelModel channel = scenario.channel_model();
  const SimTime duration = SimTime::from_seconds(scenario.duration_s);

  if (scenario.technology == Technology::Lora) {
    lora::LoraNetwork net(engine, medium, channel, scenario.lora_config(), scenario.lora_nodes(), scenario.seed,
                          collector);
    net.start();
    engine.run_until(duration);
    r.all_joined_at = net.all_joined_at();
    r.overlapping_starts = net.overlapping_starts();
    r.max_drps_per_poll = net.max_drps_per_poll();
  } else {
    wpan::WpanNetwork net(engine, medium, channel, scenario.wpan, scenario.wpan_nodes(), scenario.seed, collector);
    net.start();
    engine.run_until(duration);
    r.all_joined_at = net.all_joined_at();
    r.tree = net.tree();
    r.device_stats = net.stats();
    r.tree_consistent = net.tree_consistent();
  }

  r.records = collector.records();
  r.trace_hash = engine.trace_hash();
  r.events_executed = engine.executed();
  r.transmissions = medium.transmissions();
  r.airtime_log = medium.airtime_log();
  const SimTime window = SimTime::from_seconds(scenario.reporting.window_s);
  r.windows = metrics::build_windows(r.records, scenario.node_count(), window, duration);
  r.series_windows = metrics::build_windows(r.records, scenario.node_count(),
                                            SimTime::from_seconds(scenario.reporting.series_window_s), duration);
  r.max_packets = scenario.max_packets_per_window();
  if (r.all_joined_at) {
    const std::int64_t k = (r.all_joined_at->ns() + window.ns() - 1) / window.ns();
    r.steady_from = window * k;
  } else {
    r.steady_from = duration;
  }

  r.duty = verify_duty(r.airtime_log, scenario.node_count() + 1, SimTime::from_seconds(scenario.regulatory.window_s));
  if (scenario.technology == Technology::Lora) {
    const double budget = scenario.regulatory.duty_cycle * scenario.regulatory.window_s;
    for (const auto& d : r.duty)
      if (d.peak_airtime_s > budget + 1e-9)
        throw DutyViolation("device " + std::to_string(d.device) + " reached " + fmt(d.peak_airtime_s, 6) +
                            " s of airtime in one window (budget " + fmt(budget, 6) + " s)");
  }
  // NDR numerators never exceed the theoretical maximum; ndr() throws otherwise.
  for (const auto& w : r.steady_windows()) metrics::ndr(metrics::ndr_numerator(w, r.ndr_source()), r.max_packets);
  for (const auto& w : r.windows)
    if (w.dps_ok + w.dps_crc_err > w.drps_sent)
      throw metrics::InconsistencyError("window counts exceed DRPs sent for node " + std::to_string(w.node));
  return r;
}

std::string windows_csv(const RunResult& r) {
  std::ostringstream os;
  const auto names = device_names(r.scenario);
  metrics::write_windows_csv(os, r.windows, names, r.ndr_source(), r.max_packets, r.steady_from);
  return os.str();
}

namespace {

void stat_cells(std::ostream& os, const std::vector<double>& v, int decimals) {
  if (v.empty()) {
    os << " - | - | - | - |";
    return;
  }
  const auto s = metrics::stat_row(v);
  os << ' ' << fmt(s.avg, decimals) << " | " << fmt(s.sd, decimals) << " | " << fmt(s.min, decimals) << " | "
     << fmt(s.max, decimals) << " |";
}

template <class F>
std::vector<double> collect(const std::vector<metrics::MetricsWindow>& ws, DeviceId node, F f) {
  std::vector<double> out;
  for (const auto& w : ws)
    if (w.node == node)
      if (auto v = f(w)) out.push_back(*v);
  return out;
}

void lora_tables(std::ostream& os, const RunResult& r, const std::vector<metrics::MetricsWindow>& ws,
                 const std::vector<std::string>& names) {
  const DeviceId n = r.scenario.node_count();
  os << "## Delivered DPs per node per window\n\n| Node | Avg | SD | Min | Max |\n|---|---|---|---|---|\n";
  for (DeviceId id = 1; id <= n; ++id) {
    os << "| " << names[id] << " |";
    stat_cells(os, collect(ws, id, [](const auto& w) { return std::optional<double>(double(w.dps_ok)); }), 2);
    os << '\n';
  }
  os << "\n## Delivery, CRC error and re-transmission ratios\n\n"
        "| Node | PDR Avg | SD | Min | Max | CRC Avg | SD | Min | Max | Retx Avg | SD | Min | Max |\n"
        "|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (DeviceId id = 1; id <= n; ++id) {
    os << "| " << names[id] << " |";
    stat_cells(os, collect(ws, id, [](const auto& w) { return metrics::pdr(w); }), 3);
    stat_cells(os, collect(ws, id, [](const auto& w) { return metrics::crc_error_ratio(w); }), 3);
    stat_cells(os, collect(ws, id, [](const auto& w) { return metrics::retx_ratio(w); }), 3);
    os << '\n';
  }
  os << "\n## RSSI of received DPs (dBm)\n\n| Node | Avg | SD | Min | Max |\n|---|---|---|---|---|\n";
  for (DeviceId id = 1; id <= n; ++id) {
    std::vector<double> samples;
    for (const auto& w : ws)
      if (w.node == id) samples.insert(samples.end(), w.rssi_samples.begin(), w.rssi_samples.end());
    os << "| " << names[id] << " |";
    stat_cells(os, samples, 2);
    os << '\n';
  }
}

void wpan_tables(std::ostream& os, const RunResult& r, const std::vector<metrics::MetricsWindow>& ws,
                 const std::vector<std::string>& names) {
  const DeviceId n = r.scenario.node_count();
  os << "## Tree\n\n| Node | Parent | Depth |\n|---|---|---|\n";
  for (DeviceId id = 1; id <= n && id < r.tree.size(); ++id) {
    const auto& t = r.tree[id];
    os << "| " << names[id] << " | " << (t.parent ? names[*t.parent] : std::string("-")) << " | "
       << (t.joined ? std::to_string(t.depth) : std::string("-")) << " |\n";
  }
  os << "\n## Delivered packets per node per window\n\n"
        "| Node | EDP Avg | SD | Min | Max | PDP Avg | SD | Min | Max |\n|---|---|---|---|---|---|---|---|---|\n";
  for (DeviceId id = 1; id <= n; ++id) {
    os << "| " << names[id] << " |";
    stat_cells(os, collect(ws, id, [](const auto& w) { return std::optional<double>(double(w.edp_delivered)); }), 2);
    stat_cells(os, collect(ws, id, [](const auto& w) { return std::optional<double>(double(w.pdp_delivered)); }), 2);
    os << '\n';
  }
  const auto series = r.series();
  if (!series.empty()) {
    const auto t = metrics::saturation_table(series);
    os << "\n## Network packets per " << fmt(r.scenario.reporting.series_window_s, 0)
       << " s window at series extremes\n\n"
          "| Packets | Average | Aggregated Max | Aggregated Min | PIR Max | PIR Min | Node Max | Node Min |\n"
          "|---|---|---|---|---|---|---|---|\n";
    auto row = [&](const char* label, auto get) {
      os << "| " << label << " | " << fmt(get(t.average), 2) << " | " << fmt(get(t.aggregated_max), 2) << " | "
         << fmt(get(t.aggregated_min), 2) << " | " << fmt(get(t.pdp_max), 2) << " | " << fmt(get(t.pdp_min), 2)
         << " | " << fmt(get(t.edp_max), 2) << " | " << fmt(get(t.edp_min), 2) << " |\n";
    };
    row("Aggregated", [](const metrics::ExtremeColumn& c) { return c.aggregated; });
    row("PIR", [](const metrics::ExtremeColumn& c) { return c.pdp; });
    row("Node", [](const metrics::ExtremeColumn& c) { return c.edp; });
  }
}

}  // namespace

std::string summary_markdown(const RunResult& r) {
  const auto& s = r.scenario;
  const auto names = device_names(s);
  const auto ws = r.steady_windows();
  std::ostringstream os;
  os << "# Run summary" << (s.name.empty() ? "" : ": " + s.name) << "\n\n";
  os << "- technology: " << to_string(s.technology) << "\n- seed: " << s.seed
     << "\n- duration: " << fmt(s.duration_s, 6) << " s\n- nodes: " << s.node_count()
     << "\n- window: " << fmt(s.reporting.window_s, 6) << " s\n- max packets per node per window: " << r.max_packets
     << "\n- all nodes joined at: " << (r.all_joined_at ? fmt(r.all_joined_at->seconds(), 6) + " s" : "never")
     << "\n- statistics over windows starting at or after: " << fmt(r.steady_from.seconds(), 6) << " s ("
     << ws.size() / std::max<std::size_t>(s.nodes.size(), 1) << " windows)\n\n";
  if (s.technology == Technology::Lora)
    lora_tables(os, r, ws, names);
  else
    wpan_tables(os, r, ws, names);

  os << "\n## Network delivery ratio\n\n| Node | Avg | SD | Min | Max |\n|---|---|---|---|---|\n";
  for (DeviceId id = 1; id <= s.node_count(); ++id) {
    os << "| " << names[id] << " |";
    stat_cells(os, collect(ws, id,
                           [&](const auto& w) {
                             return std::optional<double>(
                                 metrics::ndr(metrics::ndr_numerator(w, r.ndr_source()), r.max_packets));
                           }),
               3);
    os << '\n';
  }
  os << "\n## Airtime\n\n| Device | Transmissions | Total (s) | Peak per " << fmt(s.regulatory.window_s, 0)
     << " s (s) |\n|---|---|---|---|\n";
  for (const auto& d : r.duty)
    os << "| " << names[d.device] << " | " << d.transmissions << " | " << fmt(d.total_airtime_s, 6) << " | "
       << fmt(d.peak_airtime_s, 6) << " |\n";
  return os.str();
}

std::string manifest_json(const RunResult& r) {
  using Json = nlohmann::ordered_json;
  std::uint64_t drps = 0, ok = 0, crc = 0, rep = 0, edp = 0, pdp = 0, edp_gen = 0, pdp_gen = 0, qdrop = 0, caf = 0,
                rf = 0, skips = 0;
  for (const auto& w : r.windows) {
    drps += w.drps_sent;
    ok += w.dps_ok;
    crc += w.dps_crc_err;
    rep += w.drp_repeats;
    edp += w.edp_delivered;
    pdp += w.pdp_delivered;
    edp_gen += w.edp_generated;
    pdp_gen += w.pdp_generated;
    qdrop += w.queue_drops;
    caf += w.channel_access_failures;
    rf += w.retry_failures;
    skips += w.duty_skips;
  }
  Json duty = Json::array();
  for (const auto& d : r.duty)
    duty.push_back({{"device", d.device},
                    {"transmissions", d.transmissions},
                    {"total_airtime_s", d.total_airtime_s},
                    {"peak_window_airtime_s", d.peak_airtime_s}});
  Json j;
  j["schema_version"] = r.scenario.schema_version;
  j["name"] = r.scenario.name;
  j["technology"] = to_string(r.scenario.technology);
  j["seed"] = r.scenario.seed;
  j["scenario_hash"] = hex64(scenario_hash(r.scenario));
  j["scenario_file"] = "scenario.json";
  j["trace_hash"] = hex64(r.trace_hash);
  j["events_executed"] = r.events_executed;
  j["transmissions"] = r.transmissions;
  j["duration_s"] = r.scenario.duration_s;
  j["window_s"] = r.scenario.reporting.window_s;
  j["nodes"] = r.scenario.node_names();
  j["max_packets_per_window"] = r.max_packets;
  j["all_joined_at_s"] = r.all_joined_at ? Json(r.all_joined_at->seconds()) : Json(nullptr);
  j["steady_from_s"] = r.steady_from.seconds();
  j["windows_csv_hash"] = hex64(fnv1a64(windows_csv(r)));
  j["totals"] = {{"drps_sent", drps},         {"dps_ok", ok},
                 {"dps_crc_err", crc},        {"drp_repeats", rep},
                 {"edp_delivered", edp},      {"pdp_delivered", pdp},
                 {"edp_generated", edp_gen},  {"pdp_generated", pdp_gen},
                 {"queue_drops", qdrop},      {"channel_access_failures", caf},
                 {"retry_failures", rf},      {"duty_skips", skips}};
  j["duty"] = duty;
  return j.dump(2) + "\n";
}

void write_run(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
  };
  put("windows.csv", windows_csv(r));
  std::ostringstream events;
  metrics::write_event_log(events, r.records);
  put("events.csv", events.str());
  put("summary.md", summary_markdown(r));
  put("manifest.json", manifest_json(r));
  put("scenario.json", serialize_scenario(r.scenario));
}

}  // namespace iotsim
