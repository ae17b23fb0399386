#include "iotsim/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace iotsim::metrics {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string fixed_or_empty(std::optional<double> v, int decimals) { return v ? fixed(*v, decimals) : std::string(); }

constexpr std::array<std::string_view, 13> kKindNames = {
    "drp_sent",   "drp_repeat",     "dp_ok",         "dp_crc_error", "edp_delivered",
    "pdp_delivered", "rssi",        "edp_generated", "pdp_generated", "queue_drop",
    "channel_access_failure", "retry_failure", "duty_skip",
};

}  // namespace

std::optional<double> pdr(const MetricsWindow& w) { return ratio(w.dps_ok, w.drps_sent); }
std::optional<double> crc_error_ratio(const MetricsWindow& w) { return ratio(w.dps_crc_err, w.drps_sent); }
std::optional<double> retx_ratio(const MetricsWindow& w) { return ratio(w.drp_repeats, w.drps_sent); }

double ndr(std::uint64_t delivered, std::uint64_t max_packets) {
  if (max_packets == 0) throw std::invalid_argument("max_packets must be positive");
  if (delivered > max_packets)
    throw InconsistencyError("delivered " + std::to_string(delivered) + " exceeds maximum " +
                             std::to_string(max_packets));
  return static_cast<double>(delivered) / static_cast<double>(max_packets);
}

StatRow stat_row(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("stat_row needs at least one value");
  StatRow row;
  row.n = values.size();
  double sum = 0;
  row.min = values.front();
  row.max = values.front();
  for (double v : values) {
    sum += v;
    row.min = std::min(row.min, v);
    row.max = std::max(row.max, v);
  }
  row.avg = sum / static_cast<double>(row.n);
  double sq = 0;
  for (double v : values) sq += (v - row.avg) * (v - row.avg);
  row.sd = std::sqrt(sq / static_cast<double>(row.n));
  // Rounding in the mean can leave avg a hair outside [min, max] for constant input.
  row.avg = std::clamp(row.avg, row.min, row.max);
  return row;
}

std::vector<RatioPoint> packet_ratio_series(std::span<const SeriesPoint> series) {
  double peak = 0;
  for (const auto& p : series) peak = std::max(peak, p.aggregated());
  std::vector<RatioPoint> out;
  out.reserve(series.size());
  for (const auto& p : series) {
    if (peak == 0)
      out.push_back({});
    else
      out.push_back({p.aggregated() / peak, p.edp / peak, p.pdp / peak});
  }
  return out;
}

SaturationTable saturation_table(std::span<const SeriesPoint> series) {
  if (series.empty()) throw std::invalid_argument("saturation_table needs a non-empty series");
  auto column_at = [&](auto key, bool want_max) {
    double best = key(series.front());
    for (const auto& p : series) best = want_max ? std::max(best, key(p)) : std::min(best, key(p));
    ExtremeColumn col;
    int n = 0;
    for (const auto& p : series) {
      if (key(p) != best) continue;
      col.aggregated += p.aggregated();
      col.pdp += p.pdp;
      col.edp += p.edp;
      ++n;
    }
    col.aggregated /= n;
    col.pdp /= n;
    col.edp /= n;
    return col;
  };
  auto agg = [](const SeriesPoint& p) { return p.aggregated(); };
  auto pdp = [](const SeriesPoint& p) { return p.pdp; };
  auto edp = [](const SeriesPoint& p) { return p.edp; };

  SaturationTable t;
  for (const auto& p : series) {
    t.average.aggregated += p.aggregated();
    t.average.pdp += p.pdp;
    t.average.edp += p.edp;
  }
  const double n = static_cast<double>(series.size());
  t.average.aggregated /= n;
  t.average.pdp /= n;
  t.average.edp /= n;
  t.aggregated_max = column_at(agg, true);
  t.aggregated_min = column_at(agg, false);
  t.pdp_max = column_at(pdp, true);
  t.pdp_min = column_at(pdp, false);
  t.edp_max = column_at(edp, true);
  t.edp_min = column_at(edp, false);
  return t;
}

std::string_view to_string(CounterKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

std::optional<CounterKind> counter_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == s) return static_cast<CounterKind>(i);
  return std::nullopt;
}

std::vector<MetricsWindow> build_windows(std::span<const CounterRecord> records, DeviceId n_nodes, SimTime window,
                                         SimTime duration) {
  if (window <= SimTime::zero()) throw std::invalid_argument("window must be positive");
  const std::int64_t n_windows = duration / window;
  std::vector<MetricsWindow> out;
  out.reserve(static_cast<std::size_t>(n_windows) * n_nodes);
  for (std::int64_t k = 0; k < n_windows; ++k)
    for (DeviceId node = 1; node <= n_nodes; ++node) {
      MetricsWindow w;
      w.node = node;
      w.start = window * k;
      w.length = window;
      out.push_back(std::move(w));
    }
  for (const auto& r : records) {
    if (r.t < SimTime::zero() || r.node < 1 || r.node > n_nodes) continue;
    const std::int64_t k = r.t / window;
    if (k >= n_windows) continue;
    MetricsWindow& w = out[static_cast<std::size_t>(k) * n_nodes + (r.node - 1)];
    switch (r.kind) {
      case CounterKind::DrpSent: ++w.drps_sent; break;
      case CounterKind::DrpRepeat: ++w.drp_repeats; break;
      case CounterKind::DpOk: ++w.dps_ok; break;
      case CounterKind::DpCrcError: ++w.dps_crc_err; break;
      case CounterKind::EdpDelivered: ++w.edp_delivered; break;
      case CounterKind::PdpDelivered: ++w.pdp_delivered; break;
      case CounterKind::Rssi: w.rssi_samples.push_back(r.value); break;
      case CounterKind::EdpGenerated: ++w.edp_generated; break;
      case CounterKind::PdpGenerated: ++w.pdp_generated; break;
      case CounterKind::QueueDrop: ++w.queue_drops; break;
      case CounterKind::ChannelAccessFailure: ++w.channel_access_failures; break;
      case CounterKind::RetryFailure: ++w.retry_failures; break;
      case CounterKind::DutySkip: ++w.duty_skips; break;
    }
  }
  return out;
}

void write_event_log(std::ostream& os, std::span<const CounterRecord> records) {
  os << "t_ns,node,kind,value\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    os << r.t.ns() << ',' << r.node << ',' << to_string(r.kind) << ',' << buf << '\n';
  }
}

std::vector<CounterRecord> read_event_log(std::istream& is) {
  std::vector<CounterRecord> out;
  std::string line;
  if (!std::getline(is, line)) return out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string t, node, kind, value;
    if (!std::getline(ls, t, ',') || !std::getline(ls, node, ',') || !std::getline(ls, kind, ',') ||
        !std::getline(ls, value))
      throw std::runtime_error("malformed event log line: " + line);
    auto k = counter_kind_from_string(kind);
    if (!k) throw std::runtime_error("unknown counter kind: " + kind);
    out.push_back({SimTime::from_ns(std::stoll(t)), static_cast<DeviceId>(std::stoul(node)), *k,
                   std::strtod(value.c_str(), nullptr)});
  }
  return out;
}

std::uint64_t ndr_numerator(const MetricsWindow& w, NdrSource source) {
  return source == NdrSource::DataPackets ? w.dps_ok : w.edp_delivered;
}

void write_windows_csv(std::ostream& os, std::span<const MetricsWindow> windows,
                       std::span<const std::string> node_names, NdrSource source, std::uint64_t max_packets,
                       SimTime ndr_from) {
  os << kWindowCsvHeader << '\n';
  for (const auto& w : windows) {
    const std::string& name = node_names[w.node];
    std::optional<double> rssi_avg, rssi_sd;
    if (!w.rssi_samples.empty()) {
      const StatRow r = stat_row(w.rssi_samples);
      rssi_avg = r.avg;
      rssi_sd = r.sd;
    }
    const bool data = source == NdrSource::DataPackets;
    const std::uint64_t edp = data ? w.dps_ok : w.edp_delivered;
    const std::uint64_t pdp = w.pdp_delivered;
    os << fixed(w.start.seconds(), 6) << ',' << name << ',' << w.drps_sent << ',' << w.dps_ok << ',' << w.dps_crc_err
       << ',' << w.drp_repeats << ',' << edp << ',' << pdp << ',' << fixed_or_empty(pdr(w), 6) << ','
       << (w.start >= ndr_from ? fixed(ndr(ndr_numerator(w, source), max_packets), 6) : std::string()) << ','
       << fixed_or_empty(crc_error_ratio(w), 6) << ','
       << fixed_or_empty(retx_ratio(w), 6) << ',' << fixed_or_empty(rssi_avg, 2) << ',' << fixed_or_empty(rssi_sd, 2)
       << '\n';
  }
}

}  // namespace iotsim::metrics
