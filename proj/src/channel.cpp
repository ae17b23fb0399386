#include "iotsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace iotsim {

std::string_view to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::Beacon: return "beacon";
    case FrameKind::JoinReq: return "join_req";
    case FrameKind::JoinAck: return "join_ack";
    case FrameKind::Drp: return "drp";
    case FrameKind::Dp: return "dp";
    case FrameKind::Edp: return "edp";
    case FrameKind::Pdp: return "pdp";
    case FrameKind::Ack: return "ack";
  }
  return "?";
}

namespace {

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

bool segments_cross(double p1x, double p1y, double p2x, double p2y, const Wall& w) {
  const double d1 = cross(w.x2 - w.x1, w.y2 - w.y1, p1x - w.x1, p1y - w.y1);
  const double d2 = cross(w.x2 - w.x1, w.y2 - w.y1, p2x - w.x1, p2y - w.y1);
  const double d3 = cross(p2x - p1x, p2y - p1y, w.x1 - p1x, w.y1 - p1y);
  const double d4 = cross(p2x - p1x, p2y - p1y, w.x2 - p1x, w.y2 - p1y);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

int walls_between(const Position& a, const Position& b, std::span<const Wall> walls) {
  int n = 0;
  for (const auto& w : walls)
    if (segments_cross(a.x, a.y, b.x, b.y, w)) ++n;
  return n;
}

bool LinkModel::has_link(DeviceId src, DeviceId dst) const {
  if (mode == LinkMode::ExplicitMatrix) return matrix.contains({src, dst});
  return src < positions.size() && dst < positions.size();
}

double LinkModel::mean_rssi(DeviceId src, DeviceId dst, double tx_power_dbm) const {
  if (mode == LinkMode::ExplicitMatrix) {
    auto it = matrix.find({src, dst});
    if (it == matrix.end())
      throw MissingLink("no RSSI entry for link " + std::to_string(src) + " -> " + std::to_string(dst));
    return it->second;
  }
  if (src >= positions.size() || dst >= positions.size())
    throw MissingLink("no position for link " + std::to_string(src) + " -> " + std::to_string(dst));
  const Position& a = positions[src];
  const Position& b = positions[dst];
  const int floors = std::abs(a.floor - b.floor);
  const double dz = floors * floor_height_m;
  const double d = std::max(std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + dz * dz), d0_m);
  const double loss = pl0_db + 10.0 * gamma * std::log10(d / d0_m) + walls_between(a, b, walls) * wall_loss_db +
                      floors * floor_loss_db;
  return tx_power_dbm - loss;
}

double link_rssi(DeviceId src, DeviceId dst, const LinkModel& model, double tx_power_dbm, Rng& rng) {
  const double mean = model.mean_rssi(src, dst, tx_power_dbm);
  return model.jitter_sd_db > 0 ? rng.normal(mean, model.jitter_sd_db) : mean;
}

CorruptionCurve::CorruptionCurve(std::vector<std::pair<double, double>> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("corruption curve needs at least one point");
  std::sort(points_.begin(), points_.end());
  for (const auto& [m, p] : points_)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("corruption probability outside [0, 1]");
}

double CorruptionCurve::operator()(double margin_db) const {
  if (points_.empty()) return 0.0;
  if (margin_db <= points_.front().first) return points_.front().second;
  if (margin_db >= points_.back().first) return points_.back().second;
  auto hi = std::upper_bound(points_.begin(), points_.end(), margin_db,
                             [](double m, const auto& pt) { return m < pt.first; });
  auto lo = hi - 1;
  const double f = (margin_db - lo->first) / (hi->first - lo->first);
  return lo->second + f * (hi->second - lo->second);
}

double datasheet_sensitivity(const ChannelKey& key) {
  if (key.band == Band::Ism2400) return -92.0;
  // SX1276 datasheet, LoRa mode, rows SF6..SF12.
  static constexpr double k125[] = {-118, -123, -126, -129, -132, -133, -136};
  static constexpr double k250[] = {-115, -120, -123, -125, -128, -130, -133};
  static constexpr double k500[] = {-111, -116, -119, -122, -125, -128, -130};
  const int i = std::clamp(key.sf, 6, 12) - 6;
  switch (key.bandwidth_hz) {
    case 250000: return k250[i];
    case 500000: return k500[i];
    default: return k125[i];
  }
}

ReceptionOutcome resolve_reception(const Transmission& tx, DeviceId receiver,
                                   std::span<const Transmission* const> concurrent, const ChannelModel& channel,
                                   Rng& rng) {
  if (receiver == tx.sender) throw std::invalid_argument("receiver must differ from sender");
  ReceptionOutcome out;
  if (!channel.link.has_link(tx.sender, receiver)) {
    out.rssi_dbm = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.rssi_dbm = link_rssi(tx.sender, receiver, channel.link, tx.tx_power_dbm, rng);
  const double draw = rng.uniform();
  const double sensitivity = channel.sensitivity(tx.key);
  if (out.rssi_dbm < sensitivity) {
    out.kind = ReceptionOutcome::Kind::Lost;
    return out;
  }
  for (const Transmission* other : concurrent) {
    if (other->id == tx.id || other->key != tx.key || !other->overlaps(tx) || other->sender == receiver ||
        !channel.link.has_link(other->sender, receiver))
      continue;
    const double interferer = channel.link.mean_rssi(other->sender, receiver, other->tx_power_dbm);
    if (interferer > out.rssi_dbm - channel.capture_margin_db) {
      out.collided = true;
      break;
    }
  }
  const bool noise_hit = draw < channel.p_corrupt(out.rssi_dbm - sensitivity);
  out.kind = (out.collided || noise_hit) ? ReceptionOutcome::Kind::Corrupted : ReceptionOutcome::Kind::Ok;
  return out;
}

void Medium::prune(SimTime now) {
  static const SimTime horizon = SimTime::from_seconds(15.0);
  while (!recent_.empty() && recent_.front().end() + horizon < now) recent_.pop_front();
}

const Transmission& Medium::begin(Transmission tx) {
  if (tx.duration <= SimTime::zero()) throw std::invalid_argument("transmission duration must be positive");
  prune(tx.start);
  for (const auto& other : recent_)
    if (other.sender == tx.sender && other.overlaps(tx))
      throw std::logic_error("device " + std::to_string(tx.sender) + " already transmitting");
  tx.id = next_id_++;
  log_.push_back({tx.sender, tx.start, tx.duration, tx.frame.kind});
  recent_.push_back(std::move(tx));
  return recent_.back();
}

std::vector<const Transmission*> Medium::overlapping(const Transmission& tx) const {
  std::vector<const Transmission*> out;
  for (const auto& other : recent_)
    if (other.id != tx.id && other.key == tx.key && other.overlaps(tx)) out.push_back(&other);
  return out;
}

bool Medium::is_transmitting(DeviceId device, SimTime from, SimTime to) const {
  for (const auto& t : recent_)
    if (t.sender == device && t.start < to && from < t.end()) return true;
  return false;
}

bool Medium::busy(DeviceId listener, const ChannelKey& key, SimTime from, SimTime to, double threshold_dbm,
                  const LinkModel& link) const {
  for (const auto& t : recent_) {
    if (t.key != key || t.sender == listener || !(t.start < to && from < t.end())) continue;
    if (!link.has_link(t.sender, listener)) continue;
    if (link.mean_rssi(t.sender, listener, t.tx_power_dbm) >= threshold_dbm) return true;
  }
  return false;
}

}  // namespace iotsim
