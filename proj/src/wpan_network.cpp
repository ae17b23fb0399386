#include "iotsim/wpan_network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iotsim::wpan {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
}

}  // namespace

void CsmaParams::validate() const {
  require(min_be >= 0, "min_be", "must be >= 0");
  require(max_be >= min_be, "max_be", "must be >= min_be");
  require(max_be <= 16, "max_be", "must be <= 16");
  require(max_backoffs >= 0, "max_backoffs", "must be >= 0");
  require(backoff_unit_s > 0, "backoff_unit_s", "must be positive");
  require(cca_duration_s > 0, "cca_duration_s", "must be positive");
  require(ack_timeout_s > 0, "ack_timeout_s", "must be positive");
  require(turnaround_s >= 0, "turnaround_s", "must be >= 0");
  require(max_frame_retries >= 0, "max_frame_retries", "must be >= 0");
  require(bit_rate > 0, "bit_rate", "must be positive");
}

void WpanConfig::validate() const {
  csma.validate();
  require(phy_overhead >= 0, "phy_overhead", "must be >= 0");
  require(ack_length > 0, "ack_length", "must be positive");
  require(edp_period_s > 0, "edp_period_s", "must be positive");
  require(pir_period_s > 0, "pir_period_s", "must be positive");
  require(edp_payload > 0 && edp_payload <= 100, "edp_payload", "must be in [1, 100]");
  require(pdp_payload > 0 && pdp_payload <= 100, "pdp_payload", "must be in [1, 100]");
  require(join_payload > 0 && join_payload <= 100, "join_payload", "must be in [1, 100]");
  require(join_retry_s > 0, "join_retry_s", "must be positive");
  require(join_jitter_s >= 0, "join_jitter_s", "must be >= 0");
  require(queue_depth >= 1, "queue_depth", "must be >= 1");
}

std::uint64_t WpanConfig::max_packets_per_window(double window_s) const {
  return static_cast<std::uint64_t>(std::floor(window_s / edp_period_s + 1e-9));
}

SimTime frame_duration(int phy_overhead, int payload_len, double bit_rate) {
  return SimTime::from_seconds((phy_overhead + payload_len) * 8.0 / bit_rate);
}

std::optional<ParentCandidate> tree_join(std::span<const ParentCandidate> candidates, double threshold_dbm) {
  std::optional<ParentCandidate> best;
  for (const auto& c : candidates) {
    if (c.rssi_dbm < threshold_dbm) continue;
    if (c.id == kGateway) return c;
    if (!best || c.depth < best->depth || (c.depth == best->depth && c.rssi_dbm > best->rssi_dbm)) best = c;
  }
  return best;
}

WpanNetwork::WpanNetwork(Engine& engine, Medium& medium, const ChannelModel& channel, WpanConfig config,
                         std::vector<WpanNodeSpec> nodes, std::uint64_t seed, metrics::Collector& collector)
    : engine_(engine),
      medium_(medium),
      seed_(seed),
      channel_(channel),
      config_(std::move(config)),
      specs_(std::move(nodes)),
      collector_(collector) {
  config_.validate();
  const std::size_t n = specs_.size() + 1;
  tree_.resize(n);
  tree_[kGateway].joined = true;
  stats_.resize(n);
  origin_seq_.assign(n, 0);
  edp_phase_.assign(n, SimTime::zero());
  join_in_progress_.assign(n, false);
  join_retry_.assign(n, 0);
  mac_.resize(n);
  for (DeviceId id = 0; id < n; ++id) {
    mac_[id].rng = Rng::stream(seed, id, "mac");
    mac_[id].rx_rng = Rng::stream(seed, id, "rx");
    traffic_rng_.push_back(Rng::stream(seed, id, "traffic"));
  }
  const auto& c = config_.csma;
  unit_ = SimTime::from_seconds(c.backoff_unit_s);
  cca_ = SimTime::from_seconds(c.cca_duration_s);
  ack_timeout_ = SimTime::from_seconds(c.ack_timeout_s);
  turnaround_ = SimTime::from_seconds(c.turnaround_s);
  ack_duration_ = frame_duration(config_.phy_overhead, config_.ack_length, c.bit_rate);
}

void WpanNetwork::start() {
  for (DeviceId id = 1; id < tree_.size(); ++id)
    engine_.schedule_at(SimTime::from_seconds(specs_[id - 1].start_time_s), [this, id] { power_on(id); });
}

bool WpanNetwork::tree_consistent() const {
  if (tree_[kGateway].parent || tree_[kGateway].depth != 0) return false;
  for (DeviceId id = 1; id < tree_.size(); ++id) {
    const auto& t = tree_[id];
    if (!t.joined) {
      if (t.parent) return false;
      continue;
    }
    if (!t.parent || *t.parent >= tree_.size() || *t.parent == id) return false;
    const auto& p = tree_[*t.parent];
    if (!p.joined || t.depth != p.depth + 1 || !p.children.contains(id)) return false;
    // Walking up must reach the gateway within depth steps.
    DeviceId cur = id;
    for (int steps = 0; cur != kGateway; ++steps) {
      if (steps > static_cast<int>(tree_.size())) return false;
      cur = *tree_[cur].parent;
    }
  }
  for (DeviceId id = 0; id < tree_.size(); ++id)
    for (DeviceId child : tree_[id].children)
      if (child >= tree_.size() || tree_[child].parent != id) return false;
  return true;
}

// --- node behaviour ----------------------------------------------------------

void WpanNetwork::power_on(DeviceId id) {
  auto& rng = traffic_rng_[id];
  edp_phase_[id] = SimTime::from_seconds(rng.uniform(0.01 * config_.edp_period_s, 0.99 * config_.edp_period_s));
  const SimTime pir_phase = SimTime::from_seconds(rng.uniform(0.0, config_.pir_period_s));
  const SimTime now = engine_.now();
  const SimTime period = SimTime::from_seconds(config_.edp_period_s);
  // First EDP tick at or after power-on on the node's phase grid.
  std::int64_t k = 0;
  if (now > edp_phase_[id]) k = ((now - edp_phase_[id]).ns() + period.ns() - 1) / period.ns();
  engine_.schedule_at(edp_phase_[id] + period * k, [this, id] { edp_tick(id); });
  if (specs_[id - 1].sensing && specs_[id - 1].occupancy > 0.0)
    engine_.schedule_in(pir_phase, [this, id] { pir_tick(id); });
  const SimTime jitter = SimTime::from_seconds(rng.uniform(0.0, config_.join_jitter_s));
  engine_.schedule_in(jitter, [this, id] { attempt_join(id); });
}

void WpanNetwork::attempt_join(DeviceId id) {
  if (tree_[id].joined) return;
  auto& rng = traffic_rng_[id];
  std::vector<ParentCandidate> candidates;
  for (DeviceId c = 0; c < tree_.size(); ++c) {
    if (c == id || !tree_[c].joined || !channel_.link.has_link(c, id)) continue;
    candidates.push_back({c, tree_[c].depth, link_rssi(c, id, channel_.link, config_.tx_power_dbm, rng)});
  }
  const SimTime retry = SimTime::from_seconds(config_.join_retry_s);
  join_retry_[id] = engine_.schedule_in(retry, [this, id] { attempt_join(id); });
  const auto choice = tree_join(candidates, config_.rssi_join_threshold_dbm);
  if (!choice) return;
  Frame req;
  req.kind = FrameKind::JoinReq;
  req.src = id;
  req.dst = choice->id;
  req.origin = id;
  req.payload_len = config_.join_payload;
  req.generated = engine_.now();
  enqueue(id, {std::move(req), {}});
}

void WpanNetwork::joined(DeviceId id, DeviceId parent) {
  auto& t = tree_[id];
  if (t.joined) return;
  t.joined = true;
  t.parent = parent;
  t.depth = tree_[parent].depth + 1;
  tree_[parent].children.insert(id);
  engine_.cancel(join_retry_[id]);
  const bool all = std::all_of(tree_.begin(), tree_.end(), [](const TreeState& s) { return s.joined; });
  if (all && !all_joined_at_) all_joined_at_ = engine_.now();
}

void WpanNetwork::edp_tick(DeviceId id) {
  engine_.schedule_in(SimTime::from_seconds(config_.edp_period_s), [this, id] { edp_tick(id); });
  if (tree_[id].joined && specs_[id - 1].sensing) originate(id, FrameKind::Edp);
}

void WpanNetwork::pir_tick(DeviceId id) {
  engine_.schedule_in(SimTime::from_seconds(config_.pir_period_s), [this, id] { pir_tick(id); });
  const bool motion = traffic_rng_[id].bernoulli(specs_[id - 1].occupancy);
  if (motion && tree_[id].joined) originate(id, FrameKind::Pdp);
}

void WpanNetwork::originate(DeviceId id, FrameKind kind) {
  Frame f;
  f.kind = kind;
  f.src = id;
  f.dst = *tree_[id].parent;
  f.origin = id;
  f.seq = origin_seq(id);
  f.payload_len = kind == FrameKind::Edp ? config_.edp_payload : config_.pdp_payload;
  f.pir_flag = kind == FrameKind::Pdp;
  f.generated = engine_.now();
  // Keyed by what the frame is, so extra traffic leaves other frames' draws unchanged.
  std::uint64_t key =
      static_cast<std::uint64_t>(f.generated.ns()) ^ (std::uint64_t{id} << 48) ^ (std::uint64_t(kind) << 40);
  f.draw_key = splitmix64(key) | 1;
  collector_.add(f.generated, id,
                 kind == FrameKind::Edp ? metrics::CounterKind::EdpGenerated : metrics::CounterKind::PdpGenerated);
  std::vector<DeviceId> trail;
  if (keep_trails_) trail.push_back(id);
  enqueue(id, {std::move(f), std::move(trail)});
}

// --- MAC ---------------------------------------------------------------------

void WpanNetwork::enqueue(DeviceId id, Pending item) {
  auto& mac = mac_[id];
  const bool data = item.frame.kind == FrameKind::Edp || item.frame.kind == FrameKind::Pdp;
  if (data) ++stats_[id].offered_from_origin[item.frame.origin];
  if (mac.queue.size() >= static_cast<std::size_t>(config_.queue_depth)) {
    ++stats_[id].queue_drops;
    drop(id, mac.queue.front().frame, metrics::CounterKind::QueueDrop);
    mac.queue.pop_front();
  }
  mac.queue.push_back(std::move(item));
  if (mac.state == MacState::Idle) mac_start_next(id);
}

void WpanNetwork::drop(DeviceId, const Frame& frame, metrics::CounterKind reason) {
  if (frame.kind != FrameKind::Edp && frame.kind != FrameKind::Pdp) return;
  collector_.add(frame.generated, frame.origin, reason);
}

void WpanNetwork::mac_start_next(DeviceId id) {
  auto& mac = mac_[id];
  if (mac.state != MacState::Idle || mac.queue.empty()) return;
  mac.current = std::move(mac.queue.front());
  mac.queue.pop_front();
  mac.current->frame.src = id;
  mac.current->frame.mac_seq = mac.dsn++;
  mac.retries = 0;
  mac_begin_attempt(id);
}

void WpanNetwork::mac_begin_attempt(DeviceId id) {
  auto& mac = mac_[id];
  mac.nb = 0;
  mac.be = config_.csma.min_be;
  mac_backoff(id);
}

void WpanNetwork::mac_backoff(DeviceId id) {
  auto& mac = mac_[id];
  mac.state = MacState::Backoff;
  const std::uint64_t slots = mac.rng.below(std::uint64_t{1} << mac.be);
  const SimTime cca_start = engine_.now() + unit_ * static_cast<std::int64_t>(slots);
  engine_.schedule_at(cca_start, [this, id, cca_start] {
    mac_[id].state = MacState::Cca;
    engine_.schedule_at(cca_start + cca_, [this, id, cca_start] { mac_cca_done(id, cca_start); });
  });
}

void WpanNetwork::mac_cca_done(DeviceId id, SimTime cca_start) {
  auto& mac = mac_[id];
  const SimTime now = engine_.now();
  const bool busy = mac.busy_until > cca_start ||
                    medium_.busy(id, config_.key(), cca_start, now, config_.csma.cca_threshold_dbm, channel_.link);
  if (!busy) {
    mac.state = MacState::Transmitting;
    engine_.schedule_in(turnaround_, [this, id] { mac_transmit(id); });
    return;
  }
  ++mac.nb;
  mac.be = std::min(mac.be + 1, config_.csma.max_be);
  if (mac.nb > config_.csma.max_backoffs) {
    ++stats_[id].channel_access_failures;
    drop(id, mac.current->frame, metrics::CounterKind::ChannelAccessFailure);
    mac_finish(id, false);
    return;
  }
  mac_backoff(id);
}

void WpanNetwork::mac_transmit(DeviceId id) {
  auto& mac = mac_[id];
  if (mac.busy_until > engine_.now()) {
    // Radio claimed by an acknowledgement since the CCA; treat as busy.
    ++mac.nb;
    mac.be = std::min(mac.be + 1, config_.csma.max_be);
    if (mac.nb > config_.csma.max_backoffs) {
      ++stats_[id].channel_access_failures;
      drop(id, mac.current->frame, metrics::CounterKind::ChannelAccessFailure);
      mac_finish(id, false);
      return;
    }
    mac_backoff(id);
    return;
  }
  const Frame& f = mac.current->frame;
  if (f.kind == FrameKind::Edp || f.kind == FrameKind::Pdp) ++stats_[id].data_attempts;
  const SimTime duration = frame_duration(config_.phy_overhead, f.payload_len, config_.csma.bit_rate);
  const Transmission& tx = transmit(id, f, duration);
  if (keep_trails_) air_trails_[tx.id] = mac.current->trail;
  const std::uint32_t dsn = f.mac_seq;
  const SimTime end = tx.end();
  engine_.schedule_at(end, [this, id] { mac_[id].state = MacState::WaitAck; });
  mac.ack_timer = engine_.schedule_at(end + ack_timeout_, [this, id, dsn] { mac_ack_timeout(id, dsn); });
}

void WpanNetwork::mac_ack_timeout(DeviceId id, std::uint32_t dsn) {
  auto& mac = mac_[id];
  if (!mac.current || mac.current->frame.mac_seq != dsn || mac.state != MacState::WaitAck) return;
  ++mac.retries;
  if (mac.retries > config_.csma.max_frame_retries) {
    ++stats_[id].retry_failures;
    drop(id, mac.current->frame, metrics::CounterKind::RetryFailure);
    mac_finish(id, false);
    return;
  }
  mac_begin_attempt(id);
}

void WpanNetwork::mac_finish(DeviceId id, bool) {
  auto& mac = mac_[id];
  mac.current.reset();
  mac.state = MacState::Idle;
  mac_start_next(id);
}

// --- air interface -----------------------------------------------------------

const Transmission& WpanNetwork::transmit(DeviceId sender, Frame frame, SimTime duration) {
  Transmission tx;
  tx.sender = sender;
  tx.start = engine_.now();
  tx.duration = duration;
  tx.key = config_.key();
  tx.tx_power_dbm = config_.tx_power_dbm;
  tx.frame = std::move(frame);
  mac_[sender].busy_until = std::max(mac_[sender].busy_until, tx.start + duration);
  const Transmission& on_air = medium_.begin(std::move(tx));
  Transmission copy = on_air;
  engine_.schedule_at(copy.end(), [this, copy] { on_frame_end(copy); });
  return on_air;
}

void WpanNetwork::send_ack(DeviceId from, DeviceId to, std::uint32_t dsn, std::uint64_t draw_key) {
  auto& mac = mac_[from];
  const SimTime at = engine_.now() + turnaround_;
  if (mac.busy_until > engine_.now()) return;
  mac.busy_until = at + ack_duration_;
  ++stats_[from].acks_sent;
  engine_.schedule_at(at, [this, from, to, dsn, draw_key] {
    Frame ack;
    ack.kind = FrameKind::Ack;
    ack.src = from;
    ack.dst = to;
    ack.origin = from;
    ack.mac_seq = dsn;
    ack.payload_len = config_.ack_length;
    ack.draw_key = draw_key;
    Transmission tx;
    tx.sender = from;
    tx.start = engine_.now();
    tx.duration = ack_duration_;
    tx.key = config_.key();
    tx.tx_power_dbm = config_.tx_power_dbm;
    tx.frame = std::move(ack);
    const Transmission& on_air = medium_.begin(std::move(tx));
    Transmission copy = on_air;
    engine_.schedule_at(copy.end(), [this, copy] { on_frame_end(copy); });
  });
}

void WpanNetwork::on_frame_end(const Transmission& tx) {
  std::vector<DeviceId> trail;
  if (auto it = air_trails_.find(tx.id); it != air_trails_.end()) {
    trail = std::move(it->second);
    air_trails_.erase(it);
  }
  const DeviceId rx = tx.frame.dst;
  if (rx >= tree_.size() || rx == tx.sender) return;
  if (medium_.is_transmitting(rx, tx.start, tx.end())) return;
  if (rx != kGateway && engine_.now() < SimTime::from_seconds(specs_[rx - 1].start_time_s)) return;
  const auto concurrent = medium_.overlapping(tx);
  ReceptionOutcome out;
  if (tx.frame.draw_key != 0) {
    // The data sender's retry count tells attempts of the same frame apart.
    const DeviceId data_sender = tx.frame.kind == FrameKind::Ack ? rx : tx.sender;
    std::uint64_t attempt = tx.frame.draw_key ^ (std::uint64_t(mac_[data_sender].retries) << 56);
    Rng draws = Rng::stream(seed_ ^ splitmix64(attempt), std::uint64_t{tx.sender} << 32 | rx,
                            tx.frame.kind == FrameKind::Ack ? "ack" : "hop");
    out = resolve_reception(tx, rx, concurrent, channel_, draws);
  } else {
    out = resolve_reception(tx, rx, concurrent, channel_, mac_[rx].rx_rng);
  }
  if (out.kind != ReceptionOutcome::Kind::Ok) return;  // checksum failures are discarded

  const Frame& f = tx.frame;
  if (f.kind == FrameKind::Ack) {
    auto& mac = mac_[rx];
    if (mac.state == MacState::WaitAck && mac.current && mac.current->frame.mac_seq == f.mac_seq &&
        mac.current->frame.dst == f.src) {
      engine_.cancel(mac.ack_timer);
      mac_finish(rx, true);
    }
    return;
  }
  send_ack(rx, tx.sender, f.mac_seq, f.draw_key);
  auto& mac = mac_[rx];
  if (auto it = mac.last_dsn_from.find(tx.sender); it != mac.last_dsn_from.end() && it->second == f.mac_seq) {
    ++stats_[rx].duplicates;
    return;
  }
  mac.last_dsn_from[tx.sender] = f.mac_seq;
  on_frame_received(rx, f, trail);
}

void WpanNetwork::on_frame_received(DeviceId rx, const Frame& f, const std::vector<DeviceId>& trail) {
  switch (f.kind) {
    case FrameKind::JoinReq: {
      if (!tree_[rx].joined) return;
      Frame ack;
      ack.kind = FrameKind::JoinAck;
      ack.dst = f.src;
      ack.origin = rx;
      ack.payload_len = config_.join_payload;
      ack.generated = engine_.now();
      enqueue(rx, {std::move(ack), {}});
      return;
    }
    case FrameKind::JoinAck:
      if (rx != kGateway && tree_[f.src].joined) joined(rx, f.src);
      return;
    case FrameKind::Edp:
    case FrameKind::Pdp: {
      ++stats_[rx].received_from_origin[f.origin];
      std::vector<DeviceId> next_trail = trail;
      if (keep_trails_) next_trail.push_back(rx);
      if (rx == kGateway) {
        collector_.add(f.generated, f.origin,
                       f.kind == FrameKind::Edp ? metrics::CounterKind::EdpDelivered
                                                : metrics::CounterKind::PdpDelivered);
        if (keep_trails_) trails_.push_back(std::move(next_trail));
        return;
      }
      if (!tree_[rx].joined) return;
      Frame fwd = f;
      fwd.dst = *tree_[rx].parent;
      fwd.hops = f.hops + 1;
      enqueue(rx, {std::move(fwd), std::move(next_trail)});
      return;
    }
    default:
      return;
  }
}

}  // namespace iotsim::wpan
