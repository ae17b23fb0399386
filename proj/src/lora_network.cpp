#include "iotsim/lora_network.hpp"

#include <algorithm>
#include <cmath>

#include "iotsim/crc16.hpp"

namespace iotsim::lora {

double LoraConfig::slot_s() const {
  airtime::SlotParams p;
  p.drp_len = drp_payload;
  p.dp_len = dp_payload;
  p.limit = limit;
  return airtime::poll_slot_duration(radio, gw_delay_s, sensor_latency_s, p);
}

double LoraConfig::poll_gap_s(int n_nodes) const {
  const double dp_period = airtime::min_tx_period(airtime::time_on_air(radio, dp_payload).total, limit);
  return std::max(slot_s(), dp_period / std::max(n_nodes, 1));
}

double LoraConfig::exchange_s() const {
  return airtime::time_on_air(radio, drp_payload).total + sensor_latency_s +
         airtime::time_on_air(radio, dp_payload).total + gw_delay_s;
}

double LoraConfig::timeout_s() const {
  return airtime::time_on_air(radio, drp_payload).total + sensor_latency_s + airtime::time_on_air(radio, 60).total +
         timeout_margin_s;
}

std::uint64_t LoraConfig::max_packets_per_window(int n_nodes, double window_s) const {
  if (n_nodes < 1) return 0;
  if (pacing == DutyPacing::FixedGap)
    return static_cast<std::uint64_t>(airtime::polls_per_window(n_nodes, poll_gap_s(n_nodes), window_s));
  const double drp = airtime::time_on_air(radio, drp_payload).total;
  const double dp = airtime::time_on_air(radio, dp_payload).total;
  const double by_time = window_s / std::max(exchange_s(), timeout_s());
  const double by_budget = limit.budget_per_window() / drp;
  const double by_node_budget = limit.budget_per_window() / dp;
  // Round robin hands the remainder of a window's polls to the first nodes in order.
  const double polls = std::floor(std::min(by_time, by_budget));
  return static_cast<std::uint64_t>(std::min(std::ceil(polls / n_nodes), std::floor(by_node_budget)));
}

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

Frame make_frame(FrameKind kind, DeviceId src, DeviceId dst, std::uint32_t seq, int payload_len) {
  Frame f;
  f.kind = kind;
  f.src = src;
  f.dst = dst;
  f.origin = src;
  f.seq = seq;
  f.payload_len = payload_len;
  f.payload.reserve(static_cast<std::size_t>(payload_len));
  return f;
}

void fill_to_length(Frame& f, Rng* rng) {
  const auto len = static_cast<std::size_t>(f.payload_len);
  if (f.payload.size() > len) f.payload.resize(len);
  while (f.payload.size() < static_cast<std::size_t>(f.payload_len))
    f.payload.push_back(rng ? static_cast<std::uint8_t>(rng->next_u64() & 0xFF) : 0);
}

Frame corrupted_copy(const Frame& f, Rng& rng) {
  Frame out = f;
  if (out.payload.empty()) {
    out.app_crc ^= 0x0001;
  } else {
    const std::uint64_t bit = rng.below(out.payload.size() * 8);
    out.payload[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
  }
  return out;
}

}  // namespace

void seal(Frame& frame) { frame.app_crc = crc16_ccitt(frame.payload); }

bool crc_ok(const Frame& frame) { return crc16_ccitt(frame.payload) == frame.app_crc; }

void sample_pir(LoraNodeState& node) {
  if (node.occupancy > 0.0 && node.rng.bernoulli(node.occupancy)) node.pir_pending = true;
}

std::optional<Frame> node_handle_drp(LoraNodeState& node, DeviceId self, const Frame& drp, bool drp_intact,
                                     int dp_payload) {
  if (!drp_intact || !node.joined || drp.kind != FrameKind::Drp || drp.dst != self) return std::nullopt;
  Frame dp = make_frame(FrameKind::Dp, self, kGateway, drp.seq, dp_payload);
  dp.pir_flag = node.pir_pending;
  node.pir_pending = false;
  put_u16(dp.payload, self);
  put_u16(dp.payload, drp.seq);
  dp.payload.push_back(dp.pir_flag ? 1 : 0);
  fill_to_length(dp, &node.rng);
  seal(dp);
  return dp;
}

LoraNetwork::LoraNetwork(Engine& engine, Medium& medium, const ChannelModel& channel, LoraConfig config,
                         std::vector<LoraNodeSpec> nodes, std::uint64_t seed, metrics::Collector& collector)
    : engine_(engine),
      medium_(medium),
      channel_(channel),
      config_(std::move(config)),
      specs_(std::move(nodes)),
      collector_(collector),
      seed_(seed),
      gw_rx_rng_(Rng::stream(seed, kGateway, "rx")) {
  config_.radio.validate();
  gw_.ledger = DutyCycleLedger(config_.limit);
  LoraNodeState blank;
  blank.ledger = DutyCycleLedger(config_.limit);
  nodes_.resize(specs_.size() + 1, blank);
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    auto& n = nodes_[i + 1];
    n.occupancy = specs_[i].occupancy;
    n.sensor_latency = SimTime::from_seconds(config_.sensor_latency_s);
    n.rng = Rng::stream(seed, i + 1, "node");
    n.rx_rng = Rng::stream(seed, i + 1, "rx");
  }
  slot_ = SimTime::from_seconds(config_.slot_s());
  gw_.poll_gap = slot_;
  timeout_ = SimTime::from_seconds(config_.timeout_s());
  gw_delay_ = SimTime::from_seconds(config_.gw_delay_s);
  join_window_ = SimTime::from_seconds(config_.join_window_s);
  refresh_ = SimTime::from_seconds(config_.refresh_interval_s);
  pir_period_ = SimTime::from_seconds(config_.pir_period_s);
  toa_drp_ = toa(config_.drp_payload);
  toa_dp_ = toa(config_.dp_payload);
  toa_beacon_ = toa(config_.beacon_payload);
  toa_join_req_ = toa(config_.join_req_payload);
  toa_join_ack_ = toa(config_.join_ack_payload);
}

SimTime LoraNetwork::toa(int payload) const {
  return SimTime::from_seconds(airtime::time_on_air(config_.radio, payload).total);
}

void LoraNetwork::start() {
  engine_.schedule_at(SimTime::zero(), [this] { epoch_start(); });
  for (DeviceId id = 1; id < nodes_.size(); ++id)
    engine_.schedule_at(SimTime::from_seconds(specs_[id - 1].start_time_s), [this, id] { node_power_on(id); });
}

// --- air interface -----------------------------------------------------------

const Transmission& LoraNetwork::transmit(DeviceId sender, Frame frame, SimTime duration) {
  Transmission tx;
  tx.sender = sender;
  tx.start = engine_.now();
  tx.duration = duration;
  tx.key = config_.key();
  tx.tx_power_dbm = config_.tx_power_dbm;
  tx.frame = std::move(frame);
  DutyCycleLedger& ledger = sender == kGateway ? gw_.ledger : nodes_[sender].ledger;
  ledger.record(tx.start, tx.duration);
  const Transmission& on_air = medium_.begin(std::move(tx));
  if (!medium_.overlapping(on_air).empty()) ++overlapping_starts_;
  Transmission copy = on_air;
  engine_.schedule_at(copy.end(), [this, copy] { on_air_end(copy); });
  return on_air;
}

std::optional<std::pair<ReceptionOutcome, Frame>> LoraNetwork::receive(const Transmission& tx, DeviceId receiver) {
  if (medium_.is_transmitting(receiver, tx.start, tx.end())) return std::nullopt;
  if (receiver != kGateway && !nodes_[receiver].powered) return std::nullopt;
  Rng& rng = receiver == kGateway ? gw_rx_rng_ : nodes_[receiver].rx_rng;
  const auto concurrent = medium_.overlapping(tx);
  ReceptionOutcome out = resolve_reception(tx, receiver, concurrent, channel_, rng);
  if (out.kind == ReceptionOutcome::Kind::Lost) return std::pair{out, Frame{}};
  Frame rx = out.kind == ReceptionOutcome::Kind::Corrupted ? corrupted_copy(tx.frame, rng) : tx.frame;
  return std::pair{out, std::move(rx)};
}

void LoraNetwork::on_air_end(const Transmission& tx) {
  const Frame& f = tx.frame;
  switch (f.kind) {
    case FrameKind::Beacon: {
      for (DeviceId id = 1; id < nodes_.size(); ++id) {
        auto& node = nodes_[id];
        if (!node.powered || node.joined || node.join_scheduled) continue;
        auto rx = receive(tx, id);
        if (!rx || rx->first.kind != ReceptionOutcome::Kind::Ok || !crc_ok(rx->second)) continue;
        node.join_scheduled = true;
        const double delay = node.rng.uniform_open_closed(0.0, config_.join_window_s);
        engine_.schedule_in(SimTime::from_seconds(delay), [this, id] { node_send_join_req(id); });
      }
      gw_.ready_at = std::max(gw_.ready_at, engine_.now());
      break;
    }
    case FrameKind::JoinReq: {
      auto rx = receive(tx, kGateway);
      if (!rx || rx->first.kind != ReceptionOutcome::Kind::Ok || !crc_ok(rx->second)) break;
      gw_.ready_at = std::max(gw_.ready_at, engine_.now() + gw_delay_);
      const DeviceId node = f.src;
      if (std::find(gw_.pending_acks.begin(), gw_.pending_acks.end(), node) == gw_.pending_acks.end())
        gw_.pending_acks.push_back(node);
      pump();
      break;
    }
    case FrameKind::JoinAck: {
      auto rx = receive(tx, f.dst);
      if (rx && rx->first.kind == ReceptionOutcome::Kind::Ok && crc_ok(rx->second)) {
        nodes_[f.dst].joined = true;
        if (!all_joined_at_ &&
            std::all_of(nodes_.begin() + 1, nodes_.end(), [](const LoraNodeState& n) { return n.joined; }))
          all_joined_at_ = engine_.now();
      }
      pump();
      break;
    }
    case FrameKind::Drp: {
      const DeviceId id = f.dst;
      auto rx = receive(tx, id);
      if (!rx) break;
      const bool intact = rx->first.kind == ReceptionOutcome::Kind::Ok && crc_ok(rx->second);
      auto& node = nodes_[id];
      auto dp = node_handle_drp(node, id, rx->second, intact, config_.dp_payload);
      if (!dp) break;
      engine_.schedule_in(node.sensor_latency, [this, id, frame = std::move(*dp)]() mutable {
        auto& n = nodes_[id];
        if (!n.ledger.admits(engine_.now(), toa_dp_)) {
          collector_.add(engine_.now(), id, metrics::CounterKind::DutySkip);
          return;
        }
        transmit(id, std::move(frame), toa_dp_);
      });
      break;
    }
    case FrameKind::Dp: {
      auto rx = receive(tx, kGateway);
      if (!rx || !gw_.awaiting || *gw_.awaiting != f.src || f.seq != gw_.awaiting_seq) break;
      if (rx->first.kind == ReceptionOutcome::Kind::Lost) break;  // gateway keeps waiting for the timeout
      gw_.ready_at = std::max(gw_.ready_at, engine_.now() + gw_delay_);
      collector_.add(engine_.now(), f.src, metrics::CounterKind::Rssi, rx->first.rssi_dbm);
      if (rx->first.kind == ReceptionOutcome::Kind::Ok && crc_ok(rx->second)) {
        collector_.add(engine_.now(), f.src, metrics::CounterKind::DpOk);
        if (rx->second.pir_flag) collector_.add(engine_.now(), f.src, metrics::CounterKind::PdpDelivered);
        exchange_done(true);
      } else {
        collector_.add(engine_.now(), f.src, metrics::CounterKind::DpCrcError);
        exchange_done(false);
      }
      break;
    }
    default:
      break;
  }
}

// --- gateway -----------------------------------------------------------------

void LoraNetwork::epoch_start() {
  gw_.epoch_end = engine_.now() + refresh_;
  gw_.polling = false;
  gw_.polls_remaining = 0;
  gw_.beacon_due = true;
  engine_.schedule_at(gw_.epoch_end, [this] { epoch_start(); });
  pump();
}

void LoraNetwork::send_beacon(SimTime at) {
  Frame f = make_frame(FrameKind::Beacon, kGateway, kBroadcast, gw_.seq++, config_.beacon_payload);
  put_u16(f.payload, static_cast<std::uint32_t>(gw_.registry.size()));
  fill_to_length(f, nullptr);
  seal(f);
  transmit(kGateway, std::move(f), toa_beacon_);
  gw_.reserved = false;
  const SimTime beacon_end = at + toa_beacon_;
  gw_.ready_at = std::max(gw_.ready_at, beacon_end + gw_delay_);
  // With nobody registered the gateway listens for the whole join window first.
  const SimTime poll_start = gw_.registry.empty() ? beacon_end + join_window_ : beacon_end + gw_delay_;
  engine_.schedule_at(poll_start, [this] { begin_polling(); });
}

void LoraNetwork::begin_polling() {
  gw_.poll_list = gw_.registry;
  if (gw_.poll_list.empty()) {
    pump();
    return;
  }
  gw_.cursor %= gw_.poll_list.size();
  const SimTime start = std::max(engine_.now(), gw_.ready_at);
  gw_.polling = true;
  if (config_.pacing == DutyPacing::FixedGap) {
    const auto n = static_cast<std::int64_t>(gw_.poll_list.size());
    const SimTime span = gw_.epoch_end > start ? gw_.epoch_end - start : SimTime::zero();
    gw_.poll_gap = SimTime::from_seconds(config_.poll_gap_s(static_cast<int>(n)));
    const std::int64_t rounds = span / (gw_.poll_gap * n);
    gw_.polls_remaining = rounds * n;
    gw_.next_slot = std::max(gw_.next_slot, start);
  }
  pump();
}

void LoraNetwork::pump() {
  if (gw_.reserved || gw_.awaiting) return;
  const SimTime now = engine_.now();
  const bool fixed = config_.pacing == DutyPacing::FixedGap;

  if (gw_.beacon_due) {
    const SimTime at = gw_.ledger.earliest_admission(std::max(now, gw_.ready_at), toa_beacon_);
    gw_.beacon_due = false;
    gw_.reserved = true;
    engine_.schedule_at(at, [this] { send_beacon(engine_.now()); });
    return;
  }

  if (!gw_.pending_acks.empty()) {
    SimTime at = std::max(now, gw_.ready_at);
    if (fixed && gw_.polling) at = std::max(at, gw_.next_slot);
    at = gw_.ledger.earliest_admission(at, toa_join_ack_);
    if (gw_.polling && at + (fixed ? gw_.poll_gap : toa_join_ack_) > gw_.epoch_end) {
      // Wait for the next epoch; the join ack goes out before polling resumes.
      gw_.polling = false;
      return;
    }
    const DeviceId node = gw_.pending_acks.front();
    gw_.pending_acks.pop_front();
    gw_.reserved = true;
    if (fixed && gw_.polling) gw_.next_slot = at + gw_.poll_gap;
    engine_.schedule_at(at, [this, node] { send_join_ack(node); });
    return;
  }

  if (!gw_.polling || gw_.poll_list.empty()) return;
  if (fixed && gw_.polls_remaining <= 0) {
    gw_.polling = false;
    return;
  }
  SimTime at = std::max(now, gw_.ready_at);
  if (fixed) at = std::max(at, gw_.next_slot);
  at = gw_.ledger.earliest_admission(at, toa_drp_);
  const SimTime needed = std::max(fixed ? gw_.poll_gap : SimTime::from_seconds(config_.exchange_s()), timeout_);
  if (at + needed > gw_.epoch_end) {
    gw_.polling = false;
    return;
  }
  gw_.reserved = true;
  engine_.schedule_at(at, [this] { send_drp(); });
}

void LoraNetwork::send_join_ack(DeviceId node) {
  Frame f = make_frame(FrameKind::JoinAck, kGateway, node, gw_.seq++, config_.join_ack_payload);
  put_u16(f.payload, node);
  fill_to_length(f, nullptr);
  seal(f);
  if (std::find(gw_.registry.begin(), gw_.registry.end(), node) == gw_.registry.end()) gw_.registry.push_back(node);
  transmit(kGateway, std::move(f), toa_join_ack_);
  gw_.reserved = false;
  gw_.ready_at = std::max(gw_.ready_at, engine_.now() + toa_join_ack_ + gw_delay_);
  // The next decision happens once the ack is off the air (see on_air_end).
}

void LoraNetwork::send_drp() {
  const SimTime now = engine_.now();
  const DeviceId node = gw_.poll_list[gw_.cursor];
  const std::uint32_t seq = gw_.seq++;
  Frame f = make_frame(FrameKind::Drp, kGateway, node, seq, config_.drp_payload);
  put_u16(f.payload, node);
  put_u16(f.payload, seq);
  fill_to_length(f, nullptr);
  seal(f);
  transmit(kGateway, std::move(f), toa_drp_);
  collector_.add(now, node, metrics::CounterKind::DrpSent);
  if (gw_.retry_count > 0) collector_.add(now, node, metrics::CounterKind::DrpRepeat);
  ++drps_this_poll_;
  max_drps_per_poll_ = std::max(max_drps_per_poll_, drps_this_poll_);
  gw_.reserved = false;
  gw_.awaiting = node;
  gw_.awaiting_seq = seq;
  gw_.ready_at = std::max(gw_.ready_at, now + toa_drp_);
  if (config_.pacing == DutyPacing::FixedGap) gw_.next_slot = now + gw_.poll_gap;
  gw_.timeout_event = engine_.schedule_at(now + timeout_, [this, seq] { on_drp_timeout(seq); });
}

void LoraNetwork::on_drp_timeout(std::uint32_t seq) {
  if (!gw_.awaiting || gw_.awaiting_seq != seq) return;
  gw_.ready_at = std::max(gw_.ready_at, engine_.now());
  exchange_done(false);
}

void LoraNetwork::exchange_done(bool success) {
  engine_.cancel(gw_.timeout_event);
  gw_.awaiting.reset();
  if (!success && gw_.retry_count < config_.max_retries) {
    ++gw_.retry_count;
  } else {
    gw_.retry_count = 0;
    drps_this_poll_ = 0;
    gw_.cursor = (gw_.cursor + 1) % gw_.poll_list.size();
    if (config_.pacing == DutyPacing::FixedGap) --gw_.polls_remaining;
  }
  pump();
}

// --- nodes -------------------------------------------------------------------

void LoraNetwork::node_power_on(DeviceId id) {
  nodes_[id].powered = true;
  if (pir_period_ > SimTime::zero() && nodes_[id].occupancy > 0.0)
    engine_.schedule_in(pir_period_, [this, id] { node_pir_tick(id); });
}

void LoraNetwork::node_pir_tick(DeviceId id) {
  sample_pir(nodes_[id]);
  engine_.schedule_in(pir_period_, [this, id] { node_pir_tick(id); });
}

void LoraNetwork::node_send_join_req(DeviceId id) {
  auto& node = nodes_[id];
  node.join_scheduled = false;
  if (node.joined) return;
  const SimTime now = engine_.now();
  if (medium_.is_transmitting(id, now, now + toa_join_req_) || !node.ledger.admits(now, toa_join_req_)) {
    collector_.add(now, id, metrics::CounterKind::DutySkip);
    return;
  }
  Frame f = make_frame(FrameKind::JoinReq, id, kGateway, node.seq++, config_.join_req_payload);
  put_u16(f.payload, id);
  fill_to_length(f, nullptr);
  seal(f);
  transmit(id, std::move(f), toa_join_req_);
}

}  // namespace iotsim::lora
