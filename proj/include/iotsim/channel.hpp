#pragma once

// Indoor radio channel: link RSSI (explicit table or log-distance path loss
// with wall/floor attenuation), per-reception outcome, and the shared medium.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "iotsim/frames.hpp"
#include "iotsim/rng.hpp"
#include "iotsim/sim_time.hpp"

namespace iotsim {

enum class Band : std::uint8_t { SubGhz868, Ism2400 };

/// Transmissions interfere only when every field matches.
struct ChannelKey {
  Band band = Band::SubGhz868;
  int channel = 0;
  int sf = 0;                  ///< 0 for 802.15.4
  std::uint32_t bandwidth_hz = 0;

  auto operator<=>(const ChannelKey&) const = default;
};

struct Position {
  double x = 0;
  double y = 0;
  int floor = 0;
  bool operator==(const Position&) const = default;
};

struct Wall {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  bool operator==(const Wall&) const = default;
};

/// Number of walls crossed by the straight line between two positions.
int walls_between(const Position& a, const Position& b, std::span<const Wall> walls);

enum class LinkMode : std::uint8_t { ExplicitMatrix, PathLoss };

class MissingLink : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct LinkModel {
  LinkMode mode = LinkMode::PathLoss;
  /// Mean received power per ordered (src, dst) pair, dBm (explicit mode).
  std::map<std::pair<DeviceId, DeviceId>, double> matrix;

  std::vector<Position> positions;  ///< indexed by DeviceId (path-loss mode)
  std::vector<Wall> walls;
  double pl0_db = 40.0;  ///< loss at d0
  double d0_m = 1.0;
  double gamma = 3.0;
  double wall_loss_db = 5.0;
  double floor_loss_db = 15.0;
  double floor_height_m = 3.0;

  double jitter_sd_db = 0.0;

  /// False for an absent matrix entry or position; such pairs never hear each other.
  bool has_link(DeviceId src, DeviceId dst) const;

  /// Mean RSSI at `dst`; throws MissingLink for an absent matrix entry.
  double mean_rssi(DeviceId src, DeviceId dst, double tx_power_dbm) const;
};

/// One RSSI sample: mean plus Gaussian(0, jitter_sd) drawn from `rng`.
double link_rssi(DeviceId src, DeviceId dst, const LinkModel& model, double tx_power_dbm, Rng& rng);

/// Piecewise-linear corruption probability over SNR-like margin (dB above
/// sensitivity). Values are clamped beyond the first and last points.
class CorruptionCurve {
 public:
  CorruptionCurve() = default;
  explicit CorruptionCurve(std::vector<std::pair<double, double>> points);

  /// 0.5 at 0 dB falling linearly to 0 at 20 dB.
  static CorruptionCurve standard() { return CorruptionCurve({{0.0, 0.5}, {20.0, 0.0}}); }
  static CorruptionCurve constant(double p) { return CorruptionCurve({{0.0, p}}); }

  double operator()(double margin_db) const;
  const std::vector<std::pair<double, double>>& points() const { return points_; }
  bool operator==(const CorruptionCurve&) const = default;

 private:
  std::vector<std::pair<double, double>> points_;
};

/// SX1276 datasheet sensitivity for LoRa keys; XBee 802.15.4 (-92 dBm) for 2.4 GHz.
double datasheet_sensitivity(const ChannelKey& key);

struct ChannelModel {
  LinkModel link;
  std::optional<double> sensitivity_dbm;  ///< overrides the datasheet value when set
  double capture_margin_db = 6.0;
  CorruptionCurve p_corrupt = CorruptionCurve::standard();

  double sensitivity(const ChannelKey& key) const {
    return sensitivity_dbm ? *sensitivity_dbm : datasheet_sensitivity(key);
  }
};

struct Transmission {
  std::uint64_t id = 0;
  DeviceId sender = kGateway;
  SimTime start;
  SimTime duration;
  ChannelKey key;
  double tx_power_dbm = 14.0;
  Frame frame;

  SimTime end() const { return start + duration; }
  bool overlaps(const Transmission& o) const { return start < o.end() && o.start < end(); }
};

struct ReceptionOutcome {
  enum class Kind : std::uint8_t { Ok, Corrupted, Lost };
  Kind kind = Kind::Lost;
  double rssi_dbm = 0;
  bool collided = false;
};

/// Decides how `tx` arrives at `receiver`, given the transmissions that may
/// overlap it. Draws exactly two numbers (RSSI jitter, corruption) per call
/// when jitter is enabled, one otherwise.
ReceptionOutcome resolve_reception(const Transmission& tx, DeviceId receiver,
                                   std::span<const Transmission* const> concurrent, const ChannelModel& channel,
                                   Rng& rng);

/// Shared air interface: keeps recent transmissions for collision and CCA
/// queries, and an airtime log per sender.
class Medium {
 public:
  struct AirtimeRecord {
    DeviceId sender;
    SimTime start;
    SimTime duration;
    FrameKind kind;
  };

  /// Registers a transmission. Throws std::logic_error if the sender already
  /// has an overlapping transmission on air.
  const Transmission& begin(Transmission tx);

  /// Same-key transmissions overlapping `tx` in time, `tx` excluded.
  std::vector<const Transmission*> overlapping(const Transmission& tx) const;

  /// True if `device` transmits at any instant of [from, to).
  bool is_transmitting(DeviceId device, SimTime from, SimTime to) const;

  /// Energy detection: any same-key transmission active within [from, to) whose
  /// mean RSSI at `listener` reaches `threshold_dbm`.
  bool busy(DeviceId listener, const ChannelKey& key, SimTime from, SimTime to, double threshold_dbm,
            const LinkModel& link) const;

  const std::vector<AirtimeRecord>& airtime_log() const { return log_; }
  std::uint64_t transmissions() const { return next_id_; }

 private:
  void prune(SimTime now);

  std::deque<Transmission> recent_;
  std::vector<AirtimeRecord> log_;
  std::uint64_t next_id_ = 0;
};

}  // namespace iotsim
