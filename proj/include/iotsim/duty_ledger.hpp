#pragma once

#include <deque>
#include <stdexcept>

#include "iotsim/airtime.hpp"
#include "iotsim/sim_time.hpp"

namespace iotsim {

class DutyViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rolling time-on-air accounting for one transmitter.
///
/// A transmission belongs to the window ending at t when its start lies in
/// (t - window, t]. Every recorded transmission must be admitted: the sum of
/// durations in its own trailing window, including itself, stays within budget.
class DutyCycleLedger {
 public:
  explicit DutyCycleLedger(airtime::RegulatoryLimit limit = {});

  const airtime::RegulatoryLimit& limit() const { return limit_; }
  SimTime budget() const { return budget_; }
  SimTime window() const { return window_; }

  /// Airtime of entries starting in (t - window, t].
  SimTime used_at(SimTime t) const;

  bool admits(SimTime start, SimTime duration) const;

  /// Earliest start >= `not_before` at which `duration` fits the budget.
  /// Throws std::invalid_argument when duration alone exceeds the budget.
  SimTime earliest_admission(SimTime not_before, SimTime duration) const;

  /// Throws DutyViolation when the transmission is not admitted. Starts must be
  /// non-decreasing.
  void record(SimTime start, SimTime duration);

  /// Largest trailing-window usage seen at any recorded start.
  SimTime peak_usage() const { return peak_; }
  SimTime total_airtime() const { return total_; }

 private:
  void prune(SimTime now);

  struct Entry {
    SimTime start;
    SimTime duration;
  };

  airtime::RegulatoryLimit limit_;
  SimTime budget_;
  SimTime window_;
  std::deque<Entry> entries_;
  SimTime in_window_ = SimTime::zero();
  SimTime peak_ = SimTime::zero();
  SimTime total_ = SimTime::zero();
};

}  // namespace iotsim
