#include "iotsim/duty_ledger.hpp"

namespace iotsim {

DutyCycleLedger::DutyCycleLedger(airtime::RegulatoryLimit limit)
    : limit_(limit),
      budget_(SimTime::from_seconds(limit.budget_per_window())),
      window_(SimTime::from_seconds(limit.window_s)) {}

SimTime DutyCycleLedger::used_at(SimTime t) const {
  SimTime sum = SimTime::zero();
  for (const auto& e : entries_)
    if (e.start > t - window_ && e.start <= t) sum += e.duration;
  return sum;
}

bool DutyCycleLedger::admits(SimTime start, SimTime duration) const {
  return used_at(start) + duration <= budget_;
}

SimTime DutyCycleLedger::earliest_admission(SimTime not_before, SimTime duration) const {
  if (duration > budget_) throw std::invalid_argument("transmission longer than the duty budget");
  SimTime used = used_at(not_before);
  if (used + duration <= budget_) return not_before;
  // Slide forward: each entry leaves the window `window_` after its start.
  for (const auto& e : entries_) {
    if (e.start <= not_before - window_) continue;
    used -= e.duration;
    if (used + duration <= budget_) return e.start + window_;
  }
  return not_before;  // unreachable: an empty window always admits
}

void DutyCycleLedger::prune(SimTime now) {
  while (!entries_.empty() && entries_.front().start <= now - window_) {
    in_window_ -= entries_.front().duration;
    entries_.pop_front();
  }
}

void DutyCycleLedger::record(SimTime start, SimTime duration) {
  if (!entries_.empty() && start < entries_.back().start)
    throw std::logic_error("ledger entries must be recorded in start order");
  prune(start);
  if (in_window_ + duration > budget_)
    throw DutyViolation("duty budget exceeded: " + std::to_string((in_window_ + duration).seconds()) +
                        " s in trailing window");
  entries_.push_back({start, duration});
  in_window_ += duration;
  total_ += duration;
  if (in_window_ > peak_) peak_ = in_window_;
}

}  // namespace iotsim
