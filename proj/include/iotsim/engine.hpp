#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "iotsim/sim_time.hpp"

namespace iotsim {

using EventId = std::uint64_t;

/// Deterministic discrete-event scheduler.
///
/// Events fire in (fire_time, sequence) order, where sequence is the insertion
/// counter; equal-time events therefore run in the order they were scheduled.
class Engine {
 public:
  using Action = std::function<void()>;

  /// Throws std::logic_error when `at` is earlier than now().
  EventId schedule_at(SimTime at, Action action);
  EventId schedule_in(SimTime delay, Action action) { return schedule_at(now_ + delay, std::move(action)); }

  /// Cancelled events are skipped when they reach the head of the queue.
  void cancel(EventId id);

  /// Executes every event with fire_time <= t_end, then advances now() to t_end.
  void run_until(SimTime t_end);

  SimTime now() const { return now_; }
  std::uint64_t executed() const { return executed_; }
  std::size_t pending() const { return queue_.size() - cancelled_.size(); }

  /// Running hash over (fire_time, sequence) of every executed event.
  std::uint64_t trace_hash() const { return trace_hash_; }

 private:
  struct Event {
    SimTime fire_time;
    EventId sequence;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::unordered_set<EventId> cancelled_;
  SimTime now_ = SimTime::zero();
  EventId next_sequence_ = 0;
  std::uint64_t executed_ = 0;
  std::uint64_t trace_hash_ = 0xCBF29CE484222325ULL;
};

}  // namespace iotsim
