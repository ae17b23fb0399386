#include "iotsim/engine.hpp"

#include <string>

namespace iotsim {

EventId Engine::schedule_at(SimTime at, Action action) {
  if (at < now_)
    throw std::logic_error("cannot schedule into the past (" + std::to_string(at.ns()) + " ns < " +
                           std::to_string(now_.ns()) + " ns)");
  const EventId id = next_sequence_++;
  queue_.push(Event{at, id, std::move(action)});
  return id;
}

void Engine::cancel(EventId id) {
  if (id < next_sequence_) cancelled_.insert(id);
}

void Engine::run_until(SimTime t_end) {
  while (!queue_.empty() && queue_.top().fire_time <= t_end) {
    // Move the action out before popping; the action may schedule more events.
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    if (auto it = cancelled_.find(ev.sequence); it != cancelled_.end()) {
      cancelled_.erase(it);
      continue;
    }
    now_ = ev.fire_time;
    ++executed_;
    for (std::uint64_t word : {static_cast<std::uint64_t>(ev.fire_time.ns()), ev.sequence}) {
      for (int i = 0; i < 8; ++i) {
        trace_hash_ ^= (word >> (8 * i)) & 0xFFu;
        trace_hash_ *= 0x100000001B3ULL;
      }
    }
    ev.action();
  }
  if (t_end > now_) now_ = t_end;
}

}  // namespace iotsim
