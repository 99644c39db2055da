// Copyright 2026 The restbus Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "restbus/sim/scheduler.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace restbus::sim {

const char* to_string(SimErrc code) {
  switch (code) {
    case SimErrc::kScheduleInPast: return "SCHEDULE_IN_PAST";
    case SimErrc::kUnknownNode: return "UNKNOWN_NODE";
    case SimErrc::kBadTopology: return "BAD_TOPOLOGY";
    case SimErrc::kIo: return "IO";
  }
  return "?";
}

SimError::SimError(SimErrc code, const std::string& detail)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), detail)), code_(code) {}

EventHandle Scheduler::schedule(SimTime at, Action action) {
  if (!(at >= now_) || std::isinf(at)) {
    throw SimError(SimErrc::kScheduleInPast, fmt::format("at={} now={}", at, now_));
  }
  std::uint64_t seq = next_seq_++;
  queue_.push(Item{at, seq, std::move(action)});
  live_.insert(seq);
  return EventHandle{seq};
}

bool Scheduler::cancel(EventHandle handle) { return live_.erase(handle.seq) > 0; }

void Scheduler::drop_cancelled() {
  while (!queue_.empty() && !live_.contains(queue_.top().seq)) queue_.pop();
}

SimTime Scheduler::next_time() {
  drop_cancelled();
  return queue_.empty() ? std::numeric_limits<SimTime>::infinity() : queue_.top().at;
}

bool Scheduler::step() {
  drop_cancelled();
  if (queue_.empty()) return false;
  // priority_queue::top is const; the action is moved out before popping.
  Item item = std::move(const_cast<Item&>(queue_.top()));
  queue_.pop();
  live_.erase(item.seq);
  now_ = item.at;
  ++executed_;
  item.action();
  return true;
}

std::size_t Scheduler::run_until(SimTime t_end) {
  std::size_t count = 0;
  while (next_time() <= t_end) {
    step();
    ++count;
  }
  if (t_end > now_) now_ = t_end;
  return count;
}

void Scheduler::advance_to(SimTime t) {
  if (t <= now_) return;
  SimTime limit = next_time();
  now_ = t < limit ? t : limit;
}

}  // namespace restbus::sim
