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

// Discrete-event agenda. Events run in (at, seq) order where seq is the
// insertion counter, so runs with the same inputs are reproducible.

#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "restbus/endpoint.hpp"

namespace restbus::sim {

enum class SimErrc { kScheduleInPast, kUnknownNode, kBadTopology, kIo };

const char* to_string(SimErrc code);

class SimError : public std::runtime_error {
 public:
  SimError(SimErrc code, const std::string& detail);
  SimErrc code() const noexcept { return code_; }

 private:
  SimErrc code_;
};

struct EventHandle {
  std::uint64_t seq = 0;
  bool valid() const { return seq != 0; }
};

class Scheduler {
 public:
  using Action = std::function<void()>;

  SimTime now() const { return now_; }

  EventHandle schedule(SimTime at, Action action);
  EventHandle schedule_in(SimTime delay, Action action) { return schedule(now_ + delay, std::move(action)); }

  /// Returns false if the event already ran or was cancelled.
  bool cancel(EventHandle handle);

  /// Runs every event with at <= t_end, then sets now() to t_end.
  std::size_t run_until(SimTime t_end);

  /// Runs the earliest event; false if the agenda is empty.
  bool step();

  /// Time of the earliest pending event, or +infinity.
  SimTime next_time();

  /// Moves the clock forward without running anything. `t` must not pass
  /// the earliest pending event.
  void advance_to(SimTime t);

  std::size_t pending() const { return live_.size(); }
  std::uint64_t executed() const { return executed_; }

 private:
  struct Item {
    SimTime at;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Item& a, const Item& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  void drop_cancelled();

  SimTime now_ = 0;
  std::uint64_t next_seq_ = 1;
  std::uint64_t executed_ = 0;
  std::priority_queue<Item, std::vector<Item>, Later> queue_;
  std::unordered_set<std::uint64_t> live_;
};

}  // namespace restbus::sim
