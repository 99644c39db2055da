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

// Thread-safe command queue: the only way other threads reach the event loop.

#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>

namespace restbus::sim {

class CommandInbox {
 public:
  using Command = std::function<void()>;
  using Clock = std::chrono::steady_clock;

  void post(Command command) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(command));
    }
    cv_.notify_one();
  }

  /// Blocks until a command is queued, notify() is called or `deadline`
  /// passes. Returns true if commands are pending.
  bool wait_until(Clock::time_point deadline) {
    std::unique_lock lock(mu_);
    cv_.wait_until(lock, deadline, [this] { return !queue_.empty() || woken_; });
    woken_ = false;
    return !queue_.empty();
  }

  void notify() {
    {
      std::lock_guard lock(mu_);
      woken_ = true;
    }
    cv_.notify_one();
  }

  std::deque<Command> drain() {
    std::lock_guard lock(mu_);
    return std::exchange(queue_, {});
  }

  bool empty() const {
    std::lock_guard lock(mu_);
    return queue_.empty();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Command> queue_;
  bool woken_ = false;
};

}  // namespace restbus::sim
