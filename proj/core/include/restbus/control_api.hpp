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


// HTTP/JSON operator surface for a running simulation, plus a server-sent
// event stream of signal updates and SD activity. Routes are documented in
// docs/api.md.

#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "restbus/runtime.hpp"

namespace restbus::api {

struct ApiOptions {
  std::string bind_address = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::chrono::milliseconds write_timeout{2000};
  std::size_t stream_backlog = 4096;
};

class ControlApi {
 public:
  /// Hooks into `runtime`; construct on the loop thread before the run.
  ControlApi(Runtime& runtime, ApiOptions options = {});
  ~ControlApi();

  ControlApi(const ControlApi&) = delete;
  ControlApi& operator=(const ControlApi&) = delete;

  /// Binds and starts serving on a background thread. Throws
  /// std::runtime_error if the port cannot be bound.
  void start();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace restbus::api
