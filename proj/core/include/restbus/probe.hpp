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


// Minimal real SD client: multicasts FIND entries and times the OFFER that
// answers them. Used by the bench tool and loopback tests.

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>

#include "restbus/endpoint.hpp"
#include "restbus/wire.hpp"

namespace restbus {

struct ProbeAnswer {
  double round_trip_s = 0;
  Endpoint responder;
};

class SdProbe {
 public:
  /// Throws std::runtime_error if the sockets cannot be set up.
  SdProbe(Endpoint sd_multicast, Ipv4Address iface);
  ~SdProbe();

  SdProbe(const SdProbe&) = delete;
  SdProbe& operator=(const SdProbe&) = delete;

  Endpoint local() const { return local_; }

  /// Sends one FIND and waits for an OFFER of the service.
  std::optional<ProbeAnswer> find(std::uint16_t service_id, std::uint16_t instance_id,
                                  std::chrono::milliseconds timeout);

 private:
  void drain();

  Endpoint multicast_;
  Endpoint local_;
  int send_fd_ = -1;
  int recv_fd_ = -1;
  wire::SessionCounter sessions_;
  bool first_ = true;
};

}  // namespace restbus
