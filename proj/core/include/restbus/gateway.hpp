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


// Bridge between a running simulation and real UDP sockets.
//
// Detaching a whole node silences its simulated stack; traffic addressed to
// it leaves through a real socket and datagrams from its endpoint enter the
// simulation at its position. Detaching a single service keeps the node
// simulated but makes it ignore that service, so a real peer elsewhere can
// take over. Every remaining simulated host gets a socket bound at its own
// configured endpoint, which therefore has to be a local address.

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "restbus/runtime.hpp"

namespace restbus::gateway {

enum class GatewayErrc { kSocketBindFailed, kNodeNotFound, kServiceNotFound, kNotRealtimeMode, kBadDetachment };

const char* to_string(GatewayErrc code);

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErrc code, const std::string& detail);
  GatewayErrc code() const noexcept { return code_; }

 private:
  GatewayErrc code_;
};

struct Detachment {
  std::string node;
  std::optional<std::uint16_t> service_id;
  std::optional<std::uint16_t> instance_id;

  /// "ecuA" or "ecuA,0x1234/0x0001".
  static Detachment parse(std::string_view text);
  std::string to_string() const;
  bool whole() const { return !service_id; }
};

struct GatewayBinding {
  std::vector<Detachment> detached;
  Ipv4Address real_interface{0x7F000001};
  /// Defaults to the configured SD multicast endpoint.
  std::optional<Endpoint> sd_multicast;
};

struct GatewayStats {
  std::uint64_t rx_datagrams = 0;
  std::uint64_t rx_undecodable = 0;
  std::uint64_t rx_own_echo = 0;
  std::uint64_t tx_datagrams = 0;
  std::uint64_t tx_errors = 0;
};

class Gateway : public RealPort {
 public:
  /// Attaches to `runtime`. Call before the run starts or on the loop thread.
  Gateway(Runtime& runtime, GatewayBinding binding);
  ~Gateway() override;

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Restores pure-simulation routing. Loop thread only (or loop idle).
  void detach();
  bool attached() const { return attached_; }
  const GatewayBinding& binding() const { return binding_; }
  Endpoint sd_multicast() const { return multicast_; }
  GatewayStats stats() const;

  bool node_detached(std::size_t host) const override;
  std::optional<std::size_t> primary_attachment() const override { return primary_; }
  void send_real(const sim::Frame& frame) override;

  /// Loop thread. `received` is the wall time the datagram was read.
  void pump_inbound(std::span<const std::uint8_t> datagram, const Endpoint& src, const Endpoint& dst, bool multicast,
                    WallClock::time_point received);

 private:
  struct Socket {
    int fd = -1;
    std::optional<std::size_t> host;  // nullopt: the multicast receiver
    Endpoint bound;
  };

  void open_sockets();
  void close_sockets();
  void pump();
  bool own_endpoint(const Endpoint& e) const;

  Runtime& runtime_;
  GatewayBinding binding_;
  Endpoint multicast_;
  std::vector<bool> whole_;
  std::vector<std::size_t> detached_hosts_;
  std::optional<std::size_t> primary_;
  std::vector<Socket> sockets_;
  int wake_[2] = {-1, -1};
  std::thread pump_thread_;
  std::atomic<bool> stop_{false};
  std::shared_ptr<std::atomic<bool>> alive_;
  bool attached_ = false;
  std::optional<WallClock::time_point> last_send_;
  std::atomic<std::uint64_t> rx_datagrams_{0};
  std::atomic<std::uint64_t> rx_undecodable_{0};
  std::atomic<std::uint64_t> rx_own_echo_{0};
  std::atomic<std::uint64_t> tx_datagrams_{0};
  std::atomic<std::uint64_t> tx_errors_{0};
};

}  // namespace restbus::gateway
