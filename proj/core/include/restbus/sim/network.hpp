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

// Switched Ethernet at frame level. Hosts hang off exactly one link; switches
// are store-and-forward with static forwarding tables and flood multicast on
// every port except the ingress. Each link direction serializes one frame at
// a time:
//
//   delivery = max(now, free_at) + wire_bytes * 8 / bandwidth + propagation
//
// wire_bytes adds 42 bytes (Ethernet 14 + IPv4 20 + UDP 8) to the UDP
// payload; preamble, IFG and FCS are not modelled.

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "restbus/config.hpp"
#include "restbus/endpoint.hpp"
#include "restbus/sim/scheduler.hpp"

namespace restbus::sim {

inline constexpr std::size_t kEncapsulationBytes = 42;

struct Frame {
  std::uint64_t id = 0;
  Endpoint src;
  Endpoint dst;
  bool multicast = false;
  std::shared_ptr<const std::vector<std::uint8_t>> payload;
  std::size_t wire_bytes = kEncapsulationBytes;
  SimTime born_at = 0;
  // Frames that entered from a real socket; the gateway never sends them out.
  bool from_real = false;
  // Wall-clock second (relative to the run epoch) of the real datagram that
  // caused this frame, used for answer-time measurement.
  std::optional<double> trigger_wall;
  bool answer = false;

  std::size_t payload_size() const { return payload ? payload->size() : 0; }
};

Frame make_frame(Endpoint src, Endpoint dst, bool multicast, std::vector<std::uint8_t> payload);

struct LinkSpec {
  std::size_t a = 0;
  std::size_t b = 0;
  std::uint64_t bandwidth_bps = 100'000'000;
  double propagation_delay_s = 0;
  std::optional<std::size_t> queue_frames;
};

struct Topology {
  std::vector<std::string> node_names;  // hosts first, then switches
  std::size_t host_count = 0;
  std::vector<Endpoint> host_endpoints;
  std::vector<LinkSpec> links;

  static Topology from_config(const config::NetworkConfig& config);

  bool is_host(std::size_t node) const { return node < host_count; }
  std::optional<std::size_t> find_node(std::string_view name) const;
  std::string link_name(std::size_t link) const;

  /// Hosts on exactly one link, links between distinct known nodes, and the
  /// graph connected and acyclic. Throws SimError(kBadTopology).
  void validate() const;
};

struct NetworkCounters {
  std::uint64_t injected = 0;
  std::uint64_t replicated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t dropped_unknown_destination = 0;
  std::uint64_t dropped_queue_full = 0;
  std::uint64_t in_flight = 0;

  bool balanced() const { return injected + replicated == delivered + dropped + in_flight; }
};

struct LinkDirectionStats {
  std::uint64_t frames = 0;
  std::uint64_t bytes = 0;
  std::uint64_t dropped = 0;
  std::size_t queue_high_watermark = 0;
};

class Network {
 public:
  using DeliverFn = std::function<void(std::size_t host, const Frame& frame)>;
  /// Called when a frame finishes crossing a link (at arrival time).
  using LinkTraceFn = std::function<void(std::size_t link, int direction, const Frame& frame)>;

  Network(Topology topology, Scheduler& scheduler);

  const Topology& topology() const { return topology_; }

  void set_deliver(DeliverFn fn) { deliver_ = std::move(fn); }
  void set_link_trace(LinkTraceFn fn) { link_trace_ = std::move(fn); }

  /// Unicast frames for endpoints that belong to no host go here; without a
  /// default route they are dropped as unknown destinations.
  void set_default_route(std::optional<std::size_t> host) { default_route_ = host; }

  /// Hands a frame to the NIC of `host` at now(). Assigns id, born_at and
  /// wire_bytes. Returns the frame id.
  std::uint64_t send(std::size_t host, Frame frame);

  std::optional<std::size_t> host_for(const Endpoint& endpoint) const;

  /// Busy fraction of one link direction over [t0, t1].
  double utilization(std::size_t link, int direction, SimTime t0, SimTime t1) const;
  std::size_t queue_length(std::size_t link, int direction);
  const std::vector<std::pair<SimTime, double>>& queue_delay_samples(std::size_t link, int direction) const;
  const LinkDirectionStats& link_stats(std::size_t link, int direction) const;
  const NetworkCounters& counters() const { return counters_; }

  /// Minimum end-to-end latency of a frame of `wire_bytes` between hosts on
  /// an idle network.
  SimTime idle_latency(std::size_t from_host, std::size_t to_host, std::size_t wire_bytes) const;

 private:
  struct Direction {
    SimTime free_at = 0;
    std::deque<SimTime> in_system;  // completion times of queued frames
    std::vector<std::pair<SimTime, SimTime>> busy;
    std::vector<std::pair<SimTime, double>> queue_delay;
    LinkDirectionStats stats;
  };

  void transmit(const Frame& frame, std::size_t link, int direction);
  void arrive(const Frame& frame, std::size_t link, int direction);
  std::size_t far_end(std::size_t link, int direction) const;
  int direction_from(std::size_t link, std::size_t node) const;

  Topology topology_;
  Scheduler& scheduler_;
  std::vector<std::vector<std::size_t>> ports_;       // node -> incident links
  std::vector<std::vector<std::size_t>> next_hop_;    // node -> host -> link
  std::unordered_map<Endpoint, std::size_t> by_endpoint_;
  std::vector<std::array<Direction, 2>> state_;
  std::optional<std::size_t> default_route_;
  DeliverFn deliver_;
  LinkTraceFn link_trace_;
  NetworkCounters counters_;
  std::uint64_t next_id_ = 1;
};

}  // namespace restbus::sim
