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

#include "restbus/sim/network.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

namespace restbus::sim {

namespace {

constexpr std::size_t kNoLink = std::numeric_limits<std::size_t>::max();

}  // namespace

Frame make_frame(Endpoint src, Endpoint dst, bool multicast, std::vector<std::uint8_t> payload) {
  Frame f;
  f.src = src;
  f.dst = dst;
  f.multicast = multicast;
  f.wire_bytes = payload.size() + kEncapsulationBytes;
  f.payload = std::make_shared<const std::vector<std::uint8_t>>(std::move(payload));
  return f;
}

Topology Topology::from_config(const config::NetworkConfig& config) {
  Topology t;
  for (const auto& h : config.hosts) {
    t.node_names.push_back(h.name);
    t.host_endpoints.push_back(h.endpoint);
  }
  t.host_count = config.hosts.size();
  for (const auto& s : config.switches) t.node_names.push_back(s);
  for (const auto& l : config.links) {
    auto a = t.find_node(l.a);
    auto b = t.find_node(l.b);
    if (!a || !b) throw SimError(SimErrc::kUnknownNode, fmt::format("link {} - {}", l.a, l.b));
    t.links.push_back(LinkSpec{*a, *b, l.bandwidth_bps, l.propagation_delay_s, l.queue_frames});
  }
  t.validate();
  return t;
}

std::optional<std::size_t> Topology::find_node(std::string_view name) const {
  for (std::size_t i = 0; i < node_names.size(); ++i) {
    if (node_names[i] == name) return i;
  }
  return std::nullopt;
}

std::string Topology::link_name(std::size_t link) const {
  return fmt::format("{}-{}", node_names[links[link].a], node_names[links[link].b]);
}

void Topology::validate() const {
  std::size_t n = node_names.size();
  if (host_endpoints.size() != host_count || host_count > n) {
    throw SimError(SimErrc::kBadTopology, "host table inconsistent");
  }
  std::vector<std::size_t> degree(n, 0);
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto root = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& l : links) {
    if (l.a >= n || l.b >= n || l.a == l.b) throw SimError(SimErrc::kBadTopology, "link endpoints invalid");
    if (l.bandwidth_bps == 0) throw SimError(SimErrc::kBadTopology, "zero bandwidth");
    ++degree[l.a];
    ++degree[l.b];
    std::size_t ra = root(l.a);
    std::size_t rb = root(l.b);
    if (ra == rb) {
      throw SimError(SimErrc::kBadTopology,
                     fmt::format("link {} - {} closes a loop", node_names[l.a], node_names[l.b]));
    }
    parent[ra] = rb;
  }
  for (std::size_t h = 0; h < host_count; ++h) {
    if (degree[h] != 1) {
      throw SimError(SimErrc::kBadTopology, fmt::format("host {} has {} links", node_names[h], degree[h]));
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (root(i) != root(0)) throw SimError(SimErrc::kBadTopology, "topology is not connected");
  }
}

Network::Network(Topology topology, Scheduler& scheduler)
    : topology_(std::move(topology)), scheduler_(scheduler) {
  topology_.validate();
  std::size_t n = topology_.node_names.size();
  ports_.resize(n);
  for (std::size_t l = 0; l < topology_.links.size(); ++l) {
    ports_[topology_.links[l].a].push_back(l);
    ports_[topology_.links[l].b].push_back(l);
  }
  state_.resize(topology_.links.size());
  next_hop_.assign(n, std::vector<std::size_t>(topology_.host_count, kNoLink));
  for (std::size_t h = 0; h < topology_.host_count; ++h) {
    by_endpoint_[topology_.host_endpoints[h]] = h;
    // Walk the tree outward from h; each node's route to h is the link it
    // was reached through.
    std::vector<std::size_t> stack{h};
    std::vector<bool> seen(n, false);
    seen[h] = true;
    while (!stack.empty()) {
      std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t l : ports_[node]) {
        std::size_t other = topology_.links[l].a == node ? topology_.links[l].b : topology_.links[l].a;
        if (seen[other]) continue;
        seen[other] = true;
        next_hop_[other][h] = l;
        stack.push_back(other);
      }
    }
  }
}

std::optional<std::size_t> Network::host_for(const Endpoint& endpoint) const {
  auto it = by_endpoint_.find(endpoint);
  if (it == by_endpoint_.end()) return std::nullopt;
  return it->second;
}

std::size_t Network::far_end(std::size_t link, int direction) const {
  return direction == 0 ? topology_.links[link].b : topology_.links[link].a;
}

int Network::direction_from(std::size_t link, std::size_t node) const {
  return topology_.links[link].a == node ? 0 : 1;
}

std::uint64_t Network::send(std::size_t host, Frame frame) {
  if (host >= topology_.host_count) throw SimError(SimErrc::kUnknownNode, fmt::format("host index {}", host));
  frame.id = next_id_++;
  frame.born_at = scheduler_.now();
  frame.wire_bytes = frame.payload_size() + kEncapsulationBytes;
  ++counters_.injected;
  std::size_t link = ports_[host].front();
  transmit(frame, link, direction_from(link, host));
  return frame.id;
}

void Network::transmit(const Frame& frame, std::size_t link, int direction) {
  const LinkSpec& spec = topology_.links[link];
  Direction& d = state_[link][direction];
  SimTime now = scheduler_.now();
  while (!d.in_system.empty() && d.in_system.front() <= now) d.in_system.pop_front();
  if (spec.queue_frames && d.in_system.size() >= *spec.queue_frames) {
    ++d.stats.dropped;
    ++counters_.dropped;
    ++counters_.dropped_queue_full;
    return;
  }
  SimTime start = std::max(now, d.free_at);
  SimTime done = start + static_cast<double>(frame.wire_bytes) * 8.0 / static_cast<double>(spec.bandwidth_bps);
  d.free_at = done;
  if (!d.busy.empty() && d.busy.back().second == start) {
    d.busy.back().second = done;
  } else {
    d.busy.emplace_back(start, done);
  }
  d.queue_delay.emplace_back(now, start - now);
  d.in_system.push_back(done);
  d.stats.queue_high_watermark = std::max(d.stats.queue_high_watermark, d.in_system.size());
  ++d.stats.frames;
  d.stats.bytes += frame.wire_bytes;
  ++counters_.in_flight;
  scheduler_.schedule(done + spec.propagation_delay_s,
                      [this, frame, link, direction] { arrive(frame, link, direction); });
}

void Network::arrive(const Frame& frame, std::size_t link, int direction) {
  --counters_.in_flight;
  if (link_trace_) link_trace_(link, direction, frame);
  std::size_t node = far_end(link, direction);
  if (topology_.is_host(node)) {
    ++counters_.delivered;
    if (deliver_) deliver_(node, frame);
    return;
  }
  if (frame.multicast) {
    std::size_t outputs = ports_[node].size() - 1;
    if (outputs == 0) {
      ++counters_.dropped;
      return;
    }
    counters_.replicated += outputs - 1;
    for (std::size_t out : ports_[node]) {
      if (out != link) transmit(frame, out, direction_from(out, node));
    }
    return;
  }
  std::optional<std::size_t> target = host_for(frame.dst);
  if (!target) target = default_route_;
  std::size_t out = target ? next_hop_[node][*target] : kNoLink;
  if (out == kNoLink || out == link) {
    ++counters_.dropped;
    ++counters_.dropped_unknown_destination;
    return;
  }
  transmit(frame, out, direction_from(out, node));
}

double Network::utilization(std::size_t link, int direction, SimTime t0, SimTime t1) const {
  if (!(t1 > t0)) return 0.0;
  const auto& busy = state_.at(link)[direction].busy;
  auto it = std::lower_bound(busy.begin(), busy.end(), t0,
                             [](const std::pair<SimTime, SimTime>& iv, SimTime t) { return iv.second < t; });
  double total = 0;
  for (; it != busy.end() && it->first < t1; ++it) {
    total += std::max(0.0, std::min(it->second, t1) - std::max(it->first, t0));
  }
  return total / (t1 - t0);
}

std::size_t Network::queue_length(std::size_t link, int direction) {
  Direction& d = state_.at(link)[direction];
  SimTime now = scheduler_.now();
  while (!d.in_system.empty() && d.in_system.front() <= now) d.in_system.pop_front();
  return d.in_system.size();
}

const std::vector<std::pair<SimTime, double>>& Network::queue_delay_samples(std::size_t link, int direction) const {
  return state_.at(link)[direction].queue_delay;
}

const LinkDirectionStats& Network::link_stats(std::size_t link, int direction) const {
  return state_.at(link)[direction].stats;
}

SimTime Network::idle_latency(std::size_t from_host, std::size_t to_host, std::size_t wire_bytes) const {
  SimTime total = 0;
  std::size_t node = from_host;
  while (node != to_host) {
    std::size_t link = node == from_host ? ports_[node].front() : next_hop_[node][to_host];
    if (link == kNoLink) throw SimError(SimErrc::kUnknownNode, "no route");
    const LinkSpec& spec = topology_.links[link];
    total += static_cast<double>(wire_bytes) * 8.0 / static_cast<double>(spec.bandwidth_bps) +
             spec.propagation_delay_s;
    node = spec.a == node ? spec.b : spec.a;
  }
  return total;
}

}  // namespace restbus::sim
