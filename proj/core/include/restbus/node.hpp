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

// A simulated SOME/IP host: service model, signal table and SD engine, plus
// cyclic event publication and decoding of received datagrams.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "restbus/sd_engine.hpp"
#include "restbus/service_model.hpp"
#include "restbus/signal_store.hpp"
#include "restbus/wire.hpp"

namespace restbus {

struct Outgoing {
  wire::SomeIpMessage message;
  Endpoint destination;
  bool multicast = false;
  bool answer = false;
  bool is_sd = false;
};

struct NodeCounters {
  std::uint64_t decode_errors = 0;
  std::uint64_t notifications_received = 0;
  std::uint64_t notifications_dropped = 0;  // not subscribed or bad payload
  std::uint64_t notifications_sent = 0;
  std::uint64_t sd_received = 0;
  std::uint64_t sd_sent = 0;
};

class Node {
 public:
  Node(model::HostModel model, signals::SignalStore store, const sd::SdConfig& sd_config, std::uint64_t seed);

  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  const std::string& name() const { return model_.name; }
  const Endpoint& endpoint() const { return model_.endpoint; }
  const model::HostModel& model() const { return model_; }
  const signals::SignalStore& store() const { return store_; }
  sd::SdEngine& engine() { return engine_; }
  const sd::SdEngine& engine() const { return engine_; }
  const NodeCounters& counters() const { return counters_; }

  void init(SimTime t0);

  std::vector<Outgoing> on_timer(SimTime now);
  std::vector<Outgoing> receive(std::span<const std::uint8_t> datagram, const Endpoint& src, SimTime now);

  /// Writes a signal; on-change events (cycle 0) are published at once.
  std::vector<Outgoing> set_signal(std::string_view path, const signals::SignalInput& value, SimTime now);

  std::vector<Outgoing> start_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now);
  std::vector<Outgoing> stop_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now);
  std::vector<Outgoing> publish(std::uint16_t service_id, std::uint16_t instance_id, std::uint16_t event_id,
                                SimTime now);

  SimTime next_deadline() const;

  std::vector<sd::SdObservation> take_observations() { return engine_.take_observations(); }
  std::vector<signals::SignalUpdate> take_signal_updates() { return std::exchange(signal_updates_, {}); }

 private:
  using EventTimerKey = std::tuple<std::uint16_t, std::uint16_t, std::uint16_t>;

  void wrap_sd(std::vector<sd::SdEmission>&& emissions, std::vector<Outgoing>& out);
  void wrap_notifications(std::vector<sd::NotificationEmission>&& emissions, std::vector<Outgoing>& out);
  void handle_notification(const wire::SomeIpMessage& message, const Endpoint& src, SimTime now);

  model::HostModel model_;
  signals::SignalStore store_;
  sd::SdEngine engine_;
  wire::SessionTable sd_sessions_;
  wire::SessionTable event_sessions_;
  std::map<EventTimerKey, SimTime> next_publish_at_;
  std::vector<signals::SignalUpdate> signal_updates_;
  NodeCounters counters_;
};

}  // namespace restbus
