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

// Service discovery behaviour of one node: cyclic offers and finds, the
// subscribe/ack handshake, TTL renewal, and start/stop of provided services.
//
// The engine never performs I/O. Every operation returns the messages to be
// sent; the caller (simulation or gateway) delivers them.
//
// Timing: after init(t0) the node waits a per-node random delay, then offers
// and finds on fixed cycles. FIND is answered by a multicast OFFER. A
// consumer that sees an OFFER while WANTED subscribes to all of its desired
// eventgroups and renews at renew_fraction * ttl.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "restbus/config.hpp"
#include "restbus/service_model.hpp"
#include "restbus/wire.hpp"

namespace restbus::sd {

struct SdConfig {
  Endpoint multicast{Ipv4Address{0xE0F4E0F5}, 30490};
  std::uint32_t offer_cycle_ms = 1000;
  std::uint32_t find_cycle_ms = 1000;
  std::uint32_t default_ttl_s = 3;
  double renew_fraction = 0.8;
  std::uint32_t initial_delay_min_ms = 10;
  std::uint32_t initial_delay_max_ms = 100;
  bool renewal_enabled = true;

  static SdConfig from(const config::SdParams& params);
  void validate() const;  // throws std::invalid_argument
};

struct SdEmission {
  wire::SdMessage message;
  Endpoint destination;
  bool multicast = false;
  // Set when the message answers a received FIND or SUBSCRIBE.
  bool answer = false;
};

struct NotificationEmission {
  wire::SomeIpMessage message;
  Endpoint destination;
};

struct SdObservation {
  enum class Kind {
    kServiceStarted,
    kServiceStopped,
    kSubscriptionAdded,
    kSubscriptionRenewed,
    kSubscriptionRemoved,
    kSubscriptionExpired,
    kSubscriptionRejected,
    kOfferReceived,
    kOfferStopped,
    kOfferExpired,
    kConsumerState,
  };
  Kind kind = Kind::kServiceStarted;
  SimTime at = 0;
  std::uint16_t service_id = 0;
  std::uint16_t instance_id = 0;
  std::uint16_t eventgroup_id = 0;
  Endpoint peer;
  model::ConsumerState state = model::ConsumerState::kWanted;
};

const char* to_string(SdObservation::Kind kind);

/// Initial delay drawn for a host: a pure function of (seed, host name).
SimTime initial_delay_for(const SdConfig& config, std::uint64_t seed, std::string_view host_name);

class SdEngine {
 public:
  SdEngine(model::HostModel& model, SdConfig config, std::uint64_t seed);

  const SdConfig& config() const { return config_; }
  SimTime initial_delay() const { return initial_delay_; }

  /// Brings autostart services online and arms the first offer/find timers
  /// at t0 + initial_delay(). Emits nothing.
  void init(SimTime t0);

  std::vector<SdEmission> on_timer(SimTime now);
  std::vector<SdEmission> handle_sd(const wire::SdMessage& sd, const Endpoint& src, SimTime now);

  std::vector<SdEmission> start_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now);
  std::vector<SdEmission> stop_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now);

  /// Consumer-side switches: release unsubscribes (ttl 0) and stops finding;
  /// request resumes finding at once.
  std::vector<SdEmission> request_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now);
  std::vector<SdEmission> release_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now);

  /// NOTIFICATION messages carrying `payload` to every active subscriber of
  /// any eventgroup containing the event, one per distinct endpoint.
  std::vector<NotificationEmission> publish_event(std::uint16_t service_id, std::uint16_t instance_id,
                                                  std::uint16_t event_id, const std::vector<std::uint8_t>& payload,
                                                  SimTime now);

  /// Removes a provided or consumed service from this engine's behaviour, as
  /// when the service is handed to a real ECU.
  void exclude_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now);
  void include_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now);
  bool is_excluded(std::uint16_t service_id, std::uint16_t instance_id) const;

  /// Earliest time at which on_timer has work (kNever if none).
  SimTime next_deadline() const;

  std::vector<SdObservation> take_observations();

 private:
  using Key = std::pair<std::uint16_t, std::uint16_t>;

  void observe(SdObservation::Kind kind, SimTime now, std::uint16_t svc, std::uint16_t inst,
               std::uint16_t eg = 0, Endpoint peer = {});
  void diff_consumer_states(const std::vector<model::ConsumerState>& before, SimTime now);
  std::vector<model::ConsumerState> consumer_states() const;
  void finish(std::vector<SdEmission>& out);

  wire::SdEntry offer_entry(const model::ProvidedService& svc, std::uint32_t ttl) const;
  void append_subscribe(wire::SdMessage& msg, const model::ConsumedService& c, std::uint32_t ttl) const;
  void subscribe(model::ConsumedService& c, SimTime now, std::vector<SdEmission>& out);
  SdEmission multicast(wire::SdMessage msg, bool answer = false) const;

  void handle_find(const wire::SdEntry& e, wire::SdMessage& offers);
  void handle_offer(const wire::SdMessage& sd, const wire::SdEntry& e, const Endpoint& src, SimTime now,
                    std::vector<SdEmission>& out);
  void handle_subscribe(const wire::SdMessage& sd, const wire::SdEntry& e, const Endpoint& src, SimTime now,
                        wire::SdMessage& acks);
  void handle_ack(const wire::SdEntry& e, const Endpoint& src, SimTime now);

  model::HostModel& model_;
  SdConfig config_;
  SimTime initial_delay_ = 0;
  bool initialized_ = false;
  bool reboot_pending_ = true;
  std::map<Key, SimTime> next_offer_at_;
  std::map<Key, SimTime> next_find_at_;
  std::set<Key> excluded_;
  std::vector<SdObservation> observations_;
};

}  // namespace restbus::sd
