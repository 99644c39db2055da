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

// Per-node view of the service landscape: what the host offers and needs,
// who subscribed to it, which remote offers it has seen, and their TTLs.
//
// Expiry is strict: a record with expires_at > now is alive.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "restbus/config.hpp"
#include "restbus/endpoint.hpp"
#include "restbus/signal_store.hpp"

namespace restbus::model {

inline constexpr SimTime kNever = std::numeric_limits<SimTime>::infinity();
inline constexpr std::size_t kMaxRemoteOffers = 1024;

struct Event {
  std::uint16_t event_id = 0;
  std::uint32_t cycle_ms = 0;
  std::string layout_id;
  signals::PayloadLayout layout;
};

struct Eventgroup {
  std::uint16_t eventgroup_id = 0;
  std::vector<std::uint16_t> event_ids;
};

struct ProvidedService {
  std::uint16_t service_id = 0;
  std::uint16_t instance_id = 0;
  std::uint8_t major_version = 1;
  std::uint32_t minor_version = 0;
  std::vector<Event> events;
  std::vector<Eventgroup> eventgroups;
  bool autostart = true;
  bool offering = false;

  const Event* find_event(std::uint16_t event_id) const;
  const Eventgroup* find_eventgroup(std::uint16_t eventgroup_id) const;
};

enum class ConsumerState { kWanted, kOfferSeen, kSubscribed };

const char* to_string(ConsumerState state);

struct ConsumedService {
  std::uint16_t service_id = 0;
  std::uint16_t instance_id = 0;
  std::uint8_t major_version = 1;
  std::vector<std::uint16_t> desired_eventgroups;
  std::vector<Event> events;  // layouts for decoding notifications
  ConsumerState state = ConsumerState::kWanted;

  // False after release_service: the consumer neither finds nor subscribes.
  bool requested = true;
  // SD endpoint of the provider whose offer we follow.
  std::optional<Endpoint> provider;
  std::vector<std::uint16_t> acked_eventgroups;
  SimTime subscribed_at = 0;
  SimTime subscription_expires_at = 0;
  SimTime next_renew_at = kNever;

  const Event* find_event(std::uint16_t event_id) const;
};

struct SubscriptionRecord {
  Endpoint subscriber;
  std::uint16_t service_id = 0;
  std::uint16_t instance_id = 0;
  std::uint16_t eventgroup_id = 0;
  std::uint32_t ttl_s = 0;
  SimTime expires_at = 0;

  bool operator==(const SubscriptionRecord&) const = default;
};

struct RemoteOffer {
  Endpoint provider;
  std::uint16_t service_id = 0;
  std::uint16_t instance_id = 0;
  std::uint8_t major_version = 0;
  std::uint32_t minor_version = 0;
  std::uint32_t ttl_s = 0;
  SimTime expires_at = 0;
  SimTime last_activity = 0;

  bool operator==(const RemoteOffer&) const = default;
};

struct PurgeResult {
  std::vector<SubscriptionRecord> subscriptions;
  std::vector<RemoteOffer> offers;

  bool empty() const { return subscriptions.empty() && offers.empty(); }
};

enum class ModelErrc { kUnknownHost, kNoSuchService, kNoSuchEventgroup, kNoSuchEvent };

const char* to_string(ModelErrc code);

class ModelError : public std::runtime_error {
 public:
  ModelError(ModelErrc code, const std::string& detail);
  ModelErrc code() const noexcept { return code_; }

 private:
  ModelErrc code_;
};

struct HostModel {
  std::string name;
  Endpoint endpoint;
  std::vector<ProvidedService> provided;
  std::vector<ConsumedService> consumed;
  std::vector<RemoteOffer> remote_offers;
  std::vector<SubscriptionRecord> subscribers;

  ProvidedService* find_provided(std::uint16_t service_id, std::uint16_t instance_id);
  const ProvidedService* find_provided(std::uint16_t service_id, std::uint16_t instance_id) const;
  ConsumedService* find_consumed(std::uint16_t service_id, std::uint16_t instance_id);
  const ConsumedService* find_consumed(std::uint16_t service_id, std::uint16_t instance_id) const;
  const RemoteOffer* find_offer(const Endpoint& provider, std::uint16_t service_id,
                                std::uint16_t instance_id) const;

  /// Adds or refreshes a subscription; ttl 0 removes it. The returned record
  /// carries ttl 0 in that case.
  SubscriptionRecord upsert_subscription(const Endpoint& subscriber, std::uint16_t service_id,
                                         std::uint16_t instance_id, std::uint16_t eventgroup_id,
                                         std::uint32_t ttl_s, SimTime now);

  /// Drops every subscription to the service; returns what was dropped.
  std::vector<SubscriptionRecord> clear_subscriptions(std::uint16_t service_id, std::uint16_t instance_id);

  std::vector<Endpoint> active_subscribers(std::uint16_t service_id, std::uint16_t instance_id,
                                           std::uint16_t eventgroup_id, SimTime now) const;

  PurgeResult purge_expired(SimTime now);

  /// Caches an offer; ttl 0 removes it and sends following consumers back to
  /// WANTED.
  RemoteOffer record_remote_offer(const Endpoint& provider, std::uint16_t service_id,
                                  std::uint16_t instance_id, std::uint8_t major_version,
                                  std::uint32_t minor_version, std::uint32_t ttl_s, SimTime now);

  /// Refreshes last_activity of a cached offer (event reception).
  void touch_offer(const Endpoint& provider, std::uint16_t service_id, std::uint16_t instance_id, SimTime now);

  /// Resets a consumer to WANTED, forgetting its provider and acks.
  static void reset_consumer(ConsumedService& consumer);
};

HostModel build_model(const config::NetworkConfig& config, std::string_view host_name);

}  // namespace restbus::model
