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

#include "restbus/service_model.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace restbus::model {

namespace {

std::vector<Event> resolve_events(const config::NetworkConfig& cfg, const config::ServiceDef& svc) {
  std::vector<Event> events;
  for (const auto& e : svc.events) {
    const config::LayoutDef* layout = cfg.find_layout(e.layout);
    events.push_back(Event{e.id, e.cycle_ms, e.layout, layout ? layout->layout : signals::PayloadLayout{}});
  }
  return events;
}

template <typename Vec>
auto* find_event_in(Vec& events, std::uint16_t event_id) {
  auto it = std::find_if(events.begin(), events.end(), [&](const Event& e) { return e.event_id == event_id; });
  return it == events.end() ? nullptr : &*it;
}

}  // namespace

const char* to_string(ConsumerState state) {
  switch (state) {
    case ConsumerState::kWanted: return "WANTED";
    case ConsumerState::kOfferSeen: return "OFFER_SEEN";
    case ConsumerState::kSubscribed: return "SUBSCRIBED";
  }
  return "?";
}

const char* to_string(ModelErrc code) {
  switch (code) {
    case ModelErrc::kUnknownHost: return "UNKNOWN_HOST";
    case ModelErrc::kNoSuchService: return "NO_SUCH_SERVICE";
    case ModelErrc::kNoSuchEventgroup: return "NO_SUCH_EVENTGROUP";
    case ModelErrc::kNoSuchEvent: return "NO_SUCH_EVENT";
  }
  return "?";
}

ModelError::ModelError(ModelErrc code, const std::string& detail)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), detail)), code_(code) {}

const Event* ProvidedService::find_event(std::uint16_t event_id) const { return find_event_in(events, event_id); }

const Eventgroup* ProvidedService::find_eventgroup(std::uint16_t eventgroup_id) const {
  for (const auto& eg : eventgroups) {
    if (eg.eventgroup_id == eventgroup_id) return &eg;
  }
  return nullptr;
}

const Event* ConsumedService::find_event(std::uint16_t event_id) const { return find_event_in(events, event_id); }

ProvidedService* HostModel::find_provided(std::uint16_t service_id, std::uint16_t instance_id) {
  for (auto& p : provided) {
    if (p.service_id == service_id && p.instance_id == instance_id) return &p;
  }
  return nullptr;
}

const ProvidedService* HostModel::find_provided(std::uint16_t service_id, std::uint16_t instance_id) const {
  return const_cast<HostModel*>(this)->find_provided(service_id, instance_id);
}

ConsumedService* HostModel::find_consumed(std::uint16_t service_id, std::uint16_t instance_id) {
  for (auto& c : consumed) {
    if (c.service_id == service_id && c.instance_id == instance_id) return &c;
  }
  return nullptr;
}

const ConsumedService* HostModel::find_consumed(std::uint16_t service_id, std::uint16_t instance_id) const {
  return const_cast<HostModel*>(this)->find_consumed(service_id, instance_id);
}

const RemoteOffer* HostModel::find_offer(const Endpoint& provider, std::uint16_t service_id,
                                         std::uint16_t instance_id) const {
  for (const auto& o : remote_offers) {
    if (o.provider == provider && o.service_id == service_id && o.instance_id == instance_id) return &o;
  }
  return nullptr;
}

SubscriptionRecord HostModel::upsert_subscription(const Endpoint& subscriber, std::uint16_t service_id,
                                                  std::uint16_t instance_id, std::uint16_t eventgroup_id,
                                                  std::uint32_t ttl_s, SimTime now) {
  const ProvidedService* svc = find_provided(service_id, instance_id);
  if (!svc || !svc->offering) {
    throw ModelError(ModelErrc::kNoSuchService, fmt::format("{:#06x}/{:#06x}", service_id, instance_id));
  }
  if (!svc->find_eventgroup(eventgroup_id)) {
    throw ModelError(ModelErrc::kNoSuchEventgroup, fmt::format("{:#06x}", eventgroup_id));
  }
  auto it = std::find_if(subscribers.begin(), subscribers.end(), [&](const SubscriptionRecord& r) {
    return r.subscriber == subscriber && r.service_id == service_id && r.instance_id == instance_id &&
           r.eventgroup_id == eventgroup_id;
  });
  SubscriptionRecord record{subscriber, service_id, instance_id, eventgroup_id, ttl_s, now + ttl_s};
  if (ttl_s == 0) {
    if (it != subscribers.end()) subscribers.erase(it);
    record.expires_at = now;
    return record;
  }
  if (it != subscribers.end()) {
    *it = record;
  } else {
    subscribers.push_back(record);
  }
  return record;
}

std::vector<SubscriptionRecord> HostModel::clear_subscriptions(std::uint16_t service_id, std::uint16_t instance_id) {
  std::vector<SubscriptionRecord> removed;
  std::erase_if(subscribers, [&](const SubscriptionRecord& r) {
    if (r.service_id != service_id || r.instance_id != instance_id) return false;
    removed.push_back(r);
    return true;
  });
  return removed;
}

std::vector<Endpoint> HostModel::active_subscribers(std::uint16_t service_id, std::uint16_t instance_id,
                                                    std::uint16_t eventgroup_id, SimTime now) const {
  std::vector<Endpoint> out;
  for (const auto& r : subscribers) {
    if (r.service_id == service_id && r.instance_id == instance_id && r.eventgroup_id == eventgroup_id &&
        r.expires_at > now) {
      out.push_back(r.subscriber);
    }
  }
  return out;
}

PurgeResult HostModel::purge_expired(SimTime now) {
  PurgeResult result;
  std::erase_if(subscribers, [&](const SubscriptionRecord& r) {
    if (r.expires_at > now) return false;
    result.subscriptions.push_back(r);
    return true;
  });
  std::erase_if(remote_offers, [&](const RemoteOffer& o) {
    if (o.expires_at > now) return false;
    result.offers.push_back(o);
    return true;
  });
  for (const auto& o : result.offers) {
    ConsumedService* c = find_consumed(o.service_id, o.instance_id);
    if (c && c->provider == o.provider) reset_consumer(*c);
  }
  return result;
}

RemoteOffer HostModel::record_remote_offer(const Endpoint& provider, std::uint16_t service_id,
                                           std::uint16_t instance_id, std::uint8_t major_version,
                                           std::uint32_t minor_version, std::uint32_t ttl_s, SimTime now) {
  RemoteOffer offer{provider, service_id, instance_id, major_version, minor_version, ttl_s, now + ttl_s, now};
  auto it = std::find_if(remote_offers.begin(), remote_offers.end(), [&](const RemoteOffer& o) {
    return o.provider == provider && o.service_id == service_id && o.instance_id == instance_id;
  });
  if (ttl_s == 0) {
    if (it != remote_offers.end()) remote_offers.erase(it);
    offer.expires_at = now;
    ConsumedService* c = find_consumed(service_id, instance_id);
    if (c && c->provider == provider) reset_consumer(*c);
    return offer;
  }
  if (it != remote_offers.end()) {
    *it = offer;
    return offer;
  }
  if (remote_offers.size() >= kMaxRemoteOffers) {
    auto victim = std::min_element(remote_offers.begin(), remote_offers.end(),
                                   [](const RemoteOffer& a, const RemoteOffer& b) { return a.expires_at < b.expires_at; });
    ConsumedService* c = find_consumed(victim->service_id, victim->instance_id);
    if (c && c->provider == victim->provider) reset_consumer(*c);
    remote_offers.erase(victim);
  }
  remote_offers.push_back(offer);
  return offer;
}

void HostModel::touch_offer(const Endpoint& provider, std::uint16_t service_id, std::uint16_t instance_id,
                            SimTime now) {
  for (auto& o : remote_offers) {
    if (o.provider == provider && o.service_id == service_id && o.instance_id == instance_id) {
      o.last_activity = now;
    }
  }
}

void HostModel::reset_consumer(ConsumedService& consumer) {
  consumer.state = ConsumerState::kWanted;
  consumer.provider.reset();
  consumer.acked_eventgroups.clear();
  consumer.subscribed_at = 0;
  consumer.subscription_expires_at = 0;
  consumer.next_renew_at = kNever;
}

HostModel build_model(const config::NetworkConfig& cfg, std::string_view host_name) {
  const config::HostDef* host = cfg.find_host(host_name);
  if (!host) throw ModelError(ModelErrc::kUnknownHost, std::string(host_name));
  HostModel model;
  model.name = host->name;
  model.endpoint = host->endpoint;
  for (const auto& p : host->provides) {
    const config::ServiceDef* svc = cfg.find_service(p.service, p.instance);
    if (!svc) throw ModelError(ModelErrc::kNoSuchService, fmt::format("{:#06x}/{:#06x}", p.service, p.instance));
    ProvidedService ps;
    ps.service_id = svc->id;
    ps.instance_id = svc->instance;
    ps.major_version = svc->major_version;
    ps.minor_version = svc->minor_version;
    ps.events = resolve_events(cfg, *svc);
    for (const auto& eg : svc->eventgroups) ps.eventgroups.push_back(Eventgroup{eg.id, eg.event_ids});
    ps.autostart = p.autostart;
    model.provided.push_back(std::move(ps));
  }
  for (const auto& c : host->consumes) {
    const config::ServiceDef* svc = cfg.find_service(c.service, c.instance);
    if (!svc) throw ModelError(ModelErrc::kNoSuchService, fmt::format("{:#06x}/{:#06x}", c.service, c.instance));
    ConsumedService cs;
    cs.service_id = c.service;
    cs.instance_id = c.instance;
    cs.major_version = c.major_version;
    cs.desired_eventgroups = c.eventgroups;
    cs.events = resolve_events(cfg, *svc);
    model.consumed.push_back(std::move(cs));
  }
  return model;
}

}  // namespace restbus::model
