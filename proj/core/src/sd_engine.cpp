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

#include "restbus/sd_engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace restbus::sd {

namespace {

using model::ConsumedService;
using model::ConsumerState;
using model::kNever;
using model::ProvidedService;
using wire::EntryType;
using wire::SdEntry;
using wire::SdMessage;

constexpr std::uint8_t kAnyMajor = 0xFF;
constexpr std::uint32_t kAnyMinor = 0xFFFFFFFF;

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

SimTime seconds(std::uint32_t ms) { return ms / 1000.0; }

void advance(SimTime& next, SimTime now, SimTime cycle) {
  while (next <= now) next += cycle;
}

}  // namespace

const char* to_string(SdObservation::Kind kind) {
  using K = SdObservation::Kind;
  switch (kind) {
    case K::kServiceStarted: return "service_started";
    case K::kServiceStopped: return "service_stopped";
    case K::kSubscriptionAdded: return "subscription_added";
    case K::kSubscriptionRenewed: return "subscription_renewed";
    case K::kSubscriptionRemoved: return "subscription_removed";
    case K::kSubscriptionExpired: return "subscription_expired";
    case K::kSubscriptionRejected: return "subscription_rejected";
    case K::kOfferReceived: return "offer_received";
    case K::kOfferStopped: return "offer_stopped";
    case K::kOfferExpired: return "offer_expired";
    case K::kConsumerState: return "consumer_state";
  }
  return "?";
}

SdConfig SdConfig::from(const config::SdParams& p) {
  SdConfig c;
  c.multicast = p.multicast;
  c.offer_cycle_ms = p.offer_cycle_ms;
  c.find_cycle_ms = p.find_cycle_ms;
  c.default_ttl_s = p.ttl_s;
  c.renew_fraction = p.renew_fraction;
  c.initial_delay_min_ms = p.initial_delay_min_ms;
  c.initial_delay_max_ms = p.initial_delay_max_ms;
  c.renewal_enabled = p.renewal;
  return c;
}

void SdConfig::validate() const {
  if (offer_cycle_ms == 0 || find_cycle_ms == 0) throw std::invalid_argument("SD cycles must be positive");
  if (!(renew_fraction > 0.0 && renew_fraction < 1.0)) throw std::invalid_argument("renew_fraction not in (0, 1)");
  if (default_ttl_s == 0 || default_ttl_s > wire::kMaxTtl) throw std::invalid_argument("ttl out of range");
  if (initial_delay_min_ms > initial_delay_max_ms) throw std::invalid_argument("initial delay range inverted");
}

SimTime initial_delay_for(const SdConfig& config, std::uint64_t seed, std::string_view host_name) {
  std::mt19937_64 rng(seed ^ fnv1a(host_name));
  double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double lo = config.initial_delay_min_ms;
  double hi = config.initial_delay_max_ms;
  // Whole microseconds keep capture timestamps exact.
  return std::round((lo + unit * (hi - lo)) * 1000.0) / 1e6;
}

SdEngine::SdEngine(model::HostModel& model, SdConfig config, std::uint64_t seed)
    : model_(model), config_(config) {
  config_.validate();
  initial_delay_ = initial_delay_for(config_, seed, model_.name);
}

void SdEngine::observe(SdObservation::Kind kind, SimTime now, std::uint16_t svc, std::uint16_t inst,
                       std::uint16_t eg, Endpoint peer) {
  SdObservation o;
  o.kind = kind;
  o.at = now;
  o.service_id = svc;
  o.instance_id = inst;
  o.eventgroup_id = eg;
  o.peer = peer;
  observations_.push_back(o);
}

std::vector<ConsumerState> SdEngine::consumer_states() const {
  std::vector<ConsumerState> states;
  for (const auto& c : model_.consumed) states.push_back(c.state);
  return states;
}

void SdEngine::diff_consumer_states(const std::vector<ConsumerState>& before, SimTime now) {
  for (std::size_t i = 0; i < before.size(); ++i) {
    const ConsumedService& c = model_.consumed[i];
    if (c.state == before[i]) continue;
    observe(SdObservation::Kind::kConsumerState, now, c.service_id, c.instance_id, 0,
            c.provider.value_or(Endpoint{}));
    observations_.back().state = c.state;
  }
}

std::vector<SdObservation> SdEngine::take_observations() { return std::exchange(observations_, {}); }

void SdEngine::finish(std::vector<SdEmission>& out) {
  if (out.empty() || !reboot_pending_) return;
  out.front().message.reboot = true;
  reboot_pending_ = false;
}

SdEmission SdEngine::multicast(SdMessage msg, bool answer) const {
  return SdEmission{std::move(msg), config_.multicast, true, answer};
}

SdEntry SdEngine::offer_entry(const ProvidedService& svc, std::uint32_t ttl) const {
  SdEntry e;
  e.type = EntryType::kOfferService;
  e.num_1st = 1;
  e.service_id = svc.service_id;
  e.instance_id = svc.instance_id;
  e.major_version = svc.major_version;
  e.minor_version = svc.minor_version;
  e.ttl = ttl;
  return e;
}

void SdEngine::append_subscribe(SdMessage& msg, const ConsumedService& c, std::uint32_t ttl) const {
  if (msg.options.empty()) msg.options.push_back(wire::SdOption::ipv4_udp(model_.endpoint));
  for (std::uint16_t eg : c.desired_eventgroups) {
    SdEntry e;
    e.type = EntryType::kSubscribeEventgroup;
    e.num_1st = 1;
    e.service_id = c.service_id;
    e.instance_id = c.instance_id;
    e.major_version = c.major_version;
    e.ttl = ttl;
    e.eventgroup_id = eg;
    msg.entries.push_back(e);
  }
}

void SdEngine::subscribe(ConsumedService& c, SimTime now, std::vector<SdEmission>& out) {
  SdMessage msg;
  std::uint32_t ttl = config_.default_ttl_s;
  append_subscribe(msg, c, ttl);
  if (c.state == ConsumerState::kWanted) c.state = ConsumerState::kOfferSeen;
  c.subscribed_at = now;
  c.subscription_expires_at = now + ttl;
  c.next_renew_at = config_.renewal_enabled ? now + config_.renew_fraction * ttl : now + ttl;
  out.push_back(SdEmission{std::move(msg), *c.provider, false, false});
}

void SdEngine::init(SimTime t0) {
  SimTime first = t0 + initial_delay_;
  for (auto& p : model_.provided) {
    Key key{p.service_id, p.instance_id};
    if (!p.autostart || excluded_.contains(key)) continue;
    p.offering = true;
    next_offer_at_[key] = first;
    observe(SdObservation::Kind::kServiceStarted, t0, p.service_id, p.instance_id);
  }
  for (auto& c : model_.consumed) {
    Key key{c.service_id, c.instance_id};
    if (c.requested && !excluded_.contains(key)) next_find_at_[key] = first;
  }
  initialized_ = true;
}

std::vector<SdEmission> SdEngine::on_timer(SimTime now) {
  std::vector<SdEmission> out;
  if (!initialized_) return out;
  auto before = consumer_states();

  model::PurgeResult purged = model_.purge_expired(now);
  for (const auto& r : purged.subscriptions) {
    observe(SdObservation::Kind::kSubscriptionExpired, now, r.service_id, r.instance_id, r.eventgroup_id,
            r.subscriber);
  }
  for (const auto& o : purged.offers) {
    observe(SdObservation::Kind::kOfferExpired, now, o.service_id, o.instance_id, 0, o.provider);
  }

  SdMessage cyclic;
  for (auto& p : model_.provided) {
    auto it = next_offer_at_.find({p.service_id, p.instance_id});
    if (!p.offering || it == next_offer_at_.end() || it->second > now) continue;
    if (cyclic.options.empty()) cyclic.options.push_back(wire::SdOption::ipv4_udp(model_.endpoint));
    cyclic.entries.push_back(offer_entry(p, config_.default_ttl_s));
    advance(it->second, now, seconds(config_.offer_cycle_ms));
  }
  for (auto& c : model_.consumed) {
    auto it = next_find_at_.find({c.service_id, c.instance_id});
    if (!c.requested || it == next_find_at_.end() || it->second > now) continue;
    if (c.state == ConsumerState::kWanted) {
      SdEntry e;
      e.type = EntryType::kFindService;
      e.service_id = c.service_id;
      e.instance_id = c.instance_id;
      e.major_version = c.major_version;
      e.minor_version = kAnyMinor;
      e.ttl = config_.default_ttl_s;
      cyclic.entries.push_back(e);
    }
    advance(it->second, now, seconds(config_.find_cycle_ms));
  }
  if (!cyclic.entries.empty()) out.push_back(multicast(std::move(cyclic)));

  for (auto& c : model_.consumed) {
    if (c.state == ConsumerState::kWanted || c.next_renew_at > now || !c.provider) continue;
    if (config_.renewal_enabled) {
      subscribe(c, now, out);
    } else {
      // The subscription ran out and is not renewed; wait for the provider to
      // go away before looking again.
      c.state = ConsumerState::kOfferSeen;
      c.acked_eventgroups.clear();
      c.next_renew_at = kNever;
    }
  }

  diff_consumer_states(before, now);
  finish(out);
  return out;
}

void SdEngine::handle_find(const SdEntry& e, SdMessage& offers) {
  const ProvidedService* p = model_.find_provided(e.service_id, e.instance_id);
  if (!p || !p->offering || excluded_.contains({p->service_id, p->instance_id})) return;
  if (e.major_version != kAnyMajor && e.major_version != p->major_version) return;
  for (const auto& existing : offers.entries) {
    if (existing.service_id == p->service_id && existing.instance_id == p->instance_id) return;
  }
  if (offers.options.empty()) offers.options.push_back(wire::SdOption::ipv4_udp(model_.endpoint));
  offers.entries.push_back(offer_entry(*p, config_.default_ttl_s));
}

void SdEngine::handle_offer(const SdMessage& sd, const SdEntry& e, const Endpoint& src, SimTime now,
                            std::vector<SdEmission>& out) {
  (void)sd;
  bool known = model_.find_offer(src, e.service_id, e.instance_id) != nullptr;
  model_.record_remote_offer(src, e.service_id, e.instance_id, e.major_version, e.minor_version, e.ttl, now);
  if (e.ttl == 0) {
    if (known) observe(SdObservation::Kind::kOfferStopped, now, e.service_id, e.instance_id, 0, src);
    return;
  }
  if (!known) observe(SdObservation::Kind::kOfferReceived, now, e.service_id, e.instance_id, 0, src);
  ConsumedService* c = model_.find_consumed(e.service_id, e.instance_id);
  if (!c || !c->requested || excluded_.contains({c->service_id, c->instance_id})) return;
  if (c->major_version != kAnyMajor && c->major_version != e.major_version) return;
  if (c->state != ConsumerState::kWanted) return;
  c->provider = src;
  subscribe(*c, now, out);
}

void SdEngine::handle_subscribe(const SdMessage& sd, const SdEntry& e, const Endpoint& src, SimTime now,
                                SdMessage& acks) {
  if (excluded_.contains({e.service_id, e.instance_id})) return;
  const wire::SdOption* opt = wire::first_endpoint_option(sd, e);
  Endpoint subscriber = opt ? opt->endpoint : src;
  if (e.ttl == 0) {
    bool existed = std::any_of(model_.subscribers.begin(), model_.subscribers.end(), [&](const auto& r) {
      return r.subscriber == subscriber && r.service_id == e.service_id && r.instance_id == e.instance_id &&
             r.eventgroup_id == e.eventgroup_id;
    });
    if (!existed) return;
    model_.upsert_subscription(subscriber, e.service_id, e.instance_id, e.eventgroup_id, 0, now);
    observe(SdObservation::Kind::kSubscriptionRemoved, now, e.service_id, e.instance_id, e.eventgroup_id,
            subscriber);
    return;
  }
  SdEntry ack;
  ack.type = EntryType::kSubscribeEventgroupAck;
  ack.service_id = e.service_id;
  ack.instance_id = e.instance_id;
  ack.major_version = e.major_version;
  ack.counter = e.counter;
  ack.eventgroup_id = e.eventgroup_id;
  std::size_t before = model_.subscribers.size();
  try {
    const ProvidedService* p = model_.find_provided(e.service_id, e.instance_id);
    if (p && e.major_version != kAnyMajor && e.major_version != p->major_version) {
      throw model::ModelError(model::ModelErrc::kNoSuchService, "major version mismatch");
    }
    model_.upsert_subscription(subscriber, e.service_id, e.instance_id, e.eventgroup_id, e.ttl, now);
    ack.ttl = e.ttl;
    observe(model_.subscribers.size() > before ? SdObservation::Kind::kSubscriptionAdded
                                               : SdObservation::Kind::kSubscriptionRenewed,
            now, e.service_id, e.instance_id, e.eventgroup_id, subscriber);
  } catch (const model::ModelError&) {
    ack.ttl = 0;
    observe(SdObservation::Kind::kSubscriptionRejected, now, e.service_id, e.instance_id, e.eventgroup_id,
            subscriber);
  }
  acks.entries.push_back(ack);
}

void SdEngine::handle_ack(const SdEntry& e, const Endpoint& src, SimTime now) {
  (void)now;
  ConsumedService* c = model_.find_consumed(e.service_id, e.instance_id);
  if (!c || excluded_.contains({c->service_id, c->instance_id}) || c->provider != src) return;
  if (c->state == ConsumerState::kWanted) return;
  auto& acked = c->acked_eventgroups;
  auto it = std::find(acked.begin(), acked.end(), e.eventgroup_id);
  if (e.ttl == 0) {
    if (it != acked.end()) acked.erase(it);
    if (c->state == ConsumerState::kSubscribed) c->state = ConsumerState::kOfferSeen;
    return;
  }
  bool desired = std::find(c->desired_eventgroups.begin(), c->desired_eventgroups.end(), e.eventgroup_id) !=
                 c->desired_eventgroups.end();
  if (desired && it == acked.end()) acked.push_back(e.eventgroup_id);
  bool all = std::all_of(c->desired_eventgroups.begin(), c->desired_eventgroups.end(), [&](std::uint16_t eg) {
    return std::find(acked.begin(), acked.end(), eg) != acked.end();
  });
  if (all && model_.find_offer(src, c->service_id, c->instance_id)) c->state = ConsumerState::kSubscribed;
}

std::vector<SdEmission> SdEngine::handle_sd(const SdMessage& sd, const Endpoint& src, SimTime now) {
  std::vector<SdEmission> out;
  if (!initialized_ || src == model_.endpoint) return out;
  auto before = consumer_states();
  SdMessage offers;
  SdMessage acks;
  for (const auto& e : sd.entries) {
    switch (e.type) {
      case EntryType::kFindService: handle_find(e, offers); break;
      case EntryType::kOfferService: handle_offer(sd, e, src, now, out); break;
      case EntryType::kSubscribeEventgroup: handle_subscribe(sd, e, src, now, acks); break;
      case EntryType::kSubscribeEventgroupAck: handle_ack(e, src, now); break;
    }
  }
  if (!offers.entries.empty()) out.insert(out.begin(), multicast(std::move(offers), true));
  if (!acks.entries.empty()) out.push_back(SdEmission{std::move(acks), src, false, true});
  diff_consumer_states(before, now);
  finish(out);
  return out;
}

std::vector<SdEmission> SdEngine::start_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now) {
  ProvidedService* p = model_.find_provided(service_id, instance_id);
  if (!p || excluded_.contains({service_id, instance_id})) {
    throw model::ModelError(model::ModelErrc::kNoSuchService, fmt::format("{:#06x}/{:#06x}", service_id, instance_id));
  }
  std::vector<SdEmission> out;
  if (p->offering) return out;
  p->offering = true;
  observe(SdObservation::Kind::kServiceStarted, now, service_id, instance_id);
  if (!initialized_) return out;
  next_offer_at_[{service_id, instance_id}] = now + seconds(config_.offer_cycle_ms);
  SdMessage msg;
  msg.options.push_back(wire::SdOption::ipv4_udp(model_.endpoint));
  msg.entries.push_back(offer_entry(*p, config_.default_ttl_s));
  out.push_back(multicast(std::move(msg)));
  finish(out);
  return out;
}

std::vector<SdEmission> SdEngine::stop_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now) {
  ProvidedService* p = model_.find_provided(service_id, instance_id);
  if (!p || excluded_.contains({service_id, instance_id})) {
    throw model::ModelError(model::ModelErrc::kNoSuchService, fmt::format("{:#06x}/{:#06x}", service_id, instance_id));
  }
  std::vector<SdEmission> out;
  if (!p->offering) return out;
  p->offering = false;
  next_offer_at_.erase({service_id, instance_id});
  for (const auto& r : model_.clear_subscriptions(service_id, instance_id)) {
    observe(SdObservation::Kind::kSubscriptionRemoved, now, r.service_id, r.instance_id, r.eventgroup_id,
            r.subscriber);
  }
  observe(SdObservation::Kind::kServiceStopped, now, service_id, instance_id);
  if (!initialized_) return out;
  SdMessage msg;
  msg.options.push_back(wire::SdOption::ipv4_udp(model_.endpoint));
  msg.entries.push_back(offer_entry(*p, 0));
  out.push_back(multicast(std::move(msg)));
  finish(out);
  return out;
}

std::vector<SdEmission> SdEngine::request_service(std::uint16_t service_id, std::uint16_t instance_id,
                                                  SimTime now) {
  ConsumedService* c = model_.find_consumed(service_id, instance_id);
  if (!c || excluded_.contains({service_id, instance_id})) {
    throw model::ModelError(model::ModelErrc::kNoSuchService, fmt::format("{:#06x}/{:#06x}", service_id, instance_id));
  }
  std::vector<SdEmission> out;
  if (c->requested) return out;
  c->requested = true;
  if (!initialized_) return out;
  next_find_at_[{service_id, instance_id}] = now;
  return on_timer(now);
}

std::vector<SdEmission> SdEngine::release_service(std::uint16_t service_id, std::uint16_t instance_id,
                                                  SimTime now) {
  ConsumedService* c = model_.find_consumed(service_id, instance_id);
  if (!c || excluded_.contains({service_id, instance_id})) {
    throw model::ModelError(model::ModelErrc::kNoSuchService, fmt::format("{:#06x}/{:#06x}", service_id, instance_id));
  }
  std::vector<SdEmission> out;
  if (!c->requested) return out;
  auto before = consumer_states();
  c->requested = false;
  next_find_at_.erase({service_id, instance_id});
  if (c->provider && c->state != ConsumerState::kWanted) {
    SdMessage msg;
    append_subscribe(msg, *c, 0);
    out.push_back(SdEmission{std::move(msg), *c->provider, false, false});
  }
  model::HostModel::reset_consumer(*c);
  diff_consumer_states(before, now);
  finish(out);
  return out;
}

std::vector<NotificationEmission> SdEngine::publish_event(std::uint16_t service_id, std::uint16_t instance_id,
                                                          std::uint16_t event_id,
                                                          const std::vector<std::uint8_t>& payload, SimTime now) {
  const ProvidedService* p = model_.find_provided(service_id, instance_id);
  if (!p) {
    throw model::ModelError(model::ModelErrc::kNoSuchService, fmt::format("{:#06x}/{:#06x}", service_id, instance_id));
  }
  if (!p->find_event(event_id)) throw model::ModelError(model::ModelErrc::kNoSuchEvent, fmt::format("{:#06x}", event_id));
  std::vector<NotificationEmission> out;
  if (!p->offering || excluded_.contains({service_id, instance_id})) return out;
  std::vector<Endpoint> targets;
  for (const auto& eg : p->eventgroups) {
    if (std::find(eg.event_ids.begin(), eg.event_ids.end(), event_id) == eg.event_ids.end()) continue;
    for (const Endpoint& ep : model_.active_subscribers(service_id, instance_id, eg.eventgroup_id, now)) {
      if (std::find(targets.begin(), targets.end(), ep) == targets.end()) targets.push_back(ep);
    }
  }
  for (const Endpoint& ep : targets) {
    wire::SomeIpHeader h;
    h.service_id = service_id;
    h.method_id = static_cast<std::uint16_t>(event_id | 0x8000);
    h.interface_version = p->major_version;
    h.message_type = wire::MessageType::kNotification;
    out.push_back(NotificationEmission{wire::make_message(h, payload), ep});
  }
  return out;
}

void SdEngine::exclude_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now) {
  Key key{service_id, instance_id};
  if (!excluded_.insert(key).second) return;
  auto before = consumer_states();
  if (ProvidedService* p = model_.find_provided(service_id, instance_id)) {
    if (p->offering) {
      p->offering = false;
      model_.clear_subscriptions(service_id, instance_id);
    }
    next_offer_at_.erase(key);
  }
  if (ConsumedService* c = model_.find_consumed(service_id, instance_id)) {
    model::HostModel::reset_consumer(*c);
    next_find_at_.erase(key);
  }
  diff_consumer_states(before, now);
}

void SdEngine::include_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now) {
  Key key{service_id, instance_id};
  if (excluded_.erase(key) == 0) return;
  if (ProvidedService* p = model_.find_provided(service_id, instance_id); p && p->autostart) {
    p->offering = true;
    if (initialized_) next_offer_at_[key] = now;
  }
  if (ConsumedService* c = model_.find_consumed(service_id, instance_id); c && c->requested && initialized_) {
    next_find_at_[key] = now;
  }
}

bool SdEngine::is_excluded(std::uint16_t service_id, std::uint16_t instance_id) const {
  return excluded_.contains({service_id, instance_id});
}

SimTime SdEngine::next_deadline() const {
  if (!initialized_) return kNever;
  SimTime t = kNever;
  for (const auto& p : model_.provided) {
    auto it = next_offer_at_.find({p.service_id, p.instance_id});
    if (p.offering && it != next_offer_at_.end()) t = std::min(t, it->second);
  }
  for (const auto& c : model_.consumed) {
    auto it = next_find_at_.find({c.service_id, c.instance_id});
    if (c.requested && it != next_find_at_.end()) t = std::min(t, it->second);
    if (c.state != ConsumerState::kWanted && c.provider) t = std::min(t, c.next_renew_at);
  }
  for (const auto& r : model_.subscribers) t = std::min(t, r.expires_at);
  for (const auto& o : model_.remote_offers) t = std::min(t, o.expires_at);
  return t;
}

}  // namespace restbus::sd
