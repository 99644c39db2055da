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

#include "restbus/node.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

namespace restbus {

Node::Node(model::HostModel model, signals::SignalStore store, const sd::SdConfig& sd_config, std::uint64_t seed)
    : model_(std::move(model)), store_(std::move(store)), engine_(model_, sd_config, seed) {
  store_.set_listener([this](const signals::SignalUpdate& u) { signal_updates_.push_back(u); });
}

void Node::init(SimTime t0) {
  engine_.init(t0);
  SimTime first = t0 + engine_.initial_delay();
  for (const auto& p : model_.provided) {
    for (const auto& e : p.events) {
      if (e.cycle_ms > 0) next_publish_at_[{p.service_id, p.instance_id, e.event_id}] = first;
    }
  }
}

void Node::wrap_sd(std::vector<sd::SdEmission>&& emissions, std::vector<Outgoing>& out) {
  for (auto& e : emissions) {
    auto msg = wire::encode_sd(e.message, 0, sd_sessions_.next(e.destination));
    out.push_back(Outgoing{std::move(msg), e.destination, e.multicast, e.answer, true});
    ++counters_.sd_sent;
  }
}

void Node::wrap_notifications(std::vector<sd::NotificationEmission>&& emissions, std::vector<Outgoing>& out) {
  for (auto& n : emissions) {
    n.message.header.session_id = event_sessions_.next(n.destination);
    out.push_back(Outgoing{std::move(n.message), n.destination, false, false, false});
    ++counters_.notifications_sent;
  }
}

std::vector<Outgoing> Node::publish(std::uint16_t service_id, std::uint16_t instance_id, std::uint16_t event_id,
                                    SimTime now) {
  std::vector<Outgoing> out;
  auto payload = store_.serialize_event({service_id, event_id});
  wrap_notifications(engine_.publish_event(service_id, instance_id, event_id, payload, now), out);
  return out;
}

std::vector<Outgoing> Node::on_timer(SimTime now) {
  std::vector<Outgoing> out;
  wrap_sd(engine_.on_timer(now), out);
  for (auto& [key, at] : next_publish_at_) {
    auto [svc, inst, event_id] = key;
    const model::ProvidedService* p = model_.find_provided(svc, inst);
    if (!p->offering || at > now) continue;
    const model::Event* e = p->find_event(event_id);
    SimTime cycle = e->cycle_ms / 1000.0;
    while (at <= now) at += cycle;
    auto more = publish(svc, inst, event_id, now);
    std::move(more.begin(), more.end(), std::back_inserter(out));
  }
  return out;
}

void Node::handle_notification(const wire::SomeIpMessage& message, const Endpoint& src, SimTime now) {
  auto it = std::find_if(model_.consumed.begin(), model_.consumed.end(),
                         [&](const model::ConsumedService& c) { return c.service_id == message.header.service_id; });
  if (it == model_.consumed.end() || it->state == model::ConsumerState::kWanted || !it->provider ||
      it->provider->address != src.address) {
    ++counters_.notifications_dropped;
    return;
  }
  auto ev = std::find_if(it->events.begin(), it->events.end(), [&](const model::Event& e) {
    return (e.event_id | 0x8000) == message.header.method_id;
  });
  const model::Event* event = ev == it->events.end() ? nullptr : &*ev;
  if (!event) {
    ++counters_.notifications_dropped;
    return;
  }
  try {
    store_.deserialize_event({it->service_id, event->event_id}, event->layout, message.payload);
  } catch (const signals::SignalError& e) {
    spdlog::debug("{}: dropping notification: {}", name(), e.what());
    ++counters_.notifications_dropped;
    return;
  }
  ++counters_.notifications_received;
  model_.touch_offer(*it->provider, it->service_id, it->instance_id, now);
}

std::vector<Outgoing> Node::receive(std::span<const std::uint8_t> datagram, const Endpoint& src, SimTime now) {
  std::vector<Outgoing> out;
  std::vector<wire::SomeIpMessage> messages;
  try {
    messages = wire::decode_datagram(datagram);
  } catch (const wire::CodecError& e) {
    spdlog::debug("{}: undecodable datagram from {}: {}", name(), src.to_string(), e.what());
    ++counters_.decode_errors;
    return out;
  }
  for (const auto& m : messages) {
    if (wire::is_sd(m)) {
      wire::SdMessage sd;
      try {
        sd = wire::decode_sd(m);
      } catch (const wire::CodecError& e) {
        spdlog::debug("{}: bad SD message from {}: {}", name(), src.to_string(), e.what());
        ++counters_.decode_errors;
        continue;
      }
      ++counters_.sd_received;
      if (sd.reboot) spdlog::debug("{}: {} reports reboot", name(), src.to_string());
      wrap_sd(engine_.handle_sd(sd, src, now), out);
    } else if (m.header.message_type == wire::MessageType::kNotification && (m.header.method_id & 0x8000) != 0) {
      handle_notification(m, src, now);
    }
  }
  return out;
}

std::vector<Outgoing> Node::set_signal(std::string_view path, const signals::SignalInput& value, SimTime now) {
  signals::EventKey key = store_.set(path, value);
  std::vector<Outgoing> out;
  for (const auto& p : model_.provided) {
    if (p.service_id != key.service_id) continue;
    const model::Event* e = p.find_event(key.event_id);
    if (e && e->cycle_ms == 0) out = publish(p.service_id, p.instance_id, e->event_id, now);
  }
  return out;
}

std::vector<Outgoing> Node::start_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now) {
  std::vector<Outgoing> out;
  wrap_sd(engine_.start_service(service_id, instance_id, now), out);
  // Cyclic events resume on their phase one cycle after restart.
  for (auto& [key, at] : next_publish_at_) {
    if (std::get<0>(key) != service_id || std::get<1>(key) != instance_id) continue;
    const model::Event* e = model_.find_provided(service_id, instance_id)->find_event(std::get<2>(key));
    SimTime cycle = e->cycle_ms / 1000.0;
    while (at <= now) at += cycle;
  }
  return out;
}

std::vector<Outgoing> Node::stop_service(std::uint16_t service_id, std::uint16_t instance_id, SimTime now) {
  std::vector<Outgoing> out;
  wrap_sd(engine_.stop_service(service_id, instance_id, now), out);
  return out;
}

SimTime Node::next_deadline() const {
  SimTime t = engine_.next_deadline();
  for (const auto& [key, at] : next_publish_at_) {
    const model::ProvidedService* p = model_.find_provided(std::get<0>(key), std::get<1>(key));
    if (p->offering) t = std::min(t, at);
  }
  return t;
}

}  // namespace restbus
