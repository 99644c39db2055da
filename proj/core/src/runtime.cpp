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

#include "restbus/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "restbus/init_models.hpp"

namespace restbus {

namespace {

WallClock::duration to_wall(double seconds) {
  return std::chrono::duration_cast<WallClock::duration>(std::chrono::duration<double>(seconds));
}

}  // namespace

Runtime::Runtime(config::NetworkConfig config, RuntimeOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
  InitializedNetwork init = init_models(config_);
  sd::SdConfig sd_config = sd::SdConfig::from(config_.sd);
  for (std::size_t i = 0; i < init.hosts.size(); ++i) {
    nodes_.push_back(std::make_unique<Node>(std::move(init.hosts[i]), std::move(init.signal_tables[i]), sd_config,
                                            options_.seed));
  }
  network_ = std::make_unique<sim::Network>(std::move(init.topology), scheduler_);
  network_->set_deliver([this](std::size_t host, const sim::Frame& f) { on_deliver(host, f); });
  for (const char* name : {metrics::kSdAnswerTime, metrics::kSendDelay, metrics::kPacingOvershoot,
                           metrics::kInboundLateness}) {
    metrics_.register_series(name);
  }
  active_.assign(nodes_.size(), true);
  initialized_.assign(nodes_.size(), false);
  wake_handle_.assign(nodes_.size(), {});
  wake_at_.assign(nodes_.size(), 0.0);

  if (options_.pcap_dir) {
    std::filesystem::create_directories(*options_.pcap_dir);
    for (const auto& n : nodes_) {
      host_pcap_.push_back(std::make_unique<sim::PcapWriter>(*options_.pcap_dir / (n->name() + ".pcap")));
    }
    if (options_.trace_links) {
      const auto& topo = network_->topology();
      for (std::size_t l = 0; l < topo.links.size(); ++l) {
        link_pcap_.push_back(
            std::make_unique<sim::PcapWriter>(*options_.pcap_dir / ("link-" + topo.link_name(l) + ".pcap")));
      }
      network_->set_link_trace([this](std::size_t link, int, const sim::Frame& f) {
        link_pcap_[link]->write(f, scheduler_.now());
      });
    }
  }
}

Runtime::~Runtime() {
  try {
    flush();
  } catch (const std::exception& e) {
    spdlog::error("flushing captures: {}", e.what());
  }
}

std::optional<std::size_t> Runtime::host_index(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i]->name() == name) return i;
  }
  return std::nullopt;
}

Node* Runtime::node(std::string_view name) {
  auto i = host_index(name);
  return i ? nodes_[*i].get() : nullptr;
}

double Runtime::wall_seconds() const {
  return std::chrono::duration<double>(WallClock::now() - epoch_).count();
}

void Runtime::start() {
  if (started_) return;
  started_ = true;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!active_[i]) continue;
    nodes_[i]->init(now());
    initialized_[i] = true;
    after_interaction(i);
  }
}

void Runtime::trace_frame(std::size_t host, const sim::Frame& frame, bool outgoing) {
  if (!host_pcap_.empty()) host_pcap_[host]->write(frame, now());
  if (listeners_.empty()) return;
  RuntimeEvent ev = FrameTrace{now(), nodes_[host]->name(), outgoing, frame};
  for (const auto& l : listeners_) l(ev);
  if (!frame.payload) return;
  std::vector<wire::SomeIpMessage> messages;
  try {
    messages = wire::decode_datagram(*frame.payload);
  } catch (const wire::CodecError&) {
    return;
  }
  for (const auto& m : messages) {
    if (!wire::is_sd(m)) continue;
    SdTrace t;
    t.t = now();
    t.host = nodes_[host]->name();
    t.outgoing = outgoing;
    t.src = frame.src;
    t.dst = frame.dst;
    t.header = m.header;
    try {
      t.sd = wire::decode_sd(m);
    } catch (const wire::CodecError&) {
      continue;
    }
    RuntimeEvent sev = std::move(t);
    for (const auto& l : listeners_) l(sev);
  }
}

void Runtime::emit(std::size_t host, std::vector<Outgoing>&& out, const sim::Frame* cause) {
  const Node& n = *nodes_[host];
  for (auto& o : out) {
    sim::Frame frame = sim::make_frame(n.endpoint(), o.destination, o.multicast, wire::encode_message(o.message));
    frame.answer = o.answer;
    if (o.answer && cause) {
      if (cause->trigger_wall) {
        frame.trigger_wall = cause->trigger_wall;
      } else if (options_.mode == Mode::kPure) {
        // Handlers take no simulated time: receipt and emission coincide.
        SimTime received_at = now();
        metrics_.record(metrics::kSdAnswerTime, now(), now() - received_at);
      }
    }
    frame.id = network_->send(host, frame);
    frame.born_at = now();
    trace_frame(host, frame, true);
  }
}

void Runtime::after_interaction(std::size_t host) {
  Node& n = *nodes_[host];
  auto observations = n.take_observations();
  auto updates = n.take_signal_updates();
  if (!listeners_.empty()) {
    for (auto& o : observations) {
      RuntimeEvent ev = ObservationEvent{n.name(), o};
      for (const auto& l : listeners_) l(ev);
    }
    for (auto& u : updates) {
      RuntimeEvent ev = SignalEvent{n.name(), now(), u};
      for (const auto& l : listeners_) l(ev);
    }
  }
  reschedule(host);
  dirty_ = true;
}

void Runtime::reschedule(std::size_t host) {
  if (!active_[host] || !initialized_[host]) {
    if (wake_handle_[host].valid()) scheduler_.cancel(wake_handle_[host]);
    wake_handle_[host] = {};
    return;
  }
  SimTime d = nodes_[host]->next_deadline();
  if (std::isinf(d)) {
    if (wake_handle_[host].valid()) scheduler_.cancel(wake_handle_[host]);
    wake_handle_[host] = {};
    return;
  }
  SimTime t = std::max(d, now());
  if (wake_handle_[host].valid() && wake_at_[host] == t) return;
  if (wake_handle_[host].valid()) scheduler_.cancel(wake_handle_[host]);
  wake_at_[host] = t;
  wake_handle_[host] = scheduler_.schedule(t, [this, host] {
    wake_handle_[host] = {};
    wake(host);
  });
}

void Runtime::wake(std::size_t host) {
  emit(host, nodes_[host]->on_timer(now()), nullptr);
  after_interaction(host);
}

void Runtime::on_deliver(std::size_t host, const sim::Frame& frame) {
  trace_frame(host, frame, false);
  const bool own = frame.dst == nodes_[host]->endpoint();
  if (!port_) {
    if (frame.multicast || own) {
      deliver_to_node(host, frame);
    } else {
      ++misrouted_;
    }
    return;
  }
  const bool whole = port_->node_detached(host);
  const bool primary = port_->primary_attachment() == host;
  if (frame.multicast) {
    if (!whole) deliver_to_node(host, frame);
    if (primary && !frame.from_real) port_->send_real(frame);
  } else if (own) {
    if (!whole) {
      deliver_to_node(host, frame);
    } else if (!frame.from_real) {
      port_->send_real(frame);
    } else {
      ++misrouted_;
    }
  } else if (primary && !frame.from_real) {
    port_->send_real(frame);
  } else {
    ++misrouted_;
  }
}

void Runtime::deliver_to_node(std::size_t host, const sim::Frame& frame) {
  if (!active_[host] || !initialized_[host] || !frame.payload) {
    ++misrouted_;
    return;
  }
  emit(host, nodes_[host]->receive(*frame.payload, frame.src, now()), &frame);
  after_interaction(host);
}

void Runtime::inject(std::size_t host, sim::Frame frame) {
  frame.id = network_->send(host, frame);
  frame.born_at = now();
  trace_frame(host, frame, true);
}

void Runtime::set_signal(std::string_view path, const signals::SignalInput& value) {
  std::string_view host = path.substr(0, path.find('/'));
  auto i = host_index(host);
  if (!i) throw signals::SignalError(signals::SignalErrc::kUnknownPath, std::string(path));
  auto out = nodes_[*i]->set_signal(path, value, now());
  if (active_[*i] && initialized_[*i]) emit(*i, std::move(out), nullptr);
  after_interaction(*i);
}

void Runtime::start_service(std::uint16_t service_id, std::uint16_t instance_id) {
  bool found = false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = *nodes_[i];
    if (!active_[i] || !n.model().find_provided(service_id, instance_id) ||
        n.engine().is_excluded(service_id, instance_id)) {
      continue;
    }
    found = true;
    emit(i, n.start_service(service_id, instance_id, now()), nullptr);
    after_interaction(i);
  }
  if (!found) {
    throw model::ModelError(model::ModelErrc::kNoSuchService, fmt::format("{:#06x}/{:#06x}", service_id, instance_id));
  }
}

void Runtime::stop_service(std::uint16_t service_id, std::uint16_t instance_id) {
  bool found = false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = *nodes_[i];
    if (!active_[i] || !n.model().find_provided(service_id, instance_id) ||
        n.engine().is_excluded(service_id, instance_id)) {
      continue;
    }
    found = true;
    emit(i, n.stop_service(service_id, instance_id, now()), nullptr);
    after_interaction(i);
  }
  if (!found) {
    throw model::ModelError(model::ModelErrc::kNoSuchService, fmt::format("{:#06x}/{:#06x}", service_id, instance_id));
  }
}

void Runtime::set_node_active(std::size_t host, bool active) {
  active_.at(host) = active;
  if (active && started_ && !initialized_[host]) {
    nodes_[host]->init(now());
    initialized_[host] = true;
  }
  after_interaction(host);
}

void Runtime::exclude_service(std::size_t host, std::uint16_t service_id, std::uint16_t instance_id, bool excluded) {
  sd::SdEngine& engine = nodes_.at(host)->engine();
  if (excluded) {
    engine.exclude_service(service_id, instance_id, now());
  } else {
    engine.include_service(service_id, instance_id, now());
  }
  after_interaction(host);
}

void Runtime::drain_inbox() {
  auto commands = inbox_.drain();
  for (auto& command : commands) {
    if (options_.mode == Mode::kRealtime && running_) scheduler_.advance_to(wall_seconds());
    try {
      command();
    } catch (const std::exception& e) {
      spdlog::warn("command failed: {}", e.what());
    }
    dirty_ = true;
  }
}

std::size_t Runtime::run_until(SimTime t_end) {
  start();
  running_ = true;
  std::size_t count = 0;
  while (true) {
    drain_inbox();
    if (stop_) break;
    if (scheduler_.next_time() > t_end) break;
    scheduler_.step();
    ++count;
    if (snapshots_ && dirty_) publish_snapshot();
  }
  if (!stop_) scheduler_.run_until(t_end);
  running_ = false;
  if (snapshots_) publish_snapshot();
  return count;
}

RealtimeReport Runtime::run_realtime(SimTime t_end, std::optional<WallClock::time_point> epoch) {
  epoch_ = epoch.value_or(WallClock::now() - to_wall(now()));
  running_ = true;
  start();
  RealtimeReport report;
  report.budget_s = options_.overrun_budget_s;
  std::vector<double> overshoots;
  const auto started_wall = WallClock::now();
  while (!stop_) {
    drain_inbox();
    if (snapshots_ && dirty_) publish_snapshot();
    if (stop_) break;
    SimTime next = scheduler_.next_time();
    SimTime target = std::min(next, t_end);
    if (std::isinf(target)) {
      inbox_.wait_until(WallClock::now() + std::chrono::milliseconds(100));
      continue;
    }
    auto deadline = epoch_ + to_wall(target);
    if (WallClock::now() < deadline) {
      auto coarse = deadline - to_wall(options_.spin_window_s);
      if (WallClock::now() < coarse && inbox_.wait_until(coarse)) continue;
      while (WallClock::now() < deadline && inbox_.empty() && !stop_) std::this_thread::yield();
      if (!inbox_.empty() || stop_) continue;
    }
    if (next > t_end) {
      scheduler_.advance_to(t_end);
      break;
    }
    double overshoot = std::chrono::duration<double>(WallClock::now() - deadline).count();
    overshoots.push_back(overshoot);
    metrics_.record(metrics::kPacingOvershoot, next, overshoot);
    while (scheduler_.next_time() <= next) {
      scheduler_.step();
      ++report.events;
    }
  }
  running_ = false;
  if (snapshots_) publish_snapshot();
  report.wall_elapsed_s = std::chrono::duration<double>(WallClock::now() - started_wall).count();
  report.sim_end = now();
  report.overshoot = metrics::summarize(overshoots);
  report.overrun = report.overshoot.max > options_.overrun_budget_s;
  return report;
}

void Runtime::request_stop() {
  stop_ = true;
  inbox_.notify();
}

void Runtime::enable_snapshots(bool on) {
  snapshots_ = on;
  if (on) publish_snapshot();
}

std::shared_ptr<const Snapshot> Runtime::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return snapshot_;
}

void Runtime::publish_snapshot() {
  auto snap = std::make_shared<Snapshot>();
  snap->seq = ++snapshot_seq_;
  snap->now = now();
  snap->running = running_;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = *nodes_[i];
    HostSnapshot h;
    h.name = n.name();
    h.endpoint = n.endpoint();
    h.detached = !active_[i];
    h.model = n.model();
    h.signals = n.store().snapshot();
    for (const auto& p : n.model().provided) {
      if (n.engine().is_excluded(p.service_id, p.instance_id)) h.excluded_services.emplace_back(p.service_id, p.instance_id);
    }
    for (const auto& c : n.model().consumed) {
      if (n.engine().is_excluded(c.service_id, c.instance_id)) h.excluded_services.emplace_back(c.service_id, c.instance_id);
    }
    snap->hosts.push_back(std::move(h));
  }
  {
    std::lock_guard lock(snapshot_mu_);
    snapshot_ = std::move(snap);
  }
  dirty_ = false;
}

void Runtime::record_utilization(SimTime window) {
  const auto& topo = network_->topology();
  for (std::size_t l = 0; l < topo.links.size(); ++l) {
    for (int dir = 0; dir < 2; ++dir) {
      const auto& a = topo.node_names[dir == 0 ? topo.links[l].a : topo.links[l].b];
      const auto& b = topo.node_names[dir == 0 ? topo.links[l].b : topo.links[l].a];
      std::string name = fmt::format("util:{}-{}", a, b);
      metrics_.register_series(name);
      for (SimTime t0 = 0; t0 + window <= now() + 1e-12; t0 += window) {
        metrics_.record(name, t0 + window, network_->utilization(l, dir, t0, t0 + window));
      }
    }
  }
}

void Runtime::flush() {
  for (auto& w : host_pcap_) w->flush();
  for (auto& w : link_pcap_) w->flush();
}

}  // namespace restbus
