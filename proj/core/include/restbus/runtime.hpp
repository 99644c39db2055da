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

// One simulation run: nodes built from a configuration, the switched
// network between them, capture files, metrics and the event loop.
//
// The loop runs either as fast as possible (run_until) or paced against the
// wall clock (run_realtime), where simulation time t maps to epoch + t.
// Other threads talk to the loop only through inbox() and request_stop();
// they read state through snapshot().

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "restbus/config.hpp"
#include "restbus/metrics.hpp"
#include "restbus/node.hpp"
#include "restbus/sim/inbox.hpp"
#include "restbus/sim/network.hpp"
#include "restbus/sim/pcap.hpp"
#include "restbus/sim/scheduler.hpp"

namespace restbus {

using WallClock = std::chrono::steady_clock;

enum class Mode { kPure, kRealtime };

struct RuntimeOptions {
  Mode mode = Mode::kPure;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> pcap_dir;  // <dir>/<host>.pcap
  bool trace_links = false;                        // also <dir>/link-<a>-<b>.pcap
  double overrun_budget_s = 1e-3;
  double spin_window_s = 200e-6;
};

/// SD message seen at a host, decoded.
struct SdTrace {
  SimTime t = 0;
  std::string host;
  bool outgoing = false;
  Endpoint src;
  Endpoint dst;
  wire::SomeIpHeader header;
  wire::SdMessage sd;
};

/// Any frame sent or received by a host's simulated stack.
struct FrameTrace {
  SimTime t = 0;
  std::string host;
  bool outgoing = false;
  sim::Frame frame;
};

struct ObservationEvent {
  std::string host;
  sd::SdObservation observation;
};

struct SignalEvent {
  std::string host;
  SimTime t = 0;
  signals::SignalUpdate update;
};

using RuntimeEvent = std::variant<SdTrace, FrameTrace, ObservationEvent, SignalEvent>;

struct HostSnapshot {
  std::string name;
  Endpoint endpoint;
  bool detached = false;
  model::HostModel model;
  std::vector<signals::SignalField> signals;
  std::vector<std::pair<std::uint16_t, std::uint16_t>> excluded_services;
};

struct Snapshot {
  std::uint64_t seq = 0;
  SimTime now = 0;
  bool running = false;
  std::vector<HostSnapshot> hosts;
};

struct RealtimeReport {
  double wall_elapsed_s = 0;
  SimTime sim_end = 0;
  std::size_t events = 0;
  metrics::Summary overshoot;
  double budget_s = 0;
  bool overrun = false;
};

/// The real-network side of a run; implemented by the gateway.
class RealPort {
 public:
  virtual ~RealPort() = default;
  virtual bool node_detached(std::size_t host) const = 0;
  /// Host position where traffic for real endpoints leaves the simulation.
  virtual std::optional<std::size_t> primary_attachment() const = 0;
  virtual void send_real(const sim::Frame& frame) = 0;
};

class Runtime {
 public:
  using Listener = std::function<void(const RuntimeEvent&)>;

  explicit Runtime(config::NetworkConfig config, RuntimeOptions options = {});
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  const config::NetworkConfig& config() const { return config_; }
  const RuntimeOptions& options() const { return options_; }
  sim::Scheduler& scheduler() { return scheduler_; }
  sim::Network& network() { return *network_; }
  metrics::Registry& metrics() { return metrics_; }
  sim::CommandInbox& inbox() { return inbox_; }
  SimTime now() const { return scheduler_.now(); }

  std::size_t host_count() const { return nodes_.size(); }
  std::optional<std::size_t> host_index(std::string_view name) const;
  Node& node(std::size_t host) { return *nodes_.at(host); }
  Node* node(std::string_view name);

  /// Initializes every active node at the current time. Called implicitly by
  /// the run functions.
  void start();

  /// Runs events up to t_end as fast as possible, executing inbox commands
  /// between events.
  std::size_t run_until(SimTime t_end);

  /// Wall-clock paced run up to t_end (or request_stop). Without `epoch`,
  /// the current simulation time is mapped to the current wall time.
  RealtimeReport run_realtime(SimTime t_end, std::optional<WallClock::time_point> epoch = {});

  /// Thread-safe.
  void request_stop();
  bool running() const { return running_.load(); }
  bool stop_requested() const { return stop_.load(); }

  WallClock::time_point epoch() const { return epoch_; }
  /// Wall time since epoch, in seconds.
  double wall_seconds() const;

  // The functions below must run on the loop thread (directly or via inbox).
  void set_signal(std::string_view path, const signals::SignalInput& value);
  /// Applies to every active host providing the service; throws
  /// ModelError(kNoSuchService) if there is none.
  void start_service(std::uint16_t service_id, std::uint16_t instance_id);
  void stop_service(std::uint16_t service_id, std::uint16_t instance_id);

  /// Puts a frame on the wire from a host position.
  void inject(std::size_t host, sim::Frame frame);

  void set_real_port(RealPort* port) { port_ = port; }
  /// A deactivated node keeps its state but stops timers and receives nothing.
  void set_node_active(std::size_t host, bool active);
  bool node_active(std::size_t host) const { return active_.at(host); }
  void exclude_service(std::size_t host, std::uint16_t service_id, std::uint16_t instance_id, bool excluded);

  void add_listener(Listener listener) { listeners_.push_back(std::move(listener)); }

  void enable_snapshots(bool on);
  /// Latest loop-produced snapshot (thread-safe); null before the first one.
  std::shared_ptr<const Snapshot> snapshot() const;
  /// Builds and publishes a snapshot now (loop thread).
  void publish_snapshot();

  /// Records util:<from>-<to> samples for every completed window since t=0.
  void record_utilization(SimTime window);

  std::uint64_t misrouted() const { return misrouted_; }

  /// Flushes capture files.
  void flush();

 private:
  void on_deliver(std::size_t host, const sim::Frame& frame);
  void deliver_to_node(std::size_t host, const sim::Frame& frame);
  void emit(std::size_t host, std::vector<Outgoing>&& out, const sim::Frame* cause);
  void after_interaction(std::size_t host);
  void reschedule(std::size_t host);
  void wake(std::size_t host);
  void drain_inbox();
  void trace_frame(std::size_t host, const sim::Frame& frame, bool outgoing);

  config::NetworkConfig config_;
  RuntimeOptions options_;
  sim::Scheduler scheduler_;
  std::unique_ptr<sim::Network> network_;
  std::vector<std::unique_ptr<Node>> nodes_;
  std::vector<bool> active_;
  std::vector<bool> initialized_;
  std::vector<sim::EventHandle> wake_handle_;
  std::vector<SimTime> wake_at_;
  std::vector<std::unique_ptr<sim::PcapWriter>> host_pcap_;
  std::vector<std::unique_ptr<sim::PcapWriter>> link_pcap_;
  metrics::Registry metrics_;
  sim::CommandInbox inbox_;
  RealPort* port_ = nullptr;
  std::vector<Listener> listeners_;
  bool started_ = false;
  std::atomic<bool> running_{false};
  std::atomic<bool> stop_{false};
  WallClock::time_point epoch_ = WallClock::now();
  bool snapshots_ = false;
  bool dirty_ = true;
  std::uint64_t snapshot_seq_ = 0;
  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::uint64_t misrouted_ = 0;
};

}  // namespace restbus
