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


#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "restbus/control_api.hpp"

namespace restbus::cli {

int run(const RunArgs& args) {
  auto config = config::load_config(args.config);
  const bool restbus = args.mode == "restbus";
  const bool paced = restbus || args.realtime;
  if (restbus && args.detach.empty()) throw std::invalid_argument("restbus mode needs at least one --detach");
  if (!restbus && !args.detach.empty()) throw std::invalid_argument("--detach only applies to --mode restbus");
  if (!paced && args.duration <= 0) throw std::invalid_argument("a pure run needs a positive --duration");

  std::atomic<Runtime*> stop_target{nullptr};
  StopSignals signals([&stop_target] {
    if (Runtime* rt = stop_target.load()) rt->request_stop();
  });

  RuntimeOptions options;
  options.mode = paced ? Mode::kRealtime : Mode::kPure;
  options.seed = args.seed;
  options.pcap_dir = args.pcap_dir;
  options.trace_links = args.trace_links;
  Runtime runtime(std::move(config), options);

  std::unique_ptr<gateway::Gateway> gw;
  if (restbus) {
    gateway::GatewayBinding binding;
    for (const auto& d : args.detach) binding.detached.push_back(gateway::Detachment::parse(d));
    binding.real_interface = parse_iface(args.iface);
    if (args.sd_mcast) binding.sd_multicast = parse_multicast(*args.sd_mcast);
    gw = std::make_unique<gateway::Gateway>(runtime, std::move(binding));
  }
  std::unique_ptr<api::ControlApi> control;
  if (args.api) {
    control = std::make_unique<api::ControlApi>(runtime, api::ApiOptions{.port = args.api_port});
    control->start();
  }

  stop_target = &runtime;
  const SimTime t_end = args.duration > 0 ? args.duration : std::numeric_limits<double>::infinity();
  std::size_t events = 0;
  std::optional<RealtimeReport> paced_report;
  if (paced) {
    paced_report = runtime.run_realtime(t_end);
    events = paced_report->events;
  } else {
    events = runtime.run_until(t_end);
  }
  if (control) control->stop();
  if (gw) gw->detach();
  runtime.flush();

  if (args.util_window > 0) runtime.record_utilization(args.util_window);
  if (args.metrics_csv) runtime.metrics().export_csv(*args.metrics_csv);
  auto report = run_report(runtime, paced_report ? &*paced_report : nullptr, gw.get(), events);
  if (args.report) {
    std::ofstream out(*args.report);
    if (!out) throw std::runtime_error("cannot write " + args.report->string());
    out << report.dump(2) << '\n';
  }

  std::printf("simulated %.6f s, %zu events\n", runtime.now(), events);
  for (std::size_t i = 0; i < runtime.host_count(); ++i) {
    const Node& n = runtime.node(i);
    if (!runtime.node_active(i)) {
      std::printf("  %-12s detached\n", n.name().c_str());
      continue;
    }
    std::printf("  %-12s sd tx/rx %llu/%llu, notifications tx/rx %llu/%llu", n.name().c_str(),
                static_cast<unsigned long long>(n.counters().sd_sent),
                static_cast<unsigned long long>(n.counters().sd_received),
                static_cast<unsigned long long>(n.counters().notifications_sent),
                static_cast<unsigned long long>(n.counters().notifications_received));
    for (const auto& c : n.model().consumed) {
      std::printf(", %04x/%04x %s", c.service_id, c.instance_id, model::to_string(c.state));
    }
    std::printf("\n");
  }
  if (paced_report) {
    std::printf("pacing overshoot p99 %.1f us, max %.1f us%s\n", paced_report->overshoot.p99 * 1e6,
                paced_report->overshoot.max * 1e6, paced_report->overrun ? " (OVERRUN)" : "");
  }
  return 0;
}

}  // namespace restbus::cli
