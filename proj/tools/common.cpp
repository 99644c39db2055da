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


#include <csignal>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "restbus/init_models.hpp"

namespace restbus::cli {

using nlohmann::json;

Endpoint parse_multicast(const std::string& text) {
  auto e = Endpoint::parse(text);
  if (!e || !e->address.is_multicast()) throw std::invalid_argument(fmt::format("not a multicast <ip>:<port>: '{}'", text));
  return *e;
}

Ipv4Address parse_iface(const std::string& text) {
  auto a = Ipv4Address::parse(text);
  if (!a) throw std::invalid_argument(fmt::format("not an IPv4 address: '{}'", text));
  return *a;
}

StopSignals::StopSignals(std::function<void()> on_signal) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  watcher_ = std::thread([this, set, on_signal = std::move(on_signal)] {
    timespec tick{0, 100'000'000};
    while (!done_) {
      if (sigtimedwait(&set, nullptr, &tick) > 0) on_signal();
    }
  });
}

StopSignals::~StopSignals() {
  done_ = true;
  watcher_.join();
}

int validate(const std::string& config_path) {
  try {
    auto config = config::load_config(config_path);
    auto init = init_models(config);
    std::size_t provided = 0;
    std::size_t consumed = 0;
    for (const auto& h : init.hosts) {
      provided += h.provided.size();
      consumed += h.consumed.size();
    }
    std::printf("%s: ok (%zu hosts, %zu switches, %zu links, %zu provided and %zu consumed service instances)\n",
                config_path.c_str(), config.hosts.size(), config.switches.size(), config.links.size(), provided,
                consumed);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
}

json summary_json(const metrics::Summary& s) {
  return {{"count", s.count}, {"min", s.min}, {"mean", s.mean}, {"p50", s.p50}, {"p99", s.p99}, {"max", s.max}};
}

json run_report(Runtime& runtime, const RealtimeReport* realtime, const gateway::Gateway* gw, std::size_t events) {
  json hosts = json::array();
  for (std::size_t i = 0; i < runtime.host_count(); ++i) {
    const Node& n = runtime.node(i);
    const auto& c = n.counters();
    json provided = json::array();
    for (const auto& p : n.model().provided) {
      std::size_t subscribers = 0;
      for (const auto& s : n.model().subscribers) {
        if (s.service_id == p.service_id && s.instance_id == p.instance_id && s.expires_at > runtime.now()) ++subscribers;
      }
      provided.push_back({{"service", fmt::format("{:#06x}", p.service_id)},
                          {"instance", fmt::format("{:#06x}", p.instance_id)},
                          {"offering", p.offering},
                          {"subscriptions", subscribers}});
    }
    json consumed = json::array();
    for (const auto& s : n.model().consumed) {
      consumed.push_back({{"service", fmt::format("{:#06x}", s.service_id)},
                          {"instance", fmt::format("{:#06x}", s.instance_id)},
                          {"state", model::to_string(s.state)}});
    }
    hosts.push_back({{"name", n.name()},
                     {"endpoint", n.endpoint().to_string()},
                     {"active", runtime.node_active(i)},
                     {"sd_sent", c.sd_sent},
                     {"sd_received", c.sd_received},
                     {"notifications_sent", c.notifications_sent},
                     {"notifications_received", c.notifications_received},
                     {"notifications_dropped", c.notifications_dropped},
                     {"decode_errors", c.decode_errors},
                     {"provided", provided},
                     {"consumed", consumed}});
  }
  const auto& nc = runtime.network().counters();
  json metrics = json::object();
  for (const auto& name : runtime.metrics().names()) metrics[name] = summary_json(runtime.metrics().summary(name));
  json report = {{"mode", runtime.options().mode == Mode::kPure ? "pure" : "realtime"},
                 {"seed", runtime.options().seed},
                 {"sim_time", runtime.now()},
                 {"events", events},
                 {"misrouted", runtime.misrouted()},
                 {"network",
                  {{"injected", nc.injected},
                   {"replicated", nc.replicated},
                   {"delivered", nc.delivered},
                   {"dropped", nc.dropped},
                   {"dropped_queue_full", nc.dropped_queue_full},
                   {"dropped_unknown_destination", nc.dropped_unknown_destination},
                   {"in_flight", nc.in_flight}}},
                 {"hosts", hosts},
                 {"metrics", metrics}};
  if (realtime) {
    report["realtime"] = {{"wall_elapsed_s", realtime->wall_elapsed_s},
                          {"overshoot", summary_json(realtime->overshoot)},
                          {"budget_s", realtime->budget_s},
                          {"overrun", realtime->overrun}};
  }
  if (gw) {
    auto s = gw->stats();
    report["gateway"] = {{"rx_datagrams", s.rx_datagrams},
                         {"rx_undecodable", s.rx_undecodable},
                         {"rx_own_echo", s.rx_own_echo},
                         {"tx_datagrams", s.tx_datagrams},
                         {"tx_errors", s.tx_errors}};
  }
  return report;
}

void write_histogram_csv(const std::filesystem::path& path, const metrics::Histogram& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << "lower_s,upper_s,count\n";
  for (const auto& b : h.buckets) {
    out << fmt::format("{:.9g},{:.9g},{}\n", b.index * h.bucket_width, (b.index + 1) * h.bucket_width, b.count);
  }
}

}  // namespace restbus::cli
