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


#include <algorithm>
#include <cstdio>
#include <limits>
#include <memory>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "restbus/probe.hpp"

namespace restbus::cli {
namespace {

void print_summary(const char* name, const metrics::Summary& s) {
  std::printf("%-16s n=%-6llu p50=%8.3f ms  p99=%8.3f ms  max=%8.3f ms\n", name,
              static_cast<unsigned long long>(s.count), s.p50 * 1e3, s.p99 * 1e3, s.max * 1e3);
}

// Simulates only `keep`; every other host is left to the real network.
std::unique_ptr<gateway::Gateway> attach_all_but(Runtime& rt, std::string_view keep, const BenchArgs& args) {
  gateway::GatewayBinding binding;
  for (std::size_t i = 0; i < rt.host_count(); ++i) {
    if (rt.node(i).name() != keep) binding.detached.push_back({rt.node(i).name(), std::nullopt, std::nullopt});
  }
  binding.real_interface = parse_iface(args.iface);
  if (args.sd_mcast) binding.sd_multicast = parse_multicast(*args.sd_mcast);
  return std::make_unique<gateway::Gateway>(rt, std::move(binding));
}

}  // namespace

int bench(const BenchArgs& args) {
  auto config = config::load_config(args.config);
  RuntimeOptions options;
  options.mode = Mode::kRealtime;
  options.seed = args.seed;

  Runtime provider(config, options);
  std::size_t p = provider.host_count();
  for (std::size_t i = 0; i < provider.host_count(); ++i) {
    const auto& n = provider.node(i);
    if (args.provider ? n.name() == *args.provider : !n.model().provided.empty()) {
      p = i;
      break;
    }
  }
  if (p == provider.host_count() || provider.node(p).model().provided.empty()) {
    throw std::invalid_argument("no providing host found");
  }
  const auto& service = provider.node(p).model().provided.front();
  const std::uint16_t service_id = service.service_id;
  const std::uint16_t instance_id = service.instance_id;

  std::optional<std::string> consumer_name = args.consumer;
  if (!consumer_name && !args.no_consumer) {
    for (std::size_t i = 0; i < provider.host_count(); ++i) {
      const auto& consumed = provider.node(i).model().consumed;
      if (std::any_of(consumed.begin(), consumed.end(), [&](const auto& c) { return c.service_id == service_id; })) {
        consumer_name = provider.node(i).name();
        break;
      }
    }
  }

  auto provider_gw = attach_all_but(provider, provider.node(p).name(), args);
  std::unique_ptr<Runtime> consumer;
  std::unique_ptr<gateway::Gateway> consumer_gw;
  if (consumer_name && !args.no_consumer) {
    consumer = std::make_unique<Runtime>(config, options);
    if (!consumer->host_index(*consumer_name)) throw std::invalid_argument("unknown consumer " + *consumer_name);
    consumer_gw = attach_all_but(*consumer, *consumer_name, args);
  }
  SdProbe probe(provider_gw->sd_multicast(), parse_iface(args.iface));

  const double forever = std::numeric_limits<double>::infinity();
  const auto epoch = WallClock::now();
  std::thread provider_loop([&] { provider.run_realtime(forever, epoch); });
  std::thread consumer_loop;
  if (consumer) consumer_loop = std::thread([&] { consumer->run_realtime(forever, epoch); });

  const auto settle = std::chrono::milliseconds(config.sd.initial_delay_max_ms + 200);
  std::this_thread::sleep_for(settle);
  std::vector<double> round_trips;
  int lost = 0;
  const auto gap = std::chrono::duration<double, std::milli>(args.interval_ms);
  auto next = WallClock::now();
  for (int k = 0; k < args.count; ++k) {
    auto answer = probe.find(service_id, instance_id, std::chrono::milliseconds(200));
    if (answer) {
      round_trips.push_back(answer->round_trip_s);
    } else {
      ++lost;
    }
    next += std::chrono::duration_cast<WallClock::duration>(gap);
    std::this_thread::sleep_until(next);
  }

  provider.request_stop();
  provider_loop.join();
  if (consumer) {
    consumer->request_stop();
    consumer_loop.join();
  }

  auto& reg = provider.metrics();
  const double width = args.bucket_us * 1e-6;
  std::printf("service %04x/%04x on %s, %d FIND/OFFER exchanges, %d unanswered\n", service_id, instance_id,
              provider.node(p).name().c_str(), args.count, lost);
  print_summary("sd_answer_time", reg.summary(metrics::kSdAnswerTime));
  print_summary("round_trip", metrics::summarize(round_trips));
  print_summary("send_delay", reg.summary(metrics::kSendDelay));
  print_summary("inbound_late", reg.summary(metrics::kInboundLateness));
  if (consumer) {
    const Node& c = *consumer->node(*consumer_name);
    std::printf("consumer %s: %s, %llu notifications\n", consumer_name->c_str(),
                c.model().consumed.empty() ? "-" : model::to_string(c.model().consumed.front().state),
                static_cast<unsigned long long>(c.counters().notifications_received));
  }
  if (args.csv_dir) {
    std::filesystem::create_directories(*args.csv_dir);
    write_histogram_csv(*args.csv_dir / "sd_answer_time.csv", reg.histogram(metrics::kSdAnswerTime, width));
    write_histogram_csv(*args.csv_dir / "send_delay.csv", reg.histogram(metrics::kSendDelay, width));
    write_histogram_csv(*args.csv_dir / "round_trip.csv", metrics::make_histogram(round_trips, width));
    reg.export_csv(*args.csv_dir / "samples.csv");
    std::printf("histograms written to %s\n", args.csv_dir->string().c_str());
  }
  return lost == args.count ? 1 : 0;
}

}  // namespace restbus::cli
