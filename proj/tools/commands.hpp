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


#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "restbus/gateway.hpp"
#include "restbus/runtime.hpp"

namespace restbus::cli {

struct RunArgs {
  std::string config;
  std::string mode = "pure";
  double duration = 10;
  std::uint64_t seed = 1;
  bool realtime = false;
  std::optional<std::filesystem::path> pcap_dir;
  bool trace_links = false;
  std::optional<std::filesystem::path> metrics_csv;
  std::optional<std::filesystem::path> report;
  double util_window = 0;
  bool api = false;
  int api_port = 8080;
  std::vector<std::string> detach;
  std::string iface = "127.0.0.1";
  std::optional<std::string> sd_mcast;
};

struct BenchArgs {
  std::string config;
  std::optional<std::string> provider;
  std::optional<std::string> consumer;
  bool no_consumer = false;
  int count = 1000;
  double interval_ms = 5;
  double bucket_us = 100;
  std::optional<std::filesystem::path> csv_dir;
  std::string iface = "127.0.0.1";
  std::optional<std::string> sd_mcast;
  std::uint64_t seed = 1;
};

int validate(const std::string& config_path);
int run(const RunArgs& args);
int bench(const BenchArgs& args);

// Shared helpers.
Endpoint parse_multicast(const std::string& text);
Ipv4Address parse_iface(const std::string& text);

/// Blocks SIGINT/SIGTERM for the process and forwards them to a callback on a
/// watcher thread for as long as the guard lives.
class StopSignals {
 public:
  explicit StopSignals(std::function<void()> on_signal);
  ~StopSignals();

  StopSignals(const StopSignals&) = delete;
  StopSignals& operator=(const StopSignals&) = delete;

 private:
  std::atomic<bool> done_{false};
  std::thread watcher_;
};

nlohmann::json summary_json(const metrics::Summary& s);
nlohmann::json run_report(Runtime& runtime, const RealtimeReport* realtime, const gateway::Gateway* gateway,
                          std::size_t events);
/// `lower_s,upper_s,count` rows.
void write_histogram_csv(const std::filesystem::path& path, const metrics::Histogram& h);

}  // namespace restbus::cli
