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


#include <cstdio>
#include <exception>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace restbus::cli;
  CLI::App app{"restbus: SOME/IP network simulator and restbus gateway"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  std::string validate_config;
  auto* validate_cmd = app.add_subcommand("validate", "Check a network description and exit");
  validate_cmd->add_option("--config", validate_config, "Network XML")->required()->check(CLI::ExistingFile);

  RunArgs r;
  auto* run_cmd = app.add_subcommand("run", "Run a simulation, optionally bridged to real sockets");
  run_cmd->add_option("--config", r.config, "Network XML")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--mode", r.mode, "pure or restbus")->check(CLI::IsMember({"pure", "restbus"}))->capture_default_str();
  run_cmd->add_option("--duration", r.duration, "Simulated seconds; 0 runs until interrupted (paced runs only)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  run_cmd->add_option("--seed", r.seed, "Seed for initial SD delays")->capture_default_str();
  run_cmd->add_flag("--realtime", r.realtime, "Pace a pure simulation against the wall clock");
  run_cmd->add_option("--pcap-dir", r.pcap_dir, "Write <host>.pcap per host");
  run_cmd->add_flag("--trace-links", r.trace_links, "Also capture every link (needs --pcap-dir)");
  run_cmd->add_option("--metrics-csv", r.metrics_csv, "Export metric samples as CSV");
  run_cmd->add_option("--report", r.report, "Write a JSON run report");
  run_cmd->add_option("--util-window", r.util_window, "Record link utilization per window (seconds)");
  run_cmd->add_flag("--api", r.api, "Serve the control API");
  run_cmd->add_option("--api-port", r.api_port, "Control API port (0 picks one)")->capture_default_str();
  run_cmd->add_option("--detach", r.detach, "<node> or <node>,<service>/<instance> (restbus mode)");
  run_cmd->add_option("--iface", r.iface, "Local IPv4 for real sockets")->capture_default_str();
  run_cmd->add_option("--sd-mcast", r.sd_mcast, "SD multicast group <ip>:<port>");

  BenchArgs b;
  auto* bench_cmd = app.add_subcommand("bench", "Loopback FIND/OFFER answer-time and send-delay measurement");
  bench_cmd->add_option("--config", b.config, "Network XML")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--provider", b.provider, "Simulated provider host (default: first host providing a service)");
  bench_cmd->add_option("--consumer", b.consumer, "Host simulated in a second runtime as subscriber");
  bench_cmd->add_flag("--no-consumer", b.no_consumer, "Do not run a subscribing runtime");
  bench_cmd->add_option("-n,--count", b.count, "FIND/OFFER exchanges")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--interval-ms", b.interval_ms, "Gap between FINDs")->capture_default_str();
  bench_cmd->add_option("--bucket-us", b.bucket_us, "Histogram bucket width")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--csv-dir", b.csv_dir, "Write histograms and raw samples here");
  bench_cmd->add_option("--iface", b.iface, "Local IPv4 for real sockets")->capture_default_str();
  bench_cmd->add_option("--sd-mcast", b.sd_mcast, "SD multicast group <ip>:<port>");
  bench_cmd->add_option("--seed", b.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

  try {
    if (*validate_cmd) return validate(validate_config);
    if (*run_cmd) return run(r);
    if (*bench_cmd) return bench(b);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "restbus: %s\n", e.what());
    return 1;
  }
  return 0;
}
