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

// Timing sample series and their histogram/CSV views.
//
// Built-in series (values in seconds):
//   sd_answer_time    receipt of FIND/SUBSCRIBE to emission of the answer
//   send_delay        gap between consecutive real-socket sends
//   pacing_overshoot  lateness of real-time event dispatch
//   inbound_lateness  how far a real datagram arrived behind the sim clock
// Per-link utilization series are registered as "util:<link>".

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "restbus/endpoint.hpp"

namespace restbus::metrics {

inline constexpr const char* kSdAnswerTime = "sd_answer_time";
inline constexpr const char* kSendDelay = "send_delay";
inline constexpr const char* kPacingOvershoot = "pacing_overshoot";
inline constexpr const char* kInboundLateness = "inbound_lateness";

struct Sample {
  double t = 0;
  double value = 0;

  bool operator==(const Sample&) const = default;
};

struct Bucket {
  std::int64_t index = 0;  // covers [index * width, (index + 1) * width)
  std::uint64_t count = 0;

  bool operator==(const Bucket&) const = default;
};

struct Histogram {
  double bucket_width = 0;
  std::vector<Bucket> buckets;  // ascending, empty buckets omitted
  std::uint64_t total = 0;
};

struct Summary {
  std::uint64_t count = 0;
  double min = 0;
  double mean = 0;
  double p50 = 0;
  double p99 = 0;
  double max = 0;
};

/// Nearest-rank percentile (p in [0, 1]) of unsorted values; 0 when empty.
double percentile(std::vector<double> values, double p);

enum class MetricsErrc { kUnknownSeries, kNonMonotonicTime, kBadBucket, kIo, kParse };

const char* to_string(MetricsErrc code);

class MetricsError : public std::runtime_error {
 public:
  MetricsError(MetricsErrc code, const std::string& detail);
  MetricsErrc code() const noexcept { return code_; }

 private:
  MetricsErrc code_;
};

/// Thread-safe: the event loop records while API handlers read.
class Registry {
 public:
  Registry();
  Registry(Registry&& other) noexcept;
  Registry& operator=(Registry&&) = delete;

  void register_series(const std::string& name);
  bool has(const std::string& name) const;
  std::vector<std::string> names() const;

  /// Timestamps must not decrease within a series.
  void record(const std::string& name, double t, double value);

  std::vector<Sample> samples(const std::string& name) const;
  std::size_t count(const std::string& name) const;
  Histogram histogram(const std::string& name, double bucket_width) const;
  Summary summary(const std::string& name) const;

  /// `series,timestamp,value` rows, series in name order.
  std::string to_csv() const;
  void export_csv(const std::filesystem::path& path) const;
  static Registry from_csv(const std::string& text);
  static Registry import_csv(const std::filesystem::path& path);

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<Sample>> series_;
};

Histogram make_histogram(const std::vector<double>& values, double bucket_width);
Summary summarize(const std::vector<double>& values);

}  // namespace restbus::metrics
