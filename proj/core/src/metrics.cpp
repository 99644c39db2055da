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

#include "restbus/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

namespace restbus::metrics {

const char* to_string(MetricsErrc code) {
  switch (code) {
    case MetricsErrc::kUnknownSeries: return "UNKNOWN_SERIES";
    case MetricsErrc::kNonMonotonicTime: return "NON_MONOTONIC_TIME";
    case MetricsErrc::kBadBucket: return "BAD_BUCKET";
    case MetricsErrc::kIo: return "IO";
    case MetricsErrc::kParse: return "PARSE";
  }
  return "?";
}

MetricsError::MetricsError(MetricsErrc code, const std::string& detail)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), detail)), code_(code) {}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

Histogram make_histogram(const std::vector<double>& values, double bucket_width) {
  if (!(bucket_width > 0) || !std::isfinite(bucket_width)) {
    throw MetricsError(MetricsErrc::kBadBucket, fmt::format("bucket width {}", bucket_width));
  }
  std::map<std::int64_t, std::uint64_t> counts;
  for (double v : values) {
    // The epsilon keeps values sitting on a bucket edge (1 ms / 1 ms) in the
    // upper bucket despite binary rounding.
    ++counts[static_cast<std::int64_t>(std::floor(v / bucket_width + 1e-9))];
  }
  Histogram h;
  h.bucket_width = bucket_width;
  h.total = values.size();
  for (auto [index, count] : counts) h.buckets.push_back(Bucket{index, count});
  return h;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.p50 = percentile(values, 0.50);
  s.p99 = percentile(values, 0.99);
  return s;
}

Registry::Registry() {
  for (const char* name : {kSdAnswerTime, kSendDelay, kPacingOvershoot, kInboundLateness}) series_[name];
}

Registry::Registry(Registry&& other) noexcept {
  std::lock_guard lock(other.mu_);
  series_ = std::move(other.series_);
}

void Registry::register_series(const std::string& name) {
  std::lock_guard lock(mu_);
  series_[name];
}

bool Registry::has(const std::string& name) const {
  std::lock_guard lock(mu_);
  return series_.contains(name);
}

std::vector<std::string> Registry::names() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, _] : series_) out.push_back(name);
  return out;
}

void Registry::record(const std::string& name, double t, double value) {
  std::lock_guard lock(mu_);
  auto it = series_.find(name);
  if (it == series_.end()) throw MetricsError(MetricsErrc::kUnknownSeries, name);
  if (!it->second.empty() && t < it->second.back().t) {
    throw MetricsError(MetricsErrc::kNonMonotonicTime, fmt::format("{}: {} after {}", name, t, it->second.back().t));
  }
  it->second.push_back(Sample{t, value});
}

std::vector<Sample> Registry::samples(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = series_.find(name);
  if (it == series_.end()) throw MetricsError(MetricsErrc::kUnknownSeries, name);
  return it->second;
}

std::size_t Registry::count(const std::string& name) const { return samples(name).size(); }

Histogram Registry::histogram(const std::string& name, double bucket_width) const {
  std::vector<double> values;
  for (const auto& s : samples(name)) values.push_back(s.value);
  return make_histogram(values, bucket_width);
}

Summary Registry::summary(const std::string& name) const {
  std::vector<double> values;
  for (const auto& s : samples(name)) values.push_back(s.value);
  return summarize(values);
}

std::string Registry::to_csv() const {
  std::lock_guard lock(mu_);
  std::string out = "series,timestamp,value\n";
  for (const auto& [name, samples] : series_) {
    for (const auto& s : samples) out += fmt::format("{},{:.17g},{:.17g}\n", name, s.t, s.value);
  }
  return out;
}

void Registry::export_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MetricsError(MetricsErrc::kIo, "cannot create " + path.string());
  out << to_csv();
  if (!out) throw MetricsError(MetricsErrc::kIo, "cannot write " + path.string());
}

Registry Registry::from_csv(const std::string& text) {
  Registry r;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto number = [&](std::string_view s) {
    double v = 0;
    auto [next, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || next != s.data() + s.size()) {
      throw MetricsError(MetricsErrc::kParse, fmt::format("line {}: bad number '{}'", line_no, s));
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "series,timestamp,value") throw MetricsError(MetricsErrc::kParse, "missing header");
      continue;
    }
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw MetricsError(MetricsErrc::kParse, fmt::format("line {}: expected three columns", line_no));
    }
    std::string name = line.substr(0, c1);
    double t = number(std::string_view(line).substr(c1 + 1, c2 - c1 - 1));
    double v = number(std::string_view(line).substr(c2 + 1));
    r.register_series(name);
    r.record(name, t, v);
  }
  if (line_no == 0) throw MetricsError(MetricsErrc::kParse, "missing header");
  return r;
}

Registry Registry::import_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MetricsError(MetricsErrc::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str());
}

}  // namespace restbus::metrics
