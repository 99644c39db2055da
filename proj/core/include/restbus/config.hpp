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

// XML network description: hosts, the services they provide and consume,
// eventgroups, events, payload layouts and the switched topology. The schema
// is documented in docs/config-schema.md.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "restbus/endpoint.hpp"
#include "restbus/signal_store.hpp"

namespace restbus::config {

struct LayoutDef {
  std::string id;
  signals::PayloadLayout layout;

  bool operator==(const LayoutDef&) const = default;
};

struct EventDef {
  std::uint16_t id = 0;
  std::string layout;
  std::uint32_t cycle_ms = 0;  // 0 = publish on change only

  bool operator==(const EventDef&) const = default;
};

struct EventgroupDef {
  std::uint16_t id = 0;
  std::vector<std::uint16_t> event_ids;

  bool operator==(const EventgroupDef&) const = default;
};

struct ServiceDef {
  std::uint16_t id = 0;
  std::uint16_t instance = 0;
  std::uint8_t major_version = 1;
  std::uint32_t minor_version = 0;
  std::vector<EventDef> events;
  std::vector<EventgroupDef> eventgroups;

  const EventDef* find_event(std::uint16_t event_id) const;
  bool operator==(const ServiceDef&) const = default;
};

struct ProvideDecl {
  std::uint16_t service = 0;
  std::uint16_t instance = 0;
  bool autostart = true;

  bool operator==(const ProvideDecl&) const = default;
};

struct ConsumeDecl {
  std::uint16_t service = 0;
  std::uint16_t instance = 0;
  std::uint8_t major_version = 1;
  std::vector<std::uint16_t> eventgroups;

  bool operator==(const ConsumeDecl&) const = default;
};

struct HostDef {
  std::string name;
  Endpoint endpoint;
  std::vector<ProvideDecl> provides;
  std::vector<ConsumeDecl> consumes;

  bool operator==(const HostDef&) const = default;
};

struct LinkDef {
  std::string a;
  std::string b;
  std::uint64_t bandwidth_bps = 100'000'000;
  double propagation_delay_s = 0.0;
  std::optional<std::size_t> queue_frames;  // unbounded when empty

  bool operator==(const LinkDef&) const = default;
};

struct SdParams {
  Endpoint multicast{Ipv4Address{0xE0F4E0F5}, 30490};  // 224.244.224.245:30490
  std::uint32_t offer_cycle_ms = 1000;
  std::uint32_t find_cycle_ms = 1000;
  std::uint32_t ttl_s = 3;
  double renew_fraction = 0.8;
  std::uint32_t initial_delay_min_ms = 10;
  std::uint32_t initial_delay_max_ms = 100;
  bool renewal = true;

  bool operator==(const SdParams&) const = default;
};

struct NetworkConfig {
  std::string name;
  SdParams sd;
  std::vector<LayoutDef> layouts;
  std::vector<ServiceDef> services;
  std::vector<HostDef> hosts;
  std::vector<std::string> switches;
  std::vector<LinkDef> links;

  const HostDef* find_host(std::string_view name) const;
  const ServiceDef* find_service(std::uint16_t id, std::uint16_t instance) const;
  const LayoutDef* find_layout(std::string_view id) const;

  bool operator==(const NetworkConfig&) const = default;
};

enum class ConfigErrc { kXmlSyntax, kDuplicateId, kDanglingRef, kBadValue, kIo };

const char* to_string(ConfigErrc code);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrc code, std::string file, int line, std::string detail);

  ConfigErrc code() const noexcept { return code_; }
  const std::string& file() const noexcept { return file_; }
  int line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ConfigErrc code_;
  std::string file_;
  int line_;
  std::string detail_;
};

NetworkConfig load_config(const std::filesystem::path& path);

/// Parses XML text; `source_name` only labels diagnostics.
NetworkConfig parse_config(std::string_view xml, std::string_view source_name = "<memory>");

/// Canonical XML for a configuration; parse_config(to_xml(c)) == c.
std::string to_xml(const NetworkConfig& config);

}  // namespace restbus::config
