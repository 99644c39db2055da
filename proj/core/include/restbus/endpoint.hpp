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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace restbus {

/// Simulation clock in seconds.
using SimTime = double;

/// IPv4 address held in host byte order.
struct Ipv4Address {
  std::uint32_t value = 0;

  static std::optional<Ipv4Address> parse(std::string_view text);
  std::string to_string() const;
  bool is_multicast() const { return (value >> 28) == 0xE; }

  auto operator<=>(const Ipv4Address&) const = default;
};

/// UDP endpoint (address + port).
struct Endpoint {
  Ipv4Address address;
  std::uint16_t port = 0;

  /// Parses "a.b.c.d:port".
  static std::optional<Endpoint> parse(std::string_view text);
  std::string to_string() const;

  auto operator<=>(const Endpoint&) const = default;
};

}  // namespace restbus

template <>
struct std::hash<restbus::Endpoint> {
  std::size_t operator()(const restbus::Endpoint& e) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{e.address.value} << 16) | e.port);
  }
};
