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


// Hand-rolled random generators and an independent byte-level reference
// encoder for the SOME/IP codec tests.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "restbus/wire.hpp"

namespace restbus::testing {

using Rng = std::mt19937_64;

inline std::uint64_t uniform(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

inline std::vector<std::uint8_t> random_bytes(Rng& rng, std::size_t n) {
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(uniform(rng, 0, 255));
  return out;
}

inline wire::MessageType random_type(Rng& rng) {
  static constexpr wire::MessageType kTypes[] = {wire::MessageType::kRequest, wire::MessageType::kRequestNoReturn,
                                                 wire::MessageType::kNotification, wire::MessageType::kResponse,
                                                 wire::MessageType::kError};
  return kTypes[uniform(rng, 0, 4)];
}

inline wire::SomeIpMessage random_message(Rng& rng, std::size_t max_payload = 1400) {
  wire::SomeIpHeader h;
  h.service_id = static_cast<std::uint16_t>(uniform(rng, 0, 0xFFFF));
  h.method_id = static_cast<std::uint16_t>(uniform(rng, 0, 0xFFFF));
  h.client_id = static_cast<std::uint16_t>(uniform(rng, 0, 0xFFFF));
  h.session_id = static_cast<std::uint16_t>(uniform(rng, 0, 0xFFFF));
  h.interface_version = static_cast<std::uint8_t>(uniform(rng, 0, 0xFF));
  h.message_type = random_type(rng);
  h.return_code = static_cast<std::uint8_t>(uniform(rng, 0, 0xFF));
  return wire::make_message(h, random_bytes(rng, uniform(rng, 0, max_payload)));
}

inline wire::SdOption random_option(Rng& rng) {
  if (uniform(rng, 0, 4) == 0) {
    wire::SdOption o;
    do {
      o.kind = static_cast<std::uint8_t>(uniform(rng, 0, 0xFF));
    } while (o.kind == wire::kOptionIpv4Endpoint);
    o.l4_protocol = 0;
    o.raw = random_bytes(rng, uniform(rng, 0, 24));
    return o;
  }
  wire::SdOption o = wire::SdOption::ipv4_udp(
      Endpoint{Ipv4Address{static_cast<std::uint32_t>(uniform(rng, 0, 0xFFFFFFFF))},
               static_cast<std::uint16_t>(uniform(rng, 0, 0xFFFF))});
  if (uniform(rng, 0, 3) == 0) o.l4_protocol = wire::kL4Tcp;
  return o;
}

inline wire::SdMessage random_sd(Rng& rng, std::size_t max_items = 8) {
  static constexpr wire::EntryType kTypes[] = {wire::EntryType::kFindService, wire::EntryType::kOfferService,
                                               wire::EntryType::kSubscribeEventgroup,
                                               wire::EntryType::kSubscribeEventgroupAck};
  wire::SdMessage sd;
  sd.reboot = uniform(rng, 0, 1);
  sd.unicast = uniform(rng, 0, 1);
  std::size_t n_options = uniform(rng, 0, max_items);
  for (std::size_t i = 0; i < n_options; ++i) sd.options.push_back(random_option(rng));
  std::size_t n_entries = uniform(rng, 0, max_items);
  for (std::size_t i = 0; i < n_entries; ++i) {
    wire::SdEntry e;
    e.type = kTypes[uniform(rng, 0, 3)];
    if (n_options > 0) {
      e.index_1st = static_cast<std::uint8_t>(uniform(rng, 0, n_options - 1));
      e.num_1st = static_cast<std::uint8_t>(uniform(rng, 0, std::min<std::size_t>(15, n_options - e.index_1st)));
      e.index_2nd = static_cast<std::uint8_t>(uniform(rng, 0, n_options - 1));
      e.num_2nd = static_cast<std::uint8_t>(uniform(rng, 0, std::min<std::size_t>(15, n_options - e.index_2nd)));
    }
    e.service_id = static_cast<std::uint16_t>(uniform(rng, 0, 0xFFFF));
    e.instance_id = static_cast<std::uint16_t>(uniform(rng, 0, 0xFFFF));
    e.major_version = static_cast<std::uint8_t>(uniform(rng, 0, 0xFF));
    e.ttl = static_cast<std::uint32_t>(uniform(rng, 0, wire::kMaxTtl));
    if (wire::is_service_entry(e.type)) {
      e.minor_version = static_cast<std::uint32_t>(uniform(rng, 0, 0xFFFFFFFF));
    } else {
      e.counter = static_cast<std::uint8_t>(uniform(rng, 0, 15));
      e.eventgroup_id = static_cast<std::uint16_t>(uniform(rng, 0, 0xFFFF));
    }
    sd.entries.push_back(e);
  }
  return sd;
}

// Reference encoder written independently of the library, byte by byte.
namespace ref {

inline void be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::vector<std::uint8_t> message(const wire::SomeIpHeader& h, const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> out;
  be(out, h.service_id, 2);
  be(out, h.method_id, 2);
  be(out, 8 + payload.size(), 4);
  be(out, h.client_id, 2);
  be(out, h.session_id, 2);
  out.push_back(0x01);
  out.push_back(h.interface_version);
  out.push_back(static_cast<std::uint8_t>(h.message_type));
  out.push_back(h.return_code);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline std::vector<std::uint8_t> sd_payload(const wire::SdMessage& sd) {
  std::vector<std::uint8_t> entries;
  for (const auto& e : sd.entries) {
    entries.push_back(static_cast<std::uint8_t>(e.type));
    entries.push_back(e.index_1st);
    entries.push_back(e.index_2nd);
    entries.push_back(static_cast<std::uint8_t>(e.num_1st * 16 + e.num_2nd));
    be(entries, e.service_id, 2);
    be(entries, e.instance_id, 2);
    entries.push_back(e.major_version);
    be(entries, e.ttl, 3);
    if (e.type == wire::EntryType::kFindService || e.type == wire::EntryType::kOfferService) {
      be(entries, e.minor_version, 4);
    } else {
      be(entries, (std::uint32_t{e.counter} << 16) | e.eventgroup_id, 4);
    }
  }
  std::vector<std::uint8_t> options;
  for (const auto& o : sd.options) {
    if (o.kind == 0x04) {
      be(options, 9, 2);
      options.push_back(0x04);
      options.push_back(0);
      be(options, o.endpoint.address.value, 4);
      options.push_back(0);
      options.push_back(o.l4_protocol);
      be(options, o.endpoint.port, 2);
    } else {
      be(options, o.raw.size(), 2);
      options.push_back(o.kind);
      options.insert(options.end(), o.raw.begin(), o.raw.end());
    }
  }
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>((sd.reboot ? 0x80 : 0) | (sd.unicast ? 0x40 : 0)));
  be(out, 0, 3);
  be(out, entries.size(), 4);
  out.insert(out.end(), entries.begin(), entries.end());
  be(out, options.size(), 4);
  out.insert(out.end(), options.begin(), options.end());
  return out;
}

}  // namespace ref

inline std::string hex_dump(const std::vector<std::uint8_t>& bytes) {
  std::string s;
  static const char* digits = "0123456789abcdef";
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i) s += ' ';
    s += digits[bytes[i] >> 4];
    s += digits[bytes[i] & 15];
  }
  return s;
}

}  // namespace restbus::testing
