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

// SOME/IP and SOME/IP-SD on-wire codec.
//
// Header layout (16 bytes, all fields big-endian):
//
//   0      2      4             8      10     12  13  14  15
//   +------+------+-------------+------+------+---+---+---+---+
//   | svc  | meth |   length    | clnt | sess | P | I | T | R |
//   +------+------+-------------+------+------+---+---+---+---+
//
// `length` counts from the client id to the end of the payload, so it is
// always 8 + payload size. SD messages use service 0xFFFF / method 0x8100 and
// carry: flags(1) reserved(3) entries_len(4) entries options_len(4) options.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "restbus/endpoint.hpp"

namespace restbus::wire {

inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::uint8_t kProtocolVersion = 0x01;
inline constexpr std::uint16_t kSdServiceId = 0xFFFF;
inline constexpr std::uint16_t kSdMethodId = 0x8100;
inline constexpr std::size_t kSdEntrySize = 16;
inline constexpr std::uint32_t kMaxTtl = 0xFFFFFF;
inline constexpr std::uint8_t kSdFlagReboot = 0x80;
inline constexpr std::uint8_t kSdFlagUnicast = 0x40;
inline constexpr std::uint8_t kL4Udp = 0x11;
inline constexpr std::uint8_t kL4Tcp = 0x06;

enum class MessageType : std::uint8_t {
  kRequest = 0x00,
  kRequestNoReturn = 0x01,
  kNotification = 0x02,
  kResponse = 0x80,
  kError = 0x81,
};

bool is_valid_message_type(std::uint8_t code);

enum class CodecErrc {
  kTruncated,
  kBadProtocolVersion,
  kLengthMismatch,
  kUnknownMessageType,
  kNotSd,
  kMalformed,
  kInvalidMessage,  // encoder-side invariant violation
};

const char* to_string(CodecErrc code);

class CodecError : public std::runtime_error {
 public:
  CodecError(CodecErrc code, const std::string& detail);
  CodecErrc code() const noexcept { return code_; }

 private:
  CodecErrc code_;
};

struct SomeIpHeader {
  std::uint16_t service_id = 0;
  std::uint16_t method_id = 0;
  std::uint32_t length = 8;
  std::uint16_t client_id = 0;
  std::uint16_t session_id = 0;
  std::uint8_t protocol_version = kProtocolVersion;
  std::uint8_t interface_version = 1;
  MessageType message_type = MessageType::kNotification;
  std::uint8_t return_code = 0;

  bool operator==(const SomeIpHeader&) const = default;
};

struct SomeIpMessage {
  SomeIpHeader header;
  std::vector<std::uint8_t> payload;

  bool operator==(const SomeIpMessage&) const = default;
};

/// Builds a message with `header.length` derived from the payload.
SomeIpMessage make_message(SomeIpHeader header, std::vector<std::uint8_t> payload);

std::vector<std::uint8_t> encode_message(const SomeIpMessage& message);

/// Decodes exactly one message; the input must not carry trailing bytes.
SomeIpMessage decode_message(std::span<const std::uint8_t> bytes);

/// Decodes a UDP datagram holding one or more back-to-back messages.
std::vector<SomeIpMessage> decode_datagram(std::span<const std::uint8_t> bytes);

// --- Service discovery -------------------------------------------------------

enum class EntryType : std::uint8_t {
  kFindService = 0x00,
  kOfferService = 0x01,
  kSubscribeEventgroup = 0x06,
  kSubscribeEventgroupAck = 0x07,
};

bool is_service_entry(EntryType type);
const char* to_string(EntryType type);

struct SdEntry {
  EntryType type = EntryType::kFindService;
  std::uint8_t index_1st = 0;
  std::uint8_t index_2nd = 0;
  std::uint8_t num_1st = 0;  // 4 bits
  std::uint8_t num_2nd = 0;  // 4 bits
  std::uint16_t service_id = 0;
  std::uint16_t instance_id = 0;
  std::uint8_t major_version = 0;
  std::uint32_t ttl = 0;  // 24 bits, seconds
  // Service entries (find/offer).
  std::uint32_t minor_version = 0;
  // Eventgroup entries (subscribe/ack).
  std::uint8_t counter = 0;  // 4 bits
  std::uint16_t eventgroup_id = 0;

  bool operator==(const SdEntry&) const = default;
};

inline constexpr std::uint8_t kOptionIpv4Endpoint = 0x04;

/// An SD option. IPv4 endpoint options are decoded; any other kind is kept
/// as its raw body so that re-encoding reproduces the input.
struct SdOption {
  std::uint8_t kind = kOptionIpv4Endpoint;
  Endpoint endpoint;
  std::uint8_t l4_protocol = kL4Udp;
  std::vector<std::uint8_t> raw;

  static SdOption ipv4_udp(Endpoint endpoint) { return SdOption{kOptionIpv4Endpoint, endpoint, kL4Udp, {}}; }

  bool operator==(const SdOption&) const = default;
};

struct SdMessage {
  bool reboot = false;
  bool unicast = true;
  std::vector<SdEntry> entries;
  std::vector<SdOption> options;

  bool operator==(const SdMessage&) const = default;
};

bool is_sd(const SomeIpMessage& message);

/// Wraps an SD payload into a NOTIFICATION on 0xFFFF/0x8100.
SomeIpMessage encode_sd(const SdMessage& sd, std::uint16_t client_id, std::uint16_t session_id);

SdMessage decode_sd(const SomeIpMessage& message);

/// Endpoint option referenced by the first option run of `entry`, if any.
const SdOption* first_endpoint_option(const SdMessage& sd, const SdEntry& entry);

/// 16-bit session counter: starts at 1 and wraps back to 1 (0 is reserved).
class SessionCounter {
 public:
  std::uint16_t next() {
    std::uint16_t v = next_;
    next_ = next_ == 0xFFFF ? 1 : static_cast<std::uint16_t>(next_ + 1);
    return v;
  }
  std::uint16_t peek() const { return next_; }

 private:
  std::uint16_t next_ = 1;
};

/// One SessionCounter per destination.
class SessionTable {
 public:
  std::uint16_t next(const Endpoint& destination) { return counters_[destination].next(); }

 private:
  std::unordered_map<Endpoint, SessionCounter> counters_;
};

}  // namespace restbus::wire
