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

#include "restbus/wire.hpp"

#include <fmt/format.h>

#include "bytes.hpp"

namespace restbus::wire {

using detail::put_u16;
using detail::put_u24;
using detail::put_u32;
using detail::put_u8;
using detail::Reader;

namespace {

constexpr std::size_t kSdFixedPrefix = 8;  // flags + reserved + entries length
constexpr std::size_t kIpv4OptionBody = 9;

bool is_known_entry_type(std::uint8_t code) {
  return code == 0x00 || code == 0x01 || code == 0x06 || code == 0x07;
}

void check_header(const SomeIpHeader& h, std::size_t payload_size) {
  if (h.length != 8 + payload_size) {
    throw CodecError(CodecErrc::kInvalidMessage,
                     fmt::format("length field {} != 8 + payload {}", h.length, payload_size));
  }
  if (h.protocol_version != kProtocolVersion) {
    throw CodecError(CodecErrc::kInvalidMessage,
                     fmt::format("protocol version {:#04x}", h.protocol_version));
  }
  if (!is_valid_message_type(static_cast<std::uint8_t>(h.message_type))) {
    throw CodecError(CodecErrc::kInvalidMessage,
                     fmt::format("message type {:#04x}", static_cast<unsigned>(h.message_type)));
  }
}

// Decodes the header and returns the total message size it implies.
std::size_t decode_header(std::span<const std::uint8_t> bytes, SomeIpHeader& h) {
  if (bytes.size() < kHeaderSize) {
    throw CodecError(CodecErrc::kTruncated, fmt::format("{} bytes < 16-byte header", bytes.size()));
  }
  Reader r(bytes);
  h.service_id = r.u16();
  h.method_id = r.u16();
  h.length = r.u32();
  h.client_id = r.u16();
  h.session_id = r.u16();
  h.protocol_version = r.u8();
  h.interface_version = r.u8();
  std::uint8_t type = r.u8();
  h.return_code = r.u8();
  if (h.length < 8) {
    throw CodecError(CodecErrc::kLengthMismatch, fmt::format("length field {} < 8", h.length));
  }
  if (h.protocol_version != kProtocolVersion) {
    throw CodecError(CodecErrc::kBadProtocolVersion,
                     fmt::format("protocol version {:#04x}", h.protocol_version));
  }
  if (!is_valid_message_type(type)) {
    throw CodecError(CodecErrc::kUnknownMessageType, fmt::format("message type {:#04x}", type));
  }
  h.message_type = static_cast<MessageType>(type);
  std::uint64_t total = std::uint64_t{h.length} + 8;
  if (total > bytes.size()) {
    throw CodecError(CodecErrc::kTruncated,
                     fmt::format("length field implies {} bytes, have {}", total, bytes.size()));
  }
  return static_cast<std::size_t>(total);
}

void encode_entry(std::vector<std::uint8_t>& out, const SdEntry& e) {
  put_u8(out, static_cast<std::uint8_t>(e.type));
  put_u8(out, e.index_1st);
  put_u8(out, e.index_2nd);
  put_u8(out, static_cast<std::uint8_t>((e.num_1st << 4) | e.num_2nd));
  put_u16(out, e.service_id);
  put_u16(out, e.instance_id);
  put_u8(out, e.major_version);
  put_u24(out, e.ttl);
  if (is_service_entry(e.type)) {
    put_u32(out, e.minor_version);
  } else {
    put_u8(out, 0);
    put_u8(out, e.counter);
    put_u16(out, e.eventgroup_id);
  }
}

void encode_option(std::vector<std::uint8_t>& out, const SdOption& o) {
  if (o.kind == kOptionIpv4Endpoint) {
    put_u16(out, kIpv4OptionBody);
    put_u8(out, o.kind);
    put_u8(out, 0);
    put_u32(out, o.endpoint.address.value);
    put_u8(out, 0);
    put_u8(out, o.l4_protocol);
    put_u16(out, o.endpoint.port);
    return;
  }
  put_u16(out, static_cast<std::uint16_t>(o.raw.size()));
  put_u8(out, o.kind);
  out.insert(out.end(), o.raw.begin(), o.raw.end());
}

bool run_in_bounds(std::uint8_t index, std::uint8_t count, std::size_t options) {
  return count == 0 || std::size_t{index} + count <= options;
}

void check_sd(const SdMessage& sd) {
  for (std::size_t i = 0; i < sd.entries.size(); ++i) {
    const SdEntry& e = sd.entries[i];
    if (!is_known_entry_type(static_cast<std::uint8_t>(e.type))) {
      throw CodecError(CodecErrc::kInvalidMessage,
                       fmt::format("entry {}: type {:#04x}", i, static_cast<unsigned>(e.type)));
    }
    if (e.num_1st > 15 || e.num_2nd > 15 || e.ttl > kMaxTtl || e.counter > 15) {
      throw CodecError(CodecErrc::kInvalidMessage, fmt::format("entry {}: field out of range", i));
    }
    if (!is_service_entry(e.type) && e.minor_version != 0) {
      throw CodecError(CodecErrc::kInvalidMessage,
                       fmt::format("entry {}: minor version on eventgroup entry", i));
    }
    if (is_service_entry(e.type) && (e.counter != 0 || e.eventgroup_id != 0)) {
      throw CodecError(CodecErrc::kInvalidMessage,
                       fmt::format("entry {}: eventgroup fields on service entry", i));
    }
    if (!run_in_bounds(e.index_1st, e.num_1st, sd.options.size()) ||
        !run_in_bounds(e.index_2nd, e.num_2nd, sd.options.size())) {
      throw CodecError(CodecErrc::kInvalidMessage,
                       fmt::format("entry {}: dangling option index", i));
    }
  }
  for (std::size_t i = 0; i < sd.options.size(); ++i) {
    const SdOption& o = sd.options[i];
    bool ok = o.kind == kOptionIpv4Endpoint ? o.raw.empty() : o.raw.size() <= 0xFFFF;
    if (!ok) throw CodecError(CodecErrc::kInvalidMessage, fmt::format("option {}: bad body", i));
  }
}

}  // namespace

bool is_valid_message_type(std::uint8_t code) {
  return code == 0x00 || code == 0x01 || code == 0x02 || code == 0x80 || code == 0x81;
}

const char* to_string(CodecErrc code) {
  switch (code) {
    case CodecErrc::kTruncated: return "TRUNCATED";
    case CodecErrc::kBadProtocolVersion: return "BAD_PROTOCOL_VERSION";
    case CodecErrc::kLengthMismatch: return "LENGTH_MISMATCH";
    case CodecErrc::kUnknownMessageType: return "UNKNOWN_MESSAGE_TYPE";
    case CodecErrc::kNotSd: return "NOT_SD";
    case CodecErrc::kMalformed: return "MALFORMED";
    case CodecErrc::kInvalidMessage: return "INVALID_MESSAGE";
  }
  return "?";
}

CodecError::CodecError(CodecErrc code, const std::string& detail)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), detail)), code_(code) {}

SomeIpMessage make_message(SomeIpHeader header, std::vector<std::uint8_t> payload) {
  header.length = static_cast<std::uint32_t>(8 + payload.size());
  return SomeIpMessage{header, std::move(payload)};
}

std::vector<std::uint8_t> encode_message(const SomeIpMessage& m) {
  check_header(m.header, m.payload.size());
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + m.payload.size());
  const SomeIpHeader& h = m.header;
  put_u16(out, h.service_id);
  put_u16(out, h.method_id);
  put_u32(out, h.length);
  put_u16(out, h.client_id);
  put_u16(out, h.session_id);
  put_u8(out, h.protocol_version);
  put_u8(out, h.interface_version);
  put_u8(out, static_cast<std::uint8_t>(h.message_type));
  put_u8(out, h.return_code);
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  return out;
}

SomeIpMessage decode_message(std::span<const std::uint8_t> bytes) {
  SomeIpMessage m;
  std::size_t total = decode_header(bytes, m.header);
  if (total != bytes.size()) {
    throw CodecError(CodecErrc::kLengthMismatch,
                     fmt::format("{} trailing bytes after message", bytes.size() - total));
  }
  m.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
  return m;
}

std::vector<SomeIpMessage> decode_datagram(std::span<const std::uint8_t> bytes) {
  std::vector<SomeIpMessage> out;
  while (!bytes.empty()) {
    SomeIpMessage m;
    std::size_t total = decode_header(bytes, m.header);
    m.payload.assign(bytes.begin() + kHeaderSize, bytes.begin() + static_cast<std::ptrdiff_t>(total));
    out.push_back(std::move(m));
    bytes = bytes.subspan(total);
  }
  if (out.empty()) throw CodecError(CodecErrc::kTruncated, "empty datagram");
  return out;
}

bool is_service_entry(EntryType type) {
  return type == EntryType::kFindService || type == EntryType::kOfferService;
}

const char* to_string(EntryType type) {
  switch (type) {
    case EntryType::kFindService: return "FIND_SERVICE";
    case EntryType::kOfferService: return "OFFER_SERVICE";
    case EntryType::kSubscribeEventgroup: return "SUBSCRIBE_EVENTGROUP";
    case EntryType::kSubscribeEventgroupAck: return "SUBSCRIBE_EVENTGROUP_ACK";
  }
  return "?";
}

bool is_sd(const SomeIpMessage& m) {
  return m.header.service_id == kSdServiceId && m.header.method_id == kSdMethodId;
}

SomeIpMessage encode_sd(const SdMessage& sd, std::uint16_t client_id, std::uint16_t session_id) {
  check_sd(sd);
  std::vector<std::uint8_t> p;
  p.reserve(kSdFixedPrefix + 4 + sd.entries.size() * kSdEntrySize + sd.options.size() * 12);
  std::uint8_t flags = static_cast<std::uint8_t>((sd.reboot ? kSdFlagReboot : 0) |
                                                 (sd.unicast ? kSdFlagUnicast : 0));
  put_u8(p, flags);
  put_u24(p, 0);
  put_u32(p, static_cast<std::uint32_t>(sd.entries.size() * kSdEntrySize));
  for (const auto& e : sd.entries) encode_entry(p, e);
  std::size_t options_len_at = p.size();
  put_u32(p, 0);
  for (const auto& o : sd.options) encode_option(p, o);
  detail::patch_u32(p, options_len_at, static_cast<std::uint32_t>(p.size() - options_len_at - 4));

  SomeIpHeader h;
  h.service_id = kSdServiceId;
  h.method_id = kSdMethodId;
  h.client_id = client_id;
  h.session_id = session_id;
  h.interface_version = 0x01;
  h.message_type = MessageType::kNotification;
  return make_message(h, std::move(p));
}

SdMessage decode_sd(const SomeIpMessage& m) {
  if (!is_sd(m)) {
    throw CodecError(CodecErrc::kNotSd, fmt::format("service {:#06x} method {:#06x}",
                                                    m.header.service_id, m.header.method_id));
  }
  Reader r(m.payload);
  if (r.remaining() < kSdFixedPrefix) {
    throw CodecError(CodecErrc::kMalformed, "payload shorter than SD prefix");
  }
  SdMessage sd;
  std::uint8_t flags = r.u8();
  sd.reboot = (flags & kSdFlagReboot) != 0;
  sd.unicast = (flags & kSdFlagUnicast) != 0;
  r.u24();
  std::uint32_t entries_len = r.u32();
  if (entries_len > r.remaining()) {
    throw CodecError(CodecErrc::kMalformed,
                     fmt::format("entries length {} exceeds {} remaining", entries_len, r.remaining()));
  }
  if (entries_len % kSdEntrySize != 0) {
    throw CodecError(CodecErrc::kMalformed, fmt::format("entries length {} not a multiple of 16", entries_len));
  }
  for (std::uint32_t i = 0; i < entries_len / kSdEntrySize; ++i) {
    SdEntry e;
    std::uint8_t type = r.u8();
    if (!is_known_entry_type(type)) {
      throw CodecError(CodecErrc::kMalformed, fmt::format("unknown entry type {:#04x}", type));
    }
    e.type = static_cast<EntryType>(type);
    e.index_1st = r.u8();
    e.index_2nd = r.u8();
    std::uint8_t nums = r.u8();
    e.num_1st = nums >> 4;
    e.num_2nd = nums & 0x0F;
    e.service_id = r.u16();
    e.instance_id = r.u16();
    e.major_version = r.u8();
    e.ttl = r.u24();
    if (is_service_entry(e.type)) {
      e.minor_version = r.u32();
    } else {
      r.u8();
      e.counter = r.u8() & 0x0F;
      e.eventgroup_id = r.u16();
    }
    sd.entries.push_back(e);
  }
  if (r.remaining() < 4) throw CodecError(CodecErrc::kMalformed, "missing options length");
  std::uint32_t options_len = r.u32();
  if (options_len != r.remaining()) {
    throw CodecError(CodecErrc::kMalformed,
                     fmt::format("options length {} != {} remaining", options_len, r.remaining()));
  }
  while (r.remaining() > 0) {
    if (r.remaining() < 3) throw CodecError(CodecErrc::kMalformed, "truncated option header");
    std::uint16_t body = r.u16();
    SdOption o;
    o.kind = r.u8();
    if (body > r.remaining()) {
      throw CodecError(CodecErrc::kMalformed, fmt::format("option body {} exceeds payload", body));
    }
    if (o.kind == kOptionIpv4Endpoint) {
      if (body != kIpv4OptionBody) {
        throw CodecError(CodecErrc::kMalformed, fmt::format("IPv4 endpoint option length {}", body));
      }
      r.u8();
      o.endpoint.address.value = r.u32();
      r.u8();
      o.l4_protocol = r.u8();
      o.endpoint.port = r.u16();
    } else {
      o.l4_protocol = 0;
      auto raw = r.take(body);
      o.raw.assign(raw.begin(), raw.end());
    }
    sd.options.push_back(std::move(o));
  }
  for (std::size_t i = 0; i < sd.entries.size(); ++i) {
    const SdEntry& e = sd.entries[i];
    if (!run_in_bounds(e.index_1st, e.num_1st, sd.options.size()) ||
        !run_in_bounds(e.index_2nd, e.num_2nd, sd.options.size())) {
      throw CodecError(CodecErrc::kMalformed, fmt::format("entry {}: dangling option index", i));
    }
  }
  return sd;
}

const SdOption* first_endpoint_option(const SdMessage& sd, const SdEntry& entry) {
  auto scan = [&](std::uint8_t index, std::uint8_t count) -> const SdOption* {
    for (std::uint8_t k = 0; k < count; ++k) {
      const SdOption& o = sd.options[std::size_t{index} + k];
      if (o.kind == kOptionIpv4Endpoint) return &o;
    }
    return nullptr;
  };
  if (const SdOption* o = scan(entry.index_1st, entry.num_1st)) return o;
  return scan(entry.index_2nd, entry.num_2nd);
}

}  // namespace restbus::wire
