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

// Named, typed signal values backing event payloads.
//
// Paths have the form "host/0xSSSS/0xEEEE/field". Payloads are packed in
// declaration order, big-endian, without padding; bool occupies one byte.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace restbus::signals {

// Alternative order of SignalValue follows this enum.
enum class ScalarKind { kBool, kU8, kU16, kU32, kI8, kI16, kI32, kF32, kF64, kU8Array };

const char* to_string(ScalarKind kind);
std::optional<ScalarKind> parse_kind(std::string_view name);

using SignalValue = std::variant<bool, std::uint8_t, std::uint16_t, std::uint32_t, std::int8_t,
                                 std::int16_t, std::int32_t, float, double, std::vector<std::uint8_t>>;

/// Loosely typed value as it arrives from an operator (JSON-shaped).
using SignalInput = std::variant<bool, std::int64_t, double, std::vector<std::int64_t>>;

struct FieldSpec {
  std::string name;
  ScalarKind kind = ScalarKind::kU8;
  std::size_t array_length = 0;  // only for kU8Array

  std::size_t size() const;
  bool operator==(const FieldSpec&) const = default;
};

struct PayloadLayout {
  std::vector<FieldSpec> fields;

  std::size_t size() const;
  bool operator==(const PayloadLayout&) const = default;
};

struct EventKey {
  std::uint16_t service_id = 0;
  std::uint16_t event_id = 0;

  auto operator<=>(const EventKey&) const = default;
};

struct SignalField {
  std::string path;
  EventKey event;
  FieldSpec spec;
  SignalValue value;
  bool dirty = false;
};

enum class SignalErrc { kUnknownPath, kTypeMismatch, kRange, kSizeMismatch, kUnknownEvent };

const char* to_string(SignalErrc code);

class SignalError : public std::runtime_error {
 public:
  SignalError(SignalErrc code, const std::string& detail);
  SignalErrc code() const noexcept { return code_; }

 private:
  SignalErrc code_;
};

/// Emitted once per set() and once per received payload.
struct SignalUpdate {
  enum class Origin { kSet, kReceived };
  Origin origin = Origin::kSet;
  EventKey event;
  std::vector<std::pair<std::string, SignalValue>> values;
  std::uint64_t version = 0;
};

std::string event_prefix(std::string_view host, EventKey event);
std::string field_path(std::string_view host, EventKey event, std::string_view field);

/// Canonical form of a path (ids normalised to lowercase 4-digit hex), or
/// nullopt if the path does not have four components with numeric ids.
std::optional<std::string> normalize_path(std::string_view path);

SignalValue zero_value(const FieldSpec& spec);

/// Converts an operator input to the field's kind, enforcing type and range.
SignalValue coerce(const FieldSpec& spec, const SignalInput& input);

std::vector<std::uint8_t> pack(const PayloadLayout& layout, std::span<const SignalValue> values);
std::vector<SignalValue> unpack(const PayloadLayout& layout, std::span<const std::uint8_t> bytes);

class SignalStore {
 public:
  using Listener = std::function<void(const SignalUpdate&)>;

  explicit SignalStore(std::string host_name) : host_(std::move(host_name)) {}

  const std::string& host() const { return host_; }

  /// Declares an event owned by this host; its fields start at zero.
  void add_event(EventKey event, PayloadLayout layout);
  bool has_event(EventKey event) const { return events_.contains(event); }

  SignalValue get(std::string_view path) const;

  /// Returns the event that owns the field.
  EventKey set(std::string_view path, const SignalInput& input);

  /// Packs the event's current values and clears their dirty flags.
  std::vector<std::uint8_t> serialize_event(EventKey event);

  /// Stores a received payload, creating the event's fields on first use.
  void deserialize_event(EventKey event, const PayloadLayout& layout,
                         std::span<const std::uint8_t> bytes);

  bool is_dirty(EventKey event) const;
  std::vector<SignalField> snapshot() const;
  std::size_t size() const { return fields_.size(); }
  std::uint64_t version() const { return version_; }

  void set_listener(Listener listener) { listener_ = std::move(listener); }

 private:
  struct EventSlot {
    PayloadLayout layout;
    std::vector<std::string> paths;
  };

  std::string host_;
  std::map<EventKey, EventSlot> events_;
  std::map<std::string, SignalField, std::less<>> fields_;
  std::uint64_t version_ = 0;
  Listener listener_;
};

}  // namespace restbus::signals
