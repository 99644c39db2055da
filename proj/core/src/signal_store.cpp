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

#include "restbus/signal_store.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "bytes.hpp"

namespace restbus::signals {

namespace {

struct KindName {
  ScalarKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ScalarKind::kBool, "bool"},     {ScalarKind::kU8, "uint8"},     {ScalarKind::kU16, "uint16"},
    {ScalarKind::kU32, "uint32"},    {ScalarKind::kI8, "int8"},      {ScalarKind::kI16, "int16"},
    {ScalarKind::kI32, "int32"},     {ScalarKind::kF32, "float32"},  {ScalarKind::kF64, "float64"},
    {ScalarKind::kU8Array, "uint8[]"},
};

std::optional<std::uint16_t> parse_id(std::string_view text) {
  unsigned value = 0;
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    text.remove_prefix(2);
    base = 16;
  }
  if (text.empty()) return std::nullopt;
  auto [next, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
  if (ec != std::errc{} || next != text.data() + text.size() || value > 0xFFFF) return std::nullopt;
  return static_cast<std::uint16_t>(value);
}

template <typename Int>
SignalValue coerce_int(const FieldSpec& spec, const SignalInput& input) {
  std::int64_t v = 0;
  if (const auto* i = std::get_if<std::int64_t>(&input)) {
    v = *i;
  } else if (const auto* d = std::get_if<double>(&input)) {
    if (!std::isfinite(*d) || std::floor(*d) != *d) {
      throw SignalError(SignalErrc::kTypeMismatch,
                        fmt::format("{}: {} is not an integer", spec.name, *d));
    }
    if (*d < -9.2e18 || *d > 9.2e18) {
      throw SignalError(SignalErrc::kRange, fmt::format("{}: {} out of range", spec.name, *d));
    }
    v = static_cast<std::int64_t>(*d);
  } else {
    throw SignalError(SignalErrc::kTypeMismatch,
                      fmt::format("{}: expected an integer for {}", spec.name, to_string(spec.kind)));
  }
  if (v < static_cast<std::int64_t>(std::numeric_limits<Int>::min()) ||
      v > static_cast<std::int64_t>(std::numeric_limits<Int>::max())) {
    throw SignalError(SignalErrc::kRange,
                      fmt::format("{}: {} out of range for {}", spec.name, v, to_string(spec.kind)));
  }
  return static_cast<Int>(v);
}

SignalValue coerce_float(const FieldSpec& spec, const SignalInput& input) {
  double v = 0;
  if (const auto* i = std::get_if<std::int64_t>(&input)) {
    v = static_cast<double>(*i);
  } else if (const auto* d = std::get_if<double>(&input)) {
    v = *d;
  } else {
    throw SignalError(SignalErrc::kTypeMismatch,
                      fmt::format("{}: expected a number for {}", spec.name, to_string(spec.kind)));
  }
  if (spec.kind == ScalarKind::kF32) {
    if (std::isfinite(v) && std::fabs(v) > std::numeric_limits<float>::max()) {
      throw SignalError(SignalErrc::kRange, fmt::format("{}: {} out of float32 range", spec.name, v));
    }
    return static_cast<float>(v);
  }
  return v;
}

}  // namespace

const char* to_string(ScalarKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

std::optional<ScalarKind> parse_kind(std::string_view name) {
  for (const auto& k : kKindNames) {
    if (name == k.name && k.kind != ScalarKind::kU8Array) return k.kind;
  }
  return std::nullopt;
}

const char* to_string(SignalErrc code) {
  switch (code) {
    case SignalErrc::kUnknownPath: return "UNKNOWN_PATH";
    case SignalErrc::kTypeMismatch: return "TYPE_MISMATCH";
    case SignalErrc::kRange: return "RANGE";
    case SignalErrc::kSizeMismatch: return "SIZE_MISMATCH";
    case SignalErrc::kUnknownEvent: return "UNKNOWN_EVENT";
  }
  return "?";
}

SignalError::SignalError(SignalErrc code, const std::string& detail)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), detail)), code_(code) {}

std::size_t FieldSpec::size() const {
  switch (kind) {
    case ScalarKind::kBool:
    case ScalarKind::kU8:
    case ScalarKind::kI8: return 1;
    case ScalarKind::kU16:
    case ScalarKind::kI16: return 2;
    case ScalarKind::kU32:
    case ScalarKind::kI32:
    case ScalarKind::kF32: return 4;
    case ScalarKind::kF64: return 8;
    case ScalarKind::kU8Array: return array_length;
  }
  return 0;
}

std::size_t PayloadLayout::size() const {
  std::size_t total = 0;
  for (const auto& f : fields) total += f.size();
  return total;
}

std::string event_prefix(std::string_view host, EventKey event) {
  return fmt::format("{}/0x{:04x}/0x{:04x}", host, event.service_id, event.event_id);
}

std::string field_path(std::string_view host, EventKey event, std::string_view field) {
  return fmt::format("{}/{}", event_prefix(host, event), field);
}

std::optional<std::string> normalize_path(std::string_view path) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto slash = path.find('/', start);
    parts.push_back(path.substr(start, slash == std::string_view::npos ? slash : slash - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  if (parts.size() != 4 || parts[0].empty() || parts[3].empty()) return std::nullopt;
  auto svc = parse_id(parts[1]);
  auto evt = parse_id(parts[2]);
  if (!svc || !evt) return std::nullopt;
  return field_path(parts[0], EventKey{*svc, *evt}, parts[3]);
}

SignalValue zero_value(const FieldSpec& spec) {
  switch (spec.kind) {
    case ScalarKind::kBool: return false;
    case ScalarKind::kU8: return std::uint8_t{0};
    case ScalarKind::kU16: return std::uint16_t{0};
    case ScalarKind::kU32: return std::uint32_t{0};
    case ScalarKind::kI8: return std::int8_t{0};
    case ScalarKind::kI16: return std::int16_t{0};
    case ScalarKind::kI32: return std::int32_t{0};
    case ScalarKind::kF32: return 0.0F;
    case ScalarKind::kF64: return 0.0;
    case ScalarKind::kU8Array: return std::vector<std::uint8_t>(spec.array_length, 0);
  }
  return false;
}

SignalValue coerce(const FieldSpec& spec, const SignalInput& input) {
  switch (spec.kind) {
    case ScalarKind::kBool:
      if (const auto* b = std::get_if<bool>(&input)) return *b;
      throw SignalError(SignalErrc::kTypeMismatch, fmt::format("{}: expected a bool", spec.name));
    case ScalarKind::kU8: return coerce_int<std::uint8_t>(spec, input);
    case ScalarKind::kU16: return coerce_int<std::uint16_t>(spec, input);
    case ScalarKind::kU32: return coerce_int<std::uint32_t>(spec, input);
    case ScalarKind::kI8: return coerce_int<std::int8_t>(spec, input);
    case ScalarKind::kI16: return coerce_int<std::int16_t>(spec, input);
    case ScalarKind::kI32: return coerce_int<std::int32_t>(spec, input);
    case ScalarKind::kF32:
    case ScalarKind::kF64: return coerce_float(spec, input);
    case ScalarKind::kU8Array: {
      const auto* arr = std::get_if<std::vector<std::int64_t>>(&input);
      if (arr == nullptr) {
        throw SignalError(SignalErrc::kTypeMismatch, fmt::format("{}: expected a byte array", spec.name));
      }
      if (arr->size() != spec.array_length) {
        throw SignalError(SignalErrc::kRange, fmt::format("{}: array length {} != {}", spec.name,
                                                          arr->size(), spec.array_length));
      }
      std::vector<std::uint8_t> bytes;
      bytes.reserve(arr->size());
      for (std::int64_t v : *arr) {
        if (v < 0 || v > 255) {
          throw SignalError(SignalErrc::kRange, fmt::format("{}: element {} out of range", spec.name, v));
        }
        bytes.push_back(static_cast<std::uint8_t>(v));
      }
      return bytes;
    }
  }
  throw SignalError(SignalErrc::kTypeMismatch, spec.name);
}

std::vector<std::uint8_t> pack(const PayloadLayout& layout, std::span<const SignalValue> values) {
  std::vector<std::uint8_t> out;
  out.reserve(layout.size());
  for (std::size_t i = 0; i < layout.fields.size(); ++i) {
    std::visit(
        [&out](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, bool>) {
            detail::put_u8(out, v ? 1 : 0);
          } else if constexpr (std::is_same_v<T, std::vector<std::uint8_t>>) {
            out.insert(out.end(), v.begin(), v.end());
          } else if constexpr (std::is_same_v<T, float>) {
            detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
          } else if constexpr (std::is_same_v<T, double>) {
            detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
          } else if constexpr (sizeof(T) == 1) {
            detail::put_u8(out, static_cast<std::uint8_t>(v));
          } else if constexpr (sizeof(T) == 2) {
            detail::put_u16(out, static_cast<std::uint16_t>(v));
          } else {
            detail::put_u32(out, static_cast<std::uint32_t>(v));
          }
        },
        values[i]);
  }
  return out;
}

std::vector<SignalValue> unpack(const PayloadLayout& layout, std::span<const std::uint8_t> bytes) {
  if (bytes.size() != layout.size()) {
    throw SignalError(SignalErrc::kSizeMismatch,
                      fmt::format("payload {} bytes, layout {} bytes", bytes.size(), layout.size()));
  }
  detail::Reader r(bytes);
  std::vector<SignalValue> values;
  values.reserve(layout.fields.size());
  for (const auto& f : layout.fields) {
    switch (f.kind) {
      case ScalarKind::kBool: values.emplace_back(r.u8() != 0); break;
      case ScalarKind::kU8: values.emplace_back(r.u8()); break;
      case ScalarKind::kU16: values.emplace_back(r.u16()); break;
      case ScalarKind::kU32: values.emplace_back(r.u32()); break;
      case ScalarKind::kI8: values.emplace_back(static_cast<std::int8_t>(r.u8())); break;
      case ScalarKind::kI16: values.emplace_back(static_cast<std::int16_t>(r.u16())); break;
      case ScalarKind::kI32: values.emplace_back(static_cast<std::int32_t>(r.u32())); break;
      case ScalarKind::kF32: values.emplace_back(std::bit_cast<float>(r.u32())); break;
      case ScalarKind::kF64: values.emplace_back(std::bit_cast<double>(r.u64())); break;
      case ScalarKind::kU8Array: {
        auto s = r.take(f.array_length);
        values.emplace_back(std::vector<std::uint8_t>(s.begin(), s.end()));
        break;
      }
    }
  }
  return values;
}

void SignalStore::add_event(EventKey event, PayloadLayout layout) {
  EventSlot slot;
  for (const auto& f : layout.fields) {
    std::string path = field_path(host_, event, f.name);
    fields_[path] = SignalField{path, event, f, zero_value(f), false};
    slot.paths.push_back(std::move(path));
  }
  slot.layout = std::move(layout);
  events_[event] = std::move(slot);
  ++version_;
}

SignalValue SignalStore::get(std::string_view path) const {
  auto canonical = normalize_path(path);
  auto it = canonical ? fields_.find(*canonical) : fields_.end();
  if (it == fields_.end()) throw SignalError(SignalErrc::kUnknownPath, std::string(path));
  return it->second.value;
}

EventKey SignalStore::set(std::string_view path, const SignalInput& input) {
  auto canonical = normalize_path(path);
  auto it = canonical ? fields_.find(*canonical) : fields_.end();
  if (it == fields_.end()) throw SignalError(SignalErrc::kUnknownPath, std::string(path));
  SignalField& field = it->second;
  field.value = coerce(field.spec, input);
  field.dirty = true;
  ++version_;

  EventKey key = field.event;
  if (listener_) {
    listener_(SignalUpdate{SignalUpdate::Origin::kSet, key, {{field.path, field.value}}, version_});
  }
  return key;
}

std::vector<std::uint8_t> SignalStore::serialize_event(EventKey event) {
  auto it = events_.find(event);
  if (it == events_.end()) {
    throw SignalError(SignalErrc::kUnknownEvent,
                      fmt::format("{} has no event {}", host_, event_prefix(host_, event)));
  }
  std::vector<SignalValue> values;
  values.reserve(it->second.paths.size());
  for (const auto& p : it->second.paths) {
    SignalField& f = fields_.at(p);
    values.push_back(f.value);
    f.dirty = false;
  }
  return pack(it->second.layout, values);
}

void SignalStore::deserialize_event(EventKey event, const PayloadLayout& layout,
                                    std::span<const std::uint8_t> bytes) {
  auto values = unpack(layout, bytes);
  auto it = events_.find(event);
  if (it == events_.end()) {
    add_event(event, layout);
    it = events_.find(event);
  } else if (it->second.layout != layout) {
    throw SignalError(SignalErrc::kSizeMismatch,
                      fmt::format("layout of {} differs from the stored one", event_prefix(host_, event)));
  }
  SignalUpdate update{SignalUpdate::Origin::kReceived, event, {}, 0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    SignalField& f = fields_.at(it->second.paths[i]);
    f.value = std::move(values[i]);
    f.dirty = false;
    update.values.emplace_back(f.path, f.value);
  }
  update.version = ++version_;
  if (listener_) listener_(update);
}

bool SignalStore::is_dirty(EventKey event) const {
  auto it = events_.find(event);
  if (it == events_.end()) return false;
  for (const auto& p : it->second.paths) {
    if (fields_.at(p).dirty) return true;
  }
  return false;
}

std::vector<SignalField> SignalStore::snapshot() const {
  std::vector<SignalField> out;
  out.reserve(fields_.size());
  for (const auto& [path, field] : fields_) out.push_back(field);
  return out;
}

}  // namespace restbus::signals
