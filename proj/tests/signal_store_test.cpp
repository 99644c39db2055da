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


#include <gtest/gtest.h>

#include <bit>
#include <cstring>

#include "restbus/signal_store.hpp"
#include "support/generators.hpp"

namespace restbus::signals {
namespace {

const EventKey kSpeedEvent{0x1234, 0x8001};

PayloadLayout speed_layout() {
  return PayloadLayout{{{"speed", ScalarKind::kU16, 0}, {"valid", ScalarKind::kBool, 0}}};
}

SignalStore provider_store() {
  SignalStore s("ecuA");
  s.add_event(kSpeedEvent, speed_layout());
  return s;
}

template <typename F>
SignalErrc error_of(F&& f) {
  try {
    f();
  } catch (const SignalError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no SignalError thrown";
  return SignalErrc::kUnknownEvent;
}

TEST(Paths, CanonicalForm) {
  EXPECT_EQ(field_path("ecuA", kSpeedEvent, "speed"), "ecuA/0x1234/0x8001/speed");
  EXPECT_EQ(normalize_path("ecuA/0X1234/32769/speed"), "ecuA/0x1234/0x8001/speed");
  EXPECT_EQ(normalize_path("ecuA/0x1234/0x8001"), std::nullopt);
  EXPECT_EQ(normalize_path("ecuA/0x12345/0x8001/speed"), std::nullopt);
  EXPECT_EQ(normalize_path("/0x1234/0x8001/speed"), std::nullopt);
  EXPECT_EQ(normalize_path("ecuA/0x1234/0x8001/"), std::nullopt);
}

TEST(Store, FieldsStartAtZero) {
  auto s = provider_store();
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.get("ecuA/0x1234/0x8001/speed"), SignalValue(std::uint16_t{0}));
  EXPECT_EQ(s.get("ecuA/0x1234/0x8001/valid"), SignalValue(false));
  EXPECT_EQ(s.serialize_event(kSpeedEvent), (std::vector<std::uint8_t>{0, 0, 0}));
}

TEST(Store, ReadYourWrite) {
  auto s = provider_store();
  EXPECT_EQ(s.set("ecuA/0x1234/0x8001/speed", std::int64_t{0x1234}), kSpeedEvent);
  EXPECT_EQ(s.get("ecuA/0x1234/0x8001/speed"), SignalValue(std::uint16_t{0x1234}));
}

TEST(Store, SetErrors) {
  auto s = provider_store();
  EXPECT_EQ(error_of([&] { s.set("ecuA/0x1234/0x8001/valid", std::int64_t{7}); }), SignalErrc::kTypeMismatch);
  EXPECT_EQ(error_of([&] { s.set("ecuA/0x1234/0x8001/speed", std::int64_t{70000}); }), SignalErrc::kRange);
  EXPECT_EQ(error_of([&] { s.set("ecuA/0x1234/0x8001/speed", std::int64_t{-1}); }), SignalErrc::kRange);
  EXPECT_EQ(error_of([&] { s.set("ecuA/0x1234/0x8001/speed", 1.5); }), SignalErrc::kTypeMismatch);
  EXPECT_EQ(error_of([&] { s.set("ecuA/0x1234/0x8001/speed", true); }), SignalErrc::kTypeMismatch);
  EXPECT_EQ(error_of([&] { s.set("ecuA/0x1234/0x8001/rpm", std::int64_t{1}); }), SignalErrc::kUnknownPath);
  EXPECT_EQ(error_of([&] { s.get("ecuB/0x1234/0x8001/speed"); }), SignalErrc::kUnknownPath);
  EXPECT_EQ(error_of([&] { s.serialize_event(EventKey{0x1234, 0x8002}); }), SignalErrc::kUnknownEvent);
  // A failed set leaves the value untouched.
  EXPECT_EQ(s.get("ecuA/0x1234/0x8001/speed"), SignalValue(std::uint16_t{0}));
  EXPECT_FALSE(s.is_dirty(kSpeedEvent));
}

TEST(Coerce, RangesPerKind) {
  auto check = [](ScalarKind k, std::int64_t ok, std::int64_t bad) {
    FieldSpec f{"x", k, 0};
    EXPECT_NO_THROW(coerce(f, ok)) << to_string(k);
    EXPECT_EQ(error_of([&] { coerce(f, bad); }), SignalErrc::kRange) << to_string(k);
  };
  check(ScalarKind::kU8, 255, 256);
  check(ScalarKind::kU8, 0, -1);
  check(ScalarKind::kI8, -128, -129);
  check(ScalarKind::kI8, 127, 128);
  check(ScalarKind::kU16, 65535, 65536);
  check(ScalarKind::kI16, -32768, 32768);
  check(ScalarKind::kU32, 4294967295LL, 4294967296LL);
  check(ScalarKind::kI32, -2147483648LL, 2147483648LL);

  FieldSpec f32{"x", ScalarKind::kF32, 0};
  EXPECT_EQ(coerce(f32, 1.5), SignalValue(1.5F));
  EXPECT_EQ(coerce(f32, std::int64_t{3}), SignalValue(3.0F));
  EXPECT_EQ(error_of([&] { coerce(f32, 1e39); }), SignalErrc::kRange);
  EXPECT_EQ(error_of([&] { coerce(f32, true); }), SignalErrc::kTypeMismatch);

  FieldSpec arr{"x", ScalarKind::kU8Array, 3};
  EXPECT_EQ(coerce(arr, std::vector<std::int64_t>{1, 2, 3}), SignalValue(std::vector<std::uint8_t>{1, 2, 3}));
  EXPECT_EQ(error_of([&] { coerce(arr, std::vector<std::int64_t>{1, 2}); }), SignalErrc::kRange);
  EXPECT_EQ(error_of([&] { coerce(arr, std::vector<std::int64_t>{1, 2, 256}); }), SignalErrc::kRange);
  EXPECT_EQ(error_of([&] { coerce(arr, std::int64_t{1}); }), SignalErrc::kTypeMismatch);
}

TEST(Serialize, FrozenPacking) {
  auto s = provider_store();
  s.set("ecuA/0x1234/0x8001/speed", std::int64_t{0x0102});
  s.set("ecuA/0x1234/0x8001/valid", true);
  EXPECT_TRUE(s.is_dirty(kSpeedEvent));
  EXPECT_EQ(s.serialize_event(kSpeedEvent), (std::vector<std::uint8_t>{0x01, 0x02, 0x01}));
  EXPECT_FALSE(s.is_dirty(kSpeedEvent));
}

TEST(Serialize, AllKindsFrozen) {
  PayloadLayout layout{{{"a", ScalarKind::kI16, 0},
                        {"b", ScalarKind::kF32, 0},
                        {"c", ScalarKind::kF64, 0},
                        {"d", ScalarKind::kU8Array, 2},
                        {"e", ScalarKind::kI32, 0}}};
  std::vector<SignalValue> v{std::int16_t{-2}, 1.0F, -2.0, std::vector<std::uint8_t>{0xAB, 0xCD}, std::int32_t{-1}};
  EXPECT_EQ(layout.size(), 2u + 4 + 8 + 2 + 4);
  auto bytes = pack(layout, v);
  const std::vector<std::uint8_t> expect{0xFF, 0xFE, 0x3F, 0x80, 0x00, 0x00, 0xC0, 0x00, 0x00, 0x00,
                                         0x00, 0x00, 0x00, 0x00, 0xAB, 0xCD, 0xFF, 0xFF, 0xFF, 0xFF};
  EXPECT_EQ(bytes, expect);
  EXPECT_EQ(unpack(layout, bytes), v);
}

TEST(Deserialize, FrozenAndSizeMismatch) {
  SignalStore s("ecuB");
  std::vector<std::uint8_t> bytes{0x01, 0x02, 0x01};
  s.deserialize_event(kSpeedEvent, speed_layout(), bytes);
  EXPECT_EQ(s.get("ecuB/0x1234/0x8001/speed"), SignalValue(std::uint16_t{0x0102}));
  EXPECT_EQ(s.get("ecuB/0x1234/0x8001/valid"), SignalValue(true));
  std::vector<std::uint8_t> short_bytes{0x01, 0x02};
  EXPECT_EQ(error_of([&] { s.deserialize_event(kSpeedEvent, speed_layout(), short_bytes); }),
            SignalErrc::kSizeMismatch);
  EXPECT_EQ(s.get("ecuB/0x1234/0x8001/speed"), SignalValue(std::uint16_t{0x0102}));
}

TEST(Deserialize, OneUpdatePerReception) {
  SignalStore s("ecuB");
  std::vector<SignalUpdate> seen;
  s.set_listener([&](const SignalUpdate& u) { seen.push_back(u); });
  std::vector<std::uint8_t> bytes{0x00, 0x07, 0x00};
  for (int i = 0; i < 3; ++i) s.deserialize_event(kSpeedEvent, speed_layout(), bytes);
  ASSERT_EQ(seen.size(), 3u);
  for (const auto& u : seen) {
    EXPECT_EQ(u.origin, SignalUpdate::Origin::kReceived);
    ASSERT_EQ(u.values.size(), 2u);
    EXPECT_EQ(u.values[0].second, SignalValue(std::uint16_t{7}));
  }
  EXPECT_LT(seen[0].version, seen[1].version);
  EXPECT_EQ(s.get("ecuB/0x1234/0x8001/speed"), SignalValue(std::uint16_t{7}));
}

TEST(Store, SetNotifiesListener) {
  auto s = provider_store();
  std::vector<SignalUpdate> seen;
  s.set_listener([&](const SignalUpdate& u) { seen.push_back(u); });
  s.set("ecuA/0x1234/0x8001/speed", std::int64_t{5});
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(seen[0].origin, SignalUpdate::Origin::kSet);
  EXPECT_EQ(seen[0].event, kSpeedEvent);
  EXPECT_EQ(seen[0].values[0].first, "ecuA/0x1234/0x8001/speed");
}

// Independent packer: writes each field by shifting, never via the codec helpers.
std::vector<std::uint8_t> oracle_pack(const PayloadLayout& layout, const std::vector<SignalValue>& values) {
  std::vector<std::uint8_t> out;
  auto be = [&out](std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  for (std::size_t i = 0; i < layout.fields.size(); ++i) {
    const auto& v = values[i];
    switch (layout.fields[i].kind) {
      case ScalarKind::kBool: be(std::get<bool>(v) ? 1 : 0, 1); break;
      case ScalarKind::kU8: be(std::get<std::uint8_t>(v), 1); break;
      case ScalarKind::kU16: be(std::get<std::uint16_t>(v), 2); break;
      case ScalarKind::kU32: be(std::get<std::uint32_t>(v), 4); break;
      case ScalarKind::kI8: be(static_cast<std::uint8_t>(std::get<std::int8_t>(v)), 1); break;
      case ScalarKind::kI16: be(static_cast<std::uint16_t>(std::get<std::int16_t>(v)), 2); break;
      case ScalarKind::kI32: be(static_cast<std::uint32_t>(std::get<std::int32_t>(v)), 4); break;
      case ScalarKind::kF32: {
        std::uint32_t raw = 0;
        float f = std::get<float>(v);
        std::memcpy(&raw, &f, 4);
        be(raw, 4);
        break;
      }
      case ScalarKind::kF64: {
        std::uint64_t raw = 0;
        double d = std::get<double>(v);
        std::memcpy(&raw, &d, 8);
        be(raw, 8);
        break;
      }
      case ScalarKind::kU8Array: {
        const auto& a = std::get<std::vector<std::uint8_t>>(v);
        out.insert(out.end(), a.begin(), a.end());
        break;
      }
    }
  }
  return out;
}

PayloadLayout random_layout(testing::Rng& rng) {
  PayloadLayout l;
  int n = static_cast<int>(testing::uniform(rng, 1, 16));
  for (int i = 0; i < n; ++i) {
    auto kind = static_cast<ScalarKind>(testing::uniform(rng, 0, 9));
    std::size_t len = kind == ScalarKind::kU8Array ? testing::uniform(rng, 1, 32) : 0;
    l.fields.push_back(FieldSpec{"f" + std::to_string(i), kind, len});
  }
  return l;
}

SignalValue random_value(testing::Rng& rng, const FieldSpec& f) {
  auto bits = [&rng] { return rng(); };
  switch (f.kind) {
    case ScalarKind::kBool: return testing::uniform(rng, 0, 1) == 1;
    case ScalarKind::kU8: return static_cast<std::uint8_t>(bits());
    case ScalarKind::kU16: return static_cast<std::uint16_t>(bits());
    case ScalarKind::kU32: return static_cast<std::uint32_t>(bits());
    case ScalarKind::kI8: return static_cast<std::int8_t>(bits());
    case ScalarKind::kI16: return static_cast<std::int16_t>(bits());
    case ScalarKind::kI32: return static_cast<std::int32_t>(bits());
    case ScalarKind::kF32: return std::uniform_real_distribution<float>(-1e6F, 1e6F)(rng);
    case ScalarKind::kF64: return std::uniform_real_distribution<double>(-1e12, 1e12)(rng);
    case ScalarKind::kU8Array: return testing::random_bytes(rng, f.array_length);
  }
  return false;
}

TEST(Property, PackMatchesOracleAndRoundTrips) {
  testing::Rng rng(77);
  for (int run = 0; run < 3000; ++run) {
    auto layout = random_layout(rng);
    std::vector<SignalValue> values;
    for (const auto& f : layout.fields) values.push_back(random_value(rng, f));
    auto bytes = pack(layout, values);
    ASSERT_EQ(bytes.size(), layout.size());
    ASSERT_EQ(bytes, oracle_pack(layout, values));
    ASSERT_EQ(unpack(layout, bytes), values);
  }
}

TEST(Property, StoreSerializeDeserializeIdentity) {
  testing::Rng rng(78);
  for (int run = 0; run < 500; ++run) {
    auto layout = random_layout(rng);
    EventKey key{static_cast<std::uint16_t>(testing::uniform(rng, 1, 0xFFFE)), 0x8001};
    SignalStore provider("p");
    SignalStore consumer("c");
    provider.add_event(key, layout);
    for (const auto& f : layout.fields) {
      auto v = random_value(rng, f);
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            const auto path = field_path("p", key, f.name);
            if constexpr (std::is_same_v<T, bool>) {
              provider.set(path, x);
            } else if constexpr (std::is_same_v<T, std::vector<std::uint8_t>>) {
              provider.set(path, std::vector<std::int64_t>(x.begin(), x.end()));
            } else if constexpr (std::is_floating_point_v<T>) {
              provider.set(path, static_cast<double>(x));
            } else {
              provider.set(path, static_cast<std::int64_t>(x));
            }
          },
          v);
    }
    auto bytes = provider.serialize_event(key);
    consumer.deserialize_event(key, layout, bytes);
    for (const auto& f : layout.fields) {
      ASSERT_EQ(consumer.get(field_path("c", key, f.name)), provider.get(field_path("p", key, f.name)));
    }
    ASSERT_EQ(consumer.serialize_event(key), bytes);
  }
}

}  // namespace
}  // namespace restbus::signals
