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

#include <algorithm>

#include "restbus/config.hpp"
#include "restbus/init_models.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

namespace restbus::config {
namespace {

ConfigError error_of(std::string_view xml) {
  try {
    parse_config(xml, "t.xml");
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "accepted:\n" << xml;
  return ConfigError(ConfigErrc::kIo, "", 0, "");
}

const char* kHead = R"(<network name="n">
  <layouts><layout id="l"><field name="x" type="uint8"/></layout></layouts>
)";

std::string doc(std::string_view services, std::string_view hosts, std::string_view topology) {
  return std::string(kHead) + "  <services>" + std::string(services) + "</services>\n  <hosts>" +
         std::string(hosts) + "</hosts>\n  <topology>" + std::string(topology) + "</topology>\n</network>\n";
}

const char* kSvc = R"(<service id="0x10" instance="1"><eventgroup id="1"><event id="0x8001" layout="l"/></eventgroup></service>)";

TEST(LoadConfig, TwoHostFixture) {
  auto c = testing::load_fixture("two_hosts.xml");
  EXPECT_EQ(c.name, "two_hosts");
  ASSERT_EQ(c.hosts.size(), 2u);
  EXPECT_EQ(c.switches, std::vector<std::string>{"sw0"});
  ASSERT_EQ(c.links.size(), 2u);
  EXPECT_EQ(c.links[0].bandwidth_bps, 100'000'000u);
  EXPECT_DOUBLE_EQ(c.links[0].propagation_delay_s, 5e-6);
  EXPECT_FALSE(c.links[0].queue_frames);
  const auto* a = c.find_host("ecuA");
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->endpoint.to_string(), "127.0.0.1:30501");
  ASSERT_EQ(a->provides.size(), 1u);
  EXPECT_EQ(a->provides[0].service, 0x1234);
  EXPECT_TRUE(a->provides[0].autostart);
  const auto* b = c.find_host("ecuB");
  ASSERT_EQ(b->consumes.size(), 1u);
  EXPECT_EQ(b->consumes[0].eventgroups, std::vector<std::uint16_t>{1});
  const auto* svc = c.find_service(0x1234, 1);
  ASSERT_NE(svc, nullptr);
  ASSERT_EQ(svc->events.size(), 1u);
  EXPECT_EQ(svc->events[0].id, 0x8001);
  EXPECT_EQ(svc->events[0].cycle_ms, 100u);
  const auto* layout = c.find_layout("speed_frame");
  ASSERT_NE(layout, nullptr);
  EXPECT_EQ(layout->layout.size(), 3u);
  EXPECT_EQ(c.sd, SdParams{});
}

TEST(LoadConfig, MissingFileIsIo) {
  try {
    load_config("/nonexistent/none.xml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.code(), ConfigErrc::kIo);
  }
}

TEST(LoadConfig, SyntaxErrorCarriesLine) {
  auto e = error_of("<network name=\"n\">\n  <hosts>\n  </host>\n</network>\n");
  EXPECT_EQ(e.code(), ConfigErrc::kXmlSyntax);
  EXPECT_EQ(e.line(), 3);
  EXPECT_EQ(e.file(), "t.xml");
}

TEST(LoadConfig, DuplicateServiceOnHost) {
  std::string svc2 = std::string(kSvc) + R"(<service id="0x10" instance="2"><eventgroup id="1"><event id="0x8001" layout="l"/></eventgroup></service>)";
  auto e = error_of(doc(svc2,
                        R"(<host name="a" ip="10.0.0.1" port="1"><provide service="0x10" instance="1"/><provide service="0x10" instance="2"/></host>)",
                        R"(<switch name="s"/><link a="a" b="s"/>)"));
  EXPECT_EQ(e.code(), ConfigErrc::kDuplicateId);
  EXPECT_GT(e.line(), 0);
}

TEST(LoadConfig, DanglingLayout) {
  auto e = error_of(doc(R"(<service id="0x10" instance="1">
<eventgroup id="1"><event id="0x8001" layout="nope"/></eventgroup></service>)",
                        "", ""));
  EXPECT_EQ(e.code(), ConfigErrc::kDanglingRef);
  EXPECT_EQ(e.line(), 4);
}

TEST(LoadConfig, RejectsBadInputs) {
  struct Case {
    std::string xml;
    ConfigErrc code;
  };
  const std::string host_a = R"(<host name="a" ip="10.0.0.1" port="1"/>)";
  const std::vector<Case> cases{
      {doc(kSvc, R"(<host name="a" ip="10.0.0.1" port="1" colour="red"/>)", ""), ConfigErrc::kBadValue},
      {doc(kSvc, R"(<host name="a" ip="10.0.0.1" port="1"><offer service="0x10" instance="1"/></host>)", ""),
       ConfigErrc::kBadValue},
      {doc(kSvc, R"(<host name="a" ip="10.0.0.300" port="1"/>)", ""), ConfigErrc::kBadValue},
      {doc(kSvc, R"(<host name="a" ip="10.0.0.1" port="0x1ffff"/>)", ""), ConfigErrc::kBadValue},
      {doc(kSvc, host_a + R"(<host name="a" ip="10.0.0.2" port="1"/>)", ""), ConfigErrc::kDuplicateId},
      {doc(kSvc, host_a + R"(<host name="b" ip="10.0.0.1" port="1"/>)", ""), ConfigErrc::kDuplicateId},
      {doc(kSvc, R"(<host name="a" ip="10.0.0.1" port="1"><provide service="0x11" instance="1"/></host>)", ""),
       ConfigErrc::kDanglingRef},
      {doc(kSvc, R"(<host name="a" ip="10.0.0.1" port="1"><consume service="0x10" instance="1"/></host>)", ""),
       ConfigErrc::kBadValue},
      {doc(kSvc,
           R"(<host name="a" ip="10.0.0.1" port="1"><consume service="0x10" instance="1"><eventgroup id="9"/></consume></host>)",
           ""),
       ConfigErrc::kDanglingRef},
      {doc(kSvc, host_a, R"(<link a="a" b="s"/>)"), ConfigErrc::kDanglingRef},
      {doc(kSvc, host_a, R"(<switch name="s"/><link a="a" b="s" bandwidth="fast"/>)"), ConfigErrc::kBadValue},
      {doc(kSvc, host_a, R"(<switch name="s"/><switch name="s"/>)"), ConfigErrc::kDuplicateId},
      {doc(kSvc, host_a + R"(<host name="b" ip="10.0.0.2" port="1"/>)",
           R"(<switch name="s"/><switch name="t"/><link a="a" b="s"/><link a="b" b="t"/>)"),
       ConfigErrc::kBadValue},
      {doc(kSvc, host_a, R"(<switch name="s"/><switch name="t"/><link a="a" b="s"/><link a="s" b="t"/><link a="t" b="s"/>)"),
       ConfigErrc::kBadValue},
      {doc(R"(<service id="0x10" instance="1"><eventgroup id="1"><event id="0x8001" layout="l"/><event id="0x8001" layout="l"/></eventgroup></service>)",
           "", ""),
       ConfigErrc::kDuplicateId},
      {doc(R"(<service id="0x10" instance="1"><eventgroup id="1"><event-ref id="0x8009"/></eventgroup></service>)", "", ""),
       ConfigErrc::kDanglingRef},
      {doc(R"(<service id="0xFFFF" instance="1"/>)", "", ""), ConfigErrc::kBadValue},
      {R"(<network name="n"><sd ttl="0"/></network>)", ConfigErrc::kBadValue},
      {R"(<network name="n"><sd renew-fraction="1.2"/></network>)", ConfigErrc::kBadValue},
      {R"(<network name="n"><sd multicast="10.0.0.1:30490"/></network>)", ConfigErrc::kBadValue},
      {R"(<network name="n"><layouts><layout id="l"><field name="x" type="uint16" array-length="4"/></layout></layouts></network>)",
       ConfigErrc::kBadValue},
      {R"(<network name="n"><layouts><layout id="l"><field name="x" type="string"/></layout></layouts></network>)",
       ConfigErrc::kBadValue},
      {R"(<network name="n"><hosts/><hosts/></network>)", ConfigErrc::kDuplicateId},
      {R"(<net/>)", ConfigErrc::kBadValue},
  };
  for (const auto& c : cases) {
    auto e = error_of(c.xml);
    EXPECT_EQ(e.code(), c.code) << e.what() << "\n" << c.xml;
    EXPECT_GT(e.line(), 0) << e.what();
    EXPECT_EQ(e.file(), "t.xml");
  }
}

TEST(LoadConfig, EmptyHostsIsValid) {
  auto c = parse_config(R"(<network name="empty"><hosts/></network>)");
  EXPECT_TRUE(c.hosts.empty());
  auto init = init_models(c);
  EXPECT_TRUE(init.hosts.empty());
  EXPECT_TRUE(init.signal_tables.empty());
}

TEST(LoadConfig, HexAndDecimalIds) {
  auto a = parse_config(doc(kSvc, "", ""));
  auto b = parse_config(doc(R"(<service id="16" instance="0x0001"><eventgroup id="0x1"><event id="32769" layout="l"/></eventgroup></service>)", "", ""));
  EXPECT_EQ(a.services, b.services);
}

TEST(LoadConfig, LoadIsPure) {
  auto path = testing::fixture("two_hosts.xml");
  EXPECT_EQ(load_config(path), load_config(path));
}

TEST(InitModels, SignalTablesCoverProvidedEvents) {
  auto init = init_models(testing::load_fixture("two_hosts.xml"));
  ASSERT_EQ(init.hosts.size(), 2u);
  ASSERT_EQ(init.signal_tables.size(), 2u);
  const auto& a = init.signal_tables[0];
  EXPECT_EQ(a.host(), "ecuA");
  EXPECT_EQ(a.size(), 2u);
  EXPECT_NO_THROW(a.get("ecuA/0x1234/0x8001/speed"));
  EXPECT_NO_THROW(a.get("ecuA/0x1234/0x8001/valid"));
  EXPECT_EQ(init.signal_tables[1].size(), 0u);
  EXPECT_EQ(init.topology.host_count, 2u);
  EXPECT_EQ(init.topology.node_names.size(), 3u);
  EXPECT_EQ(init.topology.links.size(), 2u);
}

NetworkConfig random_config(testing::Rng& rng) {
  NetworkConfig c;
  c.name = "r" + std::to_string(testing::uniform(rng, 0, 999));
  c.sd.offer_cycle_ms = static_cast<std::uint32_t>(testing::uniform(rng, 1, 5000));
  c.sd.find_cycle_ms = static_cast<std::uint32_t>(testing::uniform(rng, 1, 5000));
  c.sd.ttl_s = static_cast<std::uint32_t>(testing::uniform(rng, 1, 100));
  c.sd.renew_fraction = testing::uniform(rng, 1, 99) / 100.0;
  c.sd.initial_delay_min_ms = static_cast<std::uint32_t>(testing::uniform(rng, 0, 50));
  c.sd.initial_delay_max_ms = c.sd.initial_delay_min_ms + static_cast<std::uint32_t>(testing::uniform(rng, 0, 50));
  c.sd.renewal = testing::uniform(rng, 0, 1);
  int layouts = static_cast<int>(testing::uniform(rng, 1, 3));
  for (int i = 0; i < layouts; ++i) {
    LayoutDef l{"layout" + std::to_string(i), {}};
    int fields = static_cast<int>(testing::uniform(rng, 1, 5));
    for (int f = 0; f < fields; ++f) {
      auto kind = static_cast<signals::ScalarKind>(testing::uniform(rng, 0, 9));
      l.layout.fields.push_back({"f" + std::to_string(f), kind,
                                 kind == signals::ScalarKind::kU8Array ? testing::uniform(rng, 1, 64) : 0});
    }
    c.layouts.push_back(l);
  }
  int services = static_cast<int>(testing::uniform(rng, 1, 4));
  for (int s = 0; s < services; ++s) {
    ServiceDef svc;
    svc.id = static_cast<std::uint16_t>(0x100 + s);
    svc.instance = static_cast<std::uint16_t>(testing::uniform(rng, 1, 3));
    svc.major_version = static_cast<std::uint8_t>(testing::uniform(rng, 0, 255));
    svc.minor_version = static_cast<std::uint32_t>(testing::uniform(rng, 0, 1000));
    int events = static_cast<int>(testing::uniform(rng, 1, 4));
    for (int e = 0; e < events; ++e) {
      svc.events.push_back({static_cast<std::uint16_t>(0x8001 + e), c.layouts[testing::uniform(rng, 0, layouts - 1)].id,
                            static_cast<std::uint32_t>(testing::uniform(rng, 0, 1000))});
    }
    EventgroupDef g1{1, {}};
    EventgroupDef g2{2, {}};
    for (const auto& e : svc.events) (testing::uniform(rng, 0, 1) ? g1 : g2).event_ids.push_back(e.id);
    // An event may sit in both groups.
    if (!g1.event_ids.empty() && testing::uniform(rng, 0, 1)) g2.event_ids.push_back(g1.event_ids.front());
    if (!g1.event_ids.empty()) svc.eventgroups.push_back(g1);
    if (!g2.event_ids.empty()) svc.eventgroups.push_back(g2);
    // Events are declared inside their first eventgroup, so the parsed order
    // follows the groups.
    std::vector<EventDef> ordered;
    for (const auto& g : svc.eventgroups) {
      for (auto id : g.event_ids) {
        if (std::none_of(ordered.begin(), ordered.end(), [id](const EventDef& e) { return e.id == id; })) {
          ordered.push_back(*svc.find_event(id));
        }
      }
    }
    svc.events = ordered;
    c.services.push_back(svc);
  }
  int hosts = static_cast<int>(testing::uniform(rng, 1, 5));
  c.switches.push_back("sw0");
  if (testing::uniform(rng, 0, 1)) {
    c.switches.push_back("sw1");
    c.links.push_back({"sw0", "sw1", 1'000'000'000, 1e-6, std::size_t{64}});
  }
  for (int h = 0; h < hosts; ++h) {
    HostDef host;
    host.name = "h" + std::to_string(h);
    host.endpoint = Endpoint{Ipv4Address{0x0A000001u + static_cast<std::uint32_t>(h)},
                             static_cast<std::uint16_t>(testing::uniform(rng, 1, 65535))};
    for (const auto& svc : c.services) {
      switch (testing::uniform(rng, 0, 2)) {
        case 0: host.provides.push_back({svc.id, svc.instance, testing::uniform(rng, 0, 1) == 1}); break;
        case 1: {
          ConsumeDecl d{svc.id, svc.instance, svc.major_version, {}};
          for (const auto& g : svc.eventgroups) d.eventgroups.push_back(g.id);
          host.consumes.push_back(d);
          break;
        }
        default: break;
      }
    }
    c.hosts.push_back(host);
    c.links.push_back({host.name, c.switches[testing::uniform(rng, 0, c.switches.size() - 1)],
                       std::uint64_t{1'000'000} * testing::uniform(rng, 1, 1000),
                       testing::uniform(rng, 0, 100) * 1e-6, std::nullopt});
  }
  return c;
}

TEST(Property, XmlRoundTrip) {
  auto fixture = testing::load_fixture("two_hosts.xml");
  EXPECT_EQ(parse_config(to_xml(fixture)), fixture);
  testing::Rng rng(12);
  for (int run = 0; run < 300; ++run) {
    auto c = random_config(rng);
    auto xml = to_xml(c);
    NetworkConfig back;
    ASSERT_NO_THROW(back = parse_config(xml)) << xml;
    ASSERT_EQ(back, c) << xml;
    ASSERT_EQ(to_xml(back), xml);
  }
}

}  // namespace
}  // namespace restbus::config
