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
#include <httplib.h>

#include <json.hpp>
#include <mutex>
#include <thread>

#include "restbus/control_api.hpp"
#include "support/fixtures.hpp"

namespace restbus::api {
namespace {

using json = nlohmann::json;
using namespace std::chrono_literals;

class ControlApiTest : public ::testing::Test {
 protected:
  void SetUp() override {
    rt_ = std::make_unique<Runtime>(testing::load_fixture("two_hosts.xml"), RuntimeOptions{.mode = Mode::kRealtime});
    rt_->add_listener([this](const RuntimeEvent& ev) {
      const auto* f = std::get_if<FrameTrace>(&ev);
      if (!f || f->outgoing || f->host != "ecuB" || !f->frame.payload) return;
      auto m = wire::decode_message(*f->frame.payload);
      if (m.header.service_id != 0x1234) return;
      std::lock_guard lock(mu_);
      notifications_.push_back({WallClock::now(), m.payload});
    });
    api_ = std::make_unique<ControlApi>(*rt_, ApiOptions{.port = 0, .write_timeout = 1000ms});
    api_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", api_->port());
    client_->set_read_timeout(5, 0);
  }

  void TearDown() override {
    stop_loop();
    api_->stop();
  }

  void start_loop() {
    loop_ = std::thread([this] { rt_->run_realtime(std::numeric_limits<double>::infinity()); });
    while (!rt_->running()) std::this_thread::sleep_for(1ms);
  }

  void stop_loop() {
    if (!loop_.joinable()) return;
    rt_->request_stop();
    loop_.join();
  }

  json get(const std::string& path, int expect = 200) {
    auto r = client_->Get(path);
    EXPECT_TRUE(r) << path;
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << " " << r->body;
    return json::parse(r->body);
  }

  std::pair<int, json> put(const std::string& path, const std::string& body) {
    auto r = client_->Put(path, body, "application/json");
    if (!r) return {0, {}};
    return {r->status, json::parse(r->body)};
  }

  std::pair<int, json> post(const std::string& path) {
    auto r = client_->Post(path);
    if (!r) return {0, {}};
    return {r->status, json::parse(r->body)};
  }

  std::string consumer_state() {
    auto subs = get("/api/subscriptions");
    for (const auto& c : subs["consumers"]) return c["state"];
    return "";
  }

  bool wait_state(const std::string& want, std::chrono::milliseconds timeout = 3000ms) {
    auto until = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < until) {
      if (consumer_state() == want) return true;
      std::this_thread::sleep_for(20ms);
    }
    return false;
  }

  struct Seen {
    WallClock::time_point at;
    std::vector<std::uint8_t> payload;
  };

  std::unique_ptr<Runtime> rt_;
  std::unique_ptr<ControlApi> api_;
  std::unique_ptr<httplib::Client> client_;
  std::thread loop_;
  std::mutex mu_;
  std::vector<Seen> notifications_;
};

TEST_F(ControlApiTest, ReadsBeforeRunAndWritesRefused) {
  auto subs = get("/api/subscriptions");
  EXPECT_TRUE(subs["subscriptions"].empty());
  EXPECT_EQ(subs["consumers"][0]["state"], "WANTED");
  auto hosts = get("/api/hosts");
  ASSERT_EQ(hosts["hosts"].size(), 2u);
  EXPECT_EQ(hosts["hosts"][0]["name"], "ecuA");
  EXPECT_EQ(hosts["hosts"][0]["provided"][0]["service"], "0x1234");
  auto [status, body] = put("/api/signals/ecuA/0x1234/0x8001/speed", R"({"value": 1})");
  EXPECT_EQ(status, 409);
  EXPECT_EQ(body["error"], "NOT_RUNNING");
  auto [stop_status, stop_body] = post("/api/services/0x1234/0x0001:stop");
  EXPECT_EQ(stop_status, 409) << stop_body;
  EXPECT_EQ(get("/api/nothing", 404).is_null(), false);
}

TEST_F(ControlApiTest, PutShowsInNextNotification) {
  start_loop();
  ASSERT_TRUE(wait_state("SUBSCRIBED"));
  auto [status, body] = put("/api/signals/ecuA/0x1234/0x8001/speed", R"({"value": "0x1234"})");
  ASSERT_EQ(status, 200) << body;
  EXPECT_EQ(body["value"], 0x1234);
  auto acked = WallClock::now();
  std::this_thread::sleep_for(300ms);
  {
    std::lock_guard lock(mu_);
    auto next = std::find_if(notifications_.begin(), notifications_.end(), [&](const Seen& s) { return s.at > acked; });
    ASSERT_NE(next, notifications_.end());
    ASSERT_GE(next->payload.size(), 2u);
    EXPECT_EQ(next->payload[0], 0x12);
    EXPECT_EQ(next->payload[1], 0x34);
  }
  auto got = get("/api/signals/ecuA/0x1234/0x8001/speed");
  EXPECT_EQ(got["value"], 0x1234);
  EXPECT_EQ(got["type"], "uint16");
  auto received = get("/api/signals/ecuB/0x1234/0x8001/speed");
  EXPECT_EQ(received["value"], 0x1234);
  EXPECT_GE(get("/api/signals")["signals"].size(), 4u);
}

TEST_F(ControlApiTest, WriteErrors) {
  start_loop();
  struct Case {
    std::string path;
    std::string body;
    int status;
    std::string code;
  };
  const std::vector<Case> cases{
      {"/api/signals/ecuA/0x1234/0x8001/valid", R"({"value": 7})", 422, "TYPE_MISMATCH"},
      {"/api/signals/ecuA/0x1234/0x8001/speed", R"({"value": 70000})", 422, "RANGE"},
      {"/api/signals/ecuA/0x1234/0x8001/speed", R"({"value": "fast"})", 422, "TYPE_MISMATCH"},
      {"/api/signals/ecuA/0x1234/0x8001/speed", R"({"speed": 1})", 400, "BAD_REQUEST"},
      {"/api/signals/ecuA/0x1234/0x8001/speed", "not json", 400, "BAD_REQUEST"},
      {"/api/signals/ecuA/0x1234/0x8001/rpm", R"({"value": 1})", 404, "UNKNOWN_PATH"},
      {"/api/signals/ecuA/speed", R"({"value": 1})", 404, "UNKNOWN_PATH"},
  };
  for (const auto& c : cases) {
    auto [status, body] = put(c.path, c.body);
    EXPECT_EQ(status, c.status) << c.path << " " << c.body;
    EXPECT_EQ(body["error"], c.code) << c.path << " " << c.body;
  }
  EXPECT_EQ(get("/api/signals/ecuA/0x1234/0x8001/rpm", 404)["error"], "UNKNOWN_PATH");
  EXPECT_EQ(post("/api/services/0x9999/0x0001:stop").first, 404);
  EXPECT_EQ(post("/api/services/zz/0x0001:start").first, 404);
}

TEST_F(ControlApiTest, StopAndStartService) {
  start_loop();
  ASSERT_TRUE(wait_state("SUBSCRIBED"));
  EXPECT_EQ(get("/api/subscriptions")["subscriptions"].size(), 1u);
  auto [status, body] = post("/api/services/0x1234/0x0001:stop");
  ASSERT_EQ(status, 200) << body;
  EXPECT_TRUE(get("/api/subscriptions")["subscriptions"].empty());
  EXPECT_TRUE(wait_state("WANTED"));
  EXPECT_FALSE(get("/api/hosts")["hosts"][0]["provided"][0]["offering"].get<bool>());
  EXPECT_EQ(post("/api/services/0x1234/0x0001:start").first, 200);
  EXPECT_TRUE(wait_state("SUBSCRIBED"));
}

TEST_F(ControlApiTest, MetricsHistogram) {
  start_loop();
  ASSERT_TRUE(wait_state("SUBSCRIBED"));
  auto list = get("/api/metrics");
  EXPECT_GE(list["series"].size(), 4u);
  auto h = get("/api/metrics/pacing_overshoot?bucket=0.001");
  EXPECT_EQ(h["bucket_width"], 0.001);
  std::uint64_t sum = 0;
  for (const auto& b : h["buckets"]) sum += b["count"].get<std::uint64_t>();
  EXPECT_EQ(sum, h["total"].get<std::uint64_t>());
  EXPECT_GT(sum, 0u);
  EXPECT_EQ(get("/api/metrics/nope", 404)["error"], "UNKNOWN_SERIES");
  EXPECT_EQ(get("/api/metrics/send_delay?bucket=-1", 422)["error"], "RANGE");
}

TEST_F(ControlApiTest, StreamCarriesSignalUpdates) {
  start_loop();
  std::string received;
  std::mutex m;
  std::atomic<bool> done{false};
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", api_->port());
    c.Get("/api/stream", [&](const char* data, std::size_t n) {
      std::lock_guard lock(m);
      received.append(data, n);
      return !done.load() && received.find("\"origin\":\"set\"") == std::string::npos;
    });
  });
  std::this_thread::sleep_for(200ms);
  auto [status, body] = put("/api/signals/ecuA/0x1234/0x8001/valid", R"({"value": true})");
  EXPECT_EQ(status, 200) << body;
  auto until = std::chrono::steady_clock::now() + 3s;
  while (std::chrono::steady_clock::now() < until) {
    {
      std::lock_guard lock(m);
      if (received.find("\"origin\":\"set\"") != std::string::npos) break;
    }
    std::this_thread::sleep_for(10ms);
  }
  done = true;
  reader.join();
  EXPECT_NE(received.find("event: signal"), std::string::npos);
  EXPECT_NE(received.find("ecuA/0x1234/0x8001/valid"), std::string::npos);
}

TEST_F(ControlApiTest, WritesAfterStopAreRefused) {
  start_loop();
  stop_loop();
  auto [status, body] = put("/api/signals/ecuA/0x1234/0x8001/speed", R"({"value": 1})");
  EXPECT_EQ(status, 409);
  EXPECT_EQ(body["error"], "NOT_RUNNING");
}

}  // namespace
}  // namespace restbus::api
