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


#include "restbus/control_api.hpp"

#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

namespace restbus::api {
namespace {

using nlohmann::json;

std::string hex(std::uint16_t id) { return fmt::format("{:#06x}", id); }

json to_json(const signals::SignalValue& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::vector<std::uint8_t>>) {
          return json(std::vector<unsigned>(x.begin(), x.end()));
        } else if constexpr (std::is_same_v<T, std::uint8_t> || std::is_same_v<T, std::int8_t>) {
          return json(static_cast<int>(x));
        } else {
          return json(x);
        }
      },
      v);
}

std::optional<std::uint16_t> parse_id(const std::string& s) {
  try {
    std::size_t used = 0;
    unsigned long v = std::stoul(s, &used, 0);
    if (used != s.size() || v > 0xFFFF) return std::nullopt;
    return static_cast<std::uint16_t>(v);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

struct Reply {
  int status = 200;
  json body;
};

Reply error(int status, std::string_view code, std::string_view detail) {
  return Reply{status, json{{"error", code}, {"detail", detail}}};
}

void send(httplib::Response& res, const Reply& reply) {
  res.status = reply.status;
  res.set_content(reply.body.dump(), "application/json");
}

json host_json(const HostSnapshot& h) {
  json provided = json::array();
  for (const auto& p : h.model.provided) {
    json events = json::array();
    for (const auto& e : p.events) {
      events.push_back({{"id", hex(e.event_id)}, {"cycle_ms", e.cycle_ms}, {"layout", e.layout_id}});
    }
    json groups = json::array();
    for (const auto& g : p.eventgroups) {
      json ids = json::array();
      for (auto id : g.event_ids) ids.push_back(hex(id));
      groups.push_back({{"id", hex(g.eventgroup_id)}, {"events", ids}});
    }
    bool excluded = std::find(h.excluded_services.begin(), h.excluded_services.end(),
                              std::pair{p.service_id, p.instance_id}) != h.excluded_services.end();
    provided.push_back({{"service", hex(p.service_id)},
                        {"instance", hex(p.instance_id)},
                        {"major", p.major_version},
                        {"minor", p.minor_version},
                        {"offering", p.offering},
                        {"detached", excluded},
                        {"eventgroups", groups},
                        {"events", events}});
  }
  json consumed = json::array();
  for (const auto& c : h.model.consumed) {
    json groups = json::array();
    for (auto id : c.desired_eventgroups) groups.push_back(hex(id));
    bool excluded = std::find(h.excluded_services.begin(), h.excluded_services.end(),
                              std::pair{c.service_id, c.instance_id}) != h.excluded_services.end();
    consumed.push_back({{"service", hex(c.service_id)},
                        {"instance", hex(c.instance_id)},
                        {"major", c.major_version},
                        {"eventgroups", groups},
                        {"state", model::to_string(c.state)},
                        {"detached", excluded},
                        {"provider", c.provider ? json(c.provider->to_string()) : json(nullptr)}});
  }
  return {{"name", h.name},
          {"endpoint", h.endpoint.to_string()},
          {"detached", h.detached},
          {"provided", provided},
          {"consumed", consumed}};
}

json signal_json(const std::string& host, const signals::SignalField& f) {
  return {{"path", f.path},
          {"host", host},
          {"service", hex(f.event.service_id)},
          {"event", hex(f.event.event_id)},
          {"type", signals::to_string(f.spec.kind)},
          {"value", to_json(f.value)}};
}

std::optional<signals::SignalInput> parse_input(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(INT64_MAX)) return std::nullopt;
    return static_cast<std::int64_t>(u);
  }
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s.size() < 3 || (s.rfind("0x", 0) != 0 && s.rfind("0X", 0) != 0)) return std::nullopt;
    try {
      std::size_t used = 0;
      std::int64_t x = std::stoll(s.substr(2), &used, 16);
      if (used != s.size() - 2) return std::nullopt;
      return x;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (v.is_array()) {
    std::vector<std::int64_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) return std::nullopt;
      out.push_back(e.get<std::int64_t>());
    }
    return out;
  }
  return std::nullopt;
}

Reply signal_error(const signals::SignalError& e) {
  switch (e.code()) {
    case signals::SignalErrc::kUnknownPath:
    case signals::SignalErrc::kUnknownEvent:
      return error(404, "UNKNOWN_PATH", e.what());
    case signals::SignalErrc::kTypeMismatch:
      return error(422, "TYPE_MISMATCH", e.what());
    case signals::SignalErrc::kRange:
    case signals::SignalErrc::kSizeMismatch:
      return error(422, "RANGE", e.what());
  }
  return error(500, "INTERNAL", e.what());
}

// Bounded broadcast log; each stream client keeps its own cursor.
class StreamHub {
 public:
  explicit StreamHub(std::size_t capacity) : capacity_(capacity) {}

  void push(std::string item) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(item));
      ++end_;
      if (items_.size() > capacity_) items_.pop_front();
    }
    cv_.notify_all();
  }

  std::uint64_t end() const {
    std::lock_guard lock(mu_);
    return end_;
  }

  /// Items from `cursor` on, waiting up to `timeout` for the first one.
  /// Returns false once closed.
  bool take(std::uint64_t& cursor, std::chrono::milliseconds timeout, std::vector<std::string>& out) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || end_ > cursor; });
    if (closed_) return false;
    std::uint64_t first = end_ - items_.size();
    if (cursor < first) cursor = first;
    for (; cursor < end_; ++cursor) out.push_back(items_[cursor - first]);
    return true;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> items_;
  std::uint64_t end_ = 0;
  std::size_t capacity_;
  bool closed_ = false;
};

std::string sse(std::string_view event, const json& data) {
  return fmt::format("event: {}\ndata: {}\n\n", event, data.dump());
}

}  // namespace

struct ControlApi::Impl {
  Impl(Runtime& rt, ApiOptions opts) : runtime(rt), options(std::move(opts)), hub(std::make_shared<StreamHub>(options.stream_backlog)) {}

  Runtime& runtime;
  ApiOptions options;
  std::shared_ptr<StreamHub> hub;
  httplib::Server server;
  std::thread thread;
  int port = -1;

  std::shared_ptr<const Snapshot> snapshot() const {
    auto s = runtime.snapshot();
    if (!s) throw std::logic_error("no snapshot published");
    return s;
  }

  // Runs `fn` on the loop thread and waits for its reply.
  Reply on_loop(std::function<Reply()> fn) {
    if (!runtime.running()) return error(409, "NOT_RUNNING", "the simulation is not running");
    auto promise = std::make_shared<std::promise<Reply>>();
    auto future = promise->get_future();
    runtime.inbox().post([promise, fn = std::move(fn)] {
      try {
        promise->set_value(fn());
      } catch (...) {
        promise->set_exception(std::current_exception());
      }
    });
    if (future.wait_for(options.write_timeout) != std::future_status::ready) {
      return error(409, "NOT_RUNNING", "the simulation did not acknowledge the command");
    }
    return future.get();
  }

  void routes() {
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404) return send(res, error(404, "UNKNOWN_PATH", req.path));
      send(res, error(res.status, "ERROR", httplib::status_message(res.status)));
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "unknown";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send(res, error(500, "INTERNAL", what));
    });
    server.Get("/api/hosts", [this](const httplib::Request&, httplib::Response& res) {
      auto s = snapshot();
      json hosts = json::array();
      for (const auto& h : s->hosts) hosts.push_back(host_json(h));
      send(res, {200, {{"t", s->now}, {"seq", s->seq}, {"running", s->running}, {"hosts", hosts}}});
    });

    server.Get("/api/subscriptions", [this](const httplib::Request&, httplib::Response& res) {
      auto s = snapshot();
      json subs = json::array();
      json consumers = json::array();
      for (const auto& h : s->hosts) {
        for (const auto& r : h.model.subscribers) {
          if (r.expires_at <= s->now) continue;
          subs.push_back({{"provider", h.name},
                          {"subscriber", r.subscriber.to_string()},
                          {"service", hex(r.service_id)},
                          {"instance", hex(r.instance_id)},
                          {"eventgroup", hex(r.eventgroup_id)},
                          {"ttl", r.ttl_s},
                          {"expires_at", r.expires_at}});
        }
        for (const auto& c : h.model.consumed) {
          json acked = json::array();
          for (auto id : c.acked_eventgroups) acked.push_back(hex(id));
          consumers.push_back({{"host", h.name},
                               {"service", hex(c.service_id)},
                               {"instance", hex(c.instance_id)},
                               {"state", model::to_string(c.state)},
                               {"provider", c.provider ? json(c.provider->to_string()) : json(nullptr)},
                               {"acked_eventgroups", acked},
                               {"expires_at", c.state == model::ConsumerState::kSubscribed
                                                  ? json(c.subscription_expires_at)
                                                  : json(nullptr)}});
        }
      }
      send(res, {200, {{"t", s->now}, {"seq", s->seq}, {"subscriptions", subs}, {"consumers", consumers}}});
    });

    server.Get("/api/signals", [this](const httplib::Request&, httplib::Response& res) {
      auto s = snapshot();
      json out = json::array();
      for (const auto& h : s->hosts) {
        for (const auto& f : h.signals) out.push_back(signal_json(h.name, f));
      }
      send(res, {200, {{"t", s->now}, {"seq", s->seq}, {"signals", out}}});
    });

    server.Get(R"(/api/signals/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto path = signals::normalize_path(req.matches[1].str());
      if (!path) return send(res, error(404, "UNKNOWN_PATH", req.matches[1].str()));
      auto s = snapshot();
      for (const auto& h : s->hosts) {
        for (const auto& f : h.signals) {
          if (f.path == *path) {
            json j = signal_json(h.name, f);
            j["t"] = s->now;
            return send(res, {200, j});
          }
        }
      }
      send(res, error(404, "UNKNOWN_PATH", *path));
    });

    server.Put(R"(/api/signals/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto path = signals::normalize_path(req.matches[1].str());
      if (!path) return send(res, error(404, "UNKNOWN_PATH", req.matches[1].str()));
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains("value")) {
        return send(res, error(400, "BAD_REQUEST", R"(expected {"value": ...})"));
      }
      auto input = parse_input(body["value"]);
      if (!input) return send(res, error(422, "TYPE_MISMATCH", body["value"].dump()));
      send(res, on_loop([this, p = *path, v = *input]() -> Reply {
             try {
               runtime.set_signal(p, v);
             } catch (const signals::SignalError& e) {
               return signal_error(e);
             }
             std::string host = p.substr(0, p.find('/'));
             json value = to_json(runtime.node(host)->store().get(p));
             return Reply{200, {{"path", p}, {"value", value}, {"t", runtime.now()}}};
           }));
    });

    server.Post(R"(/api/services/([^/]+)/([^:/]+):(start|stop))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  auto svc = parse_id(req.matches[1].str());
                  auto inst = parse_id(req.matches[2].str());
                  if (!svc || !inst) {
                    return send(res, error(404, "UNKNOWN_SERVICE",
                                           fmt::format("{}/{}", req.matches[1].str(), req.matches[2].str())));
                  }
                  bool start = req.matches[3].str() == "start";
                  send(res, on_loop([this, s = *svc, i = *inst, start]() -> Reply {
                         try {
                           if (start) {
                             runtime.start_service(s, i);
                           } else {
                             runtime.stop_service(s, i);
                           }
                         } catch (const model::ModelError& e) {
                           return error(404, "UNKNOWN_SERVICE", e.what());
                         }
                         return Reply{200,
                                      {{"service", hex(s)},
                                       {"instance", hex(i)},
                                       {"action", start ? "start" : "stop"},
                                       {"t", runtime.now()}}};
                       }));
                });

    server.Get(R"(/api/metrics/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      std::string name = req.matches[1].str();
      double width = 1e-4;
      if (req.has_param("bucket")) {
        try {
          width = std::stod(req.get_param_value("bucket"));
        } catch (const std::exception&) {
          return send(res, error(422, "RANGE", "bucket must be a positive number of seconds"));
        }
      }
      auto& reg = runtime.metrics();
      if (!reg.has(name)) return send(res, error(404, "UNKNOWN_SERIES", name));
      metrics::Histogram h;
      try {
        h = reg.histogram(name, width);
      } catch (const metrics::MetricsError& e) {
        return send(res, error(422, "RANGE", e.what()));
      }
      auto sum = reg.summary(name);
      json buckets = json::array();
      for (const auto& b : h.buckets) {
        buckets.push_back({{"index", b.index}, {"lower", b.index * h.bucket_width}, {"count", b.count}});
      }
      send(res, {200,
                 {{"series", name},
                  {"bucket_width", h.bucket_width},
                  {"total", h.total},
                  {"buckets", buckets},
                  {"summary",
                   {{"count", sum.count},
                    {"min", sum.min},
                    {"mean", sum.mean},
                    {"p50", sum.p50},
                    {"p99", sum.p99},
                    {"max", sum.max}}}}});
    });

    server.Get("/api/metrics", [this](const httplib::Request&, httplib::Response& res) {
      json names = json::array();
      for (const auto& n : runtime.metrics().names()) names.push_back({{"series", n}, {"count", runtime.metrics().count(n)}});
      send(res, {200, {{"series", names}}});
    });

    server.Get("/api/stream", [this](const httplib::Request&, httplib::Response& res) {
      auto cursor = std::make_shared<std::uint64_t>(hub->end());
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [hub = hub, cursor](std::size_t, httplib::DataSink& sink) {
        std::vector<std::string> items;
        if (!hub->take(*cursor, std::chrono::milliseconds(500), items)) {
          sink.done();
          return false;
        }
        if (items.empty()) items.emplace_back(": keepalive\n\n");
        for (const auto& item : items) {
          if (!sink.write(item.data(), item.size())) return false;
        }
        return true;
      });
    });
  }

  void listen_to_runtime() {
    runtime.add_listener([hub = hub](const RuntimeEvent& ev) {
      if (const auto* s = std::get_if<SignalEvent>(&ev)) {
        json values = json::array();
        for (const auto& [path, v] : s->update.values) values.push_back({{"path", path}, {"value", to_json(v)}});
        hub->push(sse("signal", {{"host", s->host},
                                 {"t", s->t},
                                 {"origin", s->update.origin == signals::SignalUpdate::Origin::kSet ? "set" : "received"},
                                 {"service", hex(s->update.event.service_id)},
                                 {"event", hex(s->update.event.event_id)},
                                 {"version", s->update.version},
                                 {"values", values}}));
      } else if (const auto* o = std::get_if<ObservationEvent>(&ev)) {
        const auto& x = o->observation;
        json j = {{"host", o->host},
                  {"t", x.at},
                  {"kind", sd::to_string(x.kind)},
                  {"service", hex(x.service_id)},
                  {"instance", hex(x.instance_id)},
                  {"peer", x.peer.to_string()}};
        if (x.kind == sd::SdObservation::Kind::kConsumerState) j["state"] = model::to_string(x.state);
        if (x.eventgroup_id != 0) j["eventgroup"] = hex(x.eventgroup_id);
        hub->push(sse("sd", j));
      }
    });
  }
};

ControlApi::ControlApi(Runtime& runtime, ApiOptions options) : impl_(std::make_unique<Impl>(runtime, std::move(options))) {
  impl_->listen_to_runtime();
  impl_->routes();
  runtime.enable_snapshots(true);
}

ControlApi::~ControlApi() { stop(); }

void ControlApi::start() {
  auto& srv = impl_->server;
  int port = impl_->options.port;
  if (port == 0) {
    port = srv.bind_to_any_port(impl_->options.bind_address);
  } else if (!srv.bind_to_port(impl_->options.bind_address, port)) {
    port = -1;
  }
  if (port < 0) {
    throw std::runtime_error(fmt::format("cannot bind control API to {}:{}", impl_->options.bind_address,
                                         impl_->options.port));
  }
  impl_->port = port;
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  spdlog::info("control API on http://{}:{}/api", impl_->options.bind_address, port);
}

void ControlApi::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->hub->close();
  impl_->server.stop();
  impl_->thread.join();
}

int ControlApi::port() const { return impl_->port; }

}  // namespace restbus::api
