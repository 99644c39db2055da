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


#include "restbus/gateway.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace restbus::gateway {
namespace {

sockaddr_in to_sockaddr(const Endpoint& e) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(e.address.value);
  sa.sin_port = htons(e.port);
  return sa;
}

Endpoint from_sockaddr(const sockaddr_in& sa) {
  return Endpoint{Ipv4Address{ntohl(sa.sin_addr.s_addr)}, ntohs(sa.sin_port)};
}

std::uint16_t parse_id(std::string_view text, std::string_view whole) {
  std::string s(text);
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || v > 0xFFFF) {
    throw GatewayError(GatewayErrc::kBadDetachment, fmt::format("bad id '{}' in '{}'", text, whole));
  }
  return static_cast<std::uint16_t>(v);
}

[[noreturn]] void bind_failed(const std::string& what) {
  throw GatewayError(GatewayErrc::kSocketBindFailed, fmt::format("{}: {}", what, std::strerror(errno)));
}

void set_option(int fd, int level, int name, const void* value, socklen_t len, const std::string& what) {
  if (::setsockopt(fd, level, name, value, len) != 0) bind_failed(what);
}

}  // namespace

const char* to_string(GatewayErrc code) {
  switch (code) {
    case GatewayErrc::kSocketBindFailed:
      return "SOCKET_BIND_FAILED";
    case GatewayErrc::kNodeNotFound:
      return "NODE_NOT_FOUND";
    case GatewayErrc::kServiceNotFound:
      return "SERVICE_NOT_FOUND";
    case GatewayErrc::kNotRealtimeMode:
      return "NOT_REALTIME_MODE";
    case GatewayErrc::kBadDetachment:
      return "BAD_DETACHMENT";
  }
  return "UNKNOWN";
}

GatewayError::GatewayError(GatewayErrc code, const std::string& detail)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), detail)), code_(code) {}

Detachment Detachment::parse(std::string_view text) {
  Detachment d;
  auto comma = text.find(',');
  d.node = std::string(text.substr(0, comma));
  if (d.node.empty()) throw GatewayError(GatewayErrc::kBadDetachment, fmt::format("no node in '{}'", text));
  if (comma == std::string_view::npos) return d;
  std::string_view rest = text.substr(comma + 1);
  auto slash = rest.find('/');
  if (slash == std::string_view::npos) {
    throw GatewayError(GatewayErrc::kBadDetachment, fmt::format("expected <node>,<service>/<instance>: '{}'", text));
  }
  d.service_id = parse_id(rest.substr(0, slash), text);
  d.instance_id = parse_id(rest.substr(slash + 1), text);
  return d;
}

std::string Detachment::to_string() const {
  if (whole()) return node;
  return fmt::format("{},{:#06x}/{:#06x}", node, *service_id, *instance_id);
}

Gateway::Gateway(Runtime& runtime, GatewayBinding binding)
    : runtime_(runtime), binding_(std::move(binding)), multicast_(binding_.sd_multicast.value_or(runtime.config().sd.multicast)) {
  if (runtime_.options().mode != Mode::kRealtime) {
    throw GatewayError(GatewayErrc::kNotRealtimeMode, "the runtime is not wall-clock paced");
  }
  if (!multicast_.address.is_multicast()) {
    throw GatewayError(GatewayErrc::kBadDetachment, fmt::format("{} is not a multicast group", multicast_.to_string()));
  }
  whole_.assign(runtime_.host_count(), false);
  std::vector<std::size_t> hosts;
  for (const auto& d : binding_.detached) {
    auto i = runtime_.host_index(d.node);
    if (!i) throw GatewayError(GatewayErrc::kNodeNotFound, d.node);
    if (!d.whole()) {
      const auto& m = runtime_.node(*i).model();
      bool known = std::any_of(m.provided.begin(), m.provided.end(),
                               [&](const auto& p) { return p.service_id == *d.service_id && p.instance_id == *d.instance_id; }) ||
                   std::any_of(m.consumed.begin(), m.consumed.end(),
                               [&](const auto& c) { return c.service_id == *d.service_id && c.instance_id == *d.instance_id; });
      if (!known) throw GatewayError(GatewayErrc::kServiceNotFound, d.to_string());
    }
    hosts.push_back(*i);
    if (d.whole()) whole_[*i] = true;
  }
  for (std::size_t h : hosts) {
    if (std::find(detached_hosts_.begin(), detached_hosts_.end(), h) == detached_hosts_.end()) detached_hosts_.push_back(h);
  }
  if (!detached_hosts_.empty()) primary_ = detached_hosts_.front();

  if (::pipe2(wake_, O_CLOEXEC | O_NONBLOCK) != 0) bind_failed("pipe");
  try {
    open_sockets();
  } catch (...) {
    close_sockets();
    throw;
  }

  for (const auto& d : binding_.detached) {
    std::size_t i = *runtime_.host_index(d.node);
    if (d.whole()) {
      runtime_.set_node_active(i, false);
    } else {
      runtime_.exclude_service(i, *d.service_id, *d.instance_id, true);
    }
  }
  runtime_.set_real_port(this);
  runtime_.network().set_default_route(primary_);
  alive_ = std::make_shared<std::atomic<bool>>(true);
  attached_ = true;
  pump_thread_ = std::thread([this] { pump(); });
  spdlog::info("gateway attached: multicast {} on {}, {} socket(s)", multicast_.to_string(),
               binding_.real_interface.to_string(), sockets_.size());
}

Gateway::~Gateway() {
  try {
    detach();
  } catch (const std::exception& e) {
    spdlog::error("gateway detach: {}", e.what());
  }
}

void Gateway::open_sockets() {
  const in_addr iface{htonl(binding_.real_interface.value)};
  const int one = 1;
  const unsigned char ttl = 1;
  const unsigned char loop = 1;
  for (std::size_t h = 0; h < runtime_.host_count(); ++h) {
    if (whole_[h]) continue;
    Socket s{::socket(AF_INET, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0), h, runtime_.node(h).endpoint()};
    if (s.fd < 0) bind_failed("socket");
    sockets_.push_back(s);
    auto sa = to_sockaddr(s.bound);
    if (::bind(s.fd, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
      bind_failed(fmt::format("bind {} for {}", s.bound.to_string(), runtime_.node(h).name()));
    }
    set_option(s.fd, IPPROTO_IP, IP_MULTICAST_IF, &iface, sizeof iface, "IP_MULTICAST_IF");
    set_option(s.fd, IPPROTO_IP, IP_MULTICAST_TTL, &ttl, sizeof ttl, "IP_MULTICAST_TTL");
    set_option(s.fd, IPPROTO_IP, IP_MULTICAST_LOOP, &loop, sizeof loop, "IP_MULTICAST_LOOP");
  }
  Socket m{::socket(AF_INET, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0), std::nullopt, multicast_};
  if (m.fd < 0) bind_failed("socket");
  sockets_.push_back(m);
  set_option(m.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one, "SO_REUSEADDR");
  set_option(m.fd, SOL_SOCKET, SO_REUSEPORT, &one, sizeof one, "SO_REUSEPORT");
  auto sa = to_sockaddr(multicast_);
  if (::bind(m.fd, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
    bind_failed(fmt::format("bind {}", multicast_.to_string()));
  }
  ip_mreq mreq{};
  mreq.imr_multiaddr.s_addr = htonl(multicast_.address.value);
  mreq.imr_interface = iface;
  set_option(m.fd, IPPROTO_IP, IP_ADD_MEMBERSHIP, &mreq, sizeof mreq,
             fmt::format("join {} on {}", multicast_.address.to_string(), binding_.real_interface.to_string()));
}

void Gateway::close_sockets() {
  for (auto& s : sockets_) {
    if (s.fd >= 0) ::close(s.fd);
  }
  sockets_.clear();
  for (int& fd : wake_) {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
}

void Gateway::detach() {
  if (!attached_) return;
  attached_ = false;
  alive_->store(false);
  stop_ = true;
  char b = 0;
  [[maybe_unused]] auto n = ::write(wake_[1], &b, 1);
  if (pump_thread_.joinable()) pump_thread_.join();
  close_sockets();
  runtime_.set_real_port(nullptr);
  runtime_.network().set_default_route(std::nullopt);
  for (const auto& d : binding_.detached) {
    std::size_t i = *runtime_.host_index(d.node);
    if (d.whole()) {
      runtime_.set_node_active(i, true);
    } else {
      runtime_.exclude_service(i, *d.service_id, *d.instance_id, false);
    }
  }
  spdlog::info("gateway detached");
}

GatewayStats Gateway::stats() const {
  return GatewayStats{rx_datagrams_.load(), rx_undecodable_.load(), rx_own_echo_.load(), tx_datagrams_.load(),
                      tx_errors_.load()};
}

bool Gateway::node_detached(std::size_t host) const { return host < whole_.size() && whole_[host]; }

bool Gateway::own_endpoint(const Endpoint& e) const {
  return std::any_of(sockets_.begin(), sockets_.end(), [&](const Socket& s) { return s.host && s.bound == e; });
}

void Gateway::pump() {
  std::vector<pollfd> fds;
  for (const auto& s : sockets_) fds.push_back(pollfd{s.fd, POLLIN, 0});
  fds.push_back(pollfd{wake_[0], POLLIN, 0});
  std::vector<std::uint8_t> buffer(65536);
  while (!stop_) {
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      spdlog::error("gateway poll: {}", std::strerror(errno));
      return;
    }
    for (std::size_t k = 0; k < sockets_.size(); ++k) {
      if (!(fds[k].revents & POLLIN)) continue;
      while (true) {
        sockaddr_in from{};
        socklen_t len = sizeof from;
        ssize_t n = ::recvfrom(sockets_[k].fd, buffer.data(), buffer.size(), 0, reinterpret_cast<sockaddr*>(&from), &len);
        if (n < 0) break;
        auto received = WallClock::now();
        Endpoint src = from_sockaddr(from);
        const bool multicast = !sockets_[k].host;
        if (own_endpoint(src)) {
          ++rx_own_echo_;
          continue;
        }
        ++rx_datagrams_;
        auto bytes = std::make_shared<std::vector<std::uint8_t>>(buffer.begin(), buffer.begin() + n);
        Endpoint dst = sockets_[k].bound;
        runtime_.inbox().post([this, alive = alive_, bytes, src, dst, multicast, received] {
          if (alive->load()) pump_inbound(*bytes, src, dst, multicast, received);
        });
      }
    }
  }
}

void Gateway::pump_inbound(std::span<const std::uint8_t> datagram, const Endpoint& src, const Endpoint& dst,
                           bool multicast, WallClock::time_point received) {
  try {
    wire::decode_datagram(datagram);
  } catch (const wire::CodecError& e) {
    ++rx_undecodable_;
    spdlog::debug("gateway: dropping datagram from {}: {}", src.to_string(), e.what());
    return;
  }
  std::optional<std::size_t> at;
  for (std::size_t h : detached_hosts_) {
    if (whole_[h] && runtime_.node(h).endpoint() == src) at = h;
  }
  if (!at) at = primary_;
  if (!at) at = 0;
  const double t = std::chrono::duration<double>(received - runtime_.epoch()).count();
  sim::Frame frame = sim::make_frame(src, dst, multicast, {datagram.begin(), datagram.end()});
  frame.from_real = true;
  frame.trigger_wall = t;
  const SimTime now = runtime_.now();
  if (t > now) {
    runtime_.scheduler().schedule(t, [this, host = *at, frame, alive = alive_] {
      if (alive->load()) runtime_.inject(host, frame);
    });
    return;
  }
  runtime_.metrics().record(metrics::kInboundLateness, now, now - t);
  runtime_.inject(*at, std::move(frame));
}

void Gateway::send_real(const sim::Frame& frame) {
  if (!frame.payload) return;
  const Socket* out = nullptr;
  for (const auto& s : sockets_) {
    if (!s.host) continue;
    if (!out) out = &s;
    if (s.bound == frame.src) {
      out = &s;
      break;
    }
  }
  if (!out) out = &sockets_.back();
  auto sa = to_sockaddr(frame.multicast ? multicast_ : frame.dst);
  ssize_t n = ::sendto(out->fd, frame.payload->data(), frame.payload->size(), 0, reinterpret_cast<const sockaddr*>(&sa),
                       sizeof sa);
  auto done = WallClock::now();
  if (n < 0) {
    ++tx_errors_;
    spdlog::debug("gateway: send to {} failed: {}", frame.dst.to_string(), std::strerror(errno));
    return;
  }
  ++tx_datagrams_;
  const SimTime now = runtime_.now();
  if (last_send_) runtime_.metrics().record(metrics::kSendDelay, now, std::chrono::duration<double>(done - *last_send_).count());
  last_send_ = done;
  if (frame.answer && frame.trigger_wall) {
    double wall = std::chrono::duration<double>(done - runtime_.epoch()).count();
    runtime_.metrics().record(metrics::kSdAnswerTime, now, wall - *frame.trigger_wall);
  }
}

}  // namespace restbus::gateway
