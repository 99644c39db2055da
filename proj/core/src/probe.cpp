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


#include "restbus/probe.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

namespace restbus {
namespace {

sockaddr_in to_sockaddr(const Endpoint& e) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(e.address.value);
  sa.sin_port = htons(e.port);
  return sa;
}

[[noreturn]] void fail(std::string_view what) {
  throw std::runtime_error(fmt::format("sd probe: {}: {}", what, std::strerror(errno)));
}

}  // namespace

SdProbe::SdProbe(Endpoint sd_multicast, Ipv4Address iface) : multicast_(sd_multicast) {
  const in_addr ifaddr{htonl(iface.value)};
  const int one = 1;
  const unsigned char loop = 1;
  send_fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  recv_fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
  if (send_fd_ < 0 || recv_fd_ < 0) fail("socket");
  auto local = to_sockaddr(Endpoint{iface, 0});
  if (::bind(send_fd_, reinterpret_cast<const sockaddr*>(&local), sizeof local) != 0) fail("bind");
  socklen_t len = sizeof local;
  ::getsockname(send_fd_, reinterpret_cast<sockaddr*>(&local), &len);
  local_ = Endpoint{iface, ntohs(local.sin_port)};
  if (::setsockopt(send_fd_, IPPROTO_IP, IP_MULTICAST_IF, &ifaddr, sizeof ifaddr) != 0 ||
      ::setsockopt(send_fd_, IPPROTO_IP, IP_MULTICAST_LOOP, &loop, sizeof loop) != 0) {
    fail("multicast options");
  }
  ::setsockopt(recv_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  ::setsockopt(recv_fd_, SOL_SOCKET, SO_REUSEPORT, &one, sizeof one);
  auto group = to_sockaddr(multicast_);
  if (::bind(recv_fd_, reinterpret_cast<const sockaddr*>(&group), sizeof group) != 0) fail("bind group");
  ip_mreq mreq{};
  mreq.imr_multiaddr.s_addr = htonl(multicast_.address.value);
  mreq.imr_interface = ifaddr;
  if (::setsockopt(recv_fd_, IPPROTO_IP, IP_ADD_MEMBERSHIP, &mreq, sizeof mreq) != 0) fail("join group");
}

SdProbe::~SdProbe() {
  if (send_fd_ >= 0) ::close(send_fd_);
  if (recv_fd_ >= 0) ::close(recv_fd_);
}

void SdProbe::drain() {
  std::uint8_t buf[2048];
  while (::recv(recv_fd_, buf, sizeof buf, 0) > 0) {
  }
}

std::optional<ProbeAnswer> SdProbe::find(std::uint16_t service_id, std::uint16_t instance_id,
                                         std::chrono::milliseconds timeout) {
  using Clock = std::chrono::steady_clock;
  drain();
  wire::SdMessage sd;
  sd.reboot = first_;
  first_ = false;
  wire::SdEntry e;
  e.type = wire::EntryType::kFindService;
  e.service_id = service_id;
  e.instance_id = instance_id;
  e.major_version = 0xFF;
  e.minor_version = 0xFFFFFFFF;
  e.ttl = 3;
  sd.entries.push_back(e);
  auto bytes = wire::encode_message(wire::encode_sd(sd, 0, sessions_.next()));
  auto group = to_sockaddr(multicast_);
  const auto sent = Clock::now();
  if (::sendto(send_fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&group), sizeof group) < 0) {
    fail("send");
  }
  const auto deadline = sent + timeout;
  std::vector<std::uint8_t> buf(65536);
  while (true) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left < 0) return std::nullopt;
    pollfd p{recv_fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(left) + 1) <= 0) continue;
    sockaddr_in from{};
    socklen_t len = sizeof from;
    ssize_t n = ::recvfrom(recv_fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &len);
    if (n <= 0) continue;
    const auto got = Clock::now();
    Endpoint src{Ipv4Address{ntohl(from.sin_addr.s_addr)}, ntohs(from.sin_port)};
    if (src == local_) continue;
    try {
      for (const auto& m : wire::decode_datagram({buf.data(), static_cast<std::size_t>(n)})) {
        if (!wire::is_sd(m)) continue;
        for (const auto& entry : wire::decode_sd(m).entries) {
          if (entry.type == wire::EntryType::kOfferService && entry.service_id == service_id && entry.ttl > 0 &&
              (instance_id == 0xFFFF || entry.instance_id == instance_id)) {
            return ProbeAnswer{std::chrono::duration<double>(got - sent).count(), src};
          }
        }
      }
    } catch (const wire::CodecError&) {
    }
  }
}

}  // namespace restbus
