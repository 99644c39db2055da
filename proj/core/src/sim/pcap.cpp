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

#include "restbus/sim/pcap.hpp"

#include <cmath>

#include "bytes.hpp"

namespace restbus::sim {

namespace {

using detail::put_u16;
using detail::put_u32;
using detail::put_u8;

void put_mac(std::vector<std::uint8_t>& out, Ipv4Address ip) {
  if (ip.is_multicast()) {
    put_u8(out, 0x01);
    put_u8(out, 0x00);
    put_u8(out, 0x5e);
    put_u8(out, static_cast<std::uint8_t>((ip.value >> 16) & 0x7f));
  } else {
    put_u8(out, 0x02);
    put_u8(out, 0x00);
    put_u8(out, static_cast<std::uint8_t>(ip.value >> 24));
    put_u8(out, static_cast<std::uint8_t>(ip.value >> 16));
  }
  put_u8(out, static_cast<std::uint8_t>(ip.value >> 8));
  put_u8(out, static_cast<std::uint8_t>(ip.value));
}

std::uint32_t sum16(const std::uint8_t* data, std::size_t len, std::uint32_t acc = 0) {
  for (std::size_t i = 0; i + 1 < len; i += 2) acc += (std::uint32_t{data[i]} << 8) | data[i + 1];
  if (len % 2) acc += std::uint32_t{data[len - 1]} << 8;
  return acc;
}

std::uint16_t fold(std::uint32_t acc) {
  while (acc >> 16) acc = (acc & 0xffff) + (acc >> 16);
  return static_cast<std::uint16_t>(~acc);
}

void put_le32(std::ofstream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
               static_cast<char>(v >> 24)};
  out.write(b, 4);
}

void put_le16(std::ofstream& out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

}  // namespace

std::vector<std::uint8_t> synthesize_packet(const Frame& frame) {
  const std::size_t payload_len = frame.payload_size();
  const std::size_t udp_len = 8 + payload_len;
  const std::size_t ip_len = 20 + udp_len;
  std::vector<std::uint8_t> out;
  out.reserve(14 + ip_len);
  put_mac(out, frame.dst.address);
  put_mac(out, frame.src.address);
  put_u16(out, 0x0800);

  const std::size_t ip_at = out.size();
  put_u8(out, 0x45);
  put_u8(out, 0);
  put_u16(out, static_cast<std::uint16_t>(ip_len));
  put_u16(out, static_cast<std::uint16_t>(frame.id));
  put_u16(out, 0x4000);
  put_u8(out, frame.multicast ? 1 : 64);
  put_u8(out, 17);
  put_u16(out, 0);
  put_u32(out, frame.src.address.value);
  put_u32(out, frame.dst.address.value);
  std::uint16_t ip_sum = fold(sum16(out.data() + ip_at, 20));
  out[ip_at + 10] = static_cast<std::uint8_t>(ip_sum >> 8);
  out[ip_at + 11] = static_cast<std::uint8_t>(ip_sum);

  const std::size_t udp_at = out.size();
  put_u16(out, frame.src.port);
  put_u16(out, frame.dst.port);
  put_u16(out, static_cast<std::uint16_t>(udp_len));
  put_u16(out, 0);
  if (payload_len) out.insert(out.end(), frame.payload->begin(), frame.payload->end());
  std::uint32_t pseudo = 0;
  pseudo += frame.src.address.value >> 16;
  pseudo += frame.src.address.value & 0xffff;
  pseudo += frame.dst.address.value >> 16;
  pseudo += frame.dst.address.value & 0xffff;
  pseudo += 17;
  pseudo += static_cast<std::uint32_t>(udp_len);
  std::uint16_t udp_sum = fold(sum16(out.data() + udp_at, udp_len, pseudo));
  if (udp_sum == 0) udp_sum = 0xffff;
  out[udp_at + 6] = static_cast<std::uint8_t>(udp_sum >> 8);
  out[udp_at + 7] = static_cast<std::uint8_t>(udp_sum);
  return out;
}

PcapWriter::PcapWriter(const std::filesystem::path& path) : path_(path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw SimError(SimErrc::kIo, "cannot create " + path.string());
  put_le32(out_, kPcapMagic);
  put_le16(out_, 2);
  put_le16(out_, 4);
  put_le32(out_, 0);
  put_le32(out_, 0);
  put_le32(out_, kPcapSnapLen);
  put_le32(out_, kPcapLinkTypeEthernet);
  if (!out_) throw SimError(SimErrc::kIo, "cannot write " + path.string());
}

void PcapWriter::write(const Frame& frame, SimTime timestamp) {
  auto packet = synthesize_packet(frame);
  double whole = std::floor(timestamp);
  auto sec = static_cast<std::uint32_t>(whole);
  auto usec = static_cast<std::uint32_t>(std::llround((timestamp - whole) * 1e6));
  if (usec >= 1'000'000) {
    ++sec;
    usec -= 1'000'000;
  }
  auto len = static_cast<std::uint32_t>(packet.size());
  std::uint32_t caplen = std::min(len, kPcapSnapLen);
  put_le32(out_, sec);
  put_le32(out_, usec);
  put_le32(out_, caplen);
  put_le32(out_, len);
  out_.write(reinterpret_cast<const char*>(packet.data()), caplen);
  if (!out_) throw SimError(SimErrc::kIo, "write failed: " + path_.string());
  ++records_;
}

void PcapWriter::flush() {
  out_.flush();
  if (!out_) throw SimError(SimErrc::kIo, "flush failed: " + path_.string());
}

}  // namespace restbus::sim
