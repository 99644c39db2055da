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

// Classic pcap capture files (magic 0xa1b2c3d4, v2.4, LINKTYPE_ETHERNET,
// microsecond timestamps). Frames are rendered as Ethernet/IPv4/UDP packets;
// unicast MACs are 02:00:<ipv4>, multicast MACs follow the 01:00:5e mapping.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "restbus/sim/network.hpp"

namespace restbus::sim {

inline constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
inline constexpr std::uint32_t kPcapLinkTypeEthernet = 1;
inline constexpr std::uint32_t kPcapSnapLen = 65535;

/// Ethernet + IPv4 + UDP bytes for a frame, checksums filled in.
std::vector<std::uint8_t> synthesize_packet(const Frame& frame);

class PcapWriter {
 public:
  /// Throws SimError(kIo) when the file cannot be created.
  explicit PcapWriter(const std::filesystem::path& path);

  void write(const Frame& frame, SimTime timestamp);
  void flush();

  std::size_t records() const { return records_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t records_ = 0;
};

}  // namespace restbus::sim
