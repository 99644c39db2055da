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

#pragma once

#include <vector>

#include "restbus/config.hpp"
#include "restbus/service_model.hpp"
#include "restbus/signal_store.hpp"
#include "restbus/sim/network.hpp"

namespace restbus {

/// Initialization-phase view of a configuration. Index i of `hosts` and
/// `signal_tables` is config.hosts[i] and topology host i.
struct InitializedNetwork {
  std::vector<model::HostModel> hosts;
  std::vector<signals::SignalStore> signal_tables;
  sim::Topology topology;
};

/// One signal table per host covering every field of every provided event.
InitializedNetwork init_models(const config::NetworkConfig& config);

}  // namespace restbus
