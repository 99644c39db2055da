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

#include "restbus/init_models.hpp"

namespace restbus {

InitializedNetwork init_models(const config::NetworkConfig& config) {
  InitializedNetwork net;
  for (const auto& h : config.hosts) {
    model::HostModel m = model::build_model(config, h.name);
    signals::SignalStore store(h.name);
    for (const auto& p : m.provided) {
      for (const auto& e : p.events) store.add_event({p.service_id, e.event_id}, e.layout);
    }
    net.hosts.push_back(std::move(m));
    net.signal_tables.push_back(std::move(store));
  }
  net.topology = sim::Topology::from_config(config);
  return net;
}

}  // namespace restbus
