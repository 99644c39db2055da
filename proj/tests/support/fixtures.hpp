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

#include <filesystem>
#include <string>

#include "restbus/config.hpp"

namespace restbus::testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(RESTBUS_FIXTURES) / name; }

inline config::NetworkConfig load_fixture(const std::string& name) { return config::load_config(fixture(name)); }

}  // namespace restbus::testing
