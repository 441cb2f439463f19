// Copyright 2026 The ttarisk Authors
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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ttarisk/markov_model.hpp"
#include "ttarisk/sim_carfollow.hpp"
#include "ttarisk/state_space.hpp"

namespace ttarisk::cli {

/// Everything a CLI run needs. Parsed from a flat `key = value` file with
/// dotted section prefixes; `#` starts a comment.
struct RunConfig {
  StateSpaceConfig state_space;
  double alpha{0.02};
  double beta{0.34};
  TrafficEnv traffic;
  /// Section used for the trip-end probability and by every task.
  double section_length{807.0};
  /// Mean travel speed (km/h) for the trip-end probability.
  double mean_speed{54.0};
  ControllerSettings controller;
  LeaderModel leader;
  /// Simulation tasks in id order. Empty means the four default tasks.
  std::vector<TaskSpec> tasks;
  std::filesystem::path output_dir{"."};
  std::optional<std::uint64_t> seed;
};

/// Parses config text. Throws ParseError on malformed lines or values and
/// ConfigError on unknown or duplicate keys.
RunConfig parse_run_config(std::string_view text);

/// Reads and parses a file; an unreadable path is a ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

/// The four tasks (q, c) = (1500, 2.0), (1800, 2.0), (1500, 1.4), (1800, 1.4).
std::vector<TaskSpec> default_tasks(const RunConfig& cfg);

/// Configured tasks (or the defaults) with section, speed limit and seeds
/// filled in. Task seeds not set explicitly are derive_seed(seed, id).
/// Throws ConfigError when no seed is available.
std::vector<TaskSpec> resolved_tasks(const RunConfig& cfg);

/// ChainParams for the configured state space and thrd_conflict.
ChainParams chain_params(const RunConfig& cfg, const StateSpace& space);

/// Every recognized key, in the order used by `describe`.
const std::vector<std::string>& known_keys();

}  // namespace ttarisk::cli
