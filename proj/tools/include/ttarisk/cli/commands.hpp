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
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttarisk/cli/run_config.hpp"
#include "ttarisk/exit_analysis.hpp"
#include "ttarisk/sim_carfollow.hpp"

namespace ttarisk::cli {

enum ExitCode : int { kOk = 0, kUserError = 2, kComputeError = 3 };

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
  unsigned workers{1};
};

/// Config from --config (or built-in defaults) with --seed and --output
/// applied on top.
RunConfig effective_config(const GlobalOptions& opts);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

void write_frames_csv(std::ostream& out, const std::vector<FrameRecord>& frames);

struct SolveOutput {
  TransitionMatrix modified;
  TransitionMatrix extended;
  ExitSolution solution;
  SolveReport h_report;
  SolveReport g_report;
  nlohmann::json document;
};

/// Builds both chains from the config and solves them. `mc_runs` adds an
/// `mc` block estimated from state 0.
SolveOutput solve(const RunConfig& cfg, std::optional<std::uint64_t> mc_runs, unsigned workers);

nlohmann::json task_summary(const TaskSpec& task, const SimulationResult& result, const StateSpace& space);

/// Entropy of a histogram under the state space of `cfg`.
nlohmann::json entropy_report(const StateHistogram& hist, const RunConfig& cfg);

int cmd_solve(const GlobalOptions& opts, std::optional<std::uint64_t> mc_runs, std::ostream& out,
              std::ostream& err);
int cmd_simulate(const GlobalOptions& opts, std::optional<int> task_id, bool all,
                 std::optional<std::uint64_t> trips, bool frames, std::ostream& out);
int cmd_entropy(const GlobalOptions& opts, const std::filesystem::path& hist_csv, std::ostream& out);

/// Full command line: parses arguments, runs the subcommand, maps errors to
/// exit codes and prints diagnostics (error kind first) to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ttarisk::cli
