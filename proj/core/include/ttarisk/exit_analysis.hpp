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
#include <optional>
#include <vector>

#include "ttarisk/markov_model.hpp"

namespace ttarisk {

/// Accident probabilities h (extended chain, one per state 0..D+2) and
/// expected steps to the accident g (modified chain, one per state 0..D+1).
struct ExitSolution {
  std::vector<double> h;
  std::vector<double> g;
  double delta{1.0 / 15.0};

  /// g converted to seconds.
  std::vector<double> g_seconds() const;
};

/// Diagnostics of the dense solve. `rcond` is LU's reciprocal condition
/// estimate; anything under 1e-12 is flagged.
struct SolveReport {
  double rcond{1.0};
  bool ill_conditioned{false};
};

/// h(x) = P_x(reach accident before terminal) on an Extended matrix.
/// States that cannot reach the accident get h = 0. Throws NoExitError when
/// no transient state reaches either exit.
std::vector<double> exit_probability(const TransitionMatrix& extended, SolveReport* report = nullptr);

/// g(x) = E_x[steps to the accident] on a Modified (or Ideal) matrix.
/// Throws InfiniteExitTimeError when the accident is unreachable from some
/// state.
std::vector<double> exit_time(const TransitionMatrix& modified, SolveReport* report = nullptr);

/// E_x[steps to the accident | accident before terminal] on an Extended
/// matrix. Entries with h(x) = 0 (including the terminal) are +inf.
std::vector<double> conditional_exit_time(const TransitionMatrix& extended);

ExitSolution solve_exit(const TransitionMatrix& extended, const TransitionMatrix& modified, double delta);

/// Accidents per hour for a mean exit time of `g0_steps` steps of `delta_s`.
double accident_frequency(double g0_steps, double delta_s);

struct McEstimate {
  double mean{0.0};
  double std_error{0.0};
  std::uint64_t runs{0};
  std::uint64_t seed{0};
};

struct McExitEstimate {
  /// Fraction of walks absorbed at the accident state.
  McEstimate h;
  /// Mean steps to the accident over accident-absorbed walks. Empty when no
  /// walk hit the accident.
  std::optional<McEstimate> g;
};

struct McOptions {
  std::uint64_t runs{1'000'000};
  std::uint64_t seed{0};
  unsigned workers{1};
  std::uint64_t step_cap{100'000'000};
};

/// Independent chain-walking estimate of h and g from `start`. Walk i draws
/// from a generator seeded by derive_seed(seed, i) and statistics are
/// accumulated in exact integer arithmetic, so results are bit-identical for
/// any worker count. Throws NonAbsorptionError when a walk exceeds the step
/// cap, or when a Modified/Ideal walk is absorbed somewhere other than the
/// accident state.
McExitEstimate mc_exit_oracle(const TransitionMatrix& m, StateIndex start, const McOptions& options);

}  // namespace ttarisk
