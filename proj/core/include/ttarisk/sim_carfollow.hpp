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
#include <string_view>
#include <vector>

#include "ttarisk/markov_model.hpp"
#include "ttarisk/rng.hpp"

namespace ttarisk {

enum class Action { Approach, Evade, Hold };

std::string_view to_string(Action action) noexcept;

/// When error/delay draws happen: once per sigma-long decision epoch, or on
/// every frame (sensitivity mode).
enum class DecisionPeriod { Epoch, Frame };

/// Follower (automated vehicle) settings. Accelerations in m/s^2.
struct ControllerSettings {
  double alpha{0.02};
  double beta{0.34};
  double accel{1.5};
  double decel{-3.0};
  double emergency_decel{-6.0};
  double vehicle_length{5.0};
  /// Spacing kept while approaching: standstill gap (m) plus time headway (s)
  /// times own speed, never more than the stream's equilibrium gap
  /// 1000/k - length. Closing speed is left to the TTA state logic.
  double standstill_gap{2.0};
  double time_headway{2.0};
  DecisionPeriod period{DecisionPeriod::Epoch};

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// Behaviour of the vehicle ahead: it re-draws a target speed around
/// u_e(k) at Poisson times and moves toward it at bounded acceleration.
/// The change rate scales with k / k_c (k_c = k_jam / 2, the capacity
/// density), so denser traffic perturbs the follower more often.
struct LeaderModel {
  double accel{1.0};
  double decel{-2.5};
  /// Mean seconds between target-speed changes at capacity density.
  double change_interval{4.0};
  /// Standard deviation (km/h) of re-drawn target speeds around u_e(k).
  double target_speed_sd{20.0};
  /// Minimum entry headway in seconds.
  double min_headway{1.0};

  void validate() const;
};

struct TaskSpec {
  int id{1};
  double flow_q{1500.0};
  double ttc_threshold_c{2.0};
  std::uint64_t seed{0};
  std::uint64_t trip_count{200};
  double section_length{807.0};
  double u_max{60.0};
};

/// One vehicle entering the section. Time in s, speed in m/s.
struct Arrival {
  double entry_time;
  double entry_speed;
};

/// `count` arrivals with shifted-exponential headways (mean 3600/q s, minimum
/// `leader.min_headway`) and entry speeds ~ N(u_e(k), sd) clamped to
/// [0, u_max]. Throws InfeasibleFlowError above capacity.
std::vector<Arrival> generate_leader_stream(double q, std::uint64_t seed, const TrafficEnv& env,
                                            std::size_t count, const LeaderModel& leader = {});

struct FrameRecord {
  std::uint64_t frame_index{0};
  double time{0.0};
  std::uint64_t trip_index{0};
  KinematicState leader;
  KinematicState follower;
  TtaValue tta{TtaValue::no_conflict()};
  StateIndex state{0};
  Action action{Action::Approach};
  bool delayed{false};
  bool errored{false};
};

/// Complete mutable state of one trip between frames.
struct World {
  KinematicState leader;
  KinematicState follower;
  double leader_target_speed{0.0};
  double desired_speed{0.0};
  Action executing{Action::Approach};
  std::optional<Action> pending;
  std::uint64_t frame{0};
  bool accident{false};
  /// Observation and decision of the frame that produced this world.
  FrameRecord observed;
};

struct StepContext {
  const StateSpace& space;
  const ControllerSettings& controller;
  const LeaderModel& leader;
  const TrafficEnv& traffic;
  StateIndex conflict_state;
};

/// Advances one frame: measure TTA, map to a state, decide (on decision
/// frames), apply error/delay, integrate both vehicles over delta.
/// An accident (state D+1 or overlap) sets `accident` and stops motion.
World step(const World& world, const StepContext& ctx, Xoshiro256& rng);

struct SimulationResult {
  std::vector<FrameRecord> frames;
  StateHistogram histogram;
  std::uint64_t accidents{0};
  std::uint64_t trips_completed{0};
  std::uint64_t frame_count{0};
  double empirical_h0{0.0};
};

struct RunOptions {
  bool record_frames{true};
  unsigned workers{1};
};

/// Runs `task.trip_count` independent trips; trip i is seeded with
/// derive_seed(task.seed, i). Output is bit-identical for any worker count.
SimulationResult run_task(const TaskSpec& task, const StateSpace& space,
                          const ControllerSettings& controller, const TrafficEnv& traffic,
                          const LeaderModel& leader = {}, const RunOptions& options = {});

/// Row-normalized transition counts between successive per-epoch states.
/// Rows never visited stay empty instead of being filled in.
struct EmpiricalChain {
  std::size_t dimension{0};
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::optional<std::vector<double>>> rows;
};

/// Throws EmptyTraceError for fewer than two frames.
EmpiricalChain empirical_chain(const std::vector<FrameRecord>& frames, const StateSpace& space);

/// Per-epoch state samples of each trip (every frames_per_epoch frames, plus
/// a closing accident frame).
std::vector<std::vector<StateIndex>> epoch_states(const std::vector<FrameRecord>& frames,
                                                  const StateSpace& space);

}  // namespace ttarisk
