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

#include "ttarisk/sim_carfollow.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <string>
#include <thread>

#include "ttarisk/errors.hpp"

namespace ttarisk {

namespace {

constexpr double kKmh = 1.0 / 3.6;
constexpr std::uint64_t kMaxFramesPerTrip = 10'000'000;

double draw_speed(Xoshiro256& rng, const TrafficEnv& env, double sd) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double mean = equilibrium_speed(env.density_k, env);
  const double kmh = std::clamp(mean + sd * noise(rng), 0.0, env.u_max);
  return kmh * kKmh;
}

Action invert(Action a) noexcept { return a == Action::Evade ? Action::Approach : Action::Evade; }

// Follower acceleration that makes the TTC magnitude equal `target` after one
// frame, given constant leader acceleration over the frame.
double accel_for_ttc(double gap, double closing, double leader_accel, double target, double dt) {
  const double relative = (gap - closing * dt - target * closing) / (0.5 * dt * dt + target * dt);
  return leader_accel + relative;
}

struct Kinematics {
  double gap;
  double closing;
  double ttc;  // +inf when not closing
};

double follower_accel(Action action, StateIndex state, const Kinematics& k, const World& w,
                      double leader_accel, const StepContext& ctx) {
  const auto& ctl = ctx.controller;
  const auto& cfg = ctx.space.config();
  const double dt = cfg.delta;
  const double v = w.follower.speed;
  const bool closing = std::isfinite(k.ttc);

  double a = 0.0;
  if (action == Action::Evade) {
    if (state == 0 || !closing) {
      a = ctl.decel;  // spurious braking
    } else {
      const double limit = state == ctx.space.d_count() ? ctl.emergency_decel : ctl.decel;
      a = std::clamp(accel_for_ttc(k.gap, k.closing, leader_accel, k.ttc + dt, dt), limit, ctl.accel);
    }
  } else {
    a = std::clamp((w.desired_speed - v) / dt, ctl.decel, ctl.accel);
    // Time-headway spacing, capped by the equilibrium spacing of the stream.
    double desired_gap = ctl.standstill_gap + ctl.time_headway * v;
    if (ctx.traffic.density_k > 0.0) {
      const double stream_gap = 1000.0 / ctx.traffic.density_k - ctl.vehicle_length;
      desired_gap = std::min(desired_gap, std::max(ctl.standstill_gap, stream_gap));
    }
    const double ratio = desired_gap / std::max(k.gap, 1e-3);
    a = std::max(std::min(a, ctl.accel * (1.0 - ratio * ratio)), ctl.decel);
    if (closing) {
      if (state == 0) {
        // Free closing may not carry the TTC past the detection threshold in one frame.
        a = std::min(a, accel_for_ttc(k.gap, k.closing, leader_accel, cfg.thrd_detect, dt));
      } else {
        // Tension: TTC shrinks by at most dt per frame, relaxes by at most dt.
        const double cap = accel_for_ttc(k.gap, k.closing, leader_accel, k.ttc - dt, dt);
        const double floor = accel_for_ttc(k.gap, k.closing, leader_accel, k.ttc + dt, dt);
        a = std::clamp(std::min(a, cap), floor, std::max(floor, cap));
      }
    }
  }
  return std::max(a, -v / dt);
}

void integrate(KinematicState& s, double a, double dt) {
  s.position += s.speed * dt + 0.5 * a * dt * dt;
  s.speed = std::max(0.0, s.speed + a * dt);
}

}  // namespace

std::string_view to_string(Action action) noexcept {
  switch (action) {
    case Action::Approach:
      return "APPROACH";
    case Action::Evade:
      return "EVADE";
    case Action::Hold:
      return "HOLD";
  }
  return "UNKNOWN";
}

void ControllerSettings::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(alpha + beta <= 1.0)) {
    throw ConfigError("controller needs alpha, beta >= 0 and alpha + beta <= 1");
  }
  if (!(accel > 0.0) || !(decel < 0.0) || !(emergency_decel <= decel)) {
    throw ConfigError("controller needs accel > 0 > decel >= emergency_decel");
  }
  if (!(vehicle_length > 0.0) || !(standstill_gap >= 0.0) || !(time_headway >= 0.0)) {
    throw ConfigError("vehicle length must be > 0 and spacing terms >= 0");
  }
}

void LeaderModel::validate() const {
  if (!(accel > 0.0) || !(decel < 0.0) || !(change_interval > 0.0) || !(min_headway >= 0.0) ||
      !(target_speed_sd >= 0.0)) {
    throw ConfigError("leader model needs accel > 0 > decel, change_interval > 0, min_headway >= 0, target_speed_sd >= 0");
  }
}

std::vector<Arrival> generate_leader_stream(double q, std::uint64_t seed, const TrafficEnv& env,
                                            std::size_t count, const LeaderModel& leader) {
  if (!(q > 0.0)) {
    throw DomainError("flow must be > 0");
  }
  TrafficEnv at = env;
  at.density_k = flow_to_density(q, env);
  const double mean_headway = 3600.0 / q;
  if (!(mean_headway > leader.min_headway)) {
    throw InfeasibleFlowError("mean headway " + std::to_string(mean_headway) +
                              " s is not above the minimum headway");
  }
  Xoshiro256 rng(seed);
  std::exponential_distribution<double> excess(1.0 / (mean_headway - leader.min_headway));
  std::vector<Arrival> out;
  out.reserve(count);
  double t = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0) {
      t += leader.min_headway + excess(rng);
    }
    out.push_back({t, draw_speed(rng, at, at.speed_noise_sd)});
  }
  return out;
}

World step(const World& world, const StepContext& ctx, Xoshiro256& rng) {
  const auto& cfg = ctx.space.config();
  const auto& ctl = ctx.controller;
  const double dt = cfg.delta;

  World next = world;
  FrameRecord& rec = next.observed;
  rec.frame_index = world.frame;
  rec.time = static_cast<double>(world.frame) * dt;
  rec.leader = world.leader;
  rec.follower = world.follower;
  rec.delayed = false;
  rec.errored = false;

  Kinematics k{world.leader.position - world.follower.position - world.follower.length,
               world.follower.speed - world.leader.speed, std::numeric_limits<double>::infinity()};
  try {
    rec.tta = compute_ttc(world.leader, world.follower);
  } catch (const OverlapError&) {
    rec.tta = TtaValue::at(0.0);
  }
  if (!rec.tta.is_no_conflict()) {
    k.ttc = -rec.tta.seconds();
  }
  rec.state = ctx.space.state_of(rec.tta);

  if (rec.state == ctx.space.accident_state()) {
    next.accident = true;
    rec.action = world.executing;
    next.frame = world.frame + 1;
    return next;
  }

  const bool decide = ctl.period == DecisionPeriod::Frame ||
                      world.frame % static_cast<std::uint64_t>(ctx.space.frames_per_epoch()) == 0;
  if (decide) {
    Action decided = Action::Approach;
    if (rec.state >= ctx.conflict_state) {
      decided = Action::Evade;
    } else if (rec.state == 0 && world.follower.speed >= world.desired_speed) {
      decided = Action::Hold;
    }
    const double u = rng.uniform();
    if (u < ctl.beta) {
      // Postponed: run what was already queued (or keep going), queue this one.
      rec.delayed = true;
      next.executing = world.pending.value_or(world.executing);
      next.pending = decided;
    } else if (u < ctl.beta + ctl.alpha) {
      rec.errored = true;
      next.executing = invert(decided);
      next.pending.reset();
    } else {
      next.executing = decided;
      next.pending.reset();
    }
  }
  rec.action = next.executing;

  // Leader: Poisson target changes, bounded approach to the target.
  const auto& lm = ctx.leader;
  const double change_rate = ctx.traffic.density_k / (0.5 * ctx.traffic.k_jam) / lm.change_interval;
  if (rng.uniform() < dt * change_rate) {
    next.leader_target_speed = draw_speed(rng, ctx.traffic, lm.target_speed_sd);
  }
  double leader_accel = std::clamp((next.leader_target_speed - world.leader.speed) / dt, lm.decel, lm.accel);
  leader_accel = std::max(leader_accel, -world.leader.speed / dt);

  const double a = follower_accel(next.executing, rec.state, k, world, leader_accel, ctx);
  integrate(next.leader, leader_accel, dt);
  integrate(next.follower, a, dt);
  next.frame = world.frame + 1;
  return next;
}

namespace {

struct TripOutcome {
  std::vector<FrameRecord> frames;
  StateHistogram histogram;
  std::uint64_t frame_count{0};
  bool accident{false};
};

TripOutcome run_trip(std::uint64_t trip_index, const TaskSpec& task, const StepContext& ctx,
                     bool record) {
  const std::uint64_t trip_seed = derive_seed(task.seed, trip_index);
  const auto stream = generate_leader_stream(task.flow_q, derive_seed(trip_seed, 0), ctx.traffic, 2, ctx.leader);
  Xoshiro256 rng(derive_seed(trip_seed, 1));

  const double length = ctx.controller.vehicle_length;
  const double headway = stream[1].entry_time - stream[0].entry_time;
  World w;
  w.follower = {0.0, 0.0, length};
  w.leader = {std::max(stream[0].entry_speed * headway, length + 2.0), stream[0].entry_speed, length};
  w.leader_target_speed = stream[0].entry_speed;
  w.desired_speed = draw_speed(rng, ctx.traffic, ctx.traffic.speed_noise_sd);
  w.executing = Action::Approach;

  TripOutcome out;
  out.histogram = StateHistogram(static_cast<std::size_t>(ctx.space.state_count()));
  while (w.follower.position < task.section_length) {
    if (w.frame >= kMaxFramesPerTrip) {
      throw NonAbsorptionError("trip " + std::to_string(trip_index) + " did not finish");
    }
    w = step(w, ctx, rng);
    w.observed.trip_index = trip_index;
    out.histogram.add(static_cast<std::size_t>(w.observed.state));
    ++out.frame_count;
    if (record) {
      out.frames.push_back(w.observed);
    }
    if (w.accident) {
      out.accident = true;
      break;
    }
  }
  return out;
}

}  // namespace

SimulationResult run_task(const TaskSpec& task, const StateSpace& space,
                          const ControllerSettings& controller, const TrafficEnv& traffic,
                          const LeaderModel& leader, const RunOptions& options) {
  controller.validate();
  leader.validate();
  if (!(task.section_length > 0.0) || task.trip_count == 0) {
    throw ConfigError("task needs a positive section length and trip count");
  }
  TrafficEnv env = traffic;
  env.u_max = task.u_max;
  env = traffic_for_flow(task.flow_q, env);
  const StepContext ctx{space, controller, leader, env, space.threshold_state(task.ttc_threshold_c)};

  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, 256));
  std::vector<TripOutcome> trips(task.trip_count);
  std::vector<std::exception_ptr> failures(workers);
  auto run_range = [&](unsigned w, std::uint64_t begin, std::uint64_t end) {
    try {
      for (std::uint64_t i = begin; i < end; ++i) {
        trips[i] = run_trip(i, task, ctx, options.record_frames);
      }
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = task.trip_count / workers;
    const std::uint64_t extra = task.trip_count % workers;
    std::uint64_t begin = 0;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t end = begin + chunk + (w < extra ? 1 : 0);
      if (w + 1 == workers) {
        run_range(w, begin, end);
      } else {
        pool.emplace_back(run_range, w, begin, end);
      }
      begin = end;
    }
  }
  for (const auto& f : failures) {
    if (f) {
      std::rethrow_exception(f);
    }
  }

  SimulationResult result;
  result.histogram = StateHistogram(static_cast<std::size_t>(space.state_count()));
  std::uint64_t frame_index = 0;
  for (auto& trip : trips) {
    result.histogram.merge(trip.histogram);
    result.frame_count += trip.frame_count;
    (trip.accident ? result.accidents : result.trips_completed) += 1;
    for (auto& f : trip.frames) {
      f.frame_index = frame_index++;
      f.time = static_cast<double>(f.frame_index) * space.config().delta;
      result.frames.push_back(f);
    }
    trip.frames = {};
  }
  result.empirical_h0 = static_cast<double>(result.accidents) / static_cast<double>(task.trip_count);
  return result;
}

std::vector<std::vector<StateIndex>> epoch_states(const std::vector<FrameRecord>& frames,
                                                  const StateSpace& space) {
  const auto stride = static_cast<std::size_t>(space.frames_per_epoch());
  std::vector<std::vector<StateIndex>> out;
  std::size_t begin = 0;
  while (begin < frames.size()) {
    std::size_t end = begin;
    while (end < frames.size() && frames[end].trip_index == frames[begin].trip_index) {
      ++end;
    }
    auto& trip = out.emplace_back();
    for (std::size_t i = begin; i < end; i += stride) {
      trip.push_back(frames[i].state);
    }
    const auto last = end - 1;
    if ((last - begin) % stride != 0 && frames[last].state == space.accident_state()) {
      trip.push_back(frames[last].state);
    }
    begin = end;
  }
  return out;
}

EmpiricalChain empirical_chain(const std::vector<FrameRecord>& frames, const StateSpace& space) {
  if (frames.size() < 2) {
    throw EmptyTraceError("need at least two frames to estimate transitions");
  }
  EmpiricalChain chain;
  chain.dimension = static_cast<std::size_t>(space.state_count());
  chain.counts.assign(chain.dimension, std::vector<std::uint64_t>(chain.dimension, 0));
  for (const auto& trip : epoch_states(frames, space)) {
    for (std::size_t i = 1; i < trip.size(); ++i) {
      ++chain.counts[static_cast<std::size_t>(trip[i - 1])][static_cast<std::size_t>(trip[i])];
    }
  }
  chain.rows.resize(chain.dimension);
  for (std::size_t r = 0; r < chain.dimension; ++r) {
    std::uint64_t visits = 0;
    for (const auto c : chain.counts[r]) {
      visits += c;
    }
    if (visits == 0) {
      continue;
    }
    std::vector<double> row(chain.dimension);
    for (std::size_t c = 0; c < chain.dimension; ++c) {
      row[c] = static_cast<double>(chain.counts[r][c]) / static_cast<double>(visits);
    }
    chain.rows[r] = std::move(row);
  }
  return chain;
}

}  // namespace ttarisk
