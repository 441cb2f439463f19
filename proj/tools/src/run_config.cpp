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

#include "ttarisk/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ttarisk/errors.hpp"
#include "ttarisk/rng.hpp"

namespace ttarisk::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

double to_double(std::string_view value, std::size_t line) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ParseError(where(line) + "expected a decimal number, got '" + std::string(value) + "'");
  }
  return out;
}

std::uint64_t to_u64(std::string_view value, std::size_t line) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ParseError(where(line) + "expected a non-negative integer, got '" + std::string(value) + "'");
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view, std::size_t)>;

Setter real(double RunConfig::*field) {
  return [field](RunConfig& c, std::string_view v, std::size_t line) { c.*field = to_double(v, line); };
}

template <typename Section>
Setter real(Section RunConfig::*section, double Section::*field) {
  return [section, field](RunConfig& c, std::string_view v, std::size_t line) {
    c.*section.*field = to_double(v, line);
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"seed", [](RunConfig& c, std::string_view v, std::size_t l) { c.seed = to_u64(v, l); }},
      {"output_dir", [](RunConfig& c, std::string_view v, std::size_t) { c.output_dir = std::string(v); }},
      {"state_space.thrd_detect", real(&RunConfig::state_space, &StateSpaceConfig::thrd_detect)},
      {"state_space.thrd_conflict", real(&RunConfig::state_space, &StateSpaceConfig::thrd_conflict)},
      {"state_space.thrd_deadline", real(&RunConfig::state_space, &StateSpaceConfig::thrd_deadline)},
      {"state_space.sigma", real(&RunConfig::state_space, &StateSpaceConfig::sigma)},
      {"state_space.delta", real(&RunConfig::state_space, &StateSpaceConfig::delta)},
      {"chain.alpha", real(&RunConfig::alpha)},
      {"chain.beta", real(&RunConfig::beta)},
      {"traffic.flow_q", real(&RunConfig::traffic, &TrafficEnv::flow_q)},
      {"traffic.u_max", real(&RunConfig::traffic, &TrafficEnv::u_max)},
      {"traffic.u_free", real(&RunConfig::traffic, &TrafficEnv::u_free)},
      {"traffic.k_jam", real(&RunConfig::traffic, &TrafficEnv::k_jam)},
      {"traffic.speed_noise_sd", real(&RunConfig::traffic, &TrafficEnv::speed_noise_sd)},
      {"trip.section_length", real(&RunConfig::section_length)},
      {"trip.mean_speed", real(&RunConfig::mean_speed)},
      {"controller.accel", real(&RunConfig::controller, &ControllerSettings::accel)},
      {"controller.decel", real(&RunConfig::controller, &ControllerSettings::decel)},
      {"controller.emergency_decel", real(&RunConfig::controller, &ControllerSettings::emergency_decel)},
      {"controller.vehicle_length", real(&RunConfig::controller, &ControllerSettings::vehicle_length)},
      {"controller.standstill_gap", real(&RunConfig::controller, &ControllerSettings::standstill_gap)},
      {"controller.time_headway", real(&RunConfig::controller, &ControllerSettings::time_headway)},
      {"controller.decision_period",
       [](RunConfig& c, std::string_view v, std::size_t l) {
         if (v == "epoch") {
           c.controller.period = DecisionPeriod::Epoch;
         } else if (v == "frame") {
           c.controller.period = DecisionPeriod::Frame;
         } else {
           throw ParseError(where(l) + "decision_period must be 'epoch' or 'frame'");
         }
       }},
      {"leader.accel", real(&RunConfig::leader, &LeaderModel::accel)},
      {"leader.decel", real(&RunConfig::leader, &LeaderModel::decel)},
      {"leader.change_interval", real(&RunConfig::leader, &LeaderModel::change_interval)},
      {"leader.target_speed_sd", real(&RunConfig::leader, &LeaderModel::target_speed_sd)},
      {"leader.min_headway", real(&RunConfig::leader, &LeaderModel::min_headway)},
  };
  return table;
}

constexpr std::string_view kTaskFields[] = {"flow_q", "ttc_threshold", "trip_count", "seed"};

struct TaskDraft {
  std::optional<double> flow_q;
  std::optional<double> ttc_threshold;
  std::optional<std::uint64_t> trip_count;
  std::optional<std::uint64_t> seed;
};

// task.<id>.<field>; returns false when `key` is not a task key at all.
bool set_task_field(std::map<int, TaskDraft>& drafts, std::string_view key, std::string_view value,
                    std::size_t line) {
  if (!key.starts_with("task.")) {
    return false;
  }
  const auto rest = key.substr(5);
  const auto dot = rest.find('.');
  if (dot == std::string_view::npos) {
    throw ConfigError(where(line) + "unknown key '" + std::string(key) + "'");
  }
  int id = 0;
  const auto id_text = rest.substr(0, dot);
  const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
  if (ec != std::errc{} || ptr != id_text.data() + id_text.size() || id < 1) {
    throw ConfigError(where(line) + "task id must be a positive integer in '" + std::string(key) + "'");
  }
  const auto field = rest.substr(dot + 1);
  auto& d = drafts[id];
  if (field == "flow_q") {
    d.flow_q = to_double(value, line);
  } else if (field == "ttc_threshold") {
    d.ttc_threshold = to_double(value, line);
  } else if (field == "trip_count") {
    d.trip_count = to_u64(value, line);
  } else if (field == "seed") {
    d.seed = to_u64(value, line);
  } else {
    throw ConfigError(where(line) + "unknown key '" + std::string(key) + "'");
  }
  return true;
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::map<int, TaskDraft> drafts;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(where(line_no) + "expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError(where(line_no) + "empty key or value");
    }
    if (!seen.emplace(key).second) {
      throw ConfigError(where(line_no) + "duplicate key '" + std::string(key) + "'");
    }
    if (const auto it = setters().find(key); it != setters().end()) {
      it->second(cfg, value, line_no);
    } else if (!set_task_field(drafts, key, value, line_no)) {
      throw ConfigError(where(line_no) + "unknown key '" + std::string(key) + "'");
    }
  }

  for (const auto& [id, d] : drafts) {
    if (!d.flow_q || !d.ttc_threshold) {
      throw ConfigError("task " + std::to_string(id) + " needs flow_q and ttc_threshold");
    }
    TaskSpec t;
    t.id = id;
    t.flow_q = *d.flow_q;
    t.ttc_threshold_c = *d.ttc_threshold;
    t.trip_count = d.trip_count.value_or(t.trip_count);
    // Zero marks "derive from the run seed"; explicit seeds are kept as given.
    t.seed = d.seed.value_or(0);
    if (d.seed && *d.seed == 0) {
      throw ConfigError("task " + std::to_string(id) + " seed must be non-zero");
    }
    cfg.tasks.push_back(t);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read config file " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

std::vector<TaskSpec> default_tasks(const RunConfig& cfg) {
  std::vector<TaskSpec> out;
  const double flows[] = {1500.0, 1800.0, 1500.0, 1800.0};
  const double thresholds[] = {2.0, 2.0, 1.4, 1.4};
  for (int i = 0; i < 4; ++i) {
    TaskSpec t;
    t.id = i + 1;
    t.flow_q = flows[i];
    t.ttc_threshold_c = thresholds[i];
    t.section_length = cfg.section_length;
    t.u_max = cfg.traffic.u_max;
    out.push_back(t);
  }
  return out;
}

std::vector<TaskSpec> resolved_tasks(const RunConfig& cfg) {
  if (!cfg.seed) {
    throw ConfigError("no seed: set 'seed' in the config or pass --seed");
  }
  auto tasks = cfg.tasks.empty() ? default_tasks(cfg) : cfg.tasks;
  for (auto& t : tasks) {
    t.section_length = cfg.section_length;
    t.u_max = cfg.traffic.u_max;
    if (t.seed == 0) {
      t.seed = derive_seed(*cfg.seed, static_cast<std::uint64_t>(t.id));
    }
  }
  return tasks;
}

ChainParams chain_params(const RunConfig& cfg, const StateSpace& space) {
  ChainParams p;
  p.alpha = cfg.alpha;
  p.beta = cfg.beta;
  p.d_count = space.d_count();
  p.c = space.threshold_state(cfg.state_space.thrd_conflict);
  p.validate();
  return p;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) {
      out.push_back(k);
    }
    for (const auto f : kTaskFields) {
      out.push_back("task.<id>." + std::string(f));
    }
    return out;
  }();
  return keys;
}

}  // namespace ttarisk::cli
