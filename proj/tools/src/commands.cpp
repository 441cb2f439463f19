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

#include "ttarisk/cli/commands.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include <CLI11.hpp>

#include "ttarisk/errors.hpp"

namespace ttarisk::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  out << content;
  if (!out) {
    throw ConfigError("write failed for " + path.string());
  }
}

fs::path prepare_output(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
  }
  return cfg.output_dir;
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

bool is_user_error(const std::string& kind) {
  return kind == "ConfigError" || kind == "ParseError" || kind == "InfeasibleFlowError" ||
         kind == "EmptyHistogramError" || kind == "MappingError";
}

}  // namespace

RunConfig effective_config(const GlobalOptions& opts) {
  RunConfig cfg = opts.config ? load_run_config(*opts.config) : RunConfig{};
  if (opts.seed) {
    cfg.seed = opts.seed;
  }
  if (opts.output) {
    cfg.output_dir = *opts.output;
  }
  if (!cfg.seed) {
    throw ConfigError("no seed: set 'seed' in the config or pass --seed");
  }
  return cfg;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return {buf, ptr};
}

void write_frames_csv(std::ostream& out, const std::vector<FrameRecord>& frames) {
  out << "frame,time_s,leader_pos_m,leader_v_mps,follower_pos_m,follower_v_mps,tta_s,state,action,delayed,errored\n";
  for (const auto& f : frames) {
    out << f.frame_index << ',' << format_number(f.time) << ',' << format_number(f.leader.position) << ','
        << format_number(f.leader.speed) << ',' << format_number(f.follower.position) << ','
        << format_number(f.follower.speed) << ','
        << (f.tta.is_no_conflict() ? std::string("-inf") : format_number(f.tta.seconds())) << ',' << f.state
        << ',' << to_string(f.action) << ',' << (f.delayed ? 1 : 0) << ',' << (f.errored ? 1 : 0) << '\n';
  }
}

SolveOutput solve(const RunConfig& cfg, std::optional<std::uint64_t> mc_runs, unsigned workers) {
  const StateSpace space(cfg.state_space);
  const ChainParams params = chain_params(cfg, space);
  const TrafficEnv env = traffic_for_flow(cfg.traffic.flow_q, cfg.traffic);
  const FreeStateProbs free = free_state_probs(env);
  const double delta = cfg.state_space.delta;
  const double p3 = trip_end_probability(cfg.section_length, cfg.mean_speed, delta);

  SolveOutput out{build_modified_matrix(params, free), build_extended_matrix(params, env, p3), {}, {}, {}, {}};
  out.solution.delta = delta;
  // g first: an unreachable accident is reported as an infinite exit time
  // rather than as a missing exit of the extended chain.
  out.solution.g = exit_time(out.modified, &out.g_report);
  out.solution.h = exit_probability(out.extended, &out.h_report);
  const double frequency = accident_frequency(out.solution.g[0], delta);

  auto& doc = out.document;
  doc["h"] = out.solution.h;
  doc["g"] = out.solution.g;
  doc["accident_frequency_per_hour"] = frequency;
  doc["params"] = {
      {"d_count", params.d_count},
      {"c", params.c},
      {"alpha", params.alpha},
      {"beta", params.beta},
      {"gamma", params.gamma()},
      {"p0", free.p0},
      {"q0", free.q0},
      {"p3", p3},
      {"delta", delta},
      {"flow_q", env.flow_q},
      {"density_k", env.density_k},
      {"seed", *cfg.seed},
  };
  if (mc_runs) {
    const McOptions opts{*mc_runs, *cfg.seed, workers};
    const auto ext = mc_exit_oracle(out.extended, 0, opts);
    const auto mod = mc_exit_oracle(out.modified, 0, opts);
    nlohmann::json mc = {{"runs", *mc_runs}, {"seed", *cfg.seed}, {"start_state", 0}};
    mc["h"] = {{"mean", ext.h.mean}, {"std_error", ext.h.std_error}};
    mc["g"] = mod.g ? nlohmann::json{{"mean", mod.g->mean}, {"std_error", mod.g->std_error}} : nlohmann::json();
    doc["mc"] = mc;
  }
  return out;
}

nlohmann::json task_summary(const TaskSpec& task, const SimulationResult& result, const StateSpace& space) {
  nlohmann::json doc = {
      {"task", task.id},
      {"flow_q", task.flow_q},
      {"ttc_threshold", task.ttc_threshold_c},
      {"conflict_state", space.threshold_state(task.ttc_threshold_c)},
      {"seed", task.seed},
      {"trip_count", task.trip_count},
      {"accidents", result.accidents},
      {"trips_completed", result.trips_completed},
      {"frame_count", result.frame_count},
      {"empirical_h0", result.empirical_h0},
  };
  const auto max_state = result.histogram.max_occupied();
  doc["max_state"] = max_state ? nlohmann::json(*max_state) : nlohmann::json();
  doc["shannon_entropy_bits"] = shannon_entropy(result.histogram);
  doc["risk_entropy_seconds"] = risk_entropy(histogram_to_distribution(result.histogram, space));
  return doc;
}

nlohmann::json entropy_report(const StateHistogram& hist, const RunConfig& cfg) {
  const StateSpace space(cfg.state_space);
  return {{"shannon_entropy_bits", shannon_entropy(hist)},
          {"risk_entropy_seconds", risk_entropy(histogram_to_distribution(hist, space))}};
}

int cmd_solve(const GlobalOptions& opts, std::optional<std::uint64_t> mc_runs, std::ostream& out,
              std::ostream& err) {
  const RunConfig cfg = effective_config(opts);
  const auto result = solve(cfg, mc_runs, opts.workers);
  if (result.h_report.ill_conditioned || result.g_report.ill_conditioned) {
    err << "ttarisk: warning: ill-conditioned solve (rcond h=" << result.h_report.rcond
              << ", g=" << result.g_report.rcond << "); values may be inaccurate\n";
  }
  const fs::path dir = prepare_output(cfg);
  write_file(dir / "solution.json", dump(result.document));
  write_file(dir / "matrix_modified.json", dump(to_json(result.modified)));
  write_file(dir / "matrix_extended.json", dump(to_json(result.extended)));
  out << (dir / "solution.json").string() << '\n';
  return kOk;
}

int cmd_simulate(const GlobalOptions& opts, std::optional<int> task_id, bool all,
                 std::optional<std::uint64_t> trips, bool frames, std::ostream& out) {
  const RunConfig cfg = effective_config(opts);
  if (all == task_id.has_value()) {
    throw ConfigError("simulate needs exactly one of <task_id> or --all");
  }
  auto tasks = resolved_tasks(cfg);
  if (task_id) {
    std::erase_if(tasks, [&](const TaskSpec& t) { return t.id != *task_id; });
    if (tasks.empty()) {
      throw ConfigError("unknown task " + std::to_string(*task_id));
    }
  }
  if (trips) {
    if (*trips == 0) {
      throw ConfigError("--trips must be positive");
    }
    for (auto& t : tasks) {
      t.trip_count = *trips;
    }
  }
  const StateSpace space(cfg.state_space);
  const fs::path dir = prepare_output(cfg);
  ControllerSettings controller = cfg.controller;
  controller.alpha = cfg.alpha;
  controller.beta = cfg.beta;
  for (const auto& task : tasks) {
    const auto result = run_task(task, space, controller, cfg.traffic, cfg.leader, {frames, opts.workers});
    const std::string stem = "task" + std::to_string(task.id);
    if (frames) {
      std::ostringstream csv;
      write_frames_csv(csv, result.frames);
      write_file(dir / (stem + "_frames.csv"), csv.str());
    }
    std::ostringstream hist;
    write_histogram_csv(hist, result.histogram);
    write_file(dir / (stem + "_hist.csv"), hist.str());
    write_file(dir / (stem + "_summary.json"), dump(task_summary(task, result, space)));
    out << stem << ": trips=" << task.trip_count << " accidents=" << result.accidents
        << " frames=" << result.frame_count << '\n';
  }
  return kOk;
}

int cmd_entropy(const GlobalOptions& opts, const fs::path& hist_csv, std::ostream& out) {
  RunConfig cfg = opts.config ? load_run_config(*opts.config) : RunConfig{};
  std::ifstream in(hist_csv, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read " + hist_csv.string());
  }
  const auto hist = read_histogram_csv(in);
  out << entropy_report(hist, cfg).dump(2) << '\n';
  return kOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-to-accident risk analysis: Markov exit solver, car-following simulator, entropy"};
  app.require_subcommand(1);
  GlobalOptions opts;
  std::string config_path;
  std::string output_path;
  std::uint64_t seed = 0;
  auto* config_opt = app.add_option("--config", config_path, "Run config file (key = value)");
  auto* seed_opt = app.add_option("--seed", seed, "Seed; overrides the config");
  auto* output_opt = app.add_option("--output", output_path, "Output directory; overrides the config");
  app.add_option("--workers", opts.workers, "Worker threads for trips and Monte Carlo walks")
      ->check(CLI::Range(1u, 256u));

  auto* solve_cmd = app.add_subcommand("solve", "Solve exit probabilities and exit times; writes solution.json");
  std::uint64_t mc_runs = 0;
  auto* mc_opt = solve_cmd->add_option("--mc-check", mc_runs, "Also run N Monte Carlo walks from state 0");

  auto* sim_cmd = app.add_subcommand("simulate", "Run car-following tasks; writes frames, histogram, summary");
  int task_id = 0;
  bool all = false;
  bool no_frames = false;
  std::uint64_t trips = 0;
  auto* task_opt = sim_cmd->add_option("task_id", task_id, "Task id");
  sim_cmd->add_flag("--all", all, "Run every configured task");
  auto* trips_opt = sim_cmd->add_option("--trips", trips, "Override trip_count for the selected tasks");
  sim_cmd->add_flag("--no-frames", no_frames, "Skip the per-frame CSV");

  auto* entropy_cmd = app.add_subcommand("entropy", "Entropies of a histogram CSV");
  std::string hist_path;
  entropy_cmd->add_option("histogram", hist_path, "Histogram CSV (state,count)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "ttarisk: error: UsageError: " << e.what() << '\n';
    return kUserError;
  }
  if (*config_opt) {
    opts.config = config_path;
  }
  if (*seed_opt) {
    opts.seed = seed;
  }
  if (*output_opt) {
    opts.output = output_path;
  }

  try {
    if (*solve_cmd) {
      return cmd_solve(opts, *mc_opt ? std::optional<std::uint64_t>(mc_runs) : std::nullopt, out, err);
    }
    if (*sim_cmd) {
      return cmd_simulate(opts, *task_opt ? std::optional<int>(task_id) : std::nullopt, all,
                          *trips_opt ? std::optional<std::uint64_t>(trips) : std::nullopt, !no_frames, out);
    }
    return cmd_entropy(opts, hist_path, out);
  } catch (const Error& e) {
    err << "ttarisk: error: " << e.kind() << ": " << e.what() << '\n';
    return is_user_error(e.kind()) ? kUserError : kComputeError;
  } catch (const fs::filesystem_error& e) {
    err << "ttarisk: error: FilesystemError: " << e.what() << '\n';
    return kUserError;
  } catch (const std::exception& e) {
    err << "ttarisk: error: InternalError: " << e.what() << '\n';
    return kComputeError;
  }
}

}  // namespace ttarisk::cli
