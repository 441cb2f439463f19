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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails. Detail lines are indented under their criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "ttarisk/cli/commands.hpp"
#include "ttarisk/cli/run_config.hpp"
#include "ttarisk/errors.hpp"
#include "ttarisk/exit_analysis.hpp"
#include "ttarisk/sim_carfollow.hpp"

namespace {

using namespace ttarisk;
namespace fs = std::filesystem;

constexpr std::uint64_t kSeed = 20260101;
constexpr double kDelta = 1.0 / 15.0;
const fs::path kSource{TTARISK_SOURCE_DIR};

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

// Detail lines collected while a criterion runs.
class Report {
 public:
  void detail(const std::string& line) { details_.push_back(line); }
  void fail(const std::string& line) {
    ok_ = false;
    details_.push_back("FAILED: " + line);
  }
  bool ok() const { return ok_; }
  const std::vector<std::string>& details() const { return details_; }

 private:
  bool ok_{true};
  std::vector<std::string> details_;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

struct GridPoint {
  int d;
  int c;
  double alpha;
  double beta;
  double section_m;
  bool check_g;
};

// c = D for every (D, alpha, beta); c = D - 1 and c = 1 at the default
// alpha/beta. Early-c points check h only, on a short section so trips end
// before the walk drifts away; their exit times run to 1e5..1e14 steps.
std::vector<GridPoint> acceptance_grid() {
  std::vector<GridPoint> out;
  for (int d : {4, 8, 16}) {
    for (double a : {0.01, 0.02}) {
      for (double b : {0.2, 0.34}) {
        out.push_back({d, d, a, b, 807.0, true});
      }
    }
  }
  for (int d : {4, 8, 16}) {
    out.push_back({d, d - 1, 0.02, 0.34, 807.0, true});
  }
  for (int d : {4, 8, 16}) {
    out.push_back({d, 1, 0.02, 0.34, 100.0, false});
  }
  return out;
}

TrafficEnv task1_traffic() { return traffic_for_flow(1500.0, TrafficEnv{}); }

struct Built {
  TransitionMatrix extended;
  TransitionMatrix modified;
};

Built build(const GridPoint& p) {
  const ChainParams params{p.alpha, p.beta, p.c, p.d};
  const auto env = task1_traffic();
  return {build_extended_matrix(params, env, trip_end_probability(p.section_m, 54.0, kDelta)),
          build_modified_matrix(params, free_state_probs(env))};
}

std::string label(const GridPoint& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "D=%d c=%d a=%.2f b=%.2f L=%.0f", p.d, p.c, p.alpha, p.beta, p.section_m);
  return buf;
}

void criterion_oracle_equivalence(Report& r) {
  constexpr std::uint64_t kRuns = 1'000'000;
  std::uint64_t index = 0;
  for (const auto& p : acceptance_grid()) {
    const auto m = build(p);
    const auto h = exit_probability(m.extended);
    const McOptions opts{kRuns, derive_seed(kSeed, index++), worker_count(), 100'000'000};
    const auto mc_h = mc_exit_oracle(m.extended, 0, opts);
    // Sample SE can be 0 when no walk (or every walk) hits; the Bernoulli SE
    // at the solved value is the right scale then.
    const double se_h = std::max(mc_h.h.std_error, std::sqrt(h[0] * (1.0 - h[0]) / static_cast<double>(kRuns)));
    const double z_h = se_h > 0.0 ? (mc_h.h.mean - h[0]) / se_h : 0.0;
    std::string line = label(p) + fmt("  h0=%.6g mc=%.6g z=%+.2f", h[0], mc_h.h.mean, z_h);
    bool ok = std::abs(mc_h.h.mean - h[0]) <= 3.0 * se_h;
    if (p.check_g) {
      const auto g = exit_time(m.modified);
      const auto mc_g = mc_exit_oracle(m.modified, 0, opts);
      const double z_g = (mc_g.g->mean - g[0]) / mc_g.g->std_error;
      line += fmt("  g0=%.6g mc=%.6g z=%+.2f", g[0], mc_g.g->mean, z_g);
      ok = ok && std::abs(mc_g.g->mean - g[0]) <= 3.0 * mc_g.g->std_error;
    } else {
      line += "  g not sampled";
    }
    ok ? r.detail(line) : r.fail(line);
  }
}

void criterion_harmonicity(Report& r) {
  double worst_h = 0.0;
  double worst_g = 0.0;
  for (const auto& p : acceptance_grid()) {
    const auto m = build(p);
    const auto h = exit_probability(m.extended);
    const auto g = exit_time(m.modified);
    const auto n = static_cast<std::size_t>(p.d) + 1;  // transients 0..D
    double point_h = 0.0;
    double point_g = 0.0;
    double g_max = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      double ph = 0.0;
      double pg = 1.0;
      for (std::size_t y = 0; y < m.extended.dimension(); ++y) {
        ph += m.extended(x, y) * h[y];
      }
      for (std::size_t y = 0; y < m.modified.dimension(); ++y) {
        pg += m.modified(x, y) * g[y];
      }
      point_h = std::max(point_h, std::abs(h[x] - ph));
      point_g = std::max(point_g, std::abs(g[x] - pg));
      g_max = std::max(g_max, g[x]);
    }
    worst_h = std::max(worst_h, point_h);
    worst_g = std::max(worst_g, point_g);
    // One ulp of the largest g bounds how small an absolute residual can be.
    const std::string line = label(p) + fmt("  |h-Ph|=%.3g |g-1-Pg|=%.3g max g=%.4g ulp=%.3g", point_h, point_g,
                                            g_max, std::nextafter(g_max, INFINITY) - g_max);
    point_h < 1e-10 && point_g < 1e-10 ? r.detail(line) : r.fail(line);
  }
  r.detail(fmt("max |h - Ph| = %.3g, max |g - 1 - Pg| = %.3g", worst_h, worst_g));
}

void criterion_boundaries(Report& r) {
  for (const auto& p : acceptance_grid()) {
    const auto m = build(p);
    const auto h = exit_probability(m.extended);
    const auto g = exit_time(m.modified);
    const auto d = static_cast<std::size_t>(p.d);
    if (!(h[d + 1] == 1.0 && h[d + 2] == 0.0 && g[d + 1] == 0.0)) {
      r.fail(label(p) + ": boundary values not exact");
    }
  }
  r.detail("h(D+1)=1, h(D+2)=0, g(D+1)=0 exactly on every grid point");
  int alpha_zero = 0;
  for (int d : {4, 8, 16}) {
    for (int c = 1; c <= d - 1; ++c) {
      const ChainParams params{0.0, 0.34, c, d};
      const auto env = task1_traffic();
      const auto h = exit_probability(build_extended_matrix(params, env, trip_end_probability(807.0, 54.0, kDelta)));
      for (int x = 0; x <= d; ++x) {
        if (h[static_cast<std::size_t>(x)] != 0.0) {
          r.fail("alpha=0 D=" + std::to_string(d) + " c=" + std::to_string(c) + ": h(" + std::to_string(x) +
                 ") != 0");
        }
      }
      try {
        exit_time(build_modified_matrix(params, free_state_probs(env)));
        r.fail("alpha=0 D=" + std::to_string(d) + " c=" + std::to_string(c) + ": exit_time did not throw");
      } catch (const InfiniteExitTimeError&) {
      }
      ++alpha_zero;
    }
  }
  r.detail("alpha=0: h = 0 on transients and InfiniteExitTimeError on " + std::to_string(alpha_zero) + " chains");
}

void criterion_matrix_invariants(Report& r) {
  oracle::Gen gen(kSeed);
  double worst = 0.0;
  int pattern_failures = 0;
  for (int i = 0; i < 10'000; ++i) {
    ChainParams p;
    p.d_count = static_cast<int>(gen.integer(1, 32));
    p.c = static_cast<int>(gen.integer(1, p.d_count));
    p.alpha = gen.uniform(0.0, 1.0);
    p.beta = gen.uniform(0.0, 1.0 - p.alpha);
    TrafficEnv env;
    env.density_k = gen.uniform(0.0, env.k_jam);
    const auto free = free_state_probs(env);
    const double p3 = gen.uniform(0.0, 0.99);
    const TransitionMatrix mats[] = {build_ideal_matrix(p, free), build_modified_matrix(p, free),
                                     build_extended_matrix(p, env, p3)};
    for (int kind = 0; kind < 3; ++kind) {
      const auto cells = oracle::chain_cells(kind, p.alpha, p.beta, p.c, p.d_count, free.p0, kind == 2 ? p3 : 0.0);
      const auto& m = mats[kind];
      bool same = m.dimension() == cells.size();
      for (std::size_t row = 0; same && row < m.dimension(); ++row) {
        double sum = 0.0;
        for (std::size_t col = 0; col < m.dimension(); ++col) {
          sum += m(row, col);
          same = same && (m(row, col) == 0.0) == (cells[row][col] == 0.0) &&
                 std::abs(m(row, col) - cells[row][col]) <= 1e-15;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
      }
      pattern_failures += same ? 0 : 1;
    }
  }
  const std::string line =
      fmt("30000 matrices, max row-sum error %.3g, pattern mismatches %.0f", worst, pattern_failures);
  worst < 1e-12 && pattern_failures == 0 ? r.detail(line) : r.fail(line);
}

void criterion_four_tasks(Report& r) {
  constexpr std::uint64_t kTrips = 100'000;
  auto cfg = cli::load_run_config(kSource / "configs" / "four_tasks.conf");
  const auto tasks = cli::resolved_tasks(cfg);
  const StateSpace space(cfg.state_space);
  ControllerSettings controller = cfg.controller;
  controller.alpha = cfg.alpha;
  controller.beta = cfg.beta;
  const auto tail = static_cast<std::size_t>(space.d_count() - 1);
  double freq[5] = {0, 0, 0, 0, 0};
  for (auto task : tasks) {
    task.trip_count = kTrips;
    const auto result = run_task(task, space, controller, cfg.traffic, cfg.leader, {false, worker_count()});
    std::uint64_t deep = 0;
    for (std::size_t s = tail; s < result.histogram.size(); ++s) {
      deep += result.histogram[s];
    }
    // Frames in states >= D-1 per trip: the count a per-task histogram bar shows.
    freq[task.id] = static_cast<double>(deep) / static_cast<double>(kTrips);
    r.detail("task " + std::to_string(task.id) + fmt(" (q=%.0f, c=%.1f): %.5f deep frames/trip, accidents %.0f", task.flow_q,
                                                     task.ttc_threshold_c, freq[task.id],
                                                     static_cast<double>(result.accidents)));
  }
  const bool lowest = freq[1] < freq[2] && freq[1] < freq[3] && freq[1] < freq[4];
  const bool highest = freq[4] > freq[1] && freq[4] > freq[2] && freq[4] > freq[3];
  const double c_effect = 0.5 * ((freq[3] - freq[1]) + (freq[4] - freq[2]));
  const double q_effect = 0.5 * ((freq[2] - freq[1]) + (freq[4] - freq[3]));
  const std::string line = fmt("c-effect %.5f vs q-effect %.5f", c_effect, q_effect);
  if (!lowest) {
    r.fail("task 1 is not the lowest");
  }
  if (!highest) {
    r.fail("task 4 is not the highest");
  }
  c_effect > q_effect ? r.detail(line) : r.fail(line);
}

struct SweepPoint {
  double h0;
  double g0;
};

SweepPoint solve_point(const ChainParams& p, double flow) {
  const auto env = traffic_for_flow(flow, TrafficEnv{});
  const auto h = exit_probability(build_extended_matrix(p, env, trip_end_probability(807.0, 54.0, kDelta)));
  const auto g = exit_time(build_modified_matrix(p, free_state_probs(env)));
  return {h[0], g[0]};
}

void check_sweep(Report& r, const std::string& name, const std::vector<SweepPoint>& pts) {
  bool h_ok = true;
  bool g_ok = true;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    h_ok = h_ok && pts[i].h0 >= pts[i - 1].h0;
    g_ok = g_ok && pts[i].g0 <= pts[i - 1].g0;
  }
  const std::string line = name + ": " + std::to_string(pts.size()) + " points, h0 " +
                           fmt("%.6g -> %.6g, g0 %.6g -> %.6g", pts.front().h0, pts.back().h0, pts.front().g0,
                               pts.back().g0);
  h_ok && g_ok ? r.detail(line) : r.fail(line);
}

void criterion_monotonicity(Report& r) {
  std::vector<SweepPoint> alpha;
  for (double a : {0.005, 0.01, 0.02, 0.04, 0.08, 0.16}) {
    alpha.push_back(solve_point({a, 0.34, 4, 8}, 1500.0));
  }
  check_sweep(r, "alpha", alpha);
  std::vector<SweepPoint> c;
  for (int ci = 1; ci <= 8; ++ci) {
    c.push_back(solve_point({0.02, 0.34, ci, 8}, 1500.0));
  }
  check_sweep(r, "c", c);
  std::vector<SweepPoint> k;
  for (double q : {300.0, 600.0, 900.0, 1200.0, 1500.0, 1800.0}) {
    k.push_back(solve_point({0.02, 0.34, 4, 8}, q));
  }
  check_sweep(r, "k (via q)", k);
}

void criterion_entropy(Report& r) {
  oracle::Gen gen(kSeed + 7);
  int refinement_failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<std::size_t>(gen.integer(1, 24));
    std::vector<std::uint64_t> counts(n);
    for (auto& v : counts) {
      v = static_cast<std::uint64_t>(gen.integer(0, 500));
    }
    counts[0] += 1;
    std::vector<std::size_t> groups(n, 0);
    for (std::size_t s = 1; s < n; ++s) {
      groups[s] = groups[s - 1] + (gen.coin(0.5) ? 1 : 0);
    }
    const StateHistogram fine(counts);
    if (shannon_entropy(coarsen(fine, groups)) > shannon_entropy(fine) + 1e-12) {
      ++refinement_failures;
    }
  }
  const std::string refine = fmt("refinement: %.0f failures in 1000 pairs", refinement_failures);
  refinement_failures == 0 ? r.detail(refine) : r.fail(refine);

  // lambda e^{lambda t} is a probability only where it is <= 1; larger values
  // are outside self_information's domain and must be rejected.
  double worst = 0.0;
  int checked = 0;
  int rejected = 0;
  bool rejection_ok = true;
  for (const double lambda : {0.1, 1.0, 10.0}) {
    for (int i = 0; i <= 1000; ++i) {
      const double t = -10.0 + 0.01 * i;
      const double p = lambda * std::exp(lambda * t);
      const double linear = -std::log2(lambda) - lambda * t * std::numbers::log2e;
      if (p > 1.0) {
        try {
          self_information(p);
          rejection_ok = false;
        } catch (const DomainError&) {
          ++rejected;
        }
        continue;
      }
      const double got = self_information(p);
      worst = std::max(worst, std::abs(got - linear) / std::max(std::abs(linear), 1e-300));
      ++checked;
    }
  }
  const std::string lin = fmt("exponential linearity: %.0f points, max relative error %.3g; %.0f points with p > 1 rejected",
                              checked, worst, rejected);
  worst <= 1e-9 && rejection_ok ? r.detail(lin) : r.fail(lin);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"ttarisk"};
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  std::ostringstream out;
  std::ostringstream err;
  return cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

void criterion_determinism(Report& r) {
  const fs::path root = fs::temp_directory_path() / "ttarisk_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string config = (kSource / "configs" / "four_tasks.conf").string();
  {
    std::ofstream mc(root / "mc.conf", std::ios::binary);
    mc << "seed = 99\nstate_space.sigma = 0.4\nstate_space.thrd_conflict = 0.8\n";
  }
  const std::string mc_config = (root / "mc.conf").string();
  const std::string workers[] = {"1", "1", std::to_string(std::max(4u, worker_count()))};
  for (int i = 0; i < 3; ++i) {
    const fs::path dir = root / ("run" + std::to_string(i));
    const std::string w = workers[i];
    int code = run({"--config", config, "--output", dir.string(), "--workers", w, "simulate", "--all", "--trips", "60"});
    code |= run({"--config", config, "--output", (dir / "solve").string(), "--workers", w, "solve"});
    code |= run({"--config", mc_config, "--output", (dir / "mc").string(), "--workers", w, "solve", "--mc-check",
                 "200000"});
    if (code != 0) {
      r.fail("run " + std::to_string(i) + " exited non-zero");
      return;
    }
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "run0")) {
    if (!entry.is_regular_file()) {
      continue;
    }
    const auto rel = fs::relative(entry.path(), root / "run0");
    const auto reference = slurp(entry.path());
    for (int i = 1; i < 3; ++i) {
      const fs::path other = root / ("run" + std::to_string(i)) / rel;
      if (!fs::exists(other) || slurp(other) != reference) {
        r.fail(rel.string() + " differs in run " + std::to_string(i));
      }
    }
    ++files;
  }
  r.detail(std::to_string(files) + " files compared across 3 runs (workers 1, 1, " + workers[2] + ")");
  if (files < 15) {
    r.fail("expected at least 15 output files");
  }
  fs::remove_all(root);
}

}  // namespace

// With arguments, only the listed criterion ids run.
int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Report&)> body;
  };
  const Criterion criteria[] = {
      {1, "solver/oracle equivalence within 3 SE at 1e6 runs", criterion_oracle_equivalence},
      {2, "harmonicity residuals < 1e-10", criterion_harmonicity},
      {3, "boundary and degenerate cases", criterion_boundaries},
      {4, "matrix invariants on 1e4 random parameter sets", criterion_matrix_invariants},
      {5, "four-task ordinal reproduction", criterion_four_tasks},
      {6, "monotonicity sweeps", criterion_monotonicity},
      {7, "entropy properties", criterion_entropy},
      {8, "byte-identical outputs across runs and worker counts", criterion_determinism},
  };
  int failures = 0;
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    only.push_back(std::atoi(argv[i]));
  }
  int ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
      continue;
    }
    ++ran;
    Report report;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(report);
    } catch (const std::exception& e) {
      report.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s [%d] %s (%.1f s)\n", report.ok() ? "PASS" : "FAIL", c.id, c.name, secs);
    for (const auto& line : report.details()) {
      std::printf("    %s\n", line.c_str());
    }
    std::fflush(stdout);
    failures += report.ok() ? 0 : 1;
  }
  std::printf("%d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
