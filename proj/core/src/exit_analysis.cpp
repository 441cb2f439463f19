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

#include "ttarisk/exit_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "ttarisk/errors.hpp"
#include "ttarisk/rng.hpp"

namespace ttarisk {

namespace {

constexpr double kIllConditioned = 1e-12;

// Indices of the states whose value is unknown (everything but `fixed`).
std::vector<std::size_t> unknown_states(std::size_t n, std::span<const StateIndex> fixed) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (std::find(fixed.begin(), fixed.end(), static_cast<StateIndex>(s)) == fixed.end()) {
      out.push_back(s);
    }
  }
  return out;
}

// Solves (I - Q) x = rhs where Q is `m` restricted to `unknown`.
Eigen::VectorXd solve_transient(const TransitionMatrix& m, const std::vector<std::size_t>& unknown,
                                const Eigen::VectorXd& rhs, SolveReport* report) {
  const auto k = static_cast<Eigen::Index>(unknown.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      a(i, j) -= m(unknown[static_cast<std::size_t>(i)], unknown[static_cast<std::size_t>(j)]);
    }
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (report != nullptr) {
    report->rcond = lu.rcond();
    report->ill_conditioned = report->rcond < kIllConditioned;
  }
  Eigen::VectorXd x = lu.solve(rhs);
  // Near-absorbing chains make I - Q ill-conditioned (exit times of 1e7+
  // steps); refinement with an extended-precision residual recovers the
  // digits plain LU loses.
  for (int pass = 0; pass < 3; ++pass) {
    Eigen::VectorXd residual(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      long double acc = rhs(i);
      for (Eigen::Index j = 0; j < k; ++j) {
        // Rebuild I - Q in extended precision: rounding 1 - q(i,i) to double
        // is itself a perturbation the conditioning amplifies.
        const long double q = m(unknown[static_cast<std::size_t>(i)], unknown[static_cast<std::size_t>(j)]);
        acc -= ((i == j ? 1.0L : 0.0L) - q) * x(j);
      }
      residual(i) = static_cast<double>(acc);
    }
    x += lu.solve(residual);
  }
  return x;
}

}  // namespace

std::vector<double> ExitSolution::g_seconds() const {
  std::vector<double> out(g.size());
  std::transform(g.begin(), g.end(), out.begin(), [this](double steps) { return steps * delta; });
  return out;
}

std::vector<double> exit_probability(const TransitionMatrix& extended, SolveReport* report) {
  if (extended.kind() != MatrixKind::Extended) {
    throw DomainError("exit probability needs an extended matrix");
  }
  const StateIndex accident = extended.accident_state();
  const StateIndex terminal = extended.terminal_state();
  const StateIndex exits[] = {accident, terminal};
  const StateIndex accident_only[] = {accident};
  // States that cannot reach the accident have h = 0 (the minimal solution);
  // the rest form a nonsingular system.
  std::vector<StateIndex> fixed(std::begin(exits), std::end(exits));
  bool any_exit = false;
  for (const auto x : unknown_states(extended.dimension(), exits)) {
    const auto s = static_cast<StateIndex>(x);
    any_exit = any_exit || reachable(extended, s, exits);
    if (!reachable(extended, s, accident_only)) {
      fixed.push_back(s);
    }
  }
  if (!any_exit) {
    throw NoExitError("no transient state reaches the accident or the terminal state");
  }
  const auto unknown = unknown_states(extended.dimension(), fixed);
  std::vector<double> h(extended.dimension(), 0.0);
  if (!unknown.empty()) {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(unknown.size()));
    for (std::size_t i = 0; i < unknown.size(); ++i) {
      rhs(static_cast<Eigen::Index>(i)) = extended(unknown[i], static_cast<std::size_t>(accident));
    }
    const Eigen::VectorXd sol = solve_transient(extended, unknown, rhs, report);
    for (std::size_t i = 0; i < unknown.size(); ++i) {
      h[unknown[i]] = std::clamp(sol(static_cast<Eigen::Index>(i)), 0.0, 1.0);
    }
  }
  h[static_cast<std::size_t>(accident)] = 1.0;
  h[static_cast<std::size_t>(terminal)] = 0.0;
  return h;
}

std::vector<double> exit_time(const TransitionMatrix& modified, SolveReport* report) {
  const StateIndex accident = modified.accident_state();
  const StateIndex exits[] = {accident};
  const auto unknown = unknown_states(modified.dimension(), exits);
  for (const auto x : unknown) {
    if (!reachable(modified, static_cast<StateIndex>(x), exits)) {
      throw InfiniteExitTimeError("accident state unreachable from state " + std::to_string(x));
    }
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(unknown.size()));
  const Eigen::VectorXd sol = solve_transient(modified, unknown, ones, report);

  std::vector<double> g(modified.dimension(), 0.0);
  for (std::size_t i = 0; i < unknown.size(); ++i) {
    g[unknown[i]] = sol(static_cast<Eigen::Index>(i));
  }
  return g;
}

std::vector<double> conditional_exit_time(const TransitionMatrix& extended) {
  const auto h = exit_probability(extended);
  // k(x) = E_x[T; accident first] solves k = h + Q k; k vanishes where h does.
  std::vector<std::size_t> unknown;
  for (std::size_t x = 0; x < extended.dimension(); ++x) {
    if (h[x] > 0.0 && static_cast<StateIndex>(x) != extended.accident_state()) {
      unknown.push_back(x);
    }
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> out(extended.dimension(), inf);
  if (!unknown.empty()) {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(unknown.size()));
    for (std::size_t i = 0; i < unknown.size(); ++i) {
      rhs(static_cast<Eigen::Index>(i)) = h[unknown[i]];
    }
    const Eigen::VectorXd k = solve_transient(extended, unknown, rhs, nullptr);
    for (std::size_t i = 0; i < unknown.size(); ++i) {
      out[unknown[i]] = k(static_cast<Eigen::Index>(i)) / h[unknown[i]];
    }
  }
  out[static_cast<std::size_t>(extended.accident_state())] = 0.0;
  return out;
}

ExitSolution solve_exit(const TransitionMatrix& extended, const TransitionMatrix& modified, double delta) {
  return {exit_probability(extended), exit_time(modified), delta};
}

double accident_frequency(double g0_steps, double delta_s) {
  if (!(g0_steps > 0.0) || !(delta_s > 0.0)) {
    throw DomainError("exit time and step length must be > 0");
  }
  return 3600.0 / (g0_steps * delta_s);
}

namespace {

struct SparseRow {
  std::vector<std::uint32_t> cols;
  std::vector<double> cumulative;
  bool absorbing{false};
};

std::vector<SparseRow> sparse_rows(const TransitionMatrix& m) {
  const std::size_t n = m.dimension();
  std::vector<SparseRow> rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto& row = rows[r];
    row.absorbing = m(r, r) == 1.0;
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (m(r, c) > 0.0) {
        acc += m(r, c);
        row.cols.push_back(static_cast<std::uint32_t>(c));
        row.cumulative.push_back(acc);
      }
    }
    // Close the row exactly so u in [0,1) always lands on a column.
    row.cumulative.back() = 1.0;
  }
  return rows;
}

__extension__ typedef unsigned __int128 Wide;

struct Tally {
  std::uint64_t hits{0};
  Wide steps{0};
  Wide steps_sq{0};

  void add(const Tally& other) {
    hits += other.hits;
    steps += other.steps;
    steps_sq += other.steps_sq;
  }
};

}  // namespace

McExitEstimate mc_exit_oracle(const TransitionMatrix& m, StateIndex start, const McOptions& options) {
  if (options.runs == 0) {
    throw DomainError("Monte Carlo needs at least one run");
  }
  if (start < 0 || static_cast<std::size_t>(start) >= m.dimension()) {
    throw DomainError("start state outside the matrix");
  }
  const auto rows = sparse_rows(m);
  const auto accident = static_cast<std::uint32_t>(m.accident_state());
  const bool extended = m.kind() == MatrixKind::Extended;

  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, 256));
  std::vector<Tally> tallies(workers);
  std::vector<std::exception_ptr> failures(workers);

  auto run_range = [&](unsigned w, std::uint64_t begin, std::uint64_t end) {
    try {
      Tally tally;
      for (std::uint64_t i = begin; i < end; ++i) {
        Xoshiro256 rng(derive_seed(options.seed, i));
        auto state = static_cast<std::uint32_t>(start);
        std::uint64_t steps = 0;
        while (!rows[state].absorbing) {
          if (steps == options.step_cap) {
            throw NonAbsorptionError("walk " + std::to_string(i) + " exceeded the step cap of " +
                                     std::to_string(options.step_cap));
          }
          const auto& row = rows[state];
          const double u = rng.uniform();
          std::size_t j = 0;
          while (u >= row.cumulative[j]) {
            ++j;
          }
          state = row.cols[j];
          ++steps;
        }
        if (state == accident) {
          ++tally.hits;
          tally.steps += steps;
          tally.steps_sq += static_cast<Wide>(steps) * steps;
        } else if (!extended) {
          throw NonAbsorptionError("walk " + std::to_string(i) + " was absorbed at state " +
                                   std::to_string(state) + ", not at the accident state");
        }
      }
      tallies[w] = tally;
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };

  const std::uint64_t chunk = options.runs / workers;
  const std::uint64_t extra = options.runs % workers;
  {
    std::vector<std::jthread> pool;
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
  for (const auto& failure : failures) {
    if (failure) {
      std::rethrow_exception(failure);
    }
  }

  Tally total;
  for (const auto& t : tallies) {
    total.add(t);
  }

  McExitEstimate out;
  const auto n = static_cast<long double>(options.runs);
  const long double p = static_cast<long double>(total.hits) / n;
  out.h = {static_cast<double>(p), static_cast<double>(std::sqrt(p * (1.0L - p) / n)), options.runs,
           options.seed};
  if (total.hits > 0) {
    const auto k = static_cast<long double>(total.hits);
    const long double sum = static_cast<long double>(total.steps);
    const long double mean = sum / k;
    long double se = 0.0L;
    if (total.hits > 1) {
      const long double sq = static_cast<long double>(total.steps_sq);
      const long double var = std::max(0.0L, (sq - sum * mean) / (k - 1.0L));
      se = std::sqrt(var / k);
    }
    out.g = McEstimate{static_cast<double>(mean), static_cast<double>(se), total.hits, options.seed};
  }
  return out;
}

}  // namespace ttarisk
