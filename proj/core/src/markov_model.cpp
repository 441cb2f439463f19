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

#include "ttarisk/markov_model.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "ttarisk/errors.hpp"

namespace ttarisk {

namespace {

constexpr double kRowSumTolerance = 1e-12;

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string(name) + " must be a probability in [0,1]");
  }
}

// Fills rows 1..D of the error/delay chain into a row-major n x n buffer.
void fill_conflict_rows(std::vector<double>& p, std::size_t n, const ChainParams& params) {
  const double a = params.alpha;
  const double b = params.beta;
  const double keep = 1.0 - params.gamma();
  const int c = params.c;
  for (int i = 1; i <= params.d_count; ++i) {
    double* row = p.data() + static_cast<std::size_t>(i) * n;
    if (i < c) {
      row[i - 1] = a;
      row[i] = b;
      row[i + 1] = keep;
    } else if (i == c) {
      row[i - 1] = params.gamma() / 2.0;
      row[i] = keep;
      row[i + 1] = params.gamma() / 2.0;
    } else {
      row[i - 1] = keep;
      row[i] = b;
      row[i + 1] = a;
    }
  }
}

}  // namespace

void ChainParams::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) {
    throw ConfigError("alpha and beta must be >= 0");
  }
  if (!(gamma() <= 1.0)) {
    throw ConfigError("gamma = alpha + beta must be <= 1");
  }
  if (d_count < 1) {
    throw ConfigError("D must be >= 1");
  }
  if (c < 1 || c > d_count) {
    throw ConfigError("conflict index c=" + std::to_string(c) + " outside 1..D");
  }
}

void TrafficEnv::validate() const {
  if (!(u_free > 0.0) || !(k_jam > 0.0) || !(u_max > 0.0)) {
    throw ConfigError("u_free, u_max and k_jam must be > 0");
  }
  if (!(speed_noise_sd >= 0.0)) {
    throw ConfigError("speed_noise_sd must be >= 0");
  }
  if (!(flow_q >= 0.0)) {
    throw ConfigError("flow must be >= 0");
  }
  if (!(density_k >= 0.0 && density_k <= k_jam)) {
    throw DomainError("density outside [0, k_jam]");
  }
}

double equilibrium_speed(double k, const TrafficEnv& env) {
  if (!(k >= 0.0 && k <= env.k_jam)) {
    throw DomainError("density " + std::to_string(k) + " outside [0, k_jam]");
  }
  return env.u_free * (1.0 - k / env.k_jam);
}

double max_flow(const TrafficEnv& env) { return env.u_free * env.k_jam / 4.0; }

double flow_to_density(double q, const TrafficEnv& env) {
  const double q_max = max_flow(env);
  if (!(q >= 0.0)) {
    throw DomainError("flow must be >= 0");
  }
  if (q > q_max * (1.0 + 1e-12)) {
    throw InfeasibleFlowError("flow " + std::to_string(q) + " veh/h exceeds capacity " +
                              std::to_string(q_max) + " veh/h");
  }
  // k^2 - k_jam k + q k_jam / u_free = 0; smaller root in the cancellation-free form.
  const double constant = q * env.k_jam / env.u_free;
  const double disc = std::max(0.0, env.k_jam * env.k_jam - 4.0 * constant);
  return 2.0 * constant / (env.k_jam + std::sqrt(disc));
}

TrafficEnv traffic_for_flow(double q, TrafficEnv base) {
  base.flow_q = q;
  base.density_k = flow_to_density(q, base);
  return base;
}

FreeStateProbs free_state_probs(const TrafficEnv& env) {
  env.validate();
  const double mean = equilibrium_speed(env.density_k, env);
  double p0 = 0.0;
  if (env.speed_noise_sd == 0.0) {
    p0 = mean > env.u_max ? 1.0 : 0.0;
  } else {
    p0 = 0.5 * std::erfc((env.u_max - mean) / (env.speed_noise_sd * std::sqrt(2.0)));
  }
  return {p0, 1.0 - p0};
}

std::vector<FreeStateProbs> free_state_probs_trace(std::span<const double> densities,
                                                   const TrafficEnv& env) {
  std::vector<FreeStateProbs> out;
  out.reserve(densities.size());
  TrafficEnv at = env;
  for (const double k : densities) {
    at.density_k = k;
    out.push_back(free_state_probs(at));
  }
  return out;
}

std::string_view to_string(MatrixKind kind) noexcept {
  switch (kind) {
    case MatrixKind::Ideal:
      return "IDEAL";
    case MatrixKind::Modified:
      return "MODIFIED";
    case MatrixKind::Extended:
      return "EXTENDED";
  }
  return "UNKNOWN";
}

TransitionMatrix TransitionMatrix::from_rows(MatrixKind kind,
                                             const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t min_n = kind == MatrixKind::Extended ? 2 : 1;
  if (n < min_n) {
    throw ConfigError("transition matrix too small for its kind");
  }
  std::vector<double> p;
  p.reserve(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    if (rows[r].size() != n) {
      throw ConfigError("transition matrix must be square");
    }
    double sum = 0.0;
    for (const double v : rows[r]) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError("row " + std::to_string(r) + " has an entry outside [0,1]");
      }
      sum += v;
      p.push_back(v);
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ConfigError("row " + std::to_string(r) + " sums to " + std::to_string(sum));
    }
  }
  return TransitionMatrix(kind, n, std::move(p));
}

StateIndex TransitionMatrix::accident_state() const noexcept {
  return static_cast<StateIndex>(kind_ == MatrixKind::Extended ? n_ - 2 : n_ - 1);
}

StateIndex TransitionMatrix::terminal_state() const noexcept {
  return kind_ == MatrixKind::Extended ? static_cast<StateIndex>(n_ - 1) : -1;
}

TransitionMatrix build_ideal_matrix(const ChainParams& params, FreeStateProbs free) {
  params.validate();
  check_probability(free.p0, "p0");
  check_probability(free.q0, "q0");
  const std::size_t n = static_cast<std::size_t>(params.d_count) + 2;
  std::vector<double> p(n * n, 0.0);
  p[0] = free.p0;
  p[1] = free.q0;
  for (int i = 1; i <= params.d_count; ++i) {
    const int target = i < params.c ? i + 1 : (i == params.c ? i : i - 1);
    p[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(target)] = 1.0;
  }
  p[n * n - 1] = 1.0;
  std::vector<std::vector<double>> rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    rows[r].assign(p.begin() + static_cast<std::ptrdiff_t>(r * n),
                   p.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  }
  return TransitionMatrix::from_rows(MatrixKind::Ideal, rows);
}

TransitionMatrix build_modified_matrix(const ChainParams& params, FreeStateProbs free) {
  params.validate();
  check_probability(free.p0, "p0");
  check_probability(free.q0, "q0");
  const std::size_t n = static_cast<std::size_t>(params.d_count) + 2;
  std::vector<double> p(n * n, 0.0);
  p[0] = free.p0;
  p[1] = free.q0;
  fill_conflict_rows(p, n, params);
  p[n * n - 1] = 1.0;
  std::vector<std::vector<double>> rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    rows[r].assign(p.begin() + static_cast<std::ptrdiff_t>(r * n),
                   p.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  }
  return TransitionMatrix::from_rows(MatrixKind::Modified, rows);
}

TransitionMatrix build_extended_matrix(const ChainParams& params, const TrafficEnv& env, double p3) {
  params.validate();
  if (!(p3 >= 0.0 && p3 < 1.0)) {
    throw ConfigError("trip-end probability p3 must be in [0,1)");
  }
  const auto free = free_state_probs(env);
  const std::size_t n = static_cast<std::size_t>(params.d_count) + 3;
  std::vector<double> p(n * n, 0.0);
  p[0] = free.p0 * (1.0 - p3);
  p[1] = free.q0 * (1.0 - p3);
  p[n - 1] = p3;
  fill_conflict_rows(p, n, params);
  const std::size_t accident = n - 2;
  p[accident * n + accident] = 1.0;
  p[n * n - 1] = 1.0;
  std::vector<std::vector<double>> rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    rows[r].assign(p.begin() + static_cast<std::ptrdiff_t>(r * n),
                   p.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  }
  return TransitionMatrix::from_rows(MatrixKind::Extended, rows);
}

std::vector<TransitionMatrix> build_modified_matrices(const ChainParams& params,
                                                      std::span<const double> densities,
                                                      const TrafficEnv& env) {
  std::vector<TransitionMatrix> out;
  out.reserve(densities.size());
  for (const auto& free : free_state_probs_trace(densities, env)) {
    out.push_back(build_modified_matrix(params, free));
  }
  return out;
}

double trip_end_probability(double section_length_m, double mean_speed_kmh, double delta_s) {
  if (!(section_length_m > 0.0) || !(mean_speed_kmh > 0.0) || !(delta_s > 0.0)) {
    throw ConfigError("section length, mean speed and delta must be > 0");
  }
  const double trip_seconds = section_length_m / (mean_speed_kmh / 3.6);
  const double p3 = delta_s / trip_seconds;
  if (!(p3 < 1.0)) {
    throw ConfigError("trip shorter than one step");
  }
  return p3;
}

namespace {

std::vector<std::vector<bool>> reachability(const TransitionMatrix& m) {
  const std::size_t n = m.dimension();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    auto& seen = reach[s];
    seen[s] = true;
    stack.assign(1, s);
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      for (std::size_t y = 0; y < n; ++y) {
        if (m(x, y) > 0.0 && !seen[y]) {
          seen[y] = true;
          stack.push_back(y);
        }
      }
    }
  }
  return reach;
}

}  // namespace

StateClasses classify_states(const TransitionMatrix& m) {
  const auto reach = reachability(m);
  const std::size_t n = m.dimension();
  StateClasses out;
  for (std::size_t i = 0; i < n; ++i) {
    bool closed = true;
    for (std::size_t j = 0; j < n && closed; ++j) {
      if (reach[i][j] && !reach[j][i]) {
        closed = false;
      }
    }
    (closed ? out.recurrent : out.transient).push_back(static_cast<StateIndex>(i));
  }
  return out;
}

bool reachable(const TransitionMatrix& m, StateIndex from, std::span<const StateIndex> targets) {
  const std::size_t n = m.dimension();
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{static_cast<std::size_t>(from)};
  seen[static_cast<std::size_t>(from)] = true;
  while (!stack.empty()) {
    const auto x = stack.back();
    stack.pop_back();
    for (const auto t : targets) {
      if (static_cast<std::size_t>(t) == x) {
        return true;
      }
    }
    for (std::size_t y = 0; y < n; ++y) {
      if (m(x, y) > 0.0 && !seen[y]) {
        seen[y] = true;
        stack.push_back(y);
      }
    }
  }
  return false;
}

nlohmann::json to_json(const TransitionMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.dimension(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"kind", std::string(to_string(m.kind()))}, {"dimension", m.dimension()}, {"rows", rows}};
}

TransitionMatrix matrix_from_json(const nlohmann::json& doc) {
  try {
    const auto kind_name = doc.at("kind").get<std::string>();
    MatrixKind kind{};
    if (kind_name == "IDEAL") {
      kind = MatrixKind::Ideal;
    } else if (kind_name == "MODIFIED") {
      kind = MatrixKind::Modified;
    } else if (kind_name == "EXTENDED") {
      kind = MatrixKind::Extended;
    } else {
      throw ParseError("unknown matrix kind '" + kind_name + "'");
    }
    const auto rows = doc.at("rows").get<std::vector<std::vector<double>>>();
    if (doc.at("dimension").get<std::size_t>() != rows.size()) {
      throw ParseError("dimension does not match the number of rows");
    }
    return TransitionMatrix::from_rows(kind, rows);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed matrix JSON: ") + e.what());
  }
}

}  // namespace ttarisk
