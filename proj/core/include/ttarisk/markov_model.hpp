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

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ttarisk/state_space.hpp"

namespace ttarisk {

/// Error/delay probabilities and the conflict row of the risk chain.
struct ChainParams {
  double alpha{0.02};
  double beta{0.34};
  StateIndex c{4};
  int d_count{8};

  double gamma() const noexcept { return alpha + beta; }
  /// Throws ConfigError unless alpha, beta >= 0, gamma <= 1, 1 <= c <= D.
  void validate() const;
};

/// Traffic conditions around the vehicle. Speeds in km/h, densities in
/// veh/km, flow in veh/h.
struct TrafficEnv {
  double flow_q{1500.0};
  double density_k{0.0};
  double u_max{60.0};
  double u_free{60.0};
  double k_jam{120.0};
  double speed_noise_sd{5.0};

  /// Throws DomainError/ConfigError on an inconsistent environment.
  void validate() const;
};

/// Greenshields equilibrium speed u_free * (1 - k / k_jam).
double equilibrium_speed(double k, const TrafficEnv& env);
/// Capacity u_free * k_jam / 4.
double max_flow(const TrafficEnv& env);
/// Uncongested root of q = k * u_e(k). Throws InfeasibleFlowError above
/// capacity.
double flow_to_density(double q, const TrafficEnv& env);
/// Copy of `base` with flow_q = q and density_k from flow_to_density.
TrafficEnv traffic_for_flow(double q, TrafficEnv base);

/// Row-0 probabilities: p0 = P(u_smooth > u_max), q0 = 1 - p0, with
/// u_smooth ~ N(u_e(k), speed_noise_sd^2).
struct FreeStateProbs {
  double p0;
  double q0;
};

FreeStateProbs free_state_probs(const TrafficEnv& env);
/// One FreeStateProbs per density sample of a k(t) trace.
std::vector<FreeStateProbs> free_state_probs_trace(std::span<const double> densities,
                                                   const TrafficEnv& env);

enum class MatrixKind { Ideal, Modified, Extended };

std::string_view to_string(MatrixKind kind) noexcept;

/// Dense row-stochastic matrix over the risk states. Ideal/Modified have
/// D+2 states with the accident absorbing at D+1; Extended adds the trip
/// terminal D+2.
class TransitionMatrix {
 public:
  /// Throws ConfigError unless every row sums to 1 within 1e-12 and all
  /// entries are in [0,1].
  static TransitionMatrix from_rows(MatrixKind kind, const std::vector<std::vector<double>>& rows);

  MatrixKind kind() const noexcept { return kind_; }
  std::size_t dimension() const noexcept { return n_; }
  double operator()(std::size_t row, std::size_t col) const { return p_[row * n_ + col]; }
  std::span<const double> row(std::size_t r) const { return {p_.data() + r * n_, n_}; }

  StateIndex accident_state() const noexcept;
  /// -1 unless Extended.
  StateIndex terminal_state() const noexcept;

 private:
  TransitionMatrix(MatrixKind kind, std::size_t n, std::vector<double> p)
      : kind_(kind), n_(n), p_(std::move(p)) {}

  MatrixKind kind_;
  std::size_t n_;
  std::vector<double> p_;
};

TransitionMatrix build_ideal_matrix(const ChainParams& params, FreeStateProbs free);
TransitionMatrix build_modified_matrix(const ChainParams& params, FreeStateProbs free);
/// Row 0 becomes (p0 (1-p3), q0 (1-p3), ..., p3); throws ConfigError unless
/// p3 in [0,1).
TransitionMatrix build_extended_matrix(const ChainParams& params, const TrafficEnv& env, double p3);

/// Matrices of the time-varying chain, one per density sample.
std::vector<TransitionMatrix> build_modified_matrices(const ChainParams& params,
                                                      std::span<const double> densities,
                                                      const TrafficEnv& env);

/// Per-step trip-end probability of a geometric trip model:
/// delta / (section_length / mean_speed).
double trip_end_probability(double section_length_m, double mean_speed_kmh, double delta_s);

struct StateClasses {
  std::vector<StateIndex> transient;
  std::vector<StateIndex> recurrent;
};

/// Recurrent states are the members of closed communicating classes.
StateClasses classify_states(const TransitionMatrix& m);

/// True when some state in `targets` is reachable from `from` (in >= 0 steps).
bool reachable(const TransitionMatrix& m, StateIndex from, std::span<const StateIndex> targets);

/// {"kind", "dimension", "rows"} export.
nlohmann::json to_json(const TransitionMatrix& m);
/// Throws ParseError on a malformed document, ConfigError on bad rows.
TransitionMatrix matrix_from_json(const nlohmann::json& doc);

}  // namespace ttarisk
