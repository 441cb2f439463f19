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

#include <optional>
#include <vector>

#include "ttarisk/risk_metrics.hpp"

namespace ttarisk {

/// Index into the discretized TTA space: 0 = free, 1..D = graded conflict,
/// D+1 = accident, D+2 = trip terminal (extended chain only).
using StateIndex = int;

/// Thresholds are positive magnitudes in seconds; the TTA axis is negative.
struct StateSpaceConfig {
  double thrd_detect{2.2};
  double thrd_conflict{1.4};
  double thrd_deadline{0.6};
  double sigma{0.2};
  double delta{1.0 / 15.0};
};

/// Left-open, right-closed TTA interval (lower, upper]. `lower` may be -inf.
struct Interval {
  double lower;
  double upper;

  bool contains(double tta) const noexcept { return tta > lower && tta <= upper; }
};

/// Values closer than this to an interval boundary are treated as lying on
/// it, so boundaries such as -2.2 + 0.2 land where the decimal reading says.
inline constexpr double kBoundarySnap = 1e-9;

/// The D+2 interval partition of (-inf, 0] built from a validated config.
class StateSpace {
 public:
  /// Throws ConfigError when thresholds are out of order, sigma <= delta or
  /// sigma does not divide (detect - deadline) into whole intervals.
  explicit StateSpace(StateSpaceConfig cfg);

  const StateSpaceConfig& config() const noexcept { return cfg_; }
  int d_count() const noexcept { return d_count_; }
  int state_count() const noexcept { return d_count_ + 2; }
  StateIndex accident_state() const noexcept { return d_count_ + 1; }
  const std::vector<Interval>& intervals() const noexcept { return intervals_; }

  /// Decision epoch length in frames: round(sigma / delta), at least 1.
  int frames_per_epoch() const noexcept;

  StateIndex state_of(TtaValue tta) const;
  /// Throws DomainError for tta > 0.
  StateIndex state_of(double tta) const;

  /// Conflict row index for a TTC threshold of `c_seconds`. Throws
  /// DomainError unless deadline < c <= detect.
  StateIndex threshold_state(double c_seconds) const;

  /// TTA used to stand in for state `s`: interval midpoint for 1..D,
  /// `no_conflict_cap` (default -detect - sigma) for 0, -deadline/2 for D+1.
  double representative_tta(StateIndex s, std::optional<double> no_conflict_cap = {}) const;

  double default_no_conflict_cap() const noexcept { return -(cfg_.thrd_detect + cfg_.sigma); }

 private:
  StateSpaceConfig cfg_;
  int d_count_{0};
  std::vector<double> upper_bounds_;  // upper edge of states 0..D
  std::vector<Interval> intervals_;
};

/// Interval list of the partition; throws ConfigError like StateSpace.
std::vector<Interval> build_state_space(const StateSpaceConfig& cfg);

/// Maps a histogram over states 0..D+1 onto representative TTA values.
/// Histograms shorter than D+2 rows are zero-padded; longer ones throw
/// DomainError.
TtaDistribution histogram_to_distribution(const StateHistogram& hist, const StateSpace& space,
                                          std::optional<double> no_conflict_cap = {});

}  // namespace ttarisk
