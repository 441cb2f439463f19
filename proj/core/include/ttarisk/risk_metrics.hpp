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
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace ttarisk {

/// Position/speed/length of one vehicle on the road axis (m, m/s, m).
struct KinematicState {
  double position{0.0};
  double speed{0.0};
  double length{5.0};

  /// Throws DomainError on negative speed, non-positive length or a
  /// non-finite position.
  void validate() const;
};

/// Time-to-accident in seconds. Finite values are <= 0 (0 is the crash
/// itself); the no-conflict sentinel stands for minus infinity.
class TtaValue {
 public:
  static TtaValue no_conflict() noexcept { return TtaValue{}; }
  /// Throws DomainError for positive or NaN input.
  static TtaValue at(double seconds);

  bool is_no_conflict() const noexcept { return !value_.has_value(); }
  /// Seconds; minus infinity for the sentinel.
  double seconds() const noexcept;

  friend bool operator==(const TtaValue&, const TtaValue&) = default;

 private:
  TtaValue() = default;
  explicit TtaValue(double v) : value_(v) {}
  std::optional<double> value_;
};

/// Discrete TTA law: (value, probability) atoms.
class TtaDistribution {
 public:
  using Atom = std::pair<TtaValue, double>;

  /// Throws DomainError unless every probability is in [0,1] and they sum to
  /// 1 within 1e-12.
  explicit TtaDistribution(std::vector<Atom> support);

  static TtaDistribution point_mass(TtaValue value);

  const std::vector<Atom>& support() const noexcept { return support_; }

  /// Replaces the no-conflict atom by a finite value (merging weights).
  TtaDistribution with_no_conflict_at(double cap_seconds) const;

  /// a * first + (1 - a) * second.
  static TtaDistribution mixture(double a, const TtaDistribution& first,
                                 const TtaDistribution& second);

 private:
  std::vector<Atom> support_;
};

/// Occupancy counts per state index.
class StateHistogram {
 public:
  StateHistogram() = default;
  explicit StateHistogram(std::size_t state_count) : counts_(state_count, 0) {}
  explicit StateHistogram(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {}

  std::size_t size() const noexcept { return counts_.size(); }
  std::uint64_t total() const noexcept;
  std::uint64_t operator[](std::size_t state) const { return counts_.at(state); }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }

  void add(std::size_t state, std::uint64_t n = 1);
  void merge(const StateHistogram& other);

  /// Count in states >= first, divided by total. Throws EmptyHistogramError.
  double tail_frequency(std::size_t first) const;
  /// Highest index with a non-zero count, nullopt for an empty histogram.
  std::optional<std::size_t> max_occupied() const;

  friend bool operator==(const StateHistogram&, const StateHistogram&) = default;

 private:
  std::vector<std::uint64_t> counts_;
};

/// TTA of the follower from constant-speed kinematics:
/// -(gap / closing speed). Returns the no-conflict sentinel when the gap is
/// not closing. Throws OverlapError when the gap is already <= 0.
TtaValue compute_ttc(const KinematicState& leader, const KinematicState& follower);

/// -log2(p) in bits. Throws DomainError outside (0, 1].
double self_information(double p);

/// E[TTA] in seconds. Throws UnboundedSupportError if any no-conflict mass
/// is left unmapped.
double risk_entropy(const TtaDistribution& dist);

/// Shannon entropy in bits of the normalized counts. Throws
/// EmptyHistogramError on a zero total.
double shannon_entropy(const StateHistogram& hist);

/// Merges states into groups. `group_of[s]` is the group of state `s`; the
/// map must cover every state and group ids must be contiguous runs starting
/// at 0 (each state maps to the same group as its predecessor or the next
/// one). Throws MappingError otherwise.
StateHistogram coarsen(const StateHistogram& hist, std::span<const std::size_t> group_of);

/// Histogram CSV: header `state,count`, one row per state ascending from 0.
void write_histogram_csv(std::ostream& out, const StateHistogram& hist);
/// Throws ParseError on any schema violation.
StateHistogram read_histogram_csv(std::istream& in);

}  // namespace ttarisk
