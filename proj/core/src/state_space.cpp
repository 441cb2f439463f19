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

#include "ttarisk/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ttarisk/errors.hpp"

namespace ttarisk {

StateSpace::StateSpace(StateSpaceConfig cfg) : cfg_(cfg) {
  const auto& c = cfg_;
  for (const double v : {c.thrd_detect, c.thrd_conflict, c.thrd_deadline, c.sigma, c.delta}) {
    if (!std::isfinite(v)) {
      throw ConfigError("state space parameters must be finite");
    }
  }
  if (!(c.thrd_deadline > 0.0 && c.thrd_deadline < c.thrd_conflict &&
        c.thrd_conflict < c.thrd_detect)) {
    throw ConfigError("need 0 < thrd_deadline < thrd_conflict < thrd_detect");
  }
  if (!(c.delta > 0.0) || !(c.sigma > c.delta)) {
    throw ConfigError("need sigma > delta > 0");
  }
  const double span = c.thrd_detect - c.thrd_deadline;
  const auto d = std::llround(span / c.sigma);
  if (d < 1 || std::abs(static_cast<double>(d) * c.sigma - span) > 1e-9) {
    throw ConfigError("sigma=" + std::to_string(c.sigma) +
                      " does not divide thrd_detect - thrd_deadline into whole intervals");
  }
  d_count_ = static_cast<int>(d);

  upper_bounds_.reserve(d_count_ + 1);
  for (int i = 0; i < d_count_; ++i) {
    upper_bounds_.push_back(-c.thrd_detect + i * c.sigma);
  }
  upper_bounds_.push_back(-c.thrd_deadline);

  intervals_.reserve(d_count_ + 2);
  double lower = -std::numeric_limits<double>::infinity();
  for (const double upper : upper_bounds_) {
    intervals_.push_back({lower, upper});
    lower = upper;
  }
  intervals_.push_back({lower, 0.0});
}

int StateSpace::frames_per_epoch() const noexcept {
  return std::max(1, static_cast<int>(std::lround(cfg_.sigma / cfg_.delta)));
}

StateIndex StateSpace::state_of(TtaValue tta) const {
  if (tta.is_no_conflict()) {
    return 0;
  }
  return state_of(tta.seconds());
}

StateIndex StateSpace::state_of(double tta) const {
  if (std::isnan(tta) || tta > 0.0) {
    throw DomainError("TTA must be <= 0");
  }
  // First upper bound that is >= tta (within the snap) owns the value.
  const auto it = std::lower_bound(upper_bounds_.begin(), upper_bounds_.end(), tta,
                                   [](double bound, double v) { return bound + kBoundarySnap < v; });
  return static_cast<StateIndex>(it - upper_bounds_.begin());
}

StateIndex StateSpace::threshold_state(double c_seconds) const {
  if (!(c_seconds > cfg_.thrd_deadline && c_seconds <= cfg_.thrd_detect + kBoundarySnap)) {
    throw DomainError("TTC threshold " + std::to_string(c_seconds) +
                      " s outside (thrd_deadline, thrd_detect]");
  }
  // -detect itself closes state 0; the first admissible conflict row is 1.
  return std::max(1, state_of(-c_seconds));
}

double StateSpace::representative_tta(StateIndex s, std::optional<double> no_conflict_cap) const {
  if (s < 0 || s > d_count_ + 1) {
    throw DomainError("state index " + std::to_string(s) + " outside 0..D+1");
  }
  if (s == 0) {
    return no_conflict_cap.value_or(default_no_conflict_cap());
  }
  if (s == d_count_ + 1) {
    return -cfg_.thrd_deadline / 2.0;
  }
  const auto& iv = intervals_[s];
  return 0.5 * (iv.lower + iv.upper);
}

std::vector<Interval> build_state_space(const StateSpaceConfig& cfg) {
  return StateSpace(cfg).intervals();
}

TtaDistribution histogram_to_distribution(const StateHistogram& hist, const StateSpace& space,
                                          std::optional<double> no_conflict_cap) {
  if (hist.size() > static_cast<std::size_t>(space.state_count())) {
    throw DomainError("histogram has " + std::to_string(hist.size()) + " states, space has " +
                      std::to_string(space.state_count()));
  }
  const auto n = hist.total();
  if (n == 0) {
    throw EmptyHistogramError("cannot convert an empty histogram");
  }
  std::vector<TtaDistribution::Atom> atoms;
  for (std::size_t s = 0; s < hist.size(); ++s) {
    if (hist[s] == 0) {
      continue;
    }
    const double p = static_cast<double>(hist[s]) / static_cast<double>(n);
    atoms.emplace_back(TtaValue::at(space.representative_tta(static_cast<StateIndex>(s), no_conflict_cap)), p);
  }
  return TtaDistribution(std::move(atoms));
}

}  // namespace ttarisk
