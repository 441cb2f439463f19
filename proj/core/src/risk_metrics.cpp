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

#include "ttarisk/risk_metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "ttarisk/errors.hpp"

namespace ttarisk {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

}  // namespace

void KinematicState::validate() const {
  if (!std::isfinite(position)) {
    throw DomainError("vehicle position must be finite");
  }
  if (!(speed >= 0.0) || !std::isfinite(speed)) {
    throw DomainError("vehicle speed must be a finite value >= 0");
  }
  if (!(length > 0.0)) {
    throw DomainError("vehicle length must be > 0");
  }
}

TtaValue TtaValue::at(double seconds) {
  if (std::isnan(seconds) || seconds > 0.0) {
    throw DomainError("TTA must be <= 0, got " + std::to_string(seconds));
  }
  if (std::isinf(seconds)) {
    return no_conflict();
  }
  return TtaValue{seconds};
}

double TtaValue::seconds() const noexcept {
  return value_ ? *value_ : -std::numeric_limits<double>::infinity();
}

TtaDistribution::TtaDistribution(std::vector<Atom> support) : support_(std::move(support)) {
  if (support_.empty()) {
    throw DomainError("TTA distribution needs at least one atom");
  }
  double sum = 0.0;
  for (const auto& [value, p] : support_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DomainError("atom probability outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw DomainError("TTA distribution probabilities sum to " + std::to_string(sum));
  }
}

TtaDistribution TtaDistribution::point_mass(TtaValue value) {
  return TtaDistribution({{value, 1.0}});
}

TtaDistribution TtaDistribution::with_no_conflict_at(double cap_seconds) const {
  const TtaValue cap = TtaValue::at(cap_seconds);
  std::vector<Atom> mapped;
  mapped.reserve(support_.size());
  for (const auto& [value, p] : support_) {
    mapped.emplace_back(value.is_no_conflict() ? cap : value, p);
  }
  return TtaDistribution(std::move(mapped));
}

TtaDistribution TtaDistribution::mixture(double a, const TtaDistribution& first,
                                         const TtaDistribution& second) {
  if (!(a >= 0.0 && a <= 1.0)) {
    throw DomainError("mixture weight outside [0,1]");
  }
  std::vector<Atom> atoms;
  atoms.reserve(first.support_.size() + second.support_.size());
  for (const auto& [value, p] : first.support_) {
    atoms.emplace_back(value, a * p);
  }
  for (const auto& [value, p] : second.support_) {
    atoms.emplace_back(value, (1.0 - a) * p);
  }
  return TtaDistribution(std::move(atoms));
}

std::uint64_t StateHistogram::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void StateHistogram::add(std::size_t state, std::uint64_t n) {
  if (state >= counts_.size()) {
    counts_.resize(state + 1, 0);
  }
  counts_[state] += n;
}

void StateHistogram::merge(const StateHistogram& other) {
  for (std::size_t s = 0; s < other.counts_.size(); ++s) {
    add(s, other.counts_[s]);
  }
}

double StateHistogram::tail_frequency(std::size_t first) const {
  const auto n = total();
  if (n == 0) {
    throw EmptyHistogramError("histogram has no counts");
  }
  std::uint64_t tail = 0;
  for (std::size_t s = first; s < counts_.size(); ++s) {
    tail += counts_[s];
  }
  return static_cast<double>(tail) / static_cast<double>(n);
}

std::optional<std::size_t> StateHistogram::max_occupied() const {
  for (std::size_t s = counts_.size(); s-- > 0;) {
    if (counts_[s] != 0) {
      return s;
    }
  }
  return std::nullopt;
}

TtaValue compute_ttc(const KinematicState& leader, const KinematicState& follower) {
  leader.validate();
  follower.validate();
  const double gap = leader.position - follower.position - follower.length;
  if (!(gap > 0.0)) {
    throw OverlapError("vehicles overlap (gap " + std::to_string(gap) + " m)");
  }
  const double closing = follower.speed - leader.speed;
  if (!(closing > 0.0)) {
    return TtaValue::no_conflict();
  }
  return TtaValue::at(-gap / closing);
}

double self_information(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw DomainError("self-information needs p in (0,1]");
  }
  // -log2(1) is -0.0; normalize the sign.
  return p == 1.0 ? 0.0 : -std::log2(p);
}

double risk_entropy(const TtaDistribution& dist) {
  double mean = 0.0;
  for (const auto& [value, p] : dist.support()) {
    if (value.is_no_conflict()) {
      if (p > 0.0) {
        throw UnboundedSupportError("no-conflict mass must be mapped to a finite cap first");
      }
      continue;
    }
    mean += p * value.seconds();
  }
  return mean;
}

double shannon_entropy(const StateHistogram& hist) {
  const auto n = hist.total();
  if (n == 0) {
    throw EmptyHistogramError("cannot take the entropy of an empty histogram");
  }
  double h = 0.0;
  for (const auto c : hist.counts()) {
    if (c == 0) {
      continue;
    }
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log2(p);
  }
  return std::max(h, 0.0);
}

StateHistogram coarsen(const StateHistogram& hist, std::span<const std::size_t> group_of) {
  if (group_of.size() != hist.size()) {
    throw MappingError("merge map covers " + std::to_string(group_of.size()) + " of " +
                       std::to_string(hist.size()) + " states");
  }
  if (group_of.empty()) {
    return StateHistogram{};
  }
  if (group_of.front() != 0) {
    throw MappingError("group ids must start at 0");
  }
  for (std::size_t s = 1; s < group_of.size(); ++s) {
    const auto step = group_of[s] - group_of[s - 1];
    if (group_of[s] < group_of[s - 1] || step > 1) {
      throw MappingError("groups must be contiguous runs of adjacent states");
    }
  }
  StateHistogram out(group_of.back() + 1);
  for (std::size_t s = 0; s < group_of.size(); ++s) {
    out.add(group_of[s], hist[s]);
  }
  return out;
}

void write_histogram_csv(std::ostream& out, const StateHistogram& hist) {
  out << "state,count\n";
  for (std::size_t s = 0; s < hist.size(); ++s) {
    out << s << ',' << hist[s] << '\n';
  }
}

namespace {

std::uint64_t parse_u64(std::string_view text, std::size_t line_no) {
  std::uint64_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw ParseError("line " + std::to_string(line_no) + ": expected a base-10 integer, got '" +
                     std::string(text) + "'");
  }
  return value;
}

}  // namespace

StateHistogram read_histogram_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "state,count") {
    throw ParseError("histogram CSV must start with the header 'state,count'");
  }
  std::vector<std::uint64_t> counts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      throw ParseError("line " + std::to_string(line_no) + ": CRLF line endings are not accepted");
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected two fields");
    }
    const std::string_view view(line);
    const auto state = parse_u64(view.substr(0, comma), line_no);
    const auto count = parse_u64(view.substr(comma + 1), line_no);
    if (state != counts.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected state " +
                       std::to_string(counts.size()) + ", got " + std::to_string(state));
    }
    counts.push_back(count);
  }
  if (counts.empty()) {
    throw ParseError("histogram CSV has no rows");
  }
  return StateHistogram(std::move(counts));
}

}  // namespace ttarisk
