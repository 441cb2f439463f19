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

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ttarisk/errors.hpp"
#include "ttarisk/exit_analysis.hpp"

namespace ttarisk {
namespace {

constexpr double kDelta = 1.0 / 15.0;

TrafficEnv default_env() { return traffic_for_flow(1500.0, TrafficEnv{}); }

double default_p3() { return trip_end_probability(807.0, 54.0, kDelta); }

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

TEST(ExitProbability, DefaultChainAgreesWithOracle) {
  const auto env = default_env();
  const auto free = free_state_probs(env);
  const auto m = build_extended_matrix({}, env, default_p3());
  SolveReport report;
  const auto h = exit_probability(m, &report);
  const auto expected = oracle::hit_probability(oracle::chain_cells(2, 0.02, 0.34, 4, 8, free.p0, default_p3()));
  ASSERT_EQ(h.size(), expected.size());
  for (std::size_t s = 0; s < h.size(); ++s) {
    EXPECT_NEAR(h[s], expected[s], 1e-12) << "state " << s;
  }
  EXPECT_FALSE(report.ill_conditioned);
  EXPECT_EQ(h[9], 1.0);
  EXPECT_EQ(h[10], 0.0);
  // Frozen from the long double oracle.
  EXPECT_NEAR(h[0], 0.95944, 5e-6);
}

TEST(ExitTime, DefaultChainAgreesWithOracle) {
  const auto free = free_state_probs(default_env());
  const auto m = build_modified_matrix({}, free);
  const auto g = exit_time(m);
  const auto expected = oracle::hit_time(oracle::chain_cells(1, 0.02, 0.34, 4, 8, free.p0, 0.0));
  for (std::size_t s = 0; s < g.size(); ++s) {
    EXPECT_LT(rel_err(g[s], expected[s]), 1e-8) << "state " << s;
  }
  EXPECT_EQ(g[9], 0.0);
  EXPECT_GT(g[0], 9.0e6);
  EXPECT_LT(g[0], 1.0e7);
  EXPECT_NEAR(accident_frequency(g[0], kDelta), 3600.0 / (expected[0] * kDelta), 1e-9);
}

TEST(ExitTime, GreedyEndStateIsFast) {
  // c = D: from state D the walk leaves upward with gamma / 2 per step.
  const auto g = exit_time(build_modified_matrix({0.02, 0.34, 8, 8}, {0.0, 1.0}));
  const auto expected = oracle::hit_time(oracle::chain_cells(1, 0.02, 0.34, 8, 8, 0.0, 0.0));
  for (std::size_t s = 0; s < g.size(); ++s) {
    EXPECT_LT(rel_err(g[s], expected[s]), 1e-10);
  }
}

TEST(ExitTime, AlphaZeroIsInfinite) {
  const auto m = build_modified_matrix({0.0, 0.34, 4, 8}, free_state_probs(default_env()));
  EXPECT_THROW(exit_time(m), InfiniteExitTimeError);
  EXPECT_THROW(exit_time(build_ideal_matrix({0.02, 0.34, 4, 8}, {0.1, 0.9})), InfiniteExitTimeError);
}

TEST(ExitTime, GammaZeroIsInfinite) {
  EXPECT_THROW(exit_time(build_modified_matrix({0.0, 0.0, 4, 8}, {0.1, 0.9})), InfiniteExitTimeError);
}

TEST(ExitProbability, AlphaZeroNeverReachesAccident) {
  for (int c = 1; c <= 7; ++c) {
    const auto h = exit_probability(build_extended_matrix({0.0, 0.34, c, 8}, default_env(), 0.01));
    for (int s = 0; s <= 8; ++s) {
      EXPECT_EQ(h[static_cast<std::size_t>(s)], 0.0) << "c=" << c << " state " << s;
    }
    EXPECT_EQ(h[9], 1.0);
  }
}

TEST(ExitProbability, NoExitAtAll) {
  const auto m = build_extended_matrix({0.0, 0.34, 4, 8}, default_env(), 0.0);
  EXPECT_THROW(exit_probability(m), NoExitError);
}

TEST(ExitTime, GeometricToyChain) {
  const auto m = TransitionMatrix::from_rows(MatrixKind::Modified, {{0.5, 0.5}, {0.0, 1.0}});
  const auto g = exit_time(m);
  EXPECT_NEAR(g[0], 2.0, 1e-15);
  EXPECT_EQ(g[1], 0.0);
}

TEST(ExitProbability, NeedsExtendedMatrix) {
  EXPECT_THROW(exit_probability(build_modified_matrix({}, {0.1, 0.9})), DomainError);
}

TEST(ExitProbability, NoTripEndMeansCertainAccident) {
  const auto h = exit_probability(build_extended_matrix({}, default_env(), 0.0));
  for (int s = 0; s <= 9; ++s) {
    EXPECT_NEAR(h[static_cast<std::size_t>(s)], 1.0, 1e-9);
  }
}

TEST(ExitProbability, HarmonicOnTransientStates) {
  const auto m = build_extended_matrix({0.05, 0.2, 3, 8}, default_env(), 0.004);
  const auto h = exit_probability(m);
  for (std::size_t x = 0; x <= 8; ++x) {
    double ph = 0.0;
    for (std::size_t y = 0; y < m.dimension(); ++y) {
      ph += m(x, y) * h[y];
    }
    EXPECT_NEAR(h[x], ph, 1e-12);
  }
}

TEST(SolveExit, BundlesBothVectors) {
  const auto env = default_env();
  const auto ext = build_extended_matrix({}, env, default_p3());
  const auto mod = build_modified_matrix({}, free_state_probs(env));
  const auto sol = solve_exit(ext, mod, kDelta);
  EXPECT_EQ(sol.h.size(), 11u);
  EXPECT_EQ(sol.g.size(), 10u);
  EXPECT_DOUBLE_EQ(sol.g_seconds()[0], sol.g[0] * kDelta);
}

TEST(AccidentFrequency, Trivial) {
  EXPECT_DOUBLE_EQ(accident_frequency(54000.0, kDelta), 1.0);
  EXPECT_THROW(accident_frequency(0.0, kDelta), DomainError);
}

TEST(ConditionalExitTime, AgreesWithMonteCarlo) {
  const auto m = build_extended_matrix({0.02, 0.34, 4, 4}, default_env(), 0.01);
  const auto k = conditional_exit_time(m);
  const auto mc = mc_exit_oracle(m, 1, {200'000, 77, 2, 1'000'000});
  ASSERT_TRUE(mc.g.has_value());
  EXPECT_LT(std::abs(mc.g->mean - k[1]), 4.0 * mc.g->std_error + 1e-9);
  EXPECT_EQ(k[5], 0.0);
  EXPECT_TRUE(std::isinf(k[6]));
}

TEST(McOracle, AgreesWithSolverOnSmallChain) {
  const ChainParams params{0.02, 0.34, 4, 4};
  const auto env = default_env();
  const auto ext = build_extended_matrix(params, env, 0.01);
  const auto mod = build_modified_matrix(params, free_state_probs(env));
  const auto h = exit_probability(ext);
  const auto g = exit_time(mod);
  const auto mc_h = mc_exit_oracle(ext, 0, {200'000, 5, 2, 1'000'000});
  const double se_h = std::max(mc_h.h.std_error, std::sqrt(h[0] * (1.0 - h[0]) / 200'000.0));
  EXPECT_LT(std::abs(mc_h.h.mean - h[0]), 4.0 * se_h);
  const auto mc_g = mc_exit_oracle(mod, 0, {200'000, 6, 2, 1'000'000});
  EXPECT_EQ(mc_g.h.mean, 1.0);
  ASSERT_TRUE(mc_g.g.has_value());
  EXPECT_LT(std::abs(mc_g.g->mean - g[0]), 4.0 * mc_g.g->std_error);
}

TEST(McOracle, BitIdenticalAcrossWorkerCounts) {
  const auto m = build_extended_matrix({0.05, 0.3, 3, 4}, default_env(), 0.02);
  const auto one = mc_exit_oracle(m, 0, {50'001, 123, 1, 1'000'000});
  for (unsigned w : {2u, 3u, 8u}) {
    const auto many = mc_exit_oracle(m, 0, {50'001, 123, w, 1'000'000});
    EXPECT_EQ(one.h.mean, many.h.mean);
    EXPECT_EQ(one.h.std_error, many.h.std_error);
    ASSERT_TRUE(many.g.has_value());
    EXPECT_EQ(one.g->mean, many.g->mean);
    EXPECT_EQ(one.g->std_error, many.g->std_error);
  }
}

TEST(McOracle, SeedChangesResult) {
  const auto m = build_extended_matrix({0.05, 0.3, 3, 4}, default_env(), 0.02);
  EXPECT_NE(mc_exit_oracle(m, 0, {20'000, 1, 1, 1'000'000}).h.mean,
            mc_exit_oracle(m, 0, {20'000, 2, 1, 1'000'000}).h.mean);
}

TEST(McOracle, StepCapAndBadInputs) {
  const auto trapped = build_modified_matrix({0.0, 0.34, 4, 8}, {0.1, 0.9});
  EXPECT_THROW(mc_exit_oracle(trapped, 0, {10, 1, 1, 10'000}), NonAbsorptionError);
  const auto m = build_modified_matrix({}, {0.1, 0.9});
  EXPECT_THROW(mc_exit_oracle(m, 0, {0, 1, 1, 10}), DomainError);
  EXPECT_THROW(mc_exit_oracle(m, 10, {1, 1, 1, 10}), DomainError);
}

TEST(McOracle, DeterministicChainIsExact) {
  const auto m = TransitionMatrix::from_rows(MatrixKind::Modified, {{0, 1, 0}, {0, 0, 1}, {0, 0, 1}});
  const auto mc = mc_exit_oracle(m, 0, {1000, 3, 2, 10});
  EXPECT_EQ(mc.h.mean, 1.0);
  EXPECT_EQ(mc.h.std_error, 0.0);
  ASSERT_TRUE(mc.g.has_value());
  EXPECT_EQ(mc.g->mean, 2.0);
  EXPECT_EQ(mc.g->std_error, 0.0);
  EXPECT_EQ(mc.g->runs, 1000u);
}

TEST(McOracle, StartAtAccident) {
  const auto m = build_modified_matrix({}, {0.1, 0.9});
  const auto mc = mc_exit_oracle(m, 9, {100, 1, 1, 10});
  EXPECT_EQ(mc.h.mean, 1.0);
  ASSERT_TRUE(mc.g.has_value());
  EXPECT_EQ(mc.g->mean, 0.0);
}

}  // namespace
}  // namespace ttarisk
