/*
 * Copyright 2026 The hdrec Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hdrec/denoise.hpp"
#include "oracles.hpp"

using namespace hdrec;

TEST(Schedule, DropCountExamples) {
  ScheduleConfig c;
  c.alpha = 3000;
  c.eps_l_max = 0.05;
  EXPECT_EQ(epsilon_l(0, c, 1024), 0);
  EXPECT_EQ(epsilon_l(2999, c, 1024), 0);
  EXPECT_EQ(epsilon_l(3000, c, 1024), 1);
  EXPECT_EQ(epsilon_l(150000, c, 1024), 50);
  EXPECT_EQ(epsilon_l(156000, c, 1024), 51);
  EXPECT_EQ(epsilon_l(10'000'000, c, 1024), 51);
  EXPECT_EQ(epsilon_l(10'000'000, c, 100), 5);
  EXPECT_THROW(epsilon_l(-1, c, 10), ValidationError);
}

TEST(Schedule, DropCountIsMonotoneAndCapped) {
  ScheduleConfig c;
  c.alpha = 7;
  c.eps_l_max = 0.1;
  long prev = 0;
  for (long t = 0; t < 2000; ++t) {
    const long v = epsilon_l(t, c, 256);
    EXPECT_GE(v, prev);
    EXPECT_LE(v, 25);
    EXPECT_EQ(v, static_cast<long>(std::floor(std::min(static_cast<double>(t) / 7.0, 25.6))));
    prev = v;
  }
}

TEST(Schedule, IndicatorThresholds) {
  ScheduleConfig c;
  c.alpha = 3000;
  EXPECT_DOUBLE_EQ(epsilon_pos(0, c), 8.0);
  EXPECT_DOUBLE_EQ(epsilon_pos(3000, c), 7.0);
  EXPECT_DOUBLE_EQ(epsilon_pos(1500, c), 7.5);
  EXPECT_DOUBLE_EQ(epsilon_pos(30000, c), 6.0);
  EXPECT_DOUBLE_EQ(epsilon_neg(0, c), 2.0);
  EXPECT_DOUBLE_EQ(epsilon_neg(3000, c), 3.0);
  EXPECT_DOUBLE_EQ(epsilon_neg(30000, c), 4.0);
  EXPECT_DOUBLE_EQ(epsilon_pair(0, c), 7.0);
  EXPECT_DOUBLE_EQ(epsilon_pair(6000, c), 5.0);
  EXPECT_DOUBLE_EQ(epsilon_pair(30000, c), 3.0);
  for (long t = 0; t < 40000; t += 777) {
    EXPECT_GE(epsilon_pos(t, c), 6.0);
    EXPECT_LE(epsilon_neg(t, c), 4.0);
    EXPECT_GE(epsilon_pair(t, c), 3.0);
  }
}

TEST(Schedule, Validation) {
  ScheduleConfig c;
  c.validate();
  c.eps_v = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.alpha = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.window = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_EQ(indicator_direction_from_string("literal"), IndicatorDirection::Literal);
  EXPECT_THROW(indicator_direction_from_string("sideways"), ValidationError);
}

TEST(Partition, ExampleWithTies) {
  const std::vector<double> losses = {0.1, 0.9, 0.9, 0.5};
  auto p = partition_by_loss(losses, 1);
  EXPECT_EQ(p.noisy, (std::vector<std::size_t>{1}));
  EXPECT_EQ(p.clean, (std::vector<std::size_t>{0, 2, 3}));
  p = partition_by_loss(losses, 3);
  EXPECT_EQ(p.noisy, (std::vector<std::size_t>{1, 2, 3}));
  p = partition_by_loss(losses, 0);
  EXPECT_TRUE(p.noisy.empty());
  EXPECT_EQ(p.clean.size(), 4u);
  EXPECT_THROW(partition_by_loss(losses, 5), ValidationError);
}

TEST(Partition, MatchesSortOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coarse(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<double> losses(n);
    for (auto& l : losses) l = coarse(rng) * 0.25;  // frequent ties
    const std::size_t k = rng() % (n + 1);
    const auto p = partition_by_loss(losses, k);
    p.check(n);
    const auto top = oracle::top_indices(losses, k);
    std::set<std::size_t> expected(top.begin(), top.end());
    EXPECT_EQ(std::set<std::size_t>(p.noisy.begin(), p.noisy.end()), expected);
    // Every noisy loss is at least every clean loss.
    for (auto a : p.noisy)
      for (auto b : p.clean) EXPECT_GE(losses[a], losses[b]);
  }
}

TEST(Partition, CheckDetectsBrokenSets) {
  BatchPartition p;
  p.clean = {0, 1};
  p.noisy = {2};
  p.check(3);
  p.hard_candidates = {1};
  EXPECT_THROW(p.check(3), Error);
  p.hard_candidates = {2};
  p.hard = {0};
  EXPECT_THROW(p.check(3), Error);
  p.hard = {2};
  EXPECT_EQ(assemble_training_set(3, p), (std::vector<std::size_t>{0, 1, 2}));
  p.noisy = {1};
  EXPECT_THROW(p.check(3), Error);
}

TEST(Assemble, CleanPlusHard) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + rng() % 30;
    std::vector<double> losses(n);
    for (auto& l : losses) l = static_cast<double>(rng() % 1000);
    auto p = partition_by_loss(losses, rng() % n);
    for (auto i : p.noisy)
      if (rng() % 2) p.hard_candidates.push_back(i);
    for (auto i : p.hard_candidates)
      if (rng() % 2) p.hard.push_back(i);
    const auto trained = assemble_training_set(n, p);
    EXPECT_EQ(trained.size(), n - p.noisy.size() + p.hard.size());
    EXPECT_TRUE(std::is_sorted(trained.begin(), trained.end()));
    std::set<std::size_t> expected(p.clean.begin(), p.clean.end());
    expected.insert(p.hard.begin(), p.hard.end());
    EXPECT_EQ(std::set<std::size_t>(trained.begin(), trained.end()), expected);
  }
}

TEST(History, VarianceNeedsFullContiguousWindow) {
  PredictionHistory h(3);
  const auto id = h.track(0, 1);
  EXPECT_EQ(h.track(0, 1), id);
  h.record(id, 1, 1.0);
  h.record(id, 2, 2.0);
  EXPECT_FALSE(h.variance(id, 2));
  h.record(id, 3, 4.0);
  ASSERT_TRUE(h.variance(id, 3));
  EXPECT_NEAR(*h.variance(id, 3), oracle::variance({1.0, 2.0, 4.0}), 1e-15);
  EXPECT_FALSE(h.variance(id, 4));
  h.record(id, 4, 4.0);
  EXPECT_NEAR(*h.variance(id, 4), oracle::variance({2.0, 4.0, 4.0}), 1e-15);
  // A gap evicts stale entries.
  h.record(id, 6, 0.0);
  EXPECT_FALSE(h.variance(id, 6));
  EXPECT_EQ(h.entries(id).size(), 2u);
  EXPECT_THROW(h.record(id, 6, 1.0), ValidationError);
  EXPECT_FALSE(h.find(9, 9));
}

TEST(History, RingBufferMatchesOracle) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int w : {1, 2, 5, 8}) {
    PredictionHistory h(w);
    const auto id = h.track(4, 4);
    std::vector<double> all;
    for (int e = 1; e <= 40; ++e) {
      all.push_back(n(rng));
      h.record(id, e, all.back());
      if (e >= w) {
        const std::vector<double> tail(all.end() - w, all.end());
        ASSERT_TRUE(h.variance(id, e));
        EXPECT_NEAR(*h.variance(id, e), oracle::variance(tail), 1e-12);
      }
    }
  }
}

TEST(History, RecordEpochScoresEveryPair) {
  Model m = init_model(BackboneKind::MF, 3, 3, 2, 1);
  PredictionHistory h(2);
  h.track(0, 0);
  h.track(2, 1);
  h.record_epoch(1, m);
  h.record_epoch(2, m);
  EXPECT_EQ(h.entries(1).back().second, predict(m, 2, 1));
  EXPECT_NEAR(*h.variance(0, 2), 0.0, 0.0);
  EXPECT_THROW(h.record_epoch(2, m), ValidationError);
  EXPECT_EQ(h.last_epoch(), 2);
}

TEST(Variance, TwoPassIsStable) {
  const std::vector<double> v = {1e9 + 4, 1e9 + 7, 1e9 + 13, 1e9 + 16};
  EXPECT_NEAR(population_variance(v), 22.5, 1e-6);
  EXPECT_EQ(population_variance(std::vector<double>{}), 0.0);
  EXPECT_EQ(population_variance(std::vector<double>{5.0}), 0.0);
}

TEST(Prune, ExampleUnionOfSides) {
  std::vector<NoisyMember> noisy = {
      {0, 0.9, 0.1, true, true},
      {1, 0.1, 0.8, true, true},
      {2, 0.5, 0.5, true, true},
      {3, std::nullopt, std::nullopt, true, true},
  };
  const auto r = prune_candidates(noisy, 0.34);
  EXPECT_EQ(r.not_ready, 1u);
  // ceil(0.34 * 3) = 2 per side: positive top {0, 2}, negative top {1, 2}.
  EXPECT_EQ(r.candidates, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(prune_candidates(noisy, 0.0).candidates.empty());
  EXPECT_EQ(prune_candidates(noisy, 1.0).candidates.size(), 3u);
  EXPECT_THROW(prune_candidates(noisy, -0.1), ValidationError);
}

TEST(Prune, PointwiseSidesAndTies) {
  std::vector<NoisyMember> noisy = {
      {5, 0.3, std::nullopt, true, false},
      {6, std::nullopt, 0.3, false, true},
      {7, 0.3, std::nullopt, true, false},
      {8, std::nullopt, 0.2, false, true},
  };
  const auto r = prune_candidates(noisy, 0.5);
  EXPECT_EQ(r.not_ready, 0u);
  EXPECT_EQ(r.candidates, (std::vector<std::size_t>{5, 6}));
}

TEST(Prune, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<NoisyMember> noisy;
    const std::size_t n = rng() % 40;
    for (std::size_t k = 0; k < n; ++k) {
      NoisyMember m;
      m.index = k * 2;
      if (rng() % 5) m.v_pos = static_cast<double>(rng() % 7);
      if (rng() % 5) m.v_neg = static_cast<double>(rng() % 7);
      noisy.push_back(m);
    }
    const double eps_v = static_cast<double>(rng() % 11) / 10.0;
    const auto r = prune_candidates(noisy, eps_v);
    std::set<std::size_t> expected;
    std::size_t not_ready = 0;
    std::vector<double> vp, vn;
    std::vector<std::size_t> ip, in;
    for (const auto& m : noisy) {
      if (m.v_pos) vp.push_back(*m.v_pos), ip.push_back(m.index);
      if (m.v_neg) vn.push_back(*m.v_neg), in.push_back(m.index);
      if (!m.v_pos && !m.v_neg) ++not_ready;
    }
    const auto kp = static_cast<std::size_t>(std::ceil(eps_v * static_cast<double>(vp.size()) - 1e-9));
    const auto kn = static_cast<std::size_t>(std::ceil(eps_v * static_cast<double>(vn.size()) - 1e-9));
    for (auto j : oracle::top_indices(vp, kp)) expected.insert(ip[j]);
    for (auto j : oracle::top_indices(vn, kn)) expected.insert(in[j]);
    EXPECT_EQ(r.not_ready, not_ready);
    EXPECT_EQ(std::set<std::size_t>(r.candidates.begin(), r.candidates.end()), expected);
  }
}

TEST(Prune, RandomBaselineIsSeededSubset) {
  const std::vector<std::size_t> noisy = {3, 9, 12, 20, 31, 40};
  const auto a = random_prune_baseline(noisy, 3, 7);
  EXPECT_EQ(a, random_prune_baseline(noisy, 3, 7));
  EXPECT_EQ(a.size(), 3u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  for (auto i : a) EXPECT_TRUE(std::count(noisy.begin(), noisy.end(), i));
  EXPECT_EQ(random_prune_baseline(noisy, 6, 1), noisy);
  EXPECT_THROW(random_prune_baseline(noisy, 7, 1), ValidationError);
  bool differs = false;
  for (std::uint64_t s = 8; s < 20 && !differs; ++s) differs = random_prune_baseline(noisy, 3, s) != a;
  EXPECT_TRUE(differs);
}

TEST(Indicator, PointwiseConsistent) {
  EXPECT_TRUE(identify_hard_pointwise(9, 1, 8, 2));
  EXPECT_TRUE(identify_hard_pointwise(8, 1, 8, 2));
  EXPECT_FALSE(identify_hard_pointwise(7, 1, 8, 2));
  EXPECT_TRUE(identify_hard_pointwise(2, 0, 8, 2));
  EXPECT_FALSE(identify_hard_pointwise(3, 0, 8, 2));
  EXPECT_TRUE(identify_hard_pointwise(7, 1, 6.5, 2));
}

TEST(Indicator, PointwiseLiteral) {
  const auto lit = IndicatorDirection::Literal;
  EXPECT_FALSE(identify_hard_pointwise(9, 1, 8, 2, lit));
  EXPECT_TRUE(identify_hard_pointwise(3, 1, 8, 2, lit));
  EXPECT_TRUE(identify_hard_pointwise(5, 0, 8, 2, lit));
  EXPECT_FALSE(identify_hard_pointwise(2, 0, 8, 2, lit));
  // The two directions disagree on every positive not at the boundary.
  for (int s = 1; s <= 10; ++s)
    EXPECT_NE(identify_hard_pointwise(s, 1, 7.5, 2),
              identify_hard_pointwise(s, 1, 7.5, 2, lit));
}

TEST(Indicator, PairwiseStrictMargin) {
  EXPECT_TRUE(identify_hard_pairwise(10, 2, 7));
  EXPECT_FALSE(identify_hard_pairwise(9, 2, 7));
  EXPECT_TRUE(identify_hard_pairwise(9, 2, 6.5));
  EXPECT_FALSE(identify_hard_pairwise(2, 9, 3));
  EXPECT_FALSE(identify_hard_pairwise(5, 5, 0));
}
