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

#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hdrec/eval.hpp"
#include "hdrec/loss.hpp"
#include "oracles.hpp"

using namespace hdrec;

namespace {

std::set<std::uint32_t> as_set(const std::unordered_set<ItemId>& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Metrics, HandExamples) {
  const std::vector<ItemId> rank = {4, 2, 7, 1, 9};
  EXPECT_DOUBLE_EQ(recall_at_k(rank, {2, 9}, 2), 0.5);
  EXPECT_DOUBLE_EQ(recall_at_k(rank, {2, 9}, 5), 1.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k(rank, {4}, 5), 1.0);
  // Hit at rank 2 of 1 relevant: 1/log2(3).
  EXPECT_NEAR(ndcg_at_k(rank, {2}, 5), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_DOUBLE_EQ(ndcg_at_k(rank, {100}, 5), 0.0);
  EXPECT_THROW(recall_at_k(rank, {}, 5), ValidationError);
  EXPECT_THROW(ndcg_at_k(rank, {1}, 0), ValidationError);
}

TEST(Metrics, MatchOracleOnRandomRankings) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 5 + rng() % 60;
    std::vector<double> scores(n);
    for (auto& s : scores) s = static_cast<double>(rng() % 20);  // ties
    std::vector<char> mask(n, 0);
    std::set<std::uint32_t> excluded;
    for (std::uint32_t i = 0; i < n; ++i)
      if (rng() % 6 == 0) mask[i] = 1, excluded.insert(i);
    std::unordered_set<ItemId> relevant;
    for (std::uint32_t i = 0; i < n; ++i)
      if (!mask[i] && rng() % 4 == 0) relevant.insert(i);
    if (relevant.empty()) continue;
    const auto rank = rank_scores(scores, mask);
    const auto expected = oracle::ranking(scores, excluded);
    ASSERT_EQ(std::vector<std::uint32_t>(rank.begin(), rank.end()), expected);
    const std::size_t k = 1 + rng() % 20;
    const auto limited = rank_scores(scores, mask, k);
    EXPECT_TRUE(std::equal(limited.begin(), limited.end(), expected.begin()));
    EXPECT_NEAR(recall_at_k(rank, relevant, k), oracle::recall(expected, as_set(relevant), k), 1e-12);
    EXPECT_NEAR(ndcg_at_k(rank, relevant, k), oracle::ndcg(expected, as_set(relevant), k), 1e-12);
    EXPECT_GE(ndcg_at_k(rank, relevant, k), 0.0);
    EXPECT_LE(ndcg_at_k(rank, relevant, k), 1.0);
  }
}

TEST(Metrics, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> scores(200);
  for (auto& s : scores) s = n(rng);
  std::vector<double> shifted, squashed;
  for (double s : scores) {
    shifted.push_back(3.0 * s + 7.0);
    squashed.push_back(sigmoid(s));
  }
  const std::vector<char> none;
  EXPECT_EQ(rank_scores(scores, none), rank_scores(shifted, none));
  EXPECT_EQ(rank_scores(scores, none), rank_scores(squashed, none));
}

TEST(Evaluate, MatchesBruteForceAndExcludesTrain) {
  Model m = init_model(BackboneKind::MF, 20, 40, 4, 3);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : m.user_embeddings.data) v = n(rng);
  for (auto& v : m.item_embeddings.data) v = n(rng);
  Dataset train, test;
  train.user_count = test.user_count = 20;
  train.item_count = test.item_count = 40;
  for (UserId u = 0; u < 19; ++u) {  // user 19 has no test items
    std::set<ItemId> used;
    while (used.size() < 8) used.insert(static_cast<ItemId>(rng() % 40));
    auto it = used.begin();
    for (int k = 0; k < 5; ++k, ++it) train.interactions.push_back({u, *it, 1, 5, std::nullopt});
    for (; it != used.end(); ++it) test.interactions.push_back({u, *it, 1, 5, std::nullopt});
  }
  const Dataset* exclude[] = {&train};
  const int ks[] = {5, 10};
  const auto r = evaluate(m, test, exclude, ks);
  EXPECT_EQ(r.users.size(), 19u);
  EXPECT_EQ(r.skipped_users, 1u);

  const auto train_pos = train.positives_by_user();
  const auto test_pos = test.positives_by_user();
  double recall10 = 0, ndcg5 = 0;
  for (UserId u = 0; u < 19; ++u) {
    std::vector<double> s(40);
    for (ItemId i = 0; i < 40; ++i) s[i] = predict(m, u, i);
    const auto rank = oracle::ranking(s, {train_pos[u].begin(), train_pos[u].end()});
    const std::set<std::uint32_t> rel(test_pos[u].begin(), test_pos[u].end());
    recall10 += oracle::recall(rank, rel, 10);
    ndcg5 += oracle::ndcg(rank, rel, 5);
  }
  EXPECT_NEAR(r.recall.at(10), recall10 / 19, 1e-12);
  EXPECT_NEAR(r.ndcg.at(5), ndcg5 / 19, 1e-12);
  const int bad[] = {0};
  EXPECT_THROW(evaluate(m, test, exclude, bad), ValidationError);
}

TEST(NoiseCounts, PrecisionRecallContamination) {
  const std::vector<char> planted = {1, 0, 1, 0, 0, 1};
  const std::vector<std::size_t> dropped = {0, 1, 2};
  const std::vector<std::size_t> rescued = {1, 2};
  const auto c = denoise_quality(dropped, rescued, planted);
  EXPECT_EQ(c.planted_seen, 3u);
  EXPECT_DOUBLE_EQ(c.precision(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.recall(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.contamination(), 0.5);
  NoiseCounts total;
  total += c;
  total += c;
  EXPECT_EQ(total.dropped, 6u);
  EXPECT_DOUBLE_EQ(total.precision(), 2.0 / 3.0);
  EXPECT_EQ(NoiseCounts{}.precision(), 0.0);
  EXPECT_THROW(denoise_quality(dropped, rescued, {}), ValidationError);
}

TEST(Trace, ClassesAndRows) {
  SplitDataset s;
  for (Dataset* d : {&s.train, &s.valid, &s.test}) {
    d->user_count = 4;
    d->item_count = 50;
  }
  for (UserId u = 0; u < 4; ++u) {
    for (ItemId i = 0; i < 6; ++i) s.train.interactions.push_back({u, u * 10 + i, 1, 5, std::nullopt});
    s.train.interactions.push_back({u, 45 + u, 1, 1, true});
    s.test.interactions.push_back({u, 40 + u, 1, 5, std::nullopt});
  }
  const int ds[] = {1, 20};
  const auto classes = build_trace_classes(s, ds, 10, 3);
  ASSERT_EQ(classes.size(), 3u);
  EXPECT_EQ(classes[0].name, "easy");
  EXPECT_EQ(classes[1].name, "hard");
  EXPECT_EQ(classes[2].name, "noisy");
  EXPECT_EQ(classes[0].samples.size(), 10u);
  EXPECT_EQ(classes[1].samples[0].candidates.size(), 20u);
  EXPECT_EQ(classes[2].samples.size(), 4u);
  EXPECT_EQ(classes[2].samples[0].candidates[0], 40u);

  Model m = init_model(BackboneKind::MF, 4, 50, 3, 1);
  const auto rows = pattern_trace(m, 2, classes);
  ASSERT_EQ(rows.size(), 3u);
  double loss = 0;
  for (const auto& smp : classes[2].samples)
    loss += oracle::bpr(predict(m, smp.user, smp.positive), predict(m, smp.user, smp.candidates[0]));
  EXPECT_NEAR(rows[2].mean_loss, loss / 4, 1e-12);
  EXPECT_EQ(rows[2].epoch, 2);

  SplitDataset clean = s;
  for (auto& x : clean.train.interactions) x.planted_noise.reset();
  EXPECT_THROW(build_trace_classes(clean, ds, 10, 3), ValidationError);
}
