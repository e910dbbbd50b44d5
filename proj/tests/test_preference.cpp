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

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "hdrec/preference.hpp"

using namespace hdrec;
namespace fs = std::filesystem;

namespace {

ProfileTable table_of(std::initializer_list<std::pair<ItemId, const char*>> items) {
  ProfileTable t;
  for (const auto& [id, title] : items) t.profiles[id] = ItemProfile{id, title, ""};
  return t;
}

using Pair = std::pair<UserId, ItemId>;

}  // namespace

TEST(Detect, LowestVariancePositivesHighestVarianceNegatives) {
  const std::vector<PairVariance> pos = {{0, 1, 0.5}, {0, 2, 0.1}, {1, 3, 0.1}, {1, 4, 0.9}};
  const std::vector<PairVariance> neg = {{0, 7, 0.2}, {1, 8, 0.6}, {1, 9, 0.6}};
  const auto f = detect_fp_fn(pos, neg, 2);
  EXPECT_EQ(f.fp, (std::vector<Pair>{{0, 2}, {1, 3}}));
  EXPECT_EQ(f.fn, (std::vector<Pair>{{1, 8}, {1, 9}}));
  EXPECT_TRUE(detect_fp_fn(pos, neg, 0).fp.empty());
  EXPECT_EQ(detect_fp_fn(pos, neg, 10).fp.size(), 4u);
}

TEST(Detect, MatchesSortOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PairVariance> pos;
    for (ItemId i = 0; i < 30; ++i) pos.push_back({0, i, static_cast<double>(rng() % 10)});
    const std::size_t count = rng() % 31;
    const auto fp = detect_fp_fn(pos, {}, count).fp;
    ASSERT_EQ(fp.size(), count);
    double worst = -1;
    std::set<ItemId> chosen;
    for (const auto& [u, i] : fp) {
      worst = std::max(worst, pos[i].variance);
      chosen.insert(i);
    }
    for (const auto& p : pos)
      if (!chosen.count(p.item)) EXPECT_GE(p.variance, worst);
  }
}

TEST(Counters, FireAtThresholdOnce) {
  ConfidenceCounters c;
  EpochFlags f;
  f.fp = {{0, 1}, {0, 2}};
  f.fn = {{0, 9}};
  c.update(f);
  c.update(f);
  EXPECT_TRUE(c.take_confident(UpdateKind::FalsePositive, 3).empty());
  f.fp = {{0, 1}};
  c.update(f);
  EXPECT_EQ(c.count(UpdateKind::FalsePositive, 0, 1), 3);
  EXPECT_EQ(c.take_confident(UpdateKind::FalsePositive, 3), (std::vector<Pair>{{0, 1}}));
  EXPECT_TRUE(c.consumed(UpdateKind::FalsePositive, 0, 1));
  c.update(f);
  EXPECT_TRUE(c.take_confident(UpdateKind::FalsePositive, 3).empty());
  EXPECT_EQ(c.take_confident(UpdateKind::FalseNegative, 3), (std::vector<Pair>{{0, 9}}));
  EXPECT_EQ(c.count(UpdateKind::FalseNegative, 5, 5), 0);
}

TEST(Counters, RequeueOnlyOnce) {
  ConfidenceCounters c;
  EpochFlags f;
  f.fp = {{2, 3}};
  c.update(f);
  EXPECT_FALSE(c.requeue(UpdateKind::FalsePositive, 2, 3));
  ASSERT_EQ(c.take_confident(UpdateKind::FalsePositive, 1).size(), 1u);
  EXPECT_TRUE(c.requeue(UpdateKind::FalsePositive, 2, 3));
  EXPECT_EQ(c.take_confident(UpdateKind::FalsePositive, 1).size(), 1u);
  EXPECT_FALSE(c.requeue(UpdateKind::FalsePositive, 2, 3));
  EXPECT_TRUE(c.take_confident(UpdateKind::FalsePositive, 1).empty());
}

TEST(Preference, SummarizeAndUpdateBumpVersion) {
  OracleBackend b([](UserId, ItemId) { return 0.5; });
  const std::vector<ItemProfile> items = {{0, "Alien", ""}, {1, "Heat", ""}};
  const auto p1 = summarize_preference(b, 4, items);
  EXPECT_EQ(p1.version, 1);
  EXPECT_EQ(p1.user, 4u);
  const auto p2 = update_preference(b, p1, items[0], UpdateKind::FalsePositive);
  EXPECT_EQ(p2.version, 2);
  EXPECT_EQ(p1.version, 1);
  ASSERT_EQ(p2.history.size(), 1u);
  EXPECT_EQ(p2.history[0].item, 0u);
  EXPECT_EQ(p2.text.find("Alien"), std::string::npos);
  EXPECT_THROW(summarize_preference(b, 4, {}), ValidationError);
}

TEST(Preference, StoreJournalReplays) {
  const auto dir = fs::temp_directory_path() / "hdrec_pref_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  OracleBackend b([](UserId, ItemId) { return 0.5; });
  const std::vector<ItemProfile> items = {{0, "Alien", ""}, {1, "Heat", ""}};
  {
    PreferenceStore store(dir / "p.jsonl");
    const auto p1 = summarize_preference(b, 1, items);
    store.put(p1);
    store.put(update_preference(b, p1, items[1], UpdateKind::FalsePositive));
    EXPECT_THROW(store.put(p1), ValidationError);
  }
  PreferenceStore back(dir / "p.jsonl");
  const auto* p = back.find(1);
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->version, 2);
  EXPECT_EQ(p->text, "Enjoys items like:\n- Alien");
  ASSERT_EQ(p->history.size(), 1u);
  EXPECT_EQ(p->history[0].kind, UpdateKind::FalsePositive);
  EXPECT_EQ(back.find(2), nullptr);
  fs::remove_all(dir);
}

TEST(Preference, ApplyUpdatesInUserItemOrder) {
  OracleBackend b([](UserId, ItemId) { return 0.5; });
  PreferenceStore store;
  const auto profiles = table_of({{0, "A"}, {1, "B"}, {2, "C"}});
  const std::vector<ItemProfile> seed = {profiles.profiles.at(0), profiles.profiles.at(1)};
  store.put(summarize_preference(b, 0, seed));
  store.put(summarize_preference(b, 1, seed));
  ConfidenceCounters counters;
  const std::vector<Pair> fp = {{1, 0}, {0, 1}, {7, 0}};
  const std::vector<Pair> fn = {{0, 2}, {0, 9}};
  const auto log = apply_preference_updates(b, store, counters, fp, fn, profiles, 3);
  // User 7 has no preference and item 9 has no profile.
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0].user, 0u);
  EXPECT_EQ(log[0].item, 1u);
  EXPECT_EQ(log[0].new_version, 2);
  EXPECT_EQ(log[1].item, 2u);
  EXPECT_EQ(log[1].new_version, 3);
  EXPECT_EQ(log[2].user, 1u);
  EXPECT_EQ(store.find(0)->version, 3);
  EXPECT_EQ(store.find(0)->text, "Enjoys items like:\n- A\n- C");
  EXPECT_EQ(store.find(1)->text, "Enjoys items like:\n- B");
}

TEST(Preference, FailedUpdateKeepsTextAndRequeues) {
  class Failing : public OracleBackend {
   public:
    Failing() : OracleBackend([](UserId, ItemId) { return 0.5; }) {}
    std::string refine(UserId, const std::string&, const ItemProfile&, UpdateKind) override {
      throw TransportError("down");
    }
  } b;
  PreferenceStore store;
  const auto profiles = table_of({{0, "A"}});
  const std::vector<ItemProfile> seed = {profiles.profiles.at(0)};
  store.put(summarize_preference(b, 0, seed));
  ConfidenceCounters counters;
  EpochFlags f;
  f.fp = {{0, 0}};
  counters.update(f);
  const auto fp = counters.take_confident(UpdateKind::FalsePositive, 1);
  auto log = apply_preference_updates(b, store, counters, fp, {}, profiles, 1);
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].new_version, 0);
  EXPECT_TRUE(log[0].requeued);
  EXPECT_EQ(store.find(0)->version, 1);
  const auto again = counters.take_confident(UpdateKind::FalsePositive, 1);
  log = apply_preference_updates(b, store, counters, again, {}, profiles, 2);
  EXPECT_FALSE(log[0].requeued);
  EXPECT_TRUE(counters.take_confident(UpdateKind::FalsePositive, 1).empty());
}
