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

#pragma once

#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "hdrec/backbone.hpp"
#include "hdrec/data.hpp"

namespace hdrec {

// Items sorted by descending score, ties by ascending index, excluded items removed.
// `limit` > 0 keeps only the first `limit` entries.
std::vector<ItemId> rank_scores(std::span<const double> scores, const std::vector<char>& excluded,
                                std::size_t limit = 0);

std::vector<ItemId> rank_items(const Model& model, UserId user, const std::vector<char>& excluded,
                               std::size_t limit = 0);

double recall_at_k(std::span<const ItemId> ranking, const std::unordered_set<ItemId>& relevant,
                   std::size_t k);
// Binary gain, 1/log2(rank + 1) discount, normalized by the ideal DCG@k.
double ndcg_at_k(std::span<const ItemId> ranking, const std::unordered_set<ItemId>& relevant,
                 std::size_t k);

struct MetricsResult {
  std::vector<int> ks;
  std::vector<UserId> users;                       // evaluated users
  std::map<int, std::vector<double>> user_recall;  // aligned with users
  std::map<int, std::vector<double>> user_ndcg;
  std::map<int, double> recall;  // means
  std::map<int, double> ndcg;
  std::size_t skipped_users = 0;  // users with an empty relevant set
};

// Full-ranking evaluation of `target` positives. Positives of every dataset in
// `exclude` are removed from each user's candidate list.
MetricsResult evaluate(const Model& model, const Dataset& target,
                       std::span<const Dataset* const> exclude, std::span<const int> ks);

struct NoiseCounts {
  std::size_t dropped = 0;
  std::size_t dropped_planted = 0;
  std::size_t rescued = 0;
  std::size_t rescued_planted = 0;
  std::size_t planted_seen = 0;

  NoiseCounts& operator+=(const NoiseCounts& o);
  double precision() const;      // planted among dropped
  double recall() const;         // dropped among planted seen
  double contamination() const;  // planted among rescued
};

// Counts for one batch. dropped and rescued are batch indices; planted has one
// flag per batch sample. Throws ValidationError when planted is empty.
NoiseCounts denoise_quality(std::span<const std::size_t> dropped,
                            std::span<const std::size_t> rescued, std::span<const char> planted);

// Sample classes for the loss/score pattern trace.
struct TraceSample {
  UserId user = 0;
  ItemId positive = 0;
  std::vector<ItemId> candidates;  // the negative is the highest-scoring candidate
};

struct TraceClass {
  std::string name;
  std::vector<TraceSample> samples;
};

struct TraceRow {
  int epoch = 0;
  std::string cls;
  double mean_loss = 0.0;
  double mean_score = 0.0;
};

// Builds an "easy" class for D = 1, "hard" for the largest D > 1 (further D > 1
// values are named "hard_d<D>"), each from up to per_class clean train positives
// with D uniformly sampled non-interacted candidates, and a "noisy" class pairing
// planted train positives with a held-out test positive of the same user as the
// negative. Throws ValidationError when train has no planted positives.
std::vector<TraceClass> build_trace_classes(const SplitDataset& split,
                                            std::span<const int> d_values, std::size_t per_class,
                                            std::uint64_t seed);

// Mean BPR loss and mean positive-item score per class at the current model.
std::vector<TraceRow> pattern_trace(const Model& model, int epoch,
                                    std::span<const TraceClass> classes);

// CSV with header epoch,class,mean_loss,mean_score.
void write_trace_csv(const std::string& path, std::span<const TraceRow> rows);

}  // namespace hdrec
