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

// Per-batch denoising: loss-ranked noisy flagging with a growing drop count,
// variance-based hard-candidate pruning, and scheduled hard-sample indicators.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hdrec/backbone.hpp"

namespace hdrec {

// Direction of the pointwise rescue test.
//   Consistent: positive rescued iff score >= eps_pos, negative iff score <= eps_neg.
//   Literal:    positive rescued iff score <  eps_pos, negative iff score >  eps_neg.
enum class IndicatorDirection { Consistent, Literal };

std::string to_string(IndicatorDirection d);
IndicatorDirection indicator_direction_from_string(const std::string& s);

struct ScheduleConfig {
  long alpha = 3000;        // iterations per unit of threshold movement
  double eps_l_max = 0.05;  // max fraction of a batch flagged noisy
  double eps_v = 0.5;       // fraction of variance-ranked noisy samples kept as candidates
  int eps_pos_max = 8;
  int eps_pos_min = 6;
  int eps_neg_max = 4;
  int eps_neg_min = 2;
  int eps_pair_max = 7;
  int eps_pair_min = 3;
  int window = 5;     // m: epochs of prediction history per variance
  int eps_gamma = 3;  // confidence threshold for preference updates
  IndicatorDirection direction = IndicatorDirection::Consistent;

  void validate() const;
};

// Number of highest-loss samples flagged at iteration T:
// floor(min(T / alpha, eps_l_max * batch_size)).
long epsilon_l(long iteration, const ScheduleConfig& cfg, std::size_t batch_size);

double epsilon_pos(long iteration, const ScheduleConfig& cfg);
double epsilon_neg(long iteration, const ScheduleConfig& cfg);
double epsilon_pair(long iteration, const ScheduleConfig& cfg);

// Batch-local index sets, each sorted ascending.
struct BatchPartition {
  std::vector<std::size_t> clean;
  std::vector<std::size_t> noisy;
  std::vector<std::size_t> hard_candidates;
  std::vector<std::size_t> hard;

  // Throws Error if clean/noisy do not partition [0, batch_size) or if
  // hard is not within hard_candidates within noisy.
  void check(std::size_t batch_size) const;
};

// Flags the drop_count largest losses; equal losses flag the lower index first.
BatchPartition partition_by_loss(std::span<const double> losses, std::size_t drop_count);

// Ring buffer of the last `window` epoch-end scores per tracked (user, item) pair.
class PredictionHistory {
 public:
  explicit PredictionHistory(int window = 5);

  int window() const { return window_; }
  std::size_t size() const { return users_.size(); }

  // Returns the pair's id, adding it if new.
  std::size_t track(UserId user, ItemId item);
  std::optional<std::size_t> find(UserId user, ItemId item) const;
  UserId user(std::size_t id) const { return users_[id]; }
  ItemId item(std::size_t id) const { return items_[id]; }

  // Appends one score for every tracked pair. epoch must exceed the last one recorded.
  void record_epoch(int epoch, const Model& model);
  void record(std::size_t id, int epoch, double score);

  int last_epoch() const { return last_epoch_; }
  // (epoch, score) entries of a pair, oldest first.
  std::vector<std::pair<int, double>> entries(std::size_t id) const;

  // Population variance of the last `window` scores ending at epoch t, or nullopt
  // when the pair lacks a full window ending there.
  std::optional<double> variance(std::size_t id, int t) const;

 private:
  void evict(std::size_t id, int epoch);

  int window_;
  int last_epoch_ = -1;
  std::vector<UserId> users_;
  std::vector<ItemId> items_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::vector<int> stamps_;      // id * window + slot
  std::vector<double> scores_;   // id * window + slot
  std::vector<std::size_t> head_, count_;
};

// Population variance (divide by n), two-pass.
double population_variance(std::span<const double> values);

struct NoisyMember {
  std::size_t index = 0;             // batch index
  std::optional<double> v_pos;       // variance of the positive-item pair, if ready
  std::optional<double> v_neg;       // variance of the negative-item pair, if ready
  bool has_positive_side = true;     // pointwise negatives have no positive side
  bool has_negative_side = true;     // pointwise positives have no negative side
};

struct PruneResult {
  std::vector<std::size_t> candidates;  // sorted batch indices
  std::size_t not_ready = 0;
};

// Union of the top ceil(eps_v * |ready positive side|) members by v_pos and the top
// ceil(eps_v * |ready negative side|) by v_neg; ties go to the lower batch index.
PruneResult prune_candidates(std::span<const NoisyMember> noisy, double eps_v);

// Seeded uniform subset of `count` noisy indices, sorted.
std::vector<std::size_t> random_prune_baseline(std::span<const std::size_t> noisy,
                                               std::size_t count, std::uint64_t seed);

bool identify_hard_pointwise(int score, int label, double eps_pos, double eps_neg,
                             IndicatorDirection direction = IndicatorDirection::Consistent);
bool identify_hard_pairwise(int s_pos, int s_neg, double eps_pair);

// (B \ B_N) U B_H as sorted batch indices.
std::vector<std::size_t> assemble_training_set(std::size_t batch_size,
                                               const BatchPartition& partition);

}  // namespace hdrec
