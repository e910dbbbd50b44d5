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

#include "hdrec/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hdrec {

std::string to_string(IndicatorDirection d) {
  return d == IndicatorDirection::Consistent ? "consistent" : "literal";
}

IndicatorDirection indicator_direction_from_string(const std::string& s) {
  if (s == "consistent") return IndicatorDirection::Consistent;
  if (s == "literal") return IndicatorDirection::Literal;
  throw ValidationError("unknown indicator direction '" + s + "'");
}

void ScheduleConfig::validate() const {
  if (alpha < 1) throw ValidationError("schedule.alpha must be >= 1");
  if (!(eps_l_max >= 0.0 && eps_l_max <= 1.0))
    throw ValidationError("schedule.eps_l_max must be in [0, 1]");
  if (!(eps_v >= 0.0 && eps_v <= 1.0)) throw ValidationError("schedule.eps_v must be in [0, 1]");
  if (eps_pos_min > eps_pos_max) throw ValidationError("schedule.eps_pos_min > eps_pos_max");
  if (eps_neg_min > eps_neg_max) throw ValidationError("schedule.eps_neg_min > eps_neg_max");
  if (eps_pair_min > eps_pair_max) throw ValidationError("schedule.eps_pair_min > eps_pair_max");
  if (window < 1) throw ValidationError("schedule.window must be >= 1");
  if (eps_gamma < 1) throw ValidationError("schedule.eps_gamma must be >= 1");
}

long epsilon_l(long iteration, const ScheduleConfig& cfg, std::size_t batch_size) {
  if (iteration < 0) throw ValidationError("iteration must be >= 0");
  // floor(min(a, b)) == min(floor(a), floor(b))
  const long growth = iteration / cfg.alpha;
  const auto cap = static_cast<long>(std::floor(cfg.eps_l_max * static_cast<double>(batch_size) + 1e-9));
  return std::min(growth, cap);
}

double epsilon_pos(long iteration, const ScheduleConfig& cfg) {
  const double step = static_cast<double>(iteration) / static_cast<double>(cfg.alpha);
  return std::max(cfg.eps_pos_max - step, static_cast<double>(cfg.eps_pos_min));
}

double epsilon_neg(long iteration, const ScheduleConfig& cfg) {
  const double step = static_cast<double>(iteration) / static_cast<double>(cfg.alpha);
  return std::min(cfg.eps_neg_min + step, static_cast<double>(cfg.eps_neg_max));
}

double epsilon_pair(long iteration, const ScheduleConfig& cfg) {
  const double step = static_cast<double>(iteration) / static_cast<double>(cfg.alpha);
  return std::max(cfg.eps_pair_max - step, static_cast<double>(cfg.eps_pair_min));
}

void BatchPartition::check(std::size_t batch_size) const {
  std::vector<int> mark(batch_size, 0);
  for (auto i : clean) {
    if (i >= batch_size || mark[i]) throw Error("internal: clean set out of range or repeated");
    mark[i] = 1;
  }
  for (auto i : noisy) {
    if (i >= batch_size || mark[i]) throw Error("internal: clean and noisy sets overlap");
    mark[i] = 2;
  }
  if (clean.size() + noisy.size() != batch_size)
    throw Error("internal: clean and noisy do not cover the batch");
  for (auto i : hard_candidates)
    if (i >= batch_size || mark[i] != 2) throw Error("internal: hard candidate outside noisy set");
  for (auto i : hard)
    if (!std::binary_search(hard_candidates.begin(), hard_candidates.end(), i))
      throw Error("internal: hard sample outside candidate set");
}

BatchPartition partition_by_loss(std::span<const double> losses, std::size_t drop_count) {
  const std::size_t n = losses.size();
  if (drop_count > n) throw ValidationError("drop count exceeds batch size");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
  BatchPartition p;
  p.noisy.assign(order.begin(), order.begin() + static_cast<long>(drop_count));
  std::sort(p.noisy.begin(), p.noisy.end());
  std::vector<char> flagged(n, 0);
  for (auto i : p.noisy) flagged[i] = 1;
  for (std::size_t i = 0; i < n; ++i)
    if (!flagged[i]) p.clean.push_back(i);
  return p;
}

PredictionHistory::PredictionHistory(int window) : window_(window) {
  if (window < 1) throw ValidationError("history window must be >= 1");
}

std::size_t PredictionHistory::track(UserId user, ItemId item) {
  auto [it, inserted] = index_.try_emplace(pair_key(user, item), users_.size());
  if (inserted) {
    users_.push_back(user);
    items_.push_back(item);
    stamps_.resize(stamps_.size() + static_cast<std::size_t>(window_), -1);
    scores_.resize(scores_.size() + static_cast<std::size_t>(window_), 0.0);
    head_.push_back(0);
    count_.push_back(0);
  }
  return it->second;
}

std::optional<std::size_t> PredictionHistory::find(UserId user, ItemId item) const {
  auto it = index_.find(pair_key(user, item));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void PredictionHistory::evict(std::size_t id, int epoch) {
  const auto w = static_cast<std::size_t>(window_);
  while (count_[id] > 0 && stamps_[id * w + head_[id]] <= epoch - window_) {
    head_[id] = (head_[id] + 1) % w;
    --count_[id];
  }
}

void PredictionHistory::record(std::size_t id, int epoch, double score) {
  const auto w = static_cast<std::size_t>(window_);
  if (count_[id] > 0) {
    const std::size_t last = (head_[id] + count_[id] - 1) % w;
    if (epoch <= stamps_[id * w + last])
      throw ValidationError("history epochs must strictly increase");
  }
  evict(id, epoch);
  if (count_[id] == w) {
    head_[id] = (head_[id] + 1) % w;
    --count_[id];
  }
  const std::size_t slot = (head_[id] + count_[id]) % w;
  stamps_[id * w + slot] = epoch;
  scores_[id * w + slot] = score;
  ++count_[id];
  last_epoch_ = std::max(last_epoch_, epoch);
}

void PredictionHistory::record_epoch(int epoch, const Model& model) {
  if (epoch <= last_epoch_) throw ValidationError("record_epoch: epoch must exceed the last one");
  for (std::size_t id = 0; id < users_.size(); ++id)
    record(id, epoch, predict(model, users_[id], items_[id]));
  last_epoch_ = epoch;
}

std::vector<std::pair<int, double>> PredictionHistory::entries(std::size_t id) const {
  const auto w = static_cast<std::size_t>(window_);
  std::vector<std::pair<int, double>> out;
  for (std::size_t k = 0; k < count_[id]; ++k) {
    const std::size_t slot = (head_[id] + k) % w;
    out.emplace_back(stamps_[id * w + slot], scores_[id * w + slot]);
  }
  return out;
}

std::optional<double> PredictionHistory::variance(std::size_t id, int t) const {
  const auto w = static_cast<std::size_t>(window_);
  if (count_[id] < w) return std::nullopt;
  const std::size_t last = (head_[id] + w - 1) % w;
  if (stamps_[id * w + last] != t || stamps_[id * w + head_[id]] != t - window_ + 1)
    return std::nullopt;
  return population_variance(std::span<const double>(scores_.data() + id * w, w));
}

double population_variance(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

namespace {

std::size_t ceil_fraction(double fraction, std::size_t n) {
  return std::min(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
}

// Batch indices of the top `k` members by variance, ties to the lower index.
void take_top(std::vector<std::pair<double, std::size_t>> ranked, std::size_t k,
              std::vector<std::size_t>& out) {
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t j = 0; j < k; ++j) out.push_back(ranked[j].second);
}

}  // namespace

PruneResult prune_candidates(std::span<const NoisyMember> noisy, double eps_v) {
  if (!(eps_v >= 0.0 && eps_v <= 1.0)) throw ValidationError("eps_v must be in [0, 1]");
  std::vector<std::pair<double, std::size_t>> pos, neg;
  PruneResult out;
  for (const auto& m : noisy) {
    bool ready = false;
    if (m.has_positive_side && m.v_pos) {
      pos.emplace_back(*m.v_pos, m.index);
      ready = true;
    }
    if (m.has_negative_side && m.v_neg) {
      neg.emplace_back(*m.v_neg, m.index);
      ready = true;
    }
    if (!ready) ++out.not_ready;
  }
  const std::size_t k_pos = ceil_fraction(eps_v, pos.size());
  const std::size_t k_neg = ceil_fraction(eps_v, neg.size());
  take_top(std::move(pos), k_pos, out.candidates);
  take_top(std::move(neg), k_neg, out.candidates);
  std::sort(out.candidates.begin(), out.candidates.end());
  out.candidates.erase(std::unique(out.candidates.begin(), out.candidates.end()),
                       out.candidates.end());
  return out;
}

std::vector<std::size_t> random_prune_baseline(std::span<const std::size_t> noisy,
                                               std::size_t count, std::uint64_t seed) {
  if (count > noisy.size()) throw ValidationError("random prune count exceeds noisy set");
  std::vector<std::size_t> pool(noisy.begin(), noisy.end());
  Rng rng(seed);
  for (std::size_t j = 0; j < count; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
    std::swap(pool[j], pool[pick(rng)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

bool identify_hard_pointwise(int score, int label, double eps_pos, double eps_neg,
                             IndicatorDirection direction) {
  const double s = score;
  if (direction == IndicatorDirection::Consistent)
    return label == 1 ? s >= eps_pos : s <= eps_neg;
  return label == 1 ? s < eps_pos : s > eps_neg;
}

bool identify_hard_pairwise(int s_pos, int s_neg, double eps_pair) {
  return static_cast<double>(s_pos - s_neg) > eps_pair;
}

std::vector<std::size_t> assemble_training_set(std::size_t batch_size,
                                               const BatchPartition& partition) {
  partition.check(batch_size);
  std::vector<std::size_t> out;
  out.reserve(partition.clean.size() + partition.hard.size());
  std::merge(partition.clean.begin(), partition.clean.end(), partition.hard.begin(),
             partition.hard.end(), std::back_inserter(out));
  return out;
}

}  // namespace hdrec
