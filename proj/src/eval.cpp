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

#include "hdrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "hdrec/loss.hpp"

namespace hdrec {

std::vector<ItemId> rank_scores(std::span<const double> scores, const std::vector<char>& excluded,
                                std::size_t limit) {
  std::vector<ItemId> items;
  items.reserve(scores.size());
  for (ItemId i = 0; i < scores.size(); ++i)
    if (excluded.empty() || !excluded[i]) items.push_back(i);
  auto better = [&](ItemId a, ItemId b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; };
  if (limit > 0 && limit < items.size()) {
    std::partial_sort(items.begin(), items.begin() + static_cast<long>(limit), items.end(), better);
    items.resize(limit);
  } else {
    std::sort(items.begin(), items.end(), better);
  }
  return items;
}

std::vector<ItemId> rank_items(const Model& model, UserId user, const std::vector<char>& excluded,
                               std::size_t limit) {
  const auto scores = predict_all(model, user);
  return rank_scores(scores, excluded, limit);
}

double recall_at_k(std::span<const ItemId> ranking, const std::unordered_set<ItemId>& relevant,
                   std::size_t k) {
  if (k == 0) throw ValidationError("K must be >= 1");
  if (relevant.empty()) throw ValidationError("recall needs a non-empty relevant set");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) hits += relevant.count(ranking[r]);
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const ItemId> ranking, const std::unordered_set<ItemId>& relevant,
                 std::size_t k) {
  if (k == 0) throw ValidationError("K must be >= 1");
  if (relevant.empty()) throw ValidationError("NDCG needs a non-empty relevant set");
  double dcg = 0.0, idcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r)
    if (relevant.count(ranking[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  for (std::size_t r = 0; r < std::min(k, relevant.size()); ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

MetricsResult evaluate(const Model& model, const Dataset& target,
                       std::span<const Dataset* const> exclude, std::span<const int> ks) {
  MetricsResult out;
  out.ks.assign(ks.begin(), ks.end());
  int max_k = 0;
  for (int k : ks) {
    if (k < 1) throw ValidationError("K must be >= 1");
    max_k = std::max(max_k, k);
  }
  const auto relevant_by_user = target.positives_by_user();
  std::vector<std::vector<ItemId>> excluded_by_user(model.user_count());
  for (const Dataset* d : exclude)
    for (const auto& x : d->interactions)
      if (x.label == 1) excluded_by_user.at(x.user).push_back(x.item);

  std::vector<char> mask(model.item_count(), 0);
  for (UserId u = 0; u < relevant_by_user.size(); ++u) {
    if (relevant_by_user[u].empty()) {
      ++out.skipped_users;
      continue;
    }
    for (ItemId i : excluded_by_user[u]) mask[i] = 1;
    const auto ranking = rank_items(model, u, mask, static_cast<std::size_t>(max_k));
    for (ItemId i : excluded_by_user[u]) mask[i] = 0;
    const std::unordered_set<ItemId> relevant(relevant_by_user[u].begin(), relevant_by_user[u].end());
    out.users.push_back(u);
    for (int k : ks) {
      out.user_recall[k].push_back(recall_at_k(ranking, relevant, static_cast<std::size_t>(k)));
      out.user_ndcg[k].push_back(ndcg_at_k(ranking, relevant, static_cast<std::size_t>(k)));
    }
  }
  for (int k : ks) {
    const auto& r = out.user_recall[k];
    const auto& n = out.user_ndcg[k];
    out.recall[k] = r.empty() ? 0.0 : std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    out.ndcg[k] = n.empty() ? 0.0 : std::accumulate(n.begin(), n.end(), 0.0) / static_cast<double>(n.size());
  }
  return out;
}

NoiseCounts& NoiseCounts::operator+=(const NoiseCounts& o) {
  dropped += o.dropped;
  dropped_planted += o.dropped_planted;
  rescued += o.rescued;
  rescued_planted += o.rescued_planted;
  planted_seen += o.planted_seen;
  return *this;
}

double NoiseCounts::precision() const {
  return dropped ? static_cast<double>(dropped_planted) / static_cast<double>(dropped) : 0.0;
}
double NoiseCounts::recall() const {
  return planted_seen ? static_cast<double>(dropped_planted) / static_cast<double>(planted_seen) : 0.0;
}
double NoiseCounts::contamination() const {
  return rescued ? static_cast<double>(rescued_planted) / static_cast<double>(rescued) : 0.0;
}

NoiseCounts denoise_quality(std::span<const std::size_t> dropped,
                            std::span<const std::size_t> rescued, std::span<const char> planted) {
  if (planted.empty()) throw ValidationError("denoise_quality needs planted-noise flags");
  NoiseCounts c;
  c.dropped = dropped.size();
  c.rescued = rescued.size();
  for (auto i : dropped) c.dropped_planted += planted[i] ? 1 : 0;
  for (auto i : rescued) c.rescued_planted += planted[i] ? 1 : 0;
  for (char p : planted) c.planted_seen += p ? 1 : 0;
  return c;
}

std::vector<TraceClass> build_trace_classes(const SplitDataset& split,
                                            std::span<const int> d_values, std::size_t per_class,
                                            std::uint64_t seed) {
  if (split.train.planted_count() == 0)
    throw ValidationError("pattern trace needs rated-below-3 noise in the train split");
  const std::size_t items = split.train.item_count;
  std::vector<std::unordered_set<ItemId>> interacted(split.train.user_count);
  for (const Dataset* d : {&split.train, &split.valid, &split.test})
    for (const auto& x : d->interactions) interacted[x.user].insert(x.item);

  std::vector<const Interaction*> clean;
  std::vector<const Interaction*> noisy;
  for (const auto& x : split.train.interactions)
    (x.is_planted() ? noisy : clean).push_back(&x);

  int max_d = 0;
  for (int d : d_values) {
    if (d < 1) throw ValidationError("trace D must be >= 1");
    max_d = std::max(max_d, d);
  }

  std::vector<TraceClass> out;
  for (int d : d_values) {
    TraceClass cls;
    cls.name = d == 1 ? "easy" : (d == max_d ? "hard" : "hard_d" + std::to_string(d));
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(d)));
    std::vector<const Interaction*> pool = clean;
    std::shuffle(pool.begin(), pool.end(), rng);
    if (pool.size() > per_class) pool.resize(per_class);
    std::uniform_int_distribution<ItemId> pick(0, static_cast<ItemId>(items - 1));
    for (const auto* x : pool) {
      TraceSample s{x->user, x->item, {}};
      if (interacted[x->user].size() >= items) continue;
      while (s.candidates.size() < static_cast<std::size_t>(d)) {
        const ItemId j = pick(rng);
        if (!interacted[x->user].count(j)) s.candidates.push_back(j);
      }
      cls.samples.push_back(std::move(s));
    }
    out.push_back(std::move(cls));
  }

  const auto test_pos = split.test.positives_by_user();
  TraceClass noise{"noisy", {}};
  for (const auto* x : noisy) {
    if (noise.samples.size() >= per_class) break;
    if (test_pos[x->user].empty()) continue;
    noise.samples.push_back({x->user, x->item, {test_pos[x->user].front()}});
  }
  out.push_back(std::move(noise));
  return out;
}

std::vector<TraceRow> pattern_trace(const Model& model, int epoch,
                                    std::span<const TraceClass> classes) {
  std::vector<TraceRow> rows;
  for (const auto& cls : classes) {
    double loss = 0.0, score = 0.0;
    for (const auto& s : cls.samples) {
      ItemId neg = s.candidates.front();
      double best = predict(model, s.user, neg);
      for (std::size_t k = 1; k < s.candidates.size(); ++k) {
        const double v = predict(model, s.user, s.candidates[k]);
        if (v > best) {
          best = v;
          neg = s.candidates[k];
        }
      }
      const double pos = predict(model, s.user, s.positive);
      loss += bpr_loss(pos, best);
      score += pos;
    }
    const double n = cls.samples.empty() ? 1.0 : static_cast<double>(cls.samples.size());
    rows.push_back({epoch, cls.name, loss / n, score / n});
  }
  return rows;
}

void write_trace_csv(const std::string& path, std::span<const TraceRow> rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "epoch,class,mean_loss,mean_score\n" << std::setprecision(10);
  for (const auto& r : rows)
    out << r.epoch << ',' << r.cls << ',' << r.mean_loss << ',' << r.mean_score << '\n';
}

}  // namespace hdrec
