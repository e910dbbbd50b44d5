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

// Interaction datasets: loading, k-core filtering, per-user splitting,
// fixed negative assignment and planted-noise injection.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hdrec/common.hpp"

namespace hdrec {

struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  int label = 1;
  std::optional<int> rating;
  std::optional<bool> planted_noise;

  bool is_planted() const { return planted_noise.value_or(false); }
};

struct Dataset {
  std::vector<Interaction> interactions;
  std::size_t user_count = 0;
  std::size_t item_count = 0;

  std::size_t size() const { return interactions.size(); }
  bool empty() const { return interactions.empty(); }
  std::size_t positive_count() const;
  std::size_t planted_count() const;

  // Item lists of label-1 interactions, one vector per user, in dataset order.
  std::vector<std::vector<ItemId>> positives_by_user() const;

  // Throws ValidationError on out-of-range ids, bad labels or duplicate positives.
  void validate() const;
};

// Original string identifier <-> dense index, in first-seen order.
class IdMap {
 public:
  std::uint32_t get_or_add(const std::string& original);
  std::optional<std::uint32_t> find(const std::string& original) const;
  const std::string& original(std::uint32_t dense) const { return originals_.at(dense); }
  std::size_t size() const { return originals_.size(); }

  // Two columns per line: original<TAB>dense.
  void write(const std::filesystem::path& path) const;
  static IdMap read(const std::filesystem::path& path);

 private:
  std::vector<std::string> originals_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct LoadOptions {
  char delimiter = '\t';
  std::optional<int> min_rating;
};

struct LoadedInteractions {
  Dataset kept;
  // Rows excluded by min_rating; same index space as kept. Feeds rated-below-3 noise.
  Dataset below_min;
  IdMap users;
  IdMap items;
};

// Lines are user, item, rating[, timestamp]. Duplicate (user, item) lines collapse
// to one interaction carrying the highest rating, before min_rating is applied.
// Identifiers are indexed over every row of the file so kept and below_min agree.
LoadedInteractions load_interactions(const std::filesystem::path& path,
                                     const LoadOptions& options = {});

void write_interactions(const std::filesystem::path& path, const Dataset& data,
                        const IdMap& users, const IdMap& items, char delimiter = '\t');

// Maximal k-core: repeatedly drops interactions of users/items with fewer than k
// interactions. Index space is preserved.
Dataset kcore_filter(const Dataset& data, int k);

// Fixed negative item per (user, train positive).
class NegativeAssignment {
 public:
  void set(UserId user, ItemId positive, ItemId negative) {
    map_[pair_key(user, positive)] = negative;
  }
  std::optional<ItemId> get(UserId user, ItemId positive) const;
  ItemId at(UserId user, ItemId positive) const;
  std::size_t size() const { return map_.size(); }
  void clear() { map_.clear(); }

 private:
  std::unordered_map<std::uint64_t, ItemId> map_;
};

struct SplitDataset {
  Dataset train;
  Dataset valid;
  Dataset test;
  NegativeAssignment negatives;
  // Users whose positives were too few for a full split and were kept in train.
  std::size_t short_users = 0;
};

struct SplitRatios {
  double train = 0.6;
  double valid = 0.2;
  double test = 0.2;
};

enum class ShortUserPolicy { KeepInTrain, Fail };

// Per-user random partition of each user's positives at the given ratios.
// valid and test receive floor(n * ratio) each and train keeps the rest.
SplitDataset split(const Dataset& data, const SplitRatios& ratios, std::uint64_t seed,
                   ShortUserPolicy policy = ShortUserPolicy::KeepInTrain);

// Gives every train positive a negative drawn uniformly from the user's items that
// are not positive in any split. Existing valid assignments are kept; missing or
// colliding ones are redrawn in train order.
void assign_negatives(SplitDataset& split, std::uint64_t seed);

enum class NoiseSource { RatedBelow3, SyntheticLowAffinity };

// Adds floor(ratio * |train positives|) positives drawn without replacement from
// pool, flagged planted_noise=true. RatedBelow3 uses only pool rows rated < 3;
// SyntheticLowAffinity takes the pool as given (built by the synthetic world).
Dataset inject_noise(const Dataset& train, double ratio, NoiseSource source,
                     const Dataset& pool, std::uint64_t seed);

// inject_noise on split.train followed by assign_negatives. Pool pairs that are
// positives in any split are never drawn.
void add_noise(SplitDataset& split, double ratio, NoiseSource source, const Dataset& pool,
               std::uint64_t seed);

struct ItemProfile {
  ItemId item = 0;
  std::string title;
  std::string description;
};

struct ProfileTable {
  std::map<ItemId, ItemProfile> profiles;
  std::vector<ItemId> missing;  // items in [0, item_count) without a record
  std::size_t unknown = 0;      // records whose item_id is not in the id map

  const ItemProfile* find(ItemId item) const;
};

// One JSON object per line: {"item_id": ..., "title": ..., "description": ...}.
ProfileTable load_item_profiles(const std::filesystem::path& path, const IdMap& items,
                                std::size_t item_count);

void write_item_profiles(const std::filesystem::path& path, const ProfileTable& table,
                         const IdMap& items);

}  // namespace hdrec
