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

// Synthetic ground-truth worlds.
//
// Users and items get Gaussian latent factors; affinity(u, i) is the logistic of
// their scaled inner product. Each user's positives are the items with the highest
// jittered affinity logit. Each user's bottom affinity decile forms the low-rated
// pool (ratings 1-2) from which planted noise is drawn, so a world written to disk
// looks like a rated interaction log: min_rating=3 recovers the clean positives and
// the rows below 3 are the rated-below-3 noise source.

#pragma once

#include <filesystem>

#include "hdrec/backbone.hpp"
#include "hdrec/data.hpp"

namespace hdrec {

struct WorldConfig {
  std::size_t users = 500;
  std::size_t items = 300;
  std::size_t dim = 8;
  std::size_t positives_per_user = 20;
  double noise_ratio = 0.1;
  double affinity_scale = 2.5;  // logit = scale * <p_u, q_i> / sqrt(dim)
  double jitter = 0.3;          // stddev of the logit jitter used for positive selection
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticWorld {
  WorldConfig config;
  Matrix user_factors;
  Matrix item_factors;
  Matrix affinities;  // users x items, in [0, 1]
  Dataset clean;      // positives, ratings 4-5
  Dataset low_rated;  // bottom-decile pairs per user, ratings 1-2
  ProfileTable profiles;
  IdMap users;
  IdMap items;

  double affinity(UserId u, ItemId i) const { return affinities.data[u * affinities.cols + i]; }
  // clean followed by low_rated, as written to interactions.tsv.
  Dataset rated_log() const;
};

SyntheticWorld generate_world(const WorldConfig& config);

// Per-user split of the clean positives followed by planted noise from the
// low-affinity pool at config.noise_ratio of the train positives.
SplitDataset make_noisy_split(const SyntheticWorld& world, const SplitRatios& ratios,
                              std::uint64_t seed);

// Writes interactions.tsv, profiles.jsonl, user_map.tsv, item_map.tsv, world.json.
void write_world(const SyntheticWorld& world, const std::filesystem::path& dir);

}  // namespace hdrec
