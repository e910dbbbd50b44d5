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

#include "hdrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hdrec/loss.hpp"

namespace hdrec {

void WorldConfig::validate() const {
  if (users == 0 || items == 0 || dim == 0) throw ValidationError("world needs users, items, dim");
  if (positives_per_user < 3) throw ValidationError("positives_per_user must be >= 3");
  const std::size_t decile = items / 10;
  if (decile == 0 || positives_per_user + decile > items)
    throw ValidationError("world has too few items for " + std::to_string(positives_per_user) +
                          " positives per user plus a bottom decile");
  if (!(noise_ratio >= 0.0 && noise_ratio <= 0.5))
    throw ValidationError("noise_ratio must be in [0, 0.5]");
  if (!(affinity_scale > 0.0) || jitter < 0.0) throw ValidationError("bad affinity scale/jitter");
}

Dataset SyntheticWorld::rated_log() const {
  Dataset out = clean;
  out.interactions.insert(out.interactions.end(), low_rated.interactions.begin(),
                          low_rated.interactions.end());
  return out;
}

namespace {

std::string signature(std::span<const double> factor) {
  // The two strongest latent directions, e.g. "d3+ d0-".
  std::vector<std::size_t> order(factor.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(factor[a]) > std::abs(factor[b]);
  });
  std::ostringstream out;
  for (std::size_t k = 0; k < std::min<std::size_t>(2, order.size()); ++k)
    out << (k ? " " : "") << 'd' << order[k] << (factor[order[k]] >= 0 ? '+' : '-');
  return out.str();
}

}  // namespace

SyntheticWorld generate_world(const WorldConfig& config) {
  config.validate();
  SyntheticWorld w;
  w.config = config;
  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  w.user_factors = Matrix(config.users, config.dim);
  w.item_factors = Matrix(config.items, config.dim);
  for (auto& v : w.user_factors.data) v = normal(rng);
  for (auto& v : w.item_factors.data) v = normal(rng);

  const double scale = config.affinity_scale / std::sqrt(static_cast<double>(config.dim));
  w.affinities = Matrix(config.users, config.items);
  Matrix logits(config.users, config.items);
  for (std::size_t u = 0; u < config.users; ++u)
    for (std::size_t i = 0; i < config.items; ++i) {
      const double z = scale * dot(w.user_factors.row(u), w.item_factors.row(i));
      logits.data[u * config.items + i] = z;
      w.affinities.data[u * config.items + i] = sigmoid(z);
    }

  for (std::size_t u = 0; u < config.users; ++u) w.users.get_or_add("u" + std::to_string(u));
  for (std::size_t i = 0; i < config.items; ++i) w.items.get_or_add("i" + std::to_string(i));
  for (Dataset* d : {&w.clean, &w.low_rated}) {
    d->user_count = config.users;
    d->item_count = config.items;
  }

  const std::size_t decile = config.items / 10;
  Rng jitter_rng(mix_seed(config.seed, 0x6a6974));
  for (UserId u = 0; u < config.users; ++u) {
    std::vector<double> key(config.items);
    for (std::size_t i = 0; i < config.items; ++i)
      key[i] = logits.data[u * config.items + i] + config.jitter * normal(jitter_rng);
    std::vector<ItemId> order(config.items);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](ItemId a, ItemId b) { return key[a] != key[b] ? key[a] > key[b] : a < b; });
    std::vector<ItemId> positives(order.begin(), order.begin() + static_cast<long>(config.positives_per_user));
    std::sort(positives.begin(), positives.end());
    for (ItemId i : positives) {
      Interaction x;
      x.user = u;
      x.item = i;
      x.rating = w.affinity(u, i) >= 0.9 ? 5 : 4;
      w.clean.interactions.push_back(x);
    }

    // Bottom decile by true affinity.
    std::vector<ItemId> by_aff(config.items);
    std::iota(by_aff.begin(), by_aff.end(), 0);
    std::sort(by_aff.begin(), by_aff.end(), [&](ItemId a, ItemId b) {
      const double fa = w.affinity(u, a), fb = w.affinity(u, b);
      return fa != fb ? fa < fb : a < b;
    });
    std::vector<ItemId> bottom(by_aff.begin(), by_aff.begin() + static_cast<long>(decile));
    std::sort(bottom.begin(), bottom.end());
    for (ItemId i : bottom) {
      if (std::binary_search(positives.begin(), positives.end(), i)) continue;
      Interaction x;
      x.user = u;
      x.item = i;
      x.rating = w.affinity(u, i) < 0.05 ? 1 : 2;
      w.low_rated.interactions.push_back(x);
    }
  }

  for (ItemId i = 0; i < config.items; ++i) {
    ItemProfile p;
    p.item = i;
    p.title = "Synthetic item " + std::to_string(i);
    p.description = "A generated catalogue entry whose strongest traits are " +
                    signature(w.item_factors.row(i)) + ".";
    w.profiles.profiles[i] = std::move(p);
  }
  return w;
}

SplitDataset make_noisy_split(const SyntheticWorld& world, const SplitRatios& ratios,
                              std::uint64_t seed) {
  SplitDataset s = split(world.clean, ratios, seed);
  if (world.config.noise_ratio > 0)
    add_noise(s, world.config.noise_ratio, NoiseSource::SyntheticLowAffinity, world.low_rated,
              mix_seed(seed, 0x6e6f6973));
  return s;
}

void write_world(const SyntheticWorld& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_interactions(dir / "interactions.tsv", world.rated_log(), world.users, world.items);
  write_item_profiles(dir / "profiles.jsonl", world.profiles, world.items);
  world.users.write(dir / "user_map.tsv");
  world.items.write(dir / "item_map.tsv");
  const auto& c = world.config;
  nlohmann::json j{{"users", c.users},
                   {"items", c.items},
                   {"dim", c.dim},
                   {"positives_per_user", c.positives_per_user},
                   {"noise_ratio", c.noise_ratio},
                   {"affinity_scale", c.affinity_scale},
                   {"jitter", c.jitter},
                   {"seed", c.seed}};
  std::ofstream(dir / "world.json") << j.dump(2) << '\n';
}

}  // namespace hdrec
