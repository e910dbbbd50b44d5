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

// Central finite differences of a sample loss with respect to the base embedding
// tables, recomputing propagation at every perturbed point.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hdrec/backbone.hpp"
#include "hdrec/loss.hpp"

namespace gradcheck {

struct Instance {
  hdrec::Model model;
  hdrec::InteractionGraph graph;
};

// Small random world: users x items with a few positives per user.
inline Instance make_instance(hdrec::BackboneKind kind, std::uint64_t seed, int layers = 2) {
  const std::size_t users = 6, items = 8, dim = 4;
  hdrec::Dataset d;
  d.user_count = users;
  d.item_count = items;
  std::mt19937_64 rng(seed);
  for (hdrec::UserId u = 0; u < users; ++u)
    for (hdrec::ItemId i = 0; i < items; ++i)
      if ((u + i + rng()) % 3 == 0) d.interactions.push_back({u, i, 1, 5, std::nullopt});
  Instance inst;
  inst.model = hdrec::init_model(kind, users, items, dim, seed, layers);
  // Larger entries than the default init keep the gradients well above FD noise.
  std::normal_distribution<double> n(0.0, 0.7);
  for (auto& v : inst.model.user_embeddings.data) v = n(rng);
  for (auto& v : inst.model.item_embeddings.data) v = n(rng);
  inst.graph = hdrec::InteractionGraph::from_dataset(d);
  hdrec::refresh_propagation(inst.model, inst.graph);
  return inst;
}

inline double loss_at(hdrec::Model m, const hdrec::InteractionGraph& g, hdrec::TrainSample s) {
  hdrec::refresh_propagation(m, g);
  std::vector<hdrec::TrainSample> b{s};
  return hdrec::batch_losses(m, b)[0];
}

// Norm-wise relative error ||analytic - fd|| / max(||analytic||, ||fd||).
inline double relative_error(const Instance& inst, const hdrec::TrainSample& sample,
                             double h = 1e-4) {
  hdrec::Model m = inst.model;
  std::vector<hdrec::TrainSample> b{sample};
  hdrec::batch_losses(m, b);
  hdrec::GradientSet g = hdrec::GradientSet::zeros_like(m);
  hdrec::accumulate_sample_gradient(m, b[0], 1.0, g);
  g = hdrec::backprop_propagation(m, inst.graph, g);

  double diff = 0, na = 0, nf = 0;
  auto check_table = [&](bool user_table, const hdrec::Matrix& analytic) {
    const std::size_t n = analytic.data.size();
    for (std::size_t k = 0; k < n; ++k) {
      hdrec::Model plus = inst.model, minus = inst.model;
      (user_table ? plus.user_embeddings : plus.item_embeddings).data[k] += h;
      (user_table ? minus.user_embeddings : minus.item_embeddings).data[k] -= h;
      const double fd = (loss_at(plus, inst.graph, sample) - loss_at(minus, inst.graph, sample)) / (2 * h);
      diff += (fd - analytic.data[k]) * (fd - analytic.data[k]);
      na += analytic.data[k] * analytic.data[k];
      nf += fd * fd;
    }
  };
  check_table(true, g.user);
  check_table(false, g.item);
  const double denom = std::max(std::sqrt(na), std::sqrt(nf));
  return denom == 0 ? 0.0 : std::sqrt(diff) / denom;
}

// Random pairwise or pointwise sample on the instance.
inline hdrec::TrainSample random_sample(const Instance& inst, hdrec::TrainMode mode,
                                        std::mt19937_64& rng) {
  const auto u = static_cast<hdrec::UserId>(rng() % inst.model.user_count());
  const auto i = static_cast<hdrec::ItemId>(rng() % inst.model.item_count());
  auto j = static_cast<hdrec::ItemId>(rng() % inst.model.item_count());
  if (j == i) j = (j + 1) % inst.model.item_count();
  if (mode == hdrec::TrainMode::Pairwise) return hdrec::TrainSample::pairwise(u, i, j);
  return hdrec::TrainSample::pointwise(u, i, static_cast<int>(rng() % 2));
}

}  // namespace gradcheck
