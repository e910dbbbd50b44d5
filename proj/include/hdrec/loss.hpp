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

#include <span>
#include <string>
#include <vector>

#include "hdrec/backbone.hpp"

namespace hdrec {

enum class TrainMode { Pointwise, Pairwise };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& s);

struct TrainSample {
  TrainMode mode = TrainMode::Pairwise;
  UserId user = 0;
  // Positive item for pairwise samples; the single item for pointwise ones.
  ItemId item = 0;
  ItemId neg_item = 0;  // pairwise only
  int label = 1;        // pointwise only
  bool planted = false;  // the positive interaction carries a planted-noise flag

  // Cached by batch_losses.
  double y_pos = 0.0;
  double y_neg = 0.0;

  static TrainSample pairwise(UserId u, ItemId pos, ItemId neg, bool planted = false);
  static TrainSample pointwise(UserId u, ItemId item, int label, bool planted = false);
};

double sigmoid(double x);
// log(1 + e^x) without overflow.
double softplus(double x);

// -log sigmoid(y_pos - y_neg).
double bpr_loss(double y_pos, double y_neg);
// d bpr / d y_pos; d bpr / d y_neg is the negation.
double bpr_grad(double y_pos, double y_neg);

// Cross-entropy of sigmoid(raw) against label, evaluated in logit form.
double bce_loss(double raw, int label);
double bce_grad(double raw, int label);

// Loss of a sample from its cached predictions.
double sample_loss(const TrainSample& s);

// Per-sample losses aligned with batch; refreshes the cached predictions.
std::vector<double> batch_losses(const Model& model, std::span<TrainSample> batch);

// Reduction used by the trainer.
double mean_loss(std::span<const double> losses);

// Adds scale * d loss(sample) / d scoring-embeddings into grads (cached predictions).
void accumulate_sample_gradient(const Model& model, const TrainSample& s, double scale,
                                GradientSet& grads);

}  // namespace hdrec
