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

#include "hdrec/loss.hpp"

#include <cmath>

namespace hdrec {

std::string to_string(TrainMode mode) {
  return mode == TrainMode::Pairwise ? "pairwise" : "pointwise";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "pairwise") return TrainMode::Pairwise;
  if (s == "pointwise") return TrainMode::Pointwise;
  throw ValidationError("unknown training mode '" + s + "'");
}

TrainSample TrainSample::pairwise(UserId u, ItemId pos, ItemId neg, bool planted) {
  TrainSample s;
  s.mode = TrainMode::Pairwise;
  s.user = u;
  s.item = pos;
  s.neg_item = neg;
  s.planted = planted;
  return s;
}

TrainSample TrainSample::pointwise(UserId u, ItemId item, int label, bool planted) {
  TrainSample s;
  s.mode = TrainMode::Pointwise;
  s.user = u;
  s.item = item;
  s.label = label;
  s.planted = planted;
  return s;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double bpr_loss(double y_pos, double y_neg) { return softplus(-(y_pos - y_neg)); }

double bpr_grad(double y_pos, double y_neg) { return -sigmoid(-(y_pos - y_neg)); }

double bce_loss(double raw, int label) {
  // -[y log s(x) + (1-y) log(1-s(x))] = softplus(x) - y x
  return label == 1 ? softplus(-raw) : softplus(raw);
}

double bce_grad(double raw, int label) { return sigmoid(raw) - static_cast<double>(label); }

double sample_loss(const TrainSample& s) {
  return s.mode == TrainMode::Pairwise ? bpr_loss(s.y_pos, s.y_neg) : bce_loss(s.y_pos, s.label);
}

std::vector<double> batch_losses(const Model& model, std::span<TrainSample> batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (auto& s : batch) {
    s.y_pos = predict(model, s.user, s.item);
    if (s.mode == TrainMode::Pairwise) s.y_neg = predict(model, s.user, s.neg_item);
    out.push_back(sample_loss(s));
  }
  return out;
}

double mean_loss(std::span<const double> losses) {
  if (losses.empty()) return 0.0;
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(losses.size());
}

void accumulate_sample_gradient(const Model& model, const TrainSample& s, double scale,
                                GradientSet& grads) {
  if (s.mode == TrainMode::Pairwise) {
    const double g = scale * bpr_grad(s.y_pos, s.y_neg);
    accumulate_score_gradient(model, s.user, s.item, g, grads);
    accumulate_score_gradient(model, s.user, s.neg_item, -g, grads);
  } else {
    accumulate_score_gradient(model, s.user, s.item, scale * bce_grad(s.y_pos, s.label), grads);
  }
}

}  // namespace hdrec
