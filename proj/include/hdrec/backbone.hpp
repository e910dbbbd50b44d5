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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hdrec/common.hpp"
#include "hdrec/data.hpp"

namespace hdrec {

enum class BackboneKind { MF, LightGCNLite };
enum class OptimizerKind { SGD, Adam };

std::string to_string(BackboneKind kind);
BackboneKind backbone_from_string(const std::string& s);
std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& s);

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  bool operator==(const Matrix&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);

// Symmetric-normalized user-item adjacency D^-1/2 A D^-1/2 over the train positives.
// Nodes are users [0, user_count) followed by items.
class InteractionGraph {
 public:
  InteractionGraph() = default;
  static InteractionGraph from_dataset(const Dataset& train);

  std::size_t user_count() const { return users_; }
  std::size_t item_count() const { return items_; }
  std::size_t degree(std::size_t node) const { return offsets_[node + 1] - offsets_[node]; }

  // out = A_hat * in, with in/out stacked [users; items] of width cols.
  void multiply(const Matrix& in, Matrix& out) const;

 private:
  std::size_t users_ = 0;
  std::size_t items_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> neighbors_;
  std::vector<double> weights_;
};

struct AdamState {
  Matrix m_user, v_user, m_item, v_item;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct Model {
  BackboneKind kind = BackboneKind::MF;
  std::size_t dim = 0;
  int layers = 0;
  Matrix user_embeddings;
  Matrix item_embeddings;
  AdamState adam;
  // Layer-averaged embeddings used for scoring by LightGCNLite. Refreshed by
  // propagate(); equal to the base tables when layers == 0.
  Matrix user_final;
  Matrix item_final;

  std::size_t user_count() const { return user_embeddings.rows; }
  std::size_t item_count() const { return item_embeddings.rows; }
  bool uses_propagation() const { return kind == BackboneKind::LightGCNLite && layers > 0; }
};

// Gradient with respect to the base embedding tables.
struct GradientSet {
  Matrix user;
  Matrix item;

  static GradientSet zeros_like(const Model& model);
};

Model init_model(BackboneKind kind, std::size_t user_count, std::size_t item_count,
                 std::size_t dim, std::uint64_t seed, int layers = 0);

double predict(const Model& model, UserId user, ItemId item);

// Scores of every item for one user.
std::vector<double> predict_all(const Model& model, UserId user);

struct Propagated {
  Matrix user;
  Matrix item;
};

// Mean of E^(0)..E^(layers) with E^(l+1) = A_hat E^(l).
Propagated propagate(const Model& model, const InteractionGraph& graph);

// Recomputes model.user_final/item_final. No-op for MF.
void refresh_propagation(Model& model, const InteractionGraph& graph);

// Adds dscore * d(predict(u, i))/d(scoring embeddings) into grads. For MF these are
// the base tables; for LightGCNLite they are the propagated tables and
// backprop_propagation must be applied before the update.
void accumulate_score_gradient(const Model& model, UserId user, ItemId item, double dscore,
                               GradientSet& grads);

// Maps a gradient on propagated tables to the base tables. Propagation is linear,
// so the result is exact for whichever base tables produced the forward pass.
GradientSet backprop_propagation(const Model& model, const InteractionGraph& graph,
                                 const GradientSet& final_grads);

// grads += coeff * base embedding, once per listed row occurrence.
void accumulate_l2(const Model& model, std::span<const UserId> users,
                   std::span<const ItemId> items, double coeff, GradientSet& grads);

void apply_gradients(Model& model, const GradientSet& grads, double learning_rate,
                     OptimizerKind optimizer);

// Checkpoint: one JSON header line, then little-endian float64 tables in the order
// user, item, and for LightGCNLite also user_final, item_final.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace hdrec
