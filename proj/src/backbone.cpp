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

#include "hdrec/backbone.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace hdrec {

std::string to_string(BackboneKind kind) {
  return kind == BackboneKind::MF ? "MF" : "LightGCNLite";
}

BackboneKind backbone_from_string(const std::string& s) {
  if (s == "MF" || s == "mf") return BackboneKind::MF;
  if (s == "LightGCNLite" || s == "lightgcn") return BackboneKind::LightGCNLite;
  throw ValidationError("unknown backbone '" + s + "'");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::SGD ? "SGD" : "Adam"; }

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "SGD" || s == "sgd") return OptimizerKind::SGD;
  if (s == "Adam" || s == "adam") return OptimizerKind::Adam;
  throw ValidationError("unknown optimizer '" + s + "'");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

InteractionGraph InteractionGraph::from_dataset(const Dataset& train) {
  InteractionGraph g;
  g.users_ = train.user_count;
  g.items_ = train.item_count;
  const std::size_t nodes = g.users_ + g.items_;
  std::vector<std::size_t> deg(nodes, 0);
  for (const auto& x : train.interactions) {
    if (x.label != 1) continue;
    ++deg[x.user];
    ++deg[g.users_ + x.item];
  }
  g.offsets_.assign(nodes + 1, 0);
  for (std::size_t n = 0; n < nodes; ++n) g.offsets_[n + 1] = g.offsets_[n] + deg[n];
  g.neighbors_.resize(g.offsets_.back());
  g.weights_.resize(g.offsets_.back());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& x : train.interactions) {
    if (x.label != 1) continue;
    const std::size_t u = x.user, i = g.users_ + x.item;
    const double w = 1.0 / std::sqrt(static_cast<double>(deg[u]) * static_cast<double>(deg[i]));
    g.neighbors_[cursor[u]] = static_cast<std::uint32_t>(i);
    g.weights_[cursor[u]++] = w;
    g.neighbors_[cursor[i]] = static_cast<std::uint32_t>(u);
    g.weights_[cursor[i]++] = w;
  }
  return g;
}

void InteractionGraph::multiply(const Matrix& in, Matrix& out) const {
  const std::size_t nodes = users_ + items_;
  if (in.rows != nodes) throw ValidationError("graph/table dimension mismatch");
  out = Matrix(nodes, in.cols);
  for (std::size_t n = 0; n < nodes; ++n) {
    auto dst = out.row(n);
    for (std::size_t e = offsets_[n]; e < offsets_[n + 1]; ++e) {
      const auto src = in.row(neighbors_[e]);
      const double w = weights_[e];
      for (std::size_t k = 0; k < in.cols; ++k) dst[k] += w * src[k];
    }
  }
}

GradientSet GradientSet::zeros_like(const Model& model) {
  return {Matrix(model.user_count(), model.dim), Matrix(model.item_count(), model.dim)};
}

Model init_model(BackboneKind kind, std::size_t user_count, std::size_t item_count,
                 std::size_t dim, std::uint64_t seed, int layers) {
  if (user_count == 0 || item_count == 0) throw ValidationError("model needs users and items");
  if (dim == 0) throw ValidationError("embedding dim must be >= 1");
  if (layers < 0) throw ValidationError("layers must be >= 0");
  Model m;
  m.kind = kind;
  m.dim = dim;
  m.layers = kind == BackboneKind::LightGCNLite ? layers : 0;
  m.user_embeddings = Matrix(user_count, dim);
  m.item_embeddings = Matrix(item_count, dim);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 0.1 / std::sqrt(static_cast<double>(dim)));
  for (auto& v : m.user_embeddings.data) v = normal(rng);
  for (auto& v : m.item_embeddings.data) v = normal(rng);
  m.adam.m_user = m.adam.v_user = Matrix(user_count, dim);
  m.adam.m_item = m.adam.v_item = Matrix(item_count, dim);
  return m;
}

namespace {

const Matrix& scoring_users(const Model& m) {
  if (!m.uses_propagation()) return m.user_embeddings;
  if (m.user_final.rows != m.user_count())
    throw Error("LightGCNLite model used before propagation was computed");
  return m.user_final;
}

const Matrix& scoring_items(const Model& m) {
  if (!m.uses_propagation()) return m.item_embeddings;
  if (m.item_final.rows != m.item_count())
    throw Error("LightGCNLite model used before propagation was computed");
  return m.item_final;
}

}  // namespace

double predict(const Model& model, UserId user, ItemId item) {
  if (user >= model.user_count() || item >= model.item_count())
    throw ValidationError("predict index out of range (" + std::to_string(user) + ", " +
                          std::to_string(item) + ")");
  return dot(scoring_users(model).row(user), scoring_items(model).row(item));
}

std::vector<double> predict_all(const Model& model, UserId user) {
  if (user >= model.user_count()) throw ValidationError("user index out of range");
  const auto& items = scoring_items(model);
  const auto u = scoring_users(model).row(user);
  std::vector<double> out(items.rows);
  for (std::size_t i = 0; i < items.rows; ++i) out[i] = dot(u, items.row(i));
  return out;
}

namespace {

Matrix stack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows + b.rows, a.cols);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<long>(a.data.size()));
  return out;
}

// Layer mean of A_hat^l * x for l = 0..layers, returned split into [users; items].
std::pair<Matrix, Matrix> layer_mean(const InteractionGraph& graph, int layers, Matrix x,
                                     std::size_t users) {
  Matrix acc = x;
  Matrix next;
  for (int l = 0; l < layers; ++l) {
    graph.multiply(x, next);
    for (std::size_t k = 0; k < acc.data.size(); ++k) acc.data[k] += next.data[k];
    std::swap(x, next);
  }
  const double scale = 1.0 / static_cast<double>(layers + 1);
  for (auto& v : acc.data) v *= scale;
  Matrix u(users, acc.cols), i(acc.rows - users, acc.cols);
  std::copy(acc.data.begin(), acc.data.begin() + static_cast<long>(u.data.size()), u.data.begin());
  std::copy(acc.data.begin() + static_cast<long>(u.data.size()), acc.data.end(), i.data.begin());
  return {std::move(u), std::move(i)};
}

}  // namespace

Propagated propagate(const Model& model, const InteractionGraph& graph) {
  if (model.kind != BackboneKind::LightGCNLite)
    throw ValidationError("propagate requires a LightGCNLite model");
  if (graph.user_count() != model.user_count() || graph.item_count() != model.item_count())
    throw ValidationError("graph/table dimension mismatch");
  auto [u, i] = layer_mean(graph, model.layers,
                           stack(model.user_embeddings, model.item_embeddings), model.user_count());
  return {std::move(u), std::move(i)};
}

void refresh_propagation(Model& model, const InteractionGraph& graph) {
  if (!model.uses_propagation()) return;
  auto p = propagate(model, graph);
  model.user_final = std::move(p.user);
  model.item_final = std::move(p.item);
}

void accumulate_score_gradient(const Model& model, UserId user, ItemId item, double dscore,
                               GradientSet& grads) {
  const auto u = scoring_users(model).row(user);
  const auto i = scoring_items(model).row(item);
  auto gu = grads.user.row(user);
  auto gi = grads.item.row(item);
  for (std::size_t k = 0; k < model.dim; ++k) {
    gu[k] += dscore * i[k];
    gi[k] += dscore * u[k];
  }
}

GradientSet backprop_propagation(const Model& model, const InteractionGraph& graph,
                                 const GradientSet& final_grads) {
  if (!model.uses_propagation()) return final_grads;
  // A_hat is symmetric, so the adjoint of the layer mean is the layer mean itself.
  auto [u, i] = layer_mean(graph, model.layers, stack(final_grads.user, final_grads.item),
                           model.user_count());
  return {std::move(u), std::move(i)};
}

void accumulate_l2(const Model& model, std::span<const UserId> users,
                   std::span<const ItemId> items, double coeff, GradientSet& grads) {
  if (coeff == 0.0) return;
  for (UserId u : users) {
    auto g = grads.user.row(u);
    const auto e = model.user_embeddings.row(u);
    for (std::size_t k = 0; k < model.dim; ++k) g[k] += coeff * e[k];
  }
  for (ItemId i : items) {
    auto g = grads.item.row(i);
    const auto e = model.item_embeddings.row(i);
    for (std::size_t k = 0; k < model.dim; ++k) g[k] += coeff * e[k];
  }
}

namespace {

void check_finite(const Matrix& g, const char* name) {
  for (std::size_t n = 0; n < g.data.size(); ++n)
    if (!std::isfinite(g.data[n]))
      throw ValidationError(std::string("non-finite gradient in ") + name + " row " +
                            std::to_string(n / g.cols) + " col " + std::to_string(n % g.cols));
}

void adam_update(Matrix& param, Matrix& m, Matrix& v, const Matrix& g, const AdamState& s,
                 double lr) {
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t n = 0; n < param.data.size(); ++n) {
    m.data[n] = s.beta1 * m.data[n] + (1.0 - s.beta1) * g.data[n];
    v.data[n] = s.beta2 * v.data[n] + (1.0 - s.beta2) * g.data[n] * g.data[n];
    const double mhat = m.data[n] / c1;
    const double vhat = v.data[n] / c2;
    param.data[n] -= lr * mhat / (std::sqrt(vhat) + s.epsilon);
  }
}

}  // namespace

void apply_gradients(Model& model, const GradientSet& grads, double learning_rate,
                     OptimizerKind optimizer) {
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (grads.user.rows != model.user_count() || grads.item.rows != model.item_count() ||
      grads.user.cols != model.dim || grads.item.cols != model.dim)
    throw ValidationError("gradient shape does not match model");
  check_finite(grads.user, "user_embeddings");
  check_finite(grads.item, "item_embeddings");
  if (optimizer == OptimizerKind::SGD) {
    for (std::size_t n = 0; n < grads.user.data.size(); ++n)
      model.user_embeddings.data[n] -= learning_rate * grads.user.data[n];
    for (std::size_t n = 0; n < grads.item.data.size(); ++n)
      model.item_embeddings.data[n] -= learning_rate * grads.item.data[n];
    return;
  }
  auto& s = model.adam;
  ++s.step;
  adam_update(model.user_embeddings, s.m_user, s.v_user, grads.user, s, learning_rate);
  adam_update(model.item_embeddings, s.m_item, s.v_item, grads.item, s, learning_rate);
}

namespace {

constexpr const char* kCheckpointFormat = "hdrec-checkpoint-v1";

void write_table(std::ofstream& out, const Matrix& m) {
  static_assert(std::endian::native == std::endian::little, "checkpoint assumes little-endian");
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

Matrix read_table(std::ifstream& in, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  if (!in) throw ParseError("checkpoint truncated", 0);
  return m;
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  nlohmann::json header{{"format", kCheckpointFormat},
                        {"kind", to_string(model.kind)},
                        {"dim", model.dim},
                        {"layers", model.layers},
                        {"user_count", model.user_count()},
                        {"item_count", model.item_count()},
                        {"propagated", model.uses_propagation()}};
  out << header.dump() << '\n';
  write_table(out, model.user_embeddings);
  write_table(out, model.item_embeddings);
  if (model.uses_propagation()) {
    write_table(out, model.user_final);
    write_table(out, model.item_final);
  }
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw ParseError("checkpoint header is not JSON", 1);
  }
  if (h.value("format", "") != kCheckpointFormat)
    throw ParseError("unsupported checkpoint format", 1);
  Model m;
  m.kind = backbone_from_string(h.at("kind").get<std::string>());
  m.dim = h.at("dim").get<std::size_t>();
  m.layers = h.at("layers").get<int>();
  const auto users = h.at("user_count").get<std::size_t>();
  const auto items = h.at("item_count").get<std::size_t>();
  m.user_embeddings = read_table(in, users, m.dim);
  m.item_embeddings = read_table(in, items, m.dim);
  if (h.value("propagated", false)) {
    m.user_final = read_table(in, users, m.dim);
    m.item_final = read_table(in, items, m.dim);
  }
  m.adam.m_user = m.adam.v_user = Matrix(users, m.dim);
  m.adam.m_item = m.adam.v_item = Matrix(items, m.dim);
  return m;
}

}  // namespace hdrec
