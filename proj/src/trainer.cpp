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

#include "hdrec/trainer.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace hdrec {

Ablation Ablation::parse(const std::string& text) {
  Ablation a{false, false, false, false, false};
  std::string lowered = text;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), ::toupper);
  if (lowered.empty() || lowered == "NONE" || lowered == "VANILLA") return a;
  std::istringstream in(lowered);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(' '));
    tok.erase(tok.find_last_not_of(' ') + 1);
    if (tok == "LD") a.ld = true;
    else if (tok == "VS") a.vs = true;
    else if (tok == "RS") a.rs = true;
    else if (tok == "LMS") a.lms = true;
    else if (tok == "PU") a.pu = true;
    else throw ValidationError("unknown ablation toggle '" + tok + "'");
  }
  a.validate();
  return a;
}

std::string Ablation::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(ld, "LD");
  add(vs, "VS");
  add(rs, "RS");
  add(lms, "LMS");
  add(pu, "PU");
  return out.empty() ? "none" : out;
}

void Ablation::validate() const {
  if (vs && rs) throw ValidationError("ablation: VS and RS are alternatives");
  if ((vs || rs || lms) && !ld) throw ValidationError("ablation: VS, RS and LMS need LD");
}

void RunConfig::validate() const {
  if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
  if (early_stop_patience < 1) throw ValidationError("train.early_stop_patience must be >= 1");
  if (max_epochs < 1) throw ValidationError("train.max_epochs must be >= 1");
  if (dim < 1) throw ValidationError("model.dim must be >= 1");
  if (layers < 0) throw ValidationError("model.layers must be >= 0");
  if (!(learning_rate > 0)) throw ValidationError("model.learning_rate must be > 0");
  if (l2 < 0) throw ValidationError("model.l2 must be >= 0");
  if (summary_items < 1) throw ValidationError("train.summary_items must be >= 1");
  for (int k : ks)
    if (k < 1) throw ValidationError("train.ks entries must be >= 1");
  schedule.validate();
  ablation.validate();
}

std::vector<std::vector<TrainSample>> build_batches(const SplitDataset& data, TrainMode mode,
                                                    int epoch, std::uint64_t seed,
                                                    std::size_t batch_size) {
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
  std::vector<TrainSample> samples;
  for (const auto& x : data.train.interactions) {
    if (x.label != 1) continue;
    const ItemId neg = data.negatives.at(x.user, x.item);
    if (mode == TrainMode::Pairwise) {
      samples.push_back(TrainSample::pairwise(x.user, x.item, neg, x.is_planted()));
    } else {
      samples.push_back(TrainSample::pointwise(x.user, x.item, 1, x.is_planted()));
      samples.push_back(TrainSample::pointwise(x.user, neg, 0, false));
    }
  }
  Rng rng(mix_seed(seed, 0x65706f6300000000ull + static_cast<std::uint64_t>(epoch)));
  std::shuffle(samples.begin(), samples.end(), rng);
  std::vector<std::vector<TrainSample>> batches;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    batches.emplace_back(samples.begin() + static_cast<long>(start),
                         samples.begin() + static_cast<long>(end));
  }
  return batches;
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& s = c.schedule;
  return {{"mode", to_string(c.mode)},
          {"backbone", to_string(c.backbone)},
          {"dim", c.dim},
          {"layers", c.layers},
          {"optimizer", to_string(c.optimizer)},
          {"learning_rate", c.learning_rate},
          {"l2", c.l2},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"early_stop_patience", c.early_stop_patience},
          {"seed", c.seed},
          {"ablation", c.ablation.to_string()},
          {"scorer_parallelism", c.scorer_parallelism},
          {"summary_items", c.summary_items},
          {"ks", c.ks},
          {"schedule",
           {{"alpha", s.alpha},
            {"eps_l_max", s.eps_l_max},
            {"eps_v", s.eps_v},
            {"eps_pos_max", s.eps_pos_max},
            {"eps_pos_min", s.eps_pos_min},
            {"eps_neg_max", s.eps_neg_max},
            {"eps_neg_min", s.eps_neg_min},
            {"eps_pair_max", s.eps_pair_max},
            {"eps_pair_min", s.eps_pair_min},
            {"window", s.window},
            {"eps_gamma", s.eps_gamma},
            {"direction", to_string(s.direction)}}}};
}

namespace {

nlohmann::json metric_map(const std::map<int, double>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

nlohmann::json noise_json(const NoiseCounts& n) {
  return {{"dropped", n.dropped},
          {"dropped_planted", n.dropped_planted},
          {"rescued", n.rescued},
          {"rescued_planted", n.rescued_planted},
          {"planted_seen", n.planted_seen},
          {"precision", n.precision()},
          {"recall", n.recall()},
          {"contamination", n.contamination()}};
}

}  // namespace

nlohmann::json to_json(const EpochStats& e) {
  nlohmann::json j{{"epoch", e.epoch},
                   {"iterations", e.iterations},
                   {"drop_count", e.drop_count},
                   {"batch_loss", e.batch_loss},
                   {"train_loss", e.train_loss},
                   {"batch_samples", e.batch_samples},
                   {"noisy", e.noisy},
                   {"hard_candidates", e.hard_candidates},
                   {"hard", e.hard},
                   {"trained", e.trained},
                   {"not_ready", e.not_ready},
                   {"scored", e.scored},
                   {"scoring_failures", e.scoring_failures},
                   {"unscorable", e.unscorable},
                   {"fp_flags", e.fp_flags},
                   {"fn_flags", e.fn_flags},
                   {"preference_updates", e.preference_updates},
                   {"valid_recall", metric_map(e.valid_recall)},
                   {"valid_ndcg", metric_map(e.valid_ndcg)}};
  j["noise"] = e.noise ? noise_json(*e.noise) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const MetricsResult& m, bool per_user) {
  nlohmann::json j{{"ks", m.ks},
                   {"users", m.users.size()},
                   {"skipped_users", m.skipped_users},
                   {"recall", metric_map(m.recall)},
                   {"ndcg", metric_map(m.ndcg)}};
  if (per_user) {
    j["user_ids"] = m.users;
    nlohmann::json r = nlohmann::json::object(), n = nlohmann::json::object();
    for (const auto& [k, v] : m.user_recall) r[std::to_string(k)] = v;
    for (const auto& [k, v] : m.user_ndcg) n[std::to_string(k)] = v;
    j["user_recall"] = r;
    j["user_ndcg"] = n;
  }
  return j;
}

nlohmann::json to_json(const RunReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) epochs.push_back(to_json(e));
  nlohmann::json updates = nlohmann::json::array();
  for (const auto& u : r.preference_updates)
    updates.push_back({{"user", u.user},
                       {"item", u.item},
                       {"kind", to_string(u.kind)},
                       {"epoch", u.epoch},
                       {"new_version", u.new_version},
                       {"requeued", u.requeued}});
  nlohmann::json j{{"config", to_json(r.config)},
                   {"seed", r.config.seed},
                   {"epochs", epochs},
                   {"preference_updates", updates},
                   {"summarized_users", r.summarized_users},
                   {"summary_failures", r.summary_failures},
                   {"best_epoch", r.best_epoch},
                   {"best_valid_ndcg10", r.best_valid_ndcg10},
                   {"stopped_early", r.stopped_early}};
  j["test"] = r.test ? to_json(*r.test, true) : nlohmann::json(nullptr);
  j["noise_total"] = r.noise_total ? noise_json(*r.noise_total) : nlohmann::json(nullptr);
  return j;
}

namespace {

// Trainer state shared by the batch and epoch steps.
class Run {
 public:
  Run(const RunConfig& config, const SplitDataset& data, const TrainContext& context)
      : cfg_(config), data_(data), ctx_(context), history_(config.schedule.window) {
    cfg_.validate();
    data_.train.validate();
    const bool needs_scorer = cfg_.ablation.lms || cfg_.ablation.pu;
    if (needs_scorer && (!ctx_.scorer || !ctx_.profiles))
      throw ValidationError("LMS and PU need a scorer and item profiles");
    store_ = ctx_.preferences ? ctx_.preferences : &own_store_;
    planted_ = data_.train.planted_count() > 0;

    const int layers = cfg_.backbone == BackboneKind::LightGCNLite ? cfg_.layers : 0;
    model_ = init_model(cfg_.backbone, data_.train.user_count, data_.train.item_count, cfg_.dim,
                        mix_seed(cfg_.seed, 0x696e6974), layers);
    if (model_.uses_propagation()) graph_ = InteractionGraph::from_dataset(data_.train);

    for (const auto& x : data_.train.interactions) {
      if (x.label != 1) continue;
      pos_ids_.push_back(history_.track(x.user, x.item));
    }
    for (const auto& x : data_.train.interactions) {
      if (x.label != 1) continue;
      neg_ids_.push_back(history_.track(x.user, data_.negatives.at(x.user, x.item)));
    }
    std::sort(neg_ids_.begin(), neg_ids_.end());
    neg_ids_.erase(std::unique(neg_ids_.begin(), neg_ids_.end()), neg_ids_.end());
    // A fixed negative is never a train positive, so the two id sets are disjoint.

    ks_ = cfg_.ks;
    if (std::find(ks_.begin(), ks_.end(), 10) == ks_.end()) ks_.push_back(10);
    report_.config = cfg_;
  }

  TrainResult run() {
    if (cfg_.ablation.lms || cfg_.ablation.pu) summarize_users();
    refresh_propagation(model_, graph_);
    Model best = model_;
    int bad_epochs = 0;
    for (int epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
      EpochStats stats = run_epoch(epoch);
      refresh_propagation(model_, graph_);
      history_.record_epoch(epoch, model_);
      if (cfg_.ablation.pu) update_preferences(epoch, stats);

      const Dataset* exclude[] = {&data_.train};
      const auto valid = evaluate(model_, data_.valid, exclude, ks_);
      stats.valid_recall = valid.recall;
      stats.valid_ndcg = valid.ndcg;
      const double ndcg10 = valid.ndcg.at(10);
      if (epoch == 1 || ndcg10 > report_.best_valid_ndcg10) {
        report_.best_valid_ndcg10 = ndcg10;
        report_.best_epoch = epoch;
        best = model_;
        bad_epochs = 0;
      } else {
        ++bad_epochs;
      }
      report_.epochs.push_back(std::move(stats));
      if (ctx_.hooks.on_epoch_end) ctx_.hooks.on_epoch_end(model_, epoch);
      if (ctx_.hooks.on_report) ctx_.hooks.on_report(report_);
      if (bad_epochs >= cfg_.early_stop_patience) {
        report_.stopped_early = epoch < cfg_.max_epochs;
        break;
      }
    }

    const Dataset* exclude[] = {&data_.train, &data_.valid};
    report_.test = evaluate(best, data_.test, exclude, cfg_.ks);
    if (planted_) {
      NoiseCounts total;
      for (const auto& e : report_.epochs)
        if (e.noise) total += *e.noise;
      report_.noise_total = total;
    }
    if (ctx_.hooks.on_report) ctx_.hooks.on_report(report_);
    return {std::move(best), std::move(report_)};
  }

 private:
  void summarize_users() {
    const auto by_user = data_.train.positives_by_user();
    for (UserId u = 0; u < by_user.size(); ++u) {
      if (store_->find(u) || by_user[u].empty()) continue;
      std::vector<ItemProfile> profiles;
      for (ItemId i : by_user[u]) {
        if (profiles.size() >= cfg_.summary_items) break;
        if (const ItemProfile* p = ctx_.profiles->find(i)) profiles.push_back(*p);
      }
      if (profiles.empty()) continue;
      try {
        store_->put(summarize_preference(*ctx_.scorer, u, profiles));
        ++report_.summarized_users;
      } catch (const ScoringUnavailable&) {
        ++report_.summary_failures;
      }
    }
  }

  std::optional<double> variance_of(UserId u, ItemId i) const {
    const auto id = history_.find(u, i);
    if (!id || history_.last_epoch() < 0) return std::nullopt;
    return history_.variance(*id, history_.last_epoch());
  }

  // Candidate set among the noisy samples, per VS, RS or (LMS alone) all of them.
  std::vector<std::size_t> candidates(const std::vector<TrainSample>& batch,
                                      const BatchPartition& part, EpochStats& stats) {
    if (!cfg_.ablation.vs && !cfg_.ablation.rs) return part.noisy;
    std::vector<NoisyMember> members;
    std::size_t not_ready = 0;
    for (std::size_t idx : part.noisy) {
      const TrainSample& s = batch[idx];
      NoisyMember m;
      m.index = idx;
      if (s.mode == TrainMode::Pairwise) {
        m.v_pos = variance_of(s.user, s.item);
        m.v_neg = variance_of(s.user, s.neg_item);
        if (!m.v_pos || !m.v_neg) {
          ++not_ready;
          continue;
        }
      } else {
        m.has_positive_side = s.label == 1;
        m.has_negative_side = s.label == 0;
        auto v = variance_of(s.user, s.item);
        if (!v) {
          ++not_ready;
          continue;
        }
        (s.label == 1 ? m.v_pos : m.v_neg) = v;
      }
      members.push_back(m);
    }
    stats.not_ready += not_ready;
    PruneResult pruned = prune_candidates(members, cfg_.schedule.eps_v);
    if (!cfg_.ablation.rs) return pruned.candidates;
    std::vector<std::size_t> ready;
    for (const auto& m : members) ready.push_back(m.index);
    return random_prune_baseline(ready, pruned.candidates.size(),
                                 mix_seed(cfg_.seed, 0x72730000000000ull + static_cast<std::uint64_t>(iteration_)));
  }

  std::optional<ScoreRequest> request_for(UserId u, ItemId i) const {
    const UserPreference* pref = store_->find(u);
    const ItemProfile* profile = ctx_.profiles->find(i);
    if (!pref || !profile) return std::nullopt;
    return ScoreRequest{u, i, pref->text, *profile, pref->version};
  }

  std::vector<std::size_t> rescue(const std::vector<TrainSample>& batch,
                                  const std::vector<std::size_t>& cands, EpochStats& stats) {
    std::vector<ScoreRequest> requests;
    std::vector<char> complete(cands.size(), 1);
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const TrainSample& s = batch[cands[c]];
      auto a = request_for(s.user, s.item);
      std::optional<ScoreRequest> b;
      if (s.mode == TrainMode::Pairwise) b = request_for(s.user, s.neg_item);
      if (!a || (s.mode == TrainMode::Pairwise && !b)) {
        complete[c] = 0;
        ++stats.unscorable;
        continue;
      }
      requests.push_back(std::move(*a));
      if (b) {
        requests.push_back(std::move(*b));
      }
    }
    const auto scores = score_all(*ctx_.scorer, requests, cfg_.scorer_parallelism);

    const double eps_pos = epsilon_pos(iteration_, cfg_.schedule);
    const double eps_neg = epsilon_neg(iteration_, cfg_.schedule);
    const double eps_pair = epsilon_pair(iteration_, cfg_.schedule);
    std::vector<std::size_t> hard;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (!complete[c]) continue;
      const TrainSample& s = batch[cands[c]];
      const std::size_t n = s.mode == TrainMode::Pairwise ? 2 : 1;
      bool ok = true;
      for (std::size_t k = 0; k < n; ++k) {
        if (scores[r + k]) ++stats.scored;
        else {
          ++stats.scoring_failures;
          ok = false;
        }
      }
      if (ok) {
        const bool is_hard =
            s.mode == TrainMode::Pairwise
                ? identify_hard_pairwise(scores[r]->value, scores[r + 1]->value, eps_pair)
                : identify_hard_pointwise(scores[r]->value, s.label, eps_pos, eps_neg,
                                          cfg_.schedule.direction);
        if (is_hard) hard.push_back(cands[c]);
      }
      r += n;
    }
    return hard;
  }

  EpochStats run_epoch(int epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    double loss_sum = 0.0, trained_loss_sum = 0.0;
    auto batches = build_batches(data_, cfg_.mode, epoch, cfg_.seed, cfg_.batch_size);
    for (auto& batch : batches) {
      const auto losses = batch_losses(model_, batch);
      for (double l : losses) loss_sum += l;

      const long drop = cfg_.ablation.ld
                            ? std::min<long>(epsilon_l(iteration_, cfg_.schedule, cfg_.batch_size),
                                             static_cast<long>(batch.size()))
                            : 0;
      stats.drop_count = drop;
      BatchPartition part = partition_by_loss(losses, static_cast<std::size_t>(drop));
      if (!part.noisy.empty() && (cfg_.ablation.vs || cfg_.ablation.rs || cfg_.ablation.lms)) {
        part.hard_candidates = candidates(batch, part, stats);
        if (cfg_.ablation.lms && !part.hard_candidates.empty())
          part.hard = rescue(batch, part.hard_candidates, stats);
      }
      part.check(batch.size());
      const auto trained = assemble_training_set(batch.size(), part);

      stats.batch_samples += batch.size();
      stats.noisy += part.noisy.size();
      stats.hard_candidates += part.hard_candidates.size();
      stats.hard += part.hard.size();
      stats.trained += trained.size();
      if (planted_) {
        std::vector<char> planted(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) planted[k] = batch[k].planted ? 1 : 0;
        std::vector<std::size_t> dropped;
        std::set_difference(part.noisy.begin(), part.noisy.end(), part.hard.begin(),
                            part.hard.end(), std::back_inserter(dropped));
        const NoiseCounts c = denoise_quality(dropped, part.hard, planted);
        if (!stats.noise) stats.noise = NoiseCounts{};
        *stats.noise += c;
      }

      if (!trained.empty()) step(batch, losses, trained, trained_loss_sum);
      ++iteration_;
    }
    stats.iterations = iteration_;
    if (stats.batch_samples) stats.batch_loss = loss_sum / static_cast<double>(stats.batch_samples);
    if (stats.trained) stats.train_loss = trained_loss_sum / static_cast<double>(stats.trained);
    return stats;
  }

  void step(const std::vector<TrainSample>& batch, const std::vector<double>& losses,
            const std::vector<std::size_t>& trained, double& trained_loss_sum) {
    GradientSet grads = GradientSet::zeros_like(model_);
    const double scale = 1.0 / static_cast<double>(trained.size());
    std::vector<UserId> users;
    std::vector<ItemId> items;
    for (std::size_t idx : trained) {
      const TrainSample& s = batch[idx];
      trained_loss_sum += losses[idx];
      accumulate_sample_gradient(model_, s, scale, grads);
      users.push_back(s.user);
      items.push_back(s.item);
      if (s.mode == TrainMode::Pairwise) items.push_back(s.neg_item);
    }
    if (model_.uses_propagation()) grads = backprop_propagation(model_, graph_, grads);
    if (cfg_.l2 > 0) accumulate_l2(model_, users, items, cfg_.l2 * scale, grads);
    apply_gradients(model_, grads, cfg_.learning_rate, cfg_.optimizer);
  }

  void update_preferences(int epoch, EpochStats& stats) {
    const int t = history_.last_epoch();
    std::vector<PairVariance> pos, neg;
    for (std::size_t id : pos_ids_)
      if (auto v = history_.variance(id, t)) pos.push_back({history_.user(id), history_.item(id), *v});
    for (std::size_t id : neg_ids_)
      if (auto v = history_.variance(id, t)) neg.push_back({history_.user(id), history_.item(id), *v});
    const auto count = static_cast<std::size_t>(epsilon_l(iteration_, cfg_.schedule, cfg_.batch_size));
    const EpochFlags flags = detect_fp_fn(pos, neg, count);
    stats.fp_flags = flags.fp.size();
    stats.fn_flags = flags.fn.size();
    counters_.update(flags);
    const auto fp = counters_.take_confident(UpdateKind::FalsePositive, cfg_.schedule.eps_gamma);
    const auto fn = counters_.take_confident(UpdateKind::FalseNegative, cfg_.schedule.eps_gamma);
    if (fp.empty() && fn.empty()) return;
    auto log = apply_preference_updates(*ctx_.scorer, *store_, counters_, fp, fn, *ctx_.profiles, epoch);
    for (const auto& e : log)
      if (e.new_version > 0) ++stats.preference_updates;
    report_.preference_updates.insert(report_.preference_updates.end(), log.begin(), log.end());
  }

  RunConfig cfg_;
  const SplitDataset& data_;
  TrainContext ctx_;
  PreferenceStore own_store_;
  PreferenceStore* store_ = nullptr;
  bool planted_ = false;
  Model model_;
  InteractionGraph graph_;
  PredictionHistory history_;
  std::vector<std::size_t> pos_ids_, neg_ids_;
  ConfidenceCounters counters_;
  std::vector<int> ks_;
  long iteration_ = 0;
  RunReport report_;
};

}  // namespace

TrainResult train(const RunConfig& config, const SplitDataset& data, const TrainContext& context) {
  Run run(config, data, context);
  return run.run();
}

}  // namespace hdrec
