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

// Denoising training loop.
//
// Per mini-batch: losses, loss-ranked noisy flagging (LD), variance pruning of
// the flagged samples (VS) or a random subset of the same size (RS), scorer-based
// rescue of the candidates (LMS), and one optimizer step on the clean plus rescued
// samples. Per epoch: propagation refresh, prediction history, false-positive and
// false-negative preference updates (PU), validation and early stopping.

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdrec/backbone.hpp"
#include "hdrec/data.hpp"
#include "hdrec/denoise.hpp"
#include "hdrec/eval.hpp"
#include "hdrec/loss.hpp"
#include "hdrec/preference.hpp"
#include "hdrec/scorer.hpp"

namespace hdrec {

struct Ablation {
  bool ld = true;   // loss-based noisy flagging
  bool vs = true;   // variance-based candidate pruning
  bool rs = false;  // random candidate selection instead of vs
  bool lms = true;  // scorer-based rescue
  bool pu = true;   // preference updating

  // Comma-separated subset of LD,VS,RS,LMS,PU; "none" or "" turns everything off.
  static Ablation parse(const std::string& text);
  std::string to_string() const;
  void validate() const;
  bool operator==(const Ablation&) const = default;
};

struct RunConfig {
  TrainMode mode = TrainMode::Pairwise;
  BackboneKind backbone = BackboneKind::MF;
  std::size_t dim = 64;
  int layers = 2;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 0.005;
  double l2 = 1e-4;
  std::size_t batch_size = 1024;
  int max_epochs = 200;
  int early_stop_patience = 10;
  std::uint64_t seed = 1;
  ScheduleConfig schedule;
  Ablation ablation;
  std::size_t scorer_parallelism = 4;
  std::size_t summary_items = 20;  // interacted items per preference summary
  std::vector<int> ks{5, 10};

  void validate() const;
};

// One sample per train positive (pairwise, with its fixed negative) or the positive
// plus its fixed negative as a label-0 sample (pointwise), shuffled with a seed
// derived from (seed, epoch) and cut into batches of batch_size.
std::vector<std::vector<TrainSample>> build_batches(const SplitDataset& data, TrainMode mode,
                                                    int epoch, std::uint64_t seed,
                                                    std::size_t batch_size);

struct EpochStats {
  int epoch = 0;
  long iterations = 0;     // global iteration counter T after the epoch
  long drop_count = 0;     // eps_l at the epoch's last batch
  double batch_loss = 0.0; // mean loss over every batch sample
  double train_loss = 0.0; // mean loss over trained samples
  std::size_t batch_samples = 0;
  std::size_t noisy = 0;
  std::size_t hard_candidates = 0;
  std::size_t hard = 0;
  std::size_t trained = 0;
  std::size_t not_ready = 0;         // noisy samples without a full variance window
  std::size_t scored = 0;            // scorer requests answered
  std::size_t scoring_failures = 0;  // scorer requests that failed
  std::size_t unscorable = 0;        // candidates without a preference or profile
  std::optional<NoiseCounts> noise;  // when train carries planted flags
  std::size_t fp_flags = 0;
  std::size_t fn_flags = 0;
  std::size_t preference_updates = 0;
  std::map<int, double> valid_recall;
  std::map<int, double> valid_ndcg;
};

struct RunReport {
  RunConfig config;
  std::vector<EpochStats> epochs;
  std::vector<PreferenceUpdateLog> preference_updates;
  std::size_t summarized_users = 0;
  std::size_t summary_failures = 0;
  int best_epoch = 0;
  double best_valid_ndcg10 = 0.0;
  bool stopped_early = false;
  std::optional<MetricsResult> test;
  std::optional<NoiseCounts> noise_total;
};

nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const EpochStats& stats);
nlohmann::json to_json(const MetricsResult& metrics, bool per_user = false);
nlohmann::json to_json(const RunReport& report);

struct TrainHooks {
  // After the epoch-end refresh and validation, before the report callback.
  std::function<void(const Model&, int epoch)> on_epoch_end;
  // After every epoch and once more after final test evaluation.
  std::function<void(const RunReport&)> on_report;
};

struct TrainContext {
  const ProfileTable* profiles = nullptr;  // required by LMS and PU
  ScorerBackend* scorer = nullptr;         // required by LMS and PU
  PreferenceStore* preferences = nullptr;  // optional; an in-memory store otherwise
  TrainHooks hooks;
};

struct TrainResult {
  Model model;       // best model by validation NDCG@10
  RunReport report;
};

TrainResult train(const RunConfig& config, const SplitDataset& data, const TrainContext& context);

}  // namespace hdrec
