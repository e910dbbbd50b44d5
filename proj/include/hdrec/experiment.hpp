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

// Config-driven runs: data preparation, scorer construction, run directories,
// noise sweeps and pattern traces.
//
// A run directory holds config.json (the effective config), report.json
// (rewritten after every epoch), epochs.csv, checkpoint.bin (best model),
// preferences.jsonl when a scorer is used, and timing.json. Wall-clock time lives
// only in timing.json so that reruns produce identical reports.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hdrec/config.hpp"
#include "hdrec/eval.hpp"
#include "hdrec/synth.hpp"
#include "hdrec/trainer.hpp"

namespace hdrec {

struct PreparedData {
  SplitDataset split;
  ProfileTable profiles;
  std::optional<SyntheticWorld> world;
  IdMap users;
  IdMap items;
};

PreparedData prepare_data(const ExperimentConfig& config);

// Owns the backend chain selected by config.scorer.
struct ScorerBundle {
  std::unique_ptr<ScorerBackend> inner;
  std::unique_ptr<ScoreCache> cache;
  std::unique_ptr<ScorerBackend> outer;
  const RemoteStats* remote = nullptr;

  ScorerBackend* backend() const { return outer ? outer.get() : inner.get(); }
};

// The oracle needs data.world; its lifetime must cover the bundle's.
ScorerBundle make_scorer(const ExperimentConfig& config, const PreparedData& data);

struct RunOutcome {
  TrainResult result;
  std::size_t remote_calls = 0;
  std::size_t remote_successes = 0;

  // A remote endpoint was used and never answered successfully.
  bool remote_failed() const { return remote_calls > 0 && remote_successes == 0; }
};

// Trains with config and writes the run directory (created if needed).
RunOutcome run_experiment(const ExperimentConfig& config, const std::filesystem::path& dir,
                          const TrainHooks& hooks = {});

// Named ablation presets: vanilla, ld, ld_rs_lms, ld_vs_lms, llmhd.
Ablation preset_ablation(const std::string& name);

struct SweepOptions {
  std::vector<double> ratios{0.05, 0.10, 0.15, 0.20};
  int seeds = 5;
  std::uint64_t first_seed = 1;
  // Preset names; empty runs the config's own ablation under the name "config".
  std::vector<std::string> methods;
  std::size_t workers = 1;
};

struct SweepRow {
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::string method;
  std::map<int, double> recall;
  std::map<int, double> ndcg;
  std::optional<NoiseCounts> noise;
  int best_epoch = 0;
};

// One run per (ratio, seed, method) under dir/ratio_<r>/seed_<s>/<method>, plus
// dir/summary.csv. Rows come back in (ratio, seed, method) order.
std::vector<SweepRow> noise_sweep(const ExperimentConfig& config, const SweepOptions& options,
                                  const std::filesystem::path& dir);

// Trains with config while recording per-class loss and score every epoch; writes
// dir/trace.csv and returns its rows.
std::vector<TraceRow> run_trace(const ExperimentConfig& config, std::span<const int> d_values,
                                std::size_t per_class, const std::filesystem::path& dir);

// Metrics of a checkpoint on the valid or test split rebuilt from config.
MetricsResult evaluate_checkpoint(const ExperimentConfig& config,
                                  const std::filesystem::path& checkpoint,
                                  const std::string& split_name, std::span<const int> ks);

struct IngestSummary {
  std::size_t interactions = 0;
  std::size_t below_min = 0;
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t profiles = 0;
  std::size_t missing_profiles = 0;
};

// Loads, filters and re-writes a dataset with its id maps under out.
IngestSummary ingest(const std::filesystem::path& interactions, const std::filesystem::path& profiles,
                     std::optional<int> min_rating, int kcore, char delimiter,
                     const std::filesystem::path& out);

}  // namespace hdrec
