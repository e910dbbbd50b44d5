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

// JSON run configuration with sections data, model, train, schedule, scorer,
// endpoint and output. Unknown keys are rejected by their dotted name.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "hdrec/scorer.hpp"
#include "hdrec/synth.hpp"
#include "hdrec/trainer.hpp"

namespace hdrec {

enum class ScorerKind { Oracle, Remote, CachedRemote };

std::string to_string(ScorerKind kind);
ScorerKind scorer_from_string(const std::string& s);

struct DataConfig {
  // Either a synthetic world or interaction/profile files.
  std::optional<WorldConfig> synthetic;
  std::optional<std::uint64_t> world_seed;  // data_seed() when unset
  std::string interactions;
  std::string profiles;
  char delimiter = '\t';
  std::optional<int> min_rating;
  int kcore = 0;  // 0 disables the filter
  SplitRatios split;
  std::optional<std::uint64_t> split_seed;  // derived from train.seed when unset
  ShortUserPolicy short_users = ShortUserPolicy::KeepInTrain;
  double noise_ratio = 0.0;
  NoiseSource noise_source = NoiseSource::RatedBelow3;
};

struct ScorerConfig {
  ScorerKind kind = ScorerKind::Oracle;
  std::size_t parallelism = 4;
  std::string cache_path;  // cached-remote only; empty keeps the cache in memory
  std::size_t max_description_chars = 600;
};

struct ExperimentConfig {
  DataConfig data;
  RunConfig run;
  ScorerConfig scorer;
  EndpointConfig endpoint;
  std::string output_dir = "runs/default";

  void validate() const;
  // split_seed, or a seed derived from train.seed. Drives the split, the noise
  // draw and, unless data.synthetic.seed is set, the synthetic world.
  std::uint64_t data_seed() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace hdrec
