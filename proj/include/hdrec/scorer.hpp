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

// Preference scorer contract and its backends.
//
// A backend answers three kinds of request: summarize a user's interacted items
// into a preference text, score an item against a preference text on the 1-10
// scale, and refine a preference text given a false-positive or false-negative
// item. OracleBackend answers from planted affinities, RemoteBackend from an
// OpenAI-style chat endpoint, CachedBackend memoizes scores of another backend.

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hdrec/data.hpp"
#include "hdrec/prompts.hpp"

namespace hdrec {

struct ScoreRequest {
  UserId user = 0;
  ItemId item = 0;
  std::string preference_text;
  ItemProfile item_profile;
  int preference_version = 1;
};

class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;

  // Throws ScoringUnavailable when no score can be produced.
  virtual Score score(const ScoreRequest& request) = 0;
  virtual std::string summarize(UserId user, std::span<const ItemProfile> interacted) = 0;
  virtual std::string refine(UserId user, const std::string& preference_text,
                             const ItemProfile& item, UpdateKind kind) = 0;
  virtual std::string name() const = 0;
};

// Contract boundary: validates the request and the returned score.
Score score(ScorerBackend& backend, const ScoreRequest& request);

// Order-preserving scoring of many requests with up to `parallelism` in flight.
// Failed requests yield nullopt.
std::vector<std::optional<Score>> score_all(ScorerBackend& backend,
                                            std::span<const ScoreRequest> requests,
                                            std::size_t parallelism);

// 1 + floor(10 * affinity), clamped to 10. Throws ValidationError outside [0, 1].
Score oracle_score(double affinity);

using AffinityFn = std::function<double(UserId, ItemId)>;

// Deterministic backend for tests and synthetic experiments. Scores come from the
// planted affinity; the preference text is a bullet list of item titles, so FP
// refinement deletes the item's line and FN refinement appends it.
class OracleBackend : public ScorerBackend {
 public:
  explicit OracleBackend(AffinityFn affinity) : affinity_(std::move(affinity)) {}

  Score score(const ScoreRequest& request) override;
  std::string summarize(UserId user, std::span<const ItemProfile> interacted) override;
  std::string refine(UserId user, const std::string& preference_text, const ItemProfile& item,
                     UpdateKind kind) override;
  std::string name() const override { return "oracle"; }

 private:
  AffinityFn affinity_;
};

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string path = "/v1/chat/completions";
  std::string model_name = "gpt-3.5-turbo";
  double temperature = 0.0;
  double timeout_seconds = 30.0;
  int max_retries = 3;
  double backoff_initial_seconds = 0.5;  // doubles after every failed attempt
  std::string auth_env = "OPENAI_API_KEY";

  void validate() const;
};

struct RemoteStats {
  std::atomic<std::size_t> calls{0};      // remote_call invocations
  std::atomic<std::size_t> attempts{0};   // HTTP attempts including retries
  std::atomic<std::size_t> successes{0};
  std::atomic<std::size_t> failures{0};
};

// POSTs {model, messages, temperature} and returns choices[0].message.content.
// Timeouts and 5xx replies are retried with exponential backoff up to
// max_retries times; exhaustion throws TransportError, a non-JSON or malformed
// reply throws ProtocolError.
std::string remote_call(const EndpointConfig& endpoint, const std::string& prompt,
                        RemoteStats* stats = nullptr);

class RemoteBackend : public ScorerBackend {
 public:
  explicit RemoteBackend(EndpointConfig endpoint, PromptOptions prompts = {});

  Score score(const ScoreRequest& request) override;
  std::string summarize(UserId user, std::span<const ItemProfile> interacted) override;
  std::string refine(UserId user, const std::string& preference_text, const ItemProfile& item,
                     UpdateKind kind) override;
  std::string name() const override { return "remote"; }

  const RemoteStats& stats() const { return stats_; }

 private:
  EndpointConfig endpoint_;
  PromptOptions prompts_;
  RemoteStats stats_;
};

// Persistent (user, item, preference_version) -> score records, one JSON object
// per line: {"user", "item", "pref_version", "score", "timestamp"}.
class ScoreCache {
 public:
  ScoreCache() = default;  // in-memory only
  explicit ScoreCache(std::filesystem::path path);

  std::optional<Score> get(UserId user, ItemId item, int preference_version) const;
  void put(UserId user, ItemId item, int preference_version, Score score);

  std::size_t size() const;
  std::size_t corrupted() const { return corrupted_; }

 private:
  using Key = std::tuple<UserId, ItemId, int>;
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::map<Key, int> entries_;
  std::ofstream out_;
  std::size_t corrupted_ = 0;
};

class CachedBackend : public ScorerBackend {
 public:
  CachedBackend(ScorerBackend& inner, ScoreCache& cache) : inner_(inner), cache_(cache) {}

  Score score(const ScoreRequest& request) override;
  std::string summarize(UserId user, std::span<const ItemProfile> interacted) override {
    return inner_.summarize(user, interacted);
  }
  std::string refine(UserId user, const std::string& preference_text, const ItemProfile& item,
                     UpdateKind kind) override {
    return inner_.refine(user, preference_text, item, kind);
  }
  std::string name() const override { return "cached-" + inner_.name(); }

  std::size_t hits() const { return hits_; }
  std::size_t inner_calls() const { return inner_calls_; }

 private:
  ScorerBackend& inner_;
  ScoreCache& cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> inner_calls_{0};
};

}  // namespace hdrec
