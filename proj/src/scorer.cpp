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

#include "hdrec/scorer.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace hdrec {

Score score(ScorerBackend& backend, const ScoreRequest& request) {
  if (request.preference_version < 1) throw ValidationError("preference_version must be >= 1");
  const Score s = backend.score(request);
  if (s.value < 1 || s.value > 10)
    throw Error("backend '" + backend.name() + "' returned score " + std::to_string(s.value));
  return s;
}

std::vector<std::optional<Score>> score_all(ScorerBackend& backend,
                                            std::span<const ScoreRequest> requests,
                                            std::size_t parallelism) {
  std::vector<std::optional<Score>> out(requests.size());
  auto run_one = [&](std::size_t k) {
    try {
      out[k] = score(backend, requests[k]);
    } catch (const ScoringUnavailable&) {
      out[k] = std::nullopt;
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(parallelism, 1), requests.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < requests.size(); ++k) run_one(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < requests.size(); k = next++) run_one(k);
    });
  for (auto& t : pool) t.join();
  return out;
}

Score oracle_score(double affinity) {
  if (!(affinity >= 0.0 && affinity <= 1.0))
    throw ValidationError("affinity must be in [0, 1]");
  const int v = 1 + static_cast<int>(std::floor(affinity * 10.0));
  return Score{std::min(v, 10)};
}

Score OracleBackend::score(const ScoreRequest& request) {
  return oracle_score(affinity_(request.user, request.item));
}

namespace {

std::string bullet(const ItemProfile& item) { return "- " + item.title; }

}  // namespace

std::string OracleBackend::summarize(UserId, std::span<const ItemProfile> interacted) {
  if (interacted.empty()) throw ValidationError("summarize needs at least one item");
  std::string text = "Enjoys items like:";
  for (const auto& p : interacted) text += "\n" + bullet(p);
  return text;
}

std::string OracleBackend::refine(UserId, const std::string& preference_text,
                                  const ItemProfile& item, UpdateKind kind) {
  std::istringstream in(preference_text);
  std::string line, out;
  const std::string target = bullet(item);
  bool present = false;
  while (std::getline(in, line)) {
    if (line == target) {
      present = true;
      if (kind == UpdateKind::FalsePositive) continue;
    }
    if (!out.empty()) out += "\n";
    out += line;
  }
  if (kind == UpdateKind::FalseNegative && !present) out += "\n" + target;
  return out;
}

void EndpointConfig::validate() const {
  if (base_url.empty()) throw ValidationError("endpoint.base_url must be set");
  if (max_retries < 0) throw ValidationError("endpoint.max_retries must be >= 0");
  if (!(timeout_seconds > 0)) throw ValidationError("endpoint.timeout_seconds must be > 0");
  if (backoff_initial_seconds < 0)
    throw ValidationError("endpoint.backoff_initial_seconds must be >= 0");
}

RemoteBackend::RemoteBackend(EndpointConfig endpoint, PromptOptions prompts)
    : endpoint_(std::move(endpoint)), prompts_(prompts) {
  endpoint_.validate();
}

Score RemoteBackend::score(const ScoreRequest& request) {
  const auto prompt =
      render_score_prompt(request.preference_text, request.item_profile, prompts_);
  return parse_score_response(remote_call(endpoint_, prompt, &stats_));
}

std::string RemoteBackend::summarize(UserId, std::span<const ItemProfile> interacted) {
  const auto prompt = render_summary_prompt(interacted, prompts_);
  return parse_preference_response(remote_call(endpoint_, prompt, &stats_));
}

std::string RemoteBackend::refine(UserId, const std::string& preference_text,
                                  const ItemProfile& item, UpdateKind kind) {
  const auto prompt = render_update_prompt(preference_text, item, kind, prompts_);
  return parse_preference_response(remote_call(endpoint_, prompt, &stats_));
}

Score CachedBackend::score(const ScoreRequest& request) {
  if (auto hit = cache_.get(request.user, request.item, request.preference_version)) {
    ++hits_;
    return *hit;
  }
  ++inner_calls_;
  const Score s = inner_.score(request);
  cache_.put(request.user, request.item, request.preference_version, s);
  return s;
}

}  // namespace hdrec
