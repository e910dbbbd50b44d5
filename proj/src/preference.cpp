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

#include "hdrec/preference.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include <json.hpp>

namespace hdrec {

PreferenceStore::PreferenceStore(std::filesystem::path journal) : journal_(std::move(journal)) {
  if (std::ifstream in(*journal_); in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        throw ParseError("preference journal record is not JSON", lineno);
      }
      UserPreference p;
      p.user = j.at("user").get<UserId>();
      p.version = j.at("version").get<int>();
      p.text = j.at("text").get<std::string>();
      if (auto it = prefs_.find(p.user); it != prefs_.end()) p.history = it->second.history;
      if (j.contains("trigger") && !j["trigger"].is_null()) {
        const auto& t = j["trigger"];
        p.history.push_back({p.version, t.at("item").get<ItemId>(),
                             t.at("kind").get<std::string>() == "FP" ? UpdateKind::FalsePositive
                                                                     : UpdateKind::FalseNegative});
      }
      prefs_[p.user] = std::move(p);
    }
  }
  out_.open(*journal_, std::ios::app);
  if (!out_) throw Error("cannot open preference journal " + journal_->string());
}

const UserPreference* PreferenceStore::find(UserId user) const {
  auto it = prefs_.find(user);
  return it == prefs_.end() ? nullptr : &it->second;
}

void PreferenceStore::put(const UserPreference& pref) {
  if (auto it = prefs_.find(pref.user); it != prefs_.end() && pref.version <= it->second.version)
    throw ValidationError("preference versions must strictly increase");
  prefs_[pref.user] = pref;
  if (journal_) {
    nlohmann::json j{{"user", pref.user}, {"version", pref.version}, {"text", pref.text}};
    if (!pref.history.empty() && pref.history.back().version == pref.version)
      j["trigger"] = {{"item", pref.history.back().item},
                      {"kind", to_string(pref.history.back().kind)}};
    else
      j["trigger"] = nullptr;
    out_ << j.dump() << '\n';
    out_.flush();
  }
}

UserPreference summarize_preference(ScorerBackend& backend, UserId user,
                                    std::span<const ItemProfile> interacted) {
  if (interacted.empty()) throw ValidationError("summarize_preference needs at least one profile");
  UserPreference p;
  p.user = user;
  p.version = 1;
  p.text = backend.summarize(user, interacted);
  if (p.text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ScoringUnavailable("backend returned an empty preference summary");
  return p;
}

UserPreference update_preference(ScorerBackend& backend, const UserPreference& pref,
                                 const ItemProfile& item, UpdateKind kind) {
  UserPreference next = pref;
  next.text = backend.refine(pref.user, pref.text, item, kind);
  if (next.text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ScoringUnavailable("backend returned an empty preference");
  next.version = pref.version + 1;
  next.history.push_back({next.version, item.item, kind});
  return next;
}

namespace {

std::vector<std::pair<UserId, ItemId>> pick(std::span<const PairVariance> pairs, std::size_t count,
                                            bool largest) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return largest ? pairs[a].variance > pairs[b].variance : pairs[a].variance < pairs[b].variance;
  });
  std::vector<std::pair<UserId, ItemId>> out;
  for (std::size_t k = 0; k < std::min(count, order.size()); ++k)
    out.emplace_back(pairs[order[k]].user, pairs[order[k]].item);
  return out;
}

}  // namespace

EpochFlags detect_fp_fn(std::span<const PairVariance> positives,
                        std::span<const PairVariance> negatives, std::size_t count) {
  return {pick(positives, count, false), pick(negatives, count, true)};
}

void ConfidenceCounters::update(const EpochFlags& flags) {
  for (const auto& p : flags.fp) ++fp_[p].count;
  for (const auto& p : flags.fn) ++fn_[p].count;
}

std::vector<std::pair<UserId, ItemId>> ConfidenceCounters::take_confident(UpdateKind kind,
                                                                          int eps_gamma) {
  std::vector<std::pair<UserId, ItemId>> out;
  for (auto& [pair, e] : table(kind)) {
    if (e.consumed || e.count < eps_gamma) continue;
    e.consumed = true;
    out.push_back(pair);
  }
  return out;
}

bool ConfidenceCounters::requeue(UpdateKind kind, UserId user, ItemId item) {
  auto& t = table(kind);
  auto it = t.find({user, item});
  if (it == t.end() || !it->second.consumed || it->second.requeued) return false;
  it->second.consumed = false;
  it->second.requeued = true;
  return true;
}

int ConfidenceCounters::count(UpdateKind kind, UserId user, ItemId item) const {
  const auto& t = table(kind);
  auto it = t.find({user, item});
  return it == t.end() ? 0 : it->second.count;
}

bool ConfidenceCounters::consumed(UpdateKind kind, UserId user, ItemId item) const {
  const auto& t = table(kind);
  auto it = t.find({user, item});
  return it != t.end() && it->second.consumed;
}

std::vector<PreferenceUpdateLog> apply_preference_updates(
    ScorerBackend& backend, PreferenceStore& store, ConfidenceCounters& counters,
    std::span<const std::pair<UserId, ItemId>> fp, std::span<const std::pair<UserId, ItemId>> fn,
    const ProfileTable& profiles, int epoch) {
  std::vector<std::tuple<UserId, ItemId, int>> work;
  for (const auto& [u, i] : fp) work.emplace_back(u, i, 0);
  for (const auto& [u, i] : fn) work.emplace_back(u, i, 1);
  std::sort(work.begin(), work.end());

  std::vector<PreferenceUpdateLog> log;
  for (const auto& [u, i, k] : work) {
    const UpdateKind kind = k == 0 ? UpdateKind::FalsePositive : UpdateKind::FalseNegative;
    const UserPreference* current = store.find(u);
    const ItemProfile* profile = profiles.find(i);
    if (!current || !profile) continue;
    PreferenceUpdateLog entry{u, i, kind, epoch, 0, false};
    try {
      store.put(update_preference(backend, *current, *profile, kind));
      entry.new_version = store.find(u)->version;
    } catch (const ScoringUnavailable&) {
      entry.requeued = counters.requeue(kind, u, i);
    }
    log.push_back(entry);
  }
  return log;
}

}  // namespace hdrec
