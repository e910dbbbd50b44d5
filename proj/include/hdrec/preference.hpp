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

// Versioned user preference texts and their variance-driven refinement.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hdrec/scorer.hpp"

namespace hdrec {

struct PreferenceEvent {
  int version = 0;  // version produced by this update
  ItemId item = 0;
  UpdateKind kind = UpdateKind::FalsePositive;
};

struct UserPreference {
  UserId user = 0;
  std::string text;
  int version = 1;
  std::vector<PreferenceEvent> history;
};

// In-memory preferences with an optional append-only JSONL journal, one record per
// version: {"user", "version", "text", "trigger"}; trigger is null for the initial
// summary and {"item", "kind"} for updates. Reopening replays the journal.
class PreferenceStore {
 public:
  PreferenceStore() = default;
  explicit PreferenceStore(std::filesystem::path journal);

  const UserPreference* find(UserId user) const;
  // Stores pref and journals it. Versions must strictly increase per user.
  void put(const UserPreference& pref);
  std::size_t size() const { return prefs_.size(); }
  const std::map<UserId, UserPreference>& all() const { return prefs_; }

 private:
  std::optional<std::filesystem::path> journal_;
  std::ofstream out_;
  std::map<UserId, UserPreference> prefs_;
};

// Summarizes the user's interacted items into a version-1 preference.
// Backend failures propagate as ScoringUnavailable.
UserPreference summarize_preference(ScorerBackend& backend, UserId user,
                                    std::span<const ItemProfile> interacted);

// FalsePositive removes the item's characteristics from the text and FalseNegative
// adds them. Returns the refined preference at version + 1; pref is not modified.
UserPreference update_preference(ScorerBackend& backend, const UserPreference& pref,
                                 const ItemProfile& item, UpdateKind kind);

struct PairVariance {
  UserId user = 0;
  ItemId item = 0;
  double variance = 0.0;
};

struct EpochFlags {
  std::vector<std::pair<UserId, ItemId>> fp;
  std::vector<std::pair<UserId, ItemId>> fn;
};

// FP: the `count` positives with the smallest variance. FN: the `count` negatives
// with the largest variance. Ties keep input order.
EpochFlags detect_fp_fn(std::span<const PairVariance> positives,
                        std::span<const PairVariance> negatives, std::size_t count);

// Per-pair FP/FN flag counts accumulated over epochs.
class ConfidenceCounters {
 public:
  void update(const EpochFlags& flags);

  // Pairs whose count reached eps_gamma and were not yet handed out, sorted by
  // (user, item). Returned pairs are marked consumed.
  std::vector<std::pair<UserId, ItemId>> take_confident(UpdateKind kind, int eps_gamma);

  // Allows one more hand-out of a consumed pair after a failed update.
  bool requeue(UpdateKind kind, UserId user, ItemId item);

  int count(UpdateKind kind, UserId user, ItemId item) const;
  bool consumed(UpdateKind kind, UserId user, ItemId item) const;

 private:
  struct Entry {
    int count = 0;
    bool consumed = false;
    bool requeued = false;
  };
  std::map<std::pair<UserId, ItemId>, Entry>& table(UpdateKind kind) {
    return kind == UpdateKind::FalsePositive ? fp_ : fn_;
  }
  const std::map<std::pair<UserId, ItemId>, Entry>& table(UpdateKind kind) const {
    return kind == UpdateKind::FalsePositive ? fp_ : fn_;
  }
  std::map<std::pair<UserId, ItemId>, Entry> fp_, fn_;
};

struct PreferenceUpdateLog {
  UserId user = 0;
  ItemId item = 0;
  UpdateKind kind = UpdateKind::FalsePositive;
  int epoch = 0;
  int new_version = 0;  // 0 when the update failed
  bool requeued = false;
};

// Applies FP and FN refinements grouped per user, in (user, item, kind) order with
// one version bump per item. Users without a stored preference or items without a
// profile are skipped. A failed backend call leaves the preference unchanged and
// requeues the pair once.
std::vector<PreferenceUpdateLog> apply_preference_updates(
    ScorerBackend& backend, PreferenceStore& store, ConfidenceCounters& counters,
    std::span<const std::pair<UserId, ItemId>> fp, std::span<const std::pair<UserId, ItemId>> fn,
    const ProfileTable& profiles, int epoch);

}  // namespace hdrec
