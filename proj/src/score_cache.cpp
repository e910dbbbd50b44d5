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

#include <iostream>

#include <json.hpp>

#include "hdrec/scorer.hpp"

namespace hdrec {

ScoreCache::ScoreCache(std::filesystem::path path) : path_(std::move(path)) {
  if (std::ifstream in(*path_); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        const int v = j.at("score").get<int>();
        const int version = j.at("pref_version").get<int>();
        if (v < 1 || v > 10 || version < 1) throw std::out_of_range("score record out of range");
        entries_[{j.at("user").get<UserId>(), j.at("item").get<ItemId>(), version}] = v;
      } catch (const std::exception&) {
        ++corrupted_;
      }
    }
  }
  if (corrupted_ > 0)
    std::cerr << "score cache " << path_->string() << ": skipped " << corrupted_
              << " corrupted record(s)\n";
  out_.open(*path_, std::ios::app);
  if (!out_) throw Error("cannot open score cache " + path_->string());
}

std::optional<Score> ScoreCache::get(UserId user, ItemId item, int preference_version) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find({user, item, preference_version});
  if (it == entries_.end()) return std::nullopt;
  return Score{it->second};
}

void ScoreCache::put(UserId user, ItemId item, int preference_version, Score score) {
  std::unique_lock lock(mutex_);
  entries_[{user, item, preference_version}] = score.value;
  if (path_) {
    const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    nlohmann::json j{{"user", user},
                     {"item", item},
                     {"pref_version", preference_version},
                     {"score", score.value},
                     {"timestamp", now}};
    out_ << j.dump() << '\n';
    out_.flush();
  }
}

std::size_t ScoreCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace hdrec
