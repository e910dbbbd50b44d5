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

#include "hdrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace hdrec {

namespace {

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delimiter)) out.push_back(field);
  if (!line.empty() && line.back() == delimiter) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Accepts "4" and integral decimals such as "4.0".
std::optional<int> parse_rating(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  if (!std::isfinite(value) || value != std::floor(value)) return std::nullopt;
  return static_cast<int>(value);
}

}  // namespace

std::size_t Dataset::positive_count() const {
  return static_cast<std::size_t>(std::count_if(interactions.begin(), interactions.end(),
                                                [](const Interaction& x) { return x.label == 1; }));
}

std::size_t Dataset::planted_count() const {
  return static_cast<std::size_t>(std::count_if(
      interactions.begin(), interactions.end(), [](const Interaction& x) { return x.is_planted(); }));
}

std::vector<std::vector<ItemId>> Dataset::positives_by_user() const {
  std::vector<std::vector<ItemId>> out(user_count);
  for (const auto& x : interactions)
    if (x.label == 1) out.at(x.user).push_back(x.item);
  return out;
}

void Dataset::validate() const {
  std::unordered_set<std::uint64_t> seen;
  for (const auto& x : interactions) {
    if (x.user >= user_count || x.item >= item_count)
      throw ValidationError("interaction (" + std::to_string(x.user) + ", " +
                            std::to_string(x.item) + ") outside declared counts");
    if (x.label != 0 && x.label != 1) throw ValidationError("label must be 0 or 1");
    if (x.label == 1 && !seen.insert(pair_key(x.user, x.item)).second)
      throw ValidationError("duplicate positive (" + std::to_string(x.user) + ", " +
                            std::to_string(x.item) + ")");
  }
}

std::uint32_t IdMap::get_or_add(const std::string& original) {
  auto [it, inserted] = index_.try_emplace(original, static_cast<std::uint32_t>(originals_.size()));
  if (inserted) originals_.push_back(original);
  return it->second;
}

std::optional<std::uint32_t> IdMap::find(const std::string& original) const {
  auto it = index_.find(original);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void IdMap::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write id map " + path.string());
  for (std::size_t i = 0; i < originals_.size(); ++i) out << originals_[i] << '\t' << i << '\n';
}

IdMap IdMap::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open id map " + path.string());
  IdMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 2) throw ParseError("id map line needs 2 columns", lineno);
    std::uint32_t dense = 0;
    const auto& d = fields[1];
    const auto [ptr, ec] = std::from_chars(d.data(), d.data() + d.size(), dense);
    if (ec != std::errc() || ptr != d.data() + d.size() || dense != map.size())
      throw ParseError("id map indices must be dense and ordered", lineno);
    map.get_or_add(fields[0]);
  }
  return map;
}

LoadedInteractions load_interactions(const std::filesystem::path& path,
                                     const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open interactions file " + path.string());

  LoadedInteractions out;
  std::vector<Interaction> rows;
  std::unordered_map<std::uint64_t, std::size_t> row_of;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, options.delimiter);
    if (fields.size() < 3 || fields.size() > 4)
      throw ParseError("expected user, item, rating[, timestamp]", lineno);
    const std::string user_s = trim(fields[0]);
    const std::string item_s = trim(fields[1]);
    if (user_s.empty() || item_s.empty()) throw ParseError("empty identifier", lineno);
    const auto rating = parse_rating(fields[2]);
    if (!rating) throw ParseError("rating is not an integer", lineno);
    if (*rating < 1 || *rating > 5) throw ParseError("rating outside 1-5", lineno);

    const UserId u = out.users.get_or_add(user_s);
    const ItemId i = out.items.get_or_add(item_s);
    auto [it, inserted] = row_of.try_emplace(pair_key(u, i), rows.size());
    if (inserted) {
      Interaction x;
      x.user = u;
      x.item = i;
      x.rating = *rating;
      rows.push_back(x);
    } else {
      auto& kept = rows[it->second];
      kept.rating = std::max(*kept.rating, *rating);
    }
  }

  out.kept.user_count = out.below_min.user_count = out.users.size();
  out.kept.item_count = out.below_min.item_count = out.items.size();
  for (auto& x : rows) {
    if (options.min_rating && *x.rating < *options.min_rating)
      out.below_min.interactions.push_back(x);
    else
      out.kept.interactions.push_back(x);
  }
  if (out.kept.empty()) throw EmptyDatasetError("no interactions left in " + path.string());
  return out;
}

void write_interactions(const std::filesystem::path& path, const Dataset& data,
                        const IdMap& users, const IdMap& items, char delimiter) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& x : data.interactions) {
    out << users.original(x.user) << delimiter << items.original(x.item) << delimiter
        << x.rating.value_or(x.label == 1 ? 5 : 1) << '\n';
  }
}

Dataset kcore_filter(const Dataset& data, int k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  std::vector<char> alive(data.interactions.size(), 1);
  std::vector<std::size_t> user_deg(data.user_count, 0), item_deg(data.item_count, 0);
  for (const auto& x : data.interactions) {
    ++user_deg.at(x.user);
    ++item_deg.at(x.item);
  }
  const auto kk = static_cast<std::size_t>(k);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t n = 0; n < data.interactions.size(); ++n) {
      if (!alive[n]) continue;
      const auto& x = data.interactions[n];
      if (user_deg[x.user] < kk || item_deg[x.item] < kk) {
        alive[n] = 0;
        --user_deg[x.user];
        --item_deg[x.item];
        changed = true;
      }
    }
  }
  Dataset out;
  out.user_count = data.user_count;
  out.item_count = data.item_count;
  for (std::size_t n = 0; n < data.interactions.size(); ++n)
    if (alive[n]) out.interactions.push_back(data.interactions[n]);
  if (out.empty()) throw EmptyDatasetError("k-core filter with k=" + std::to_string(k) +
                                           " removed every interaction");
  return out;
}

std::optional<ItemId> NegativeAssignment::get(UserId user, ItemId positive) const {
  auto it = map_.find(pair_key(user, positive));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

ItemId NegativeAssignment::at(UserId user, ItemId positive) const {
  auto v = get(user, positive);
  if (!v)
    throw Error("no negative assigned for (" + std::to_string(user) + ", " +
                std::to_string(positive) + ")");
  return *v;
}

SplitDataset split(const Dataset& data, const SplitRatios& ratios, std::uint64_t seed,
                   ShortUserPolicy policy) {
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9)
    throw ValidationError("split ratios must be nonnegative and sum to 1");

  // Positions of each user's positives, in dataset order.
  std::vector<std::vector<std::size_t>> by_user(data.user_count);
  for (std::size_t n = 0; n < data.interactions.size(); ++n)
    if (data.interactions[n].label == 1) by_user.at(data.interactions[n].user).push_back(n);

  SplitDataset out;
  for (Dataset* d : {&out.train, &out.valid, &out.test}) {
    d->user_count = data.user_count;
    d->item_count = data.item_count;
  }
  const bool needs_three = ratios.valid > 0 || ratios.test > 0;
  for (UserId u = 0; u < by_user.size(); ++u) {
    auto& rows = by_user[u];
    if (rows.empty()) continue;
    Rng rng(mix_seed(seed, u));
    std::shuffle(rows.begin(), rows.end(), rng);
    const std::size_t n = rows.size();
    if (needs_three && n < 3) {
      if (policy == ShortUserPolicy::Fail)
        throw ValidationError("user " + std::to_string(u) + " has " + std::to_string(n) +
                              " positives; at least 3 are needed to split");
      ++out.short_users;
      for (auto r : rows) out.train.interactions.push_back(data.interactions[r]);
      continue;
    }
    const auto n_valid = static_cast<std::size_t>(std::floor(n * ratios.valid + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
    const std::size_t n_train = n - n_valid - n_test;
    for (std::size_t j = 0; j < n; ++j) {
      Dataset& dst = j < n_train ? out.train : (j < n_train + n_valid ? out.valid : out.test);
      dst.interactions.push_back(data.interactions[rows[j]]);
    }
  }
  assign_negatives(out, mix_seed(seed, 0x6e6567));
  return out;
}

void assign_negatives(SplitDataset& s, std::uint64_t seed) {
  const std::size_t items = s.train.item_count;
  std::vector<std::unordered_set<ItemId>> interacted(s.train.user_count);
  for (const Dataset* d : {&s.train, &s.valid, &s.test})
    for (const auto& x : d->interactions)
      if (x.label == 1) interacted.at(x.user).insert(x.item);

  NegativeAssignment fresh;
  for (std::size_t n = 0; n < s.train.interactions.size(); ++n) {
    const auto& x = s.train.interactions[n];
    if (x.label != 1) continue;
    const auto& seen = interacted[x.user];
    if (seen.size() >= items)
      throw ValidationError("user " + std::to_string(x.user) + " has no non-interacted item");
    if (auto prev = s.negatives.get(x.user, x.item); prev && !seen.count(*prev)) {
      fresh.set(x.user, x.item, *prev);
      continue;
    }
    Rng rng(mix_seed(seed, pair_key(x.user, x.item)));
    std::uniform_int_distribution<ItemId> pick(0, static_cast<ItemId>(items - 1));
    ItemId j = pick(rng);
    while (seen.count(j)) j = pick(rng);
    fresh.set(x.user, x.item, j);
  }
  s.negatives = std::move(fresh);
}

Dataset inject_noise(const Dataset& train, double ratio, NoiseSource source,
                     const Dataset& pool, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 0.5)) throw ValidationError("noise ratio must be in [0, 0.5]");
  Dataset out = train;
  const auto want =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(train.positive_count()) + 1e-9));
  if (want == 0) return out;

  std::unordered_set<std::uint64_t> taken;
  for (const auto& x : train.interactions) taken.insert(pair_key(x.user, x.item));

  std::vector<Interaction> candidates;
  std::unordered_set<std::uint64_t> cand_keys;
  for (const auto& x : pool.interactions) {
    if (source == NoiseSource::RatedBelow3) {
      if (!x.rating) throw ValidationError("rated_below_3 noise needs rating data in the pool");
      if (*x.rating >= 3) continue;
    }
    if (x.user >= train.user_count || x.item >= train.item_count) continue;
    const auto key = pair_key(x.user, x.item);
    if (taken.count(key) || !cand_keys.insert(key).second) continue;
    candidates.push_back(x);
  }
  if (candidates.size() < want)
    throw ValidationError("noise pool has " + std::to_string(candidates.size()) +
                          " candidates but " + std::to_string(want) + " are needed (shortfall " +
                          std::to_string(want - candidates.size()) + ")");

  Rng rng(seed);
  // Partial Fisher-Yates: the first `want` slots become the sample.
  for (std::size_t j = 0; j < want; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, candidates.size() - 1);
    std::swap(candidates[j], candidates[pick(rng)]);
    Interaction x = candidates[j];
    x.label = 1;
    x.planted_noise = true;
    out.interactions.push_back(x);
  }
  return out;
}

void add_noise(SplitDataset& s, double ratio, NoiseSource source, const Dataset& pool,
               std::uint64_t seed) {
  std::unordered_set<std::uint64_t> held_out;
  for (const Dataset* d : {&s.valid, &s.test})
    for (const auto& x : d->interactions) held_out.insert(pair_key(x.user, x.item));
  Dataset filtered;
  filtered.user_count = pool.user_count;
  filtered.item_count = pool.item_count;
  for (const auto& x : pool.interactions)
    if (!held_out.count(pair_key(x.user, x.item))) filtered.interactions.push_back(x);

  s.train = inject_noise(s.train, ratio, source, filtered, seed);
  assign_negatives(s, mix_seed(seed, 0x6e6567));
}

const ItemProfile* ProfileTable::find(ItemId item) const {
  auto it = profiles.find(item);
  return it == profiles.end() ? nullptr : &it->second;
}

ProfileTable load_item_profiles(const std::filesystem::path& path, const IdMap& items,
                                std::size_t item_count) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open profile file " + path.string());
  ProfileTable table;
  std::string line;
  std::size_t lineno = 0, record = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ++record;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("profile record is not JSON: ") + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("item_id") || !j.contains("title"))
      throw ParseError("profile record " + std::to_string(record) + " needs item_id and title",
                       lineno);
    const auto& id = j["item_id"];
    const std::string original = id.is_string() ? id.get<std::string>() : id.dump();
    if (!j["title"].is_string() || trim(j["title"].get<std::string>()).empty())
      throw ParseError("profile record " + std::to_string(record) + " has an empty title", lineno);
    const auto dense = items.find(original);
    if (!dense) {
      ++table.unknown;
      continue;
    }
    ItemProfile p;
    p.item = *dense;
    p.title = j["title"].get<std::string>();
    if (j.contains("description") && j["description"].is_string())
      p.description = j["description"].get<std::string>();
    table.profiles[p.item] = std::move(p);
  }
  for (ItemId i = 0; i < item_count; ++i)
    if (!table.profiles.count(i)) table.missing.push_back(i);
  return table;
}

void write_item_profiles(const std::filesystem::path& path, const ProfileTable& table,
                         const IdMap& items) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [item, p] : table.profiles) {
    nlohmann::json j{{"item_id", items.original(item)},
                     {"title", p.title},
                     {"description", p.description}};
    out << j.dump() << '\n';
  }
}

}  // namespace hdrec
