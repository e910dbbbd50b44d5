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

#include "hdrec/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace hdrec {

std::string to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::Oracle: return "oracle";
    case ScorerKind::Remote: return "remote";
    case ScorerKind::CachedRemote: return "cached-remote";
  }
  return "?";
}

ScorerKind scorer_from_string(const std::string& s) {
  if (s == "oracle") return ScorerKind::Oracle;
  if (s == "remote") return ScorerKind::Remote;
  if (s == "cached-remote") return ScorerKind::CachedRemote;
  throw ValidationError("unknown scorer '" + s + "' (oracle, remote, cached-remote)");
}

namespace {

// Reads the keys of one JSON object; whatever is left over at finish() is unknown.
class Section {
 public:
  Section(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ValidationError("config section '" + name_ + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config key '" + path(key) + "' has the wrong type");
    }
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!j_.contains(key)) return;
    T v{};
    get(key, v);
    out = v;
  }

  const nlohmann::json& child(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ValidationError("unknown config key '" + path(key) + "'");
  }

 private:
  const nlohmann::json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

template <typename F>
void with_section(Section& parent, const std::string& key, F&& f) {
  if (!parent.has(key)) return;
  Section s(parent.child(key), parent.path(key));
  f(s);
  s.finish();
}

std::string noise_source_name(NoiseSource s) {
  return s == NoiseSource::RatedBelow3 ? "rated_below_3" : "synthetic_low_affinity";
}

}  // namespace

void ExperimentConfig::validate() const {
  run.validate();
  endpoint.validate();
  const bool files = !data.interactions.empty();
  if (data.synthetic.has_value() == files)
    throw ValidationError("data needs exactly one of 'synthetic' or 'interactions'");
  if (data.synthetic) data.synthetic->validate();
  const double sum = data.split.train + data.split.valid + data.split.test;
  if (std::abs(sum - 1.0) > 1e-9 || data.split.train < 0 || data.split.valid < 0 ||
      data.split.test < 0)
    throw ValidationError("data.split ratios must be nonnegative and sum to 1");
  if (!(data.noise_ratio >= 0 && data.noise_ratio <= 0.5))
    throw ValidationError("data.noise_ratio must be in [0, 0.5]");
  if (data.kcore < 0) throw ValidationError("data.kcore must be >= 0");
  if (data.synthetic && data.noise_source != NoiseSource::SyntheticLowAffinity && data.noise_ratio > 0)
    throw ValidationError("synthetic data plants noise from the low-affinity pool");
  if (!data.synthetic && data.noise_source == NoiseSource::SyntheticLowAffinity)
    throw ValidationError("synthetic_low_affinity noise needs a synthetic world");
  if (scorer.kind == ScorerKind::Oracle && !data.synthetic && (run.ablation.lms || run.ablation.pu))
    throw ValidationError("the oracle scorer needs a synthetic world");
  if (scorer.parallelism < 1) throw ValidationError("scorer.parallelism must be >= 1");
}

std::uint64_t ExperimentConfig::data_seed() const {
  return data.split_seed.value_or(mix_seed(run.seed, 0x64617461));
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  Section root(j, "");
  with_section(root, "data", [&](Section& s) {
    if (s.has("synthetic")) {
      WorldConfig w;
      Section ws(s.child("synthetic"), "data.synthetic");
      ws.get("users", w.users);
      ws.get("items", w.items);
      ws.get("dim", w.dim);
      ws.get("positives_per_user", w.positives_per_user);
      ws.get("affinity_scale", w.affinity_scale);
      ws.get("jitter", w.jitter);
      ws.get("seed", c.data.world_seed);
      ws.finish();
      c.data.synthetic = w;
      c.data.noise_source = NoiseSource::SyntheticLowAffinity;
    }
    s.get("interactions", c.data.interactions);
    s.get("profiles", c.data.profiles);
    std::string delim;
    s.get("delimiter", delim);
    if (!delim.empty()) {
      if (delim == "\\t") delim = "\t";
      if (delim.size() != 1) throw ValidationError("data.delimiter must be one character");
      c.data.delimiter = delim[0];
    }
    s.get("min_rating", c.data.min_rating);
    s.get("kcore", c.data.kcore);
    std::vector<double> ratios;
    s.get("split", ratios);
    if (!ratios.empty()) {
      if (ratios.size() != 3) throw ValidationError("data.split must list three ratios");
      c.data.split = {ratios[0], ratios[1], ratios[2]};
    }
    s.get("split_seed", c.data.split_seed);
    std::string short_users;
    s.get("short_users", short_users);
    if (short_users == "fail") c.data.short_users = ShortUserPolicy::Fail;
    else if (!short_users.empty() && short_users != "keep")
      throw ValidationError("data.short_users must be 'keep' or 'fail'");
    s.get("noise_ratio", c.data.noise_ratio);
    std::string source;
    s.get("noise_source", source);
    if (source == "rated_below_3") c.data.noise_source = NoiseSource::RatedBelow3;
    else if (source == "synthetic_low_affinity") c.data.noise_source = NoiseSource::SyntheticLowAffinity;
    else if (!source.empty()) throw ValidationError("unknown data.noise_source '" + source + "'");
  });
  with_section(root, "model", [&](Section& s) {
    std::string backbone, optimizer;
    s.get("backbone", backbone);
    if (!backbone.empty()) c.run.backbone = backbone_from_string(backbone);
    s.get("dim", c.run.dim);
    s.get("layers", c.run.layers);
    s.get("optimizer", optimizer);
    if (!optimizer.empty()) c.run.optimizer = optimizer_from_string(optimizer);
    s.get("learning_rate", c.run.learning_rate);
    s.get("l2", c.run.l2);
  });
  with_section(root, "train", [&](Section& s) {
    std::string mode, ablation;
    s.get("mode", mode);
    if (!mode.empty()) c.run.mode = train_mode_from_string(mode);
    s.get("batch_size", c.run.batch_size);
    s.get("max_epochs", c.run.max_epochs);
    s.get("early_stop_patience", c.run.early_stop_patience);
    s.get("seed", c.run.seed);
    if (s.has("ablation")) {
      s.get("ablation", ablation);
      c.run.ablation = Ablation::parse(ablation);
    }
    s.get("summary_items", c.run.summary_items);
    s.get("ks", c.run.ks);
  });
  with_section(root, "schedule", [&](Section& s) {
    auto& d = c.run.schedule;
    s.get("alpha", d.alpha);
    s.get("eps_l_max", d.eps_l_max);
    s.get("eps_v", d.eps_v);
    s.get("eps_pos_max", d.eps_pos_max);
    s.get("eps_pos_min", d.eps_pos_min);
    s.get("eps_neg_max", d.eps_neg_max);
    s.get("eps_neg_min", d.eps_neg_min);
    s.get("eps_pair_max", d.eps_pair_max);
    s.get("eps_pair_min", d.eps_pair_min);
    s.get("window", d.window);
    s.get("eps_gamma", d.eps_gamma);
    std::string direction;
    s.get("direction", direction);
    if (!direction.empty()) d.direction = indicator_direction_from_string(direction);
  });
  with_section(root, "scorer", [&](Section& s) {
    std::string backend;
    s.get("backend", backend);
    if (!backend.empty()) c.scorer.kind = scorer_from_string(backend);
    s.get("parallelism", c.scorer.parallelism);
    s.get("cache_path", c.scorer.cache_path);
    s.get("max_description_chars", c.scorer.max_description_chars);
  });
  with_section(root, "endpoint", [&](Section& s) {
    s.get("base_url", c.endpoint.base_url);
    s.get("path", c.endpoint.path);
    s.get("model", c.endpoint.model_name);
    s.get("temperature", c.endpoint.temperature);
    s.get("timeout_seconds", c.endpoint.timeout_seconds);
    s.get("max_retries", c.endpoint.max_retries);
    s.get("backoff_initial_seconds", c.endpoint.backoff_initial_seconds);
    s.get("auth_env", c.endpoint.auth_env);
  });
  with_section(root, "output", [&](Section& s) { s.get("dir", c.output_dir); });
  root.finish();
  c.run.scorer_parallelism = c.scorer.parallelism;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json data;
  if (c.data.synthetic) {
    const auto& w = *c.data.synthetic;
    data["synthetic"] = {{"users", w.users},
                         {"items", w.items},
                         {"dim", w.dim},
                         {"positives_per_user", w.positives_per_user},
                         {"affinity_scale", w.affinity_scale},
                         {"jitter", w.jitter}};
    if (c.data.world_seed) data["synthetic"]["seed"] = *c.data.world_seed;
  } else {
    data["interactions"] = c.data.interactions;
    if (!c.data.profiles.empty()) data["profiles"] = c.data.profiles;
    data["delimiter"] = c.data.delimiter == '\t' ? std::string("\\t") : std::string(1, c.data.delimiter);
    if (c.data.min_rating) data["min_rating"] = *c.data.min_rating;
    data["kcore"] = c.data.kcore;
  }
  data["split"] = {c.data.split.train, c.data.split.valid, c.data.split.test};
  if (c.data.split_seed) data["split_seed"] = *c.data.split_seed;
  data["short_users"] = c.data.short_users == ShortUserPolicy::Fail ? "fail" : "keep";
  data["noise_ratio"] = c.data.noise_ratio;
  data["noise_source"] = noise_source_name(c.data.noise_source);

  const nlohmann::json run = to_json(c.run);
  nlohmann::json schedule = run.at("schedule");
  const auto& r = c.run;
  nlohmann::json j{
      {"data", data},
      {"model",
       {{"backbone", to_string(r.backbone)},
        {"dim", r.dim},
        {"layers", r.layers},
        {"optimizer", to_string(r.optimizer)},
        {"learning_rate", r.learning_rate},
        {"l2", r.l2}}},
      {"train",
       {{"mode", to_string(r.mode)},
        {"batch_size", r.batch_size},
        {"max_epochs", r.max_epochs},
        {"early_stop_patience", r.early_stop_patience},
        {"seed", r.seed},
        {"ablation", r.ablation.to_string()},
        {"summary_items", r.summary_items},
        {"ks", r.ks}}},
      {"schedule", schedule},
      {"scorer",
       {{"backend", to_string(c.scorer.kind)},
        {"parallelism", c.scorer.parallelism},
        {"cache_path", c.scorer.cache_path},
        {"max_description_chars", c.scorer.max_description_chars}}},
      {"endpoint",
       {{"base_url", c.endpoint.base_url},
        {"path", c.endpoint.path},
        {"model", c.endpoint.model_name},
        {"temperature", c.endpoint.temperature},
        {"timeout_seconds", c.endpoint.timeout_seconds},
        {"max_retries", c.endpoint.max_retries},
        {"backoff_initial_seconds", c.endpoint.backoff_initial_seconds},
        {"auth_env", c.endpoint.auth_env}}},
      {"output", {{"dir", c.output_dir}}}};
  return j;
}

}  // namespace hdrec
