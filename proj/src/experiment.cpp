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

#include "hdrec/experiment.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace hdrec {

namespace fs = std::filesystem;

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  const auto& d = config.data;
  PreparedData out;
  const std::uint64_t seed = config.data_seed();
  if (d.synthetic) {
    WorldConfig w = *d.synthetic;
    w.seed = d.world_seed.value_or(seed);
    w.noise_ratio = d.noise_ratio;
    out.world = generate_world(w);
    out.split = make_noisy_split(*out.world, d.split, seed);
    out.profiles = out.world->profiles;
    out.users = out.world->users;
    out.items = out.world->items;
    return out;
  }

  LoadOptions options;
  options.delimiter = d.delimiter;
  options.min_rating = d.min_rating;
  LoadedInteractions loaded = load_interactions(d.interactions, options);
  Dataset kept = d.kcore > 0 ? kcore_filter(loaded.kept, d.kcore) : std::move(loaded.kept);
  out.split = split(kept, d.split, seed, d.short_users);
  if (d.noise_ratio > 0)
    add_noise(out.split, d.noise_ratio, d.noise_source, loaded.below_min, mix_seed(seed, 0x6e6f6973));
  if (!d.profiles.empty())
    out.profiles = load_item_profiles(d.profiles, loaded.items, kept.item_count);
  out.users = std::move(loaded.users);
  out.items = std::move(loaded.items);
  return out;
}

ScorerBundle make_scorer(const ExperimentConfig& config, const PreparedData& data) {
  ScorerBundle b;
  if (config.scorer.kind == ScorerKind::Oracle) {
    if (!data.world) throw ValidationError("the oracle scorer needs a synthetic world");
    const SyntheticWorld* world = &*data.world;
    b.inner = std::make_unique<OracleBackend>(
        [world](UserId u, ItemId i) { return world->affinity(u, i); });
    return b;
  }
  PromptOptions prompts;
  prompts.max_description_chars = config.scorer.max_description_chars;
  auto remote = std::make_unique<RemoteBackend>(config.endpoint, prompts);
  b.remote = &remote->stats();
  b.inner = std::move(remote);
  if (config.scorer.kind == ScorerKind::CachedRemote) {
    b.cache = config.scorer.cache_path.empty() ? std::make_unique<ScoreCache>()
                                               : std::make_unique<ScoreCache>(config.scorer.cache_path);
    b.outer = std::make_unique<CachedBackend>(*b.inner, *b.cache);
  }
  return b;
}

namespace {

void write_json(const fs::path& path, const nlohmann::json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

void write_epochs_csv(const fs::path& path, const RunReport& r) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  out << "epoch,iterations,drop_count,batch_loss,train_loss,batch_samples,noisy,hard_candidates,"
         "hard,trained,not_ready,scoring_failures,noise_precision,noise_recall,contamination,"
         "valid_recall10,valid_ndcg10\n";
  for (const auto& e : r.epochs) {
    out << e.epoch << ',' << e.iterations << ',' << e.drop_count << ',' << e.batch_loss << ','
        << e.train_loss << ',' << e.batch_samples << ',' << e.noisy << ',' << e.hard_candidates
        << ',' << e.hard << ',' << e.trained << ',' << e.not_ready << ',' << e.scoring_failures;
    if (e.noise)
      out << ',' << e.noise->precision() << ',' << e.noise->recall() << ','
          << e.noise->contamination();
    else
      out << ",,,";
    out << ',' << e.valid_recall.at(10) << ',' << e.valid_ndcg.at(10) << '\n';
  }
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config, const fs::path& dir,
                          const TrainHooks& hooks) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(dir);
  write_json(dir / "config.json", to_json(config));

  PreparedData data = prepare_data(config);
  const bool uses_scorer = config.run.ablation.lms || config.run.ablation.pu;
  ScorerBundle scorer;
  std::optional<PreferenceStore> store;
  TrainContext ctx;
  if (uses_scorer) {
    scorer = make_scorer(config, data);
    // A rerun into the same directory starts from fresh preferences.
    fs::remove(dir / "preferences.jsonl");
    store.emplace(dir / "preferences.jsonl");
    ctx.scorer = scorer.backend();
    ctx.profiles = &data.profiles;
    ctx.preferences = &*store;
  }
  ctx.hooks.on_epoch_end = hooks.on_epoch_end;
  ctx.hooks.on_report = [&](const RunReport& r) {
    nlohmann::json j = to_json(r);
    j["run_config"] = to_json(config);
    write_json(dir / "report.json", j);
    write_epochs_csv(dir / "epochs.csv", r);
    if (hooks.on_report) hooks.on_report(r);
  };

  RunOutcome outcome{train(config.run, data.split, ctx)};
  save_checkpoint(outcome.result.model, dir / "checkpoint.bin");
  if (scorer.remote) {
    outcome.remote_calls = scorer.remote->calls;
    outcome.remote_successes = scorer.remote->successes;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json timing{{"wall_clock_seconds", seconds},
                        {"epochs", outcome.result.report.epochs.size()}};
  if (scorer.remote)
    timing["remote"] = {{"calls", outcome.remote_calls},
                        {"attempts", scorer.remote->attempts.load()},
                        {"successes", outcome.remote_successes},
                        {"failures", scorer.remote->failures.load()}};
  if (auto* cached = dynamic_cast<CachedBackend*>(scorer.outer.get()))
    timing["cache"] = {{"hits", cached->hits()}, {"inner_calls", cached->inner_calls()}};
  write_json(dir / "timing.json", timing);
  return outcome;
}

Ablation preset_ablation(const std::string& name) {
  if (name == "vanilla") return Ablation::parse("none");
  if (name == "ld") return Ablation::parse("LD");
  if (name == "ld_rs_lms") return Ablation::parse("LD,RS,LMS");
  if (name == "ld_vs_lms") return Ablation::parse("LD,VS,LMS");
  if (name == "llmhd") return Ablation::parse("LD,VS,LMS,PU");
  throw ValidationError("unknown method '" + name + "' (vanilla, ld, ld_rs_lms, ld_vs_lms, llmhd)");
}

namespace {

std::string ratio_label(double r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << r;
  return s.str();
}

}  // namespace

std::vector<SweepRow> noise_sweep(const ExperimentConfig& config, const SweepOptions& options,
                                  const fs::path& dir) {
  if (options.ratios.empty() || options.seeds < 1)
    throw ValidationError("noise sweep needs ratios and at least one seed");
  std::vector<std::string> methods = options.methods;
  if (methods.empty()) methods.push_back("config");
  for (const auto& m : methods)
    if (m != "config") preset_ablation(m);

  struct Job {
    double ratio;
    std::uint64_t seed;
    std::string method;
  };
  std::vector<Job> jobs;
  for (double r : options.ratios)
    for (int k = 0; k < options.seeds; ++k)
      for (const auto& m : methods) jobs.push_back({r, options.first_seed + static_cast<std::uint64_t>(k), m});

  std::vector<SweepRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        const Job& job = jobs[k];
        ExperimentConfig c = config;
        c.data.noise_ratio = job.ratio;
        c.run.seed = job.seed;
        if (job.method != "config") c.run.ablation = preset_ablation(job.method);
        const fs::path run_dir = dir / ("ratio_" + ratio_label(job.ratio)) /
                                 ("seed_" + std::to_string(job.seed)) / job.method;
        c.output_dir = run_dir.string();
        const auto outcome = run_experiment(c, run_dir);
        const auto& report = outcome.result.report;
        SweepRow row{job.ratio, job.seed, job.method, report.test->recall, report.test->ndcg,
                     report.noise_total, report.best_epoch};
        rows[k] = std::move(row);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(options.workers, 1), jobs.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  fs::create_directories(dir);
  std::ofstream out(dir / "summary.csv");
  if (!out) throw Error("cannot write " + (dir / "summary.csv").string());
  out << std::setprecision(17) << "ratio,seed,method,best_epoch";
  for (int k : config.run.ks) out << ",recall" << k << ",ndcg" << k;
  out << ",noise_precision,noise_recall,contamination\n";
  for (const auto& r : rows) {
    out << ratio_label(r.ratio) << ',' << r.seed << ',' << r.method << ',' << r.best_epoch;
    for (int k : config.run.ks) out << ',' << r.recall.at(k) << ',' << r.ndcg.at(k);
    if (r.noise)
      out << ',' << r.noise->precision() << ',' << r.noise->recall() << ','
          << r.noise->contamination();
    else
      out << ",,,";
    out << '\n';
  }
  return rows;
}

std::vector<TraceRow> run_trace(const ExperimentConfig& config, std::span<const int> d_values,
                                std::size_t per_class, const fs::path& dir) {
  if (d_values.empty()) throw ValidationError("trace needs at least one D value");
  const PreparedData data = prepare_data(config);
  const auto classes = build_trace_classes(data.split, d_values, per_class, config.data_seed());
  std::vector<TraceRow> rows;
  TrainHooks hooks;
  hooks.on_epoch_end = [&](const Model& model, int epoch) {
    const auto r = pattern_trace(model, epoch, classes);
    rows.insert(rows.end(), r.begin(), r.end());
  };
  run_experiment(config, dir, hooks);
  write_trace_csv((dir / "trace.csv").string(), rows);
  return rows;
}

MetricsResult evaluate_checkpoint(const ExperimentConfig& config, const fs::path& checkpoint,
                                  const std::string& split_name, std::span<const int> ks) {
  const PreparedData data = prepare_data(config);
  const Model model = load_checkpoint(checkpoint);
  if (model.user_count() != data.split.train.user_count ||
      model.item_count() != data.split.train.item_count)
    throw ValidationError("checkpoint shape does not match the configured data");
  if (split_name == "test") {
    const Dataset* exclude[] = {&data.split.train, &data.split.valid};
    return evaluate(model, data.split.test, exclude, ks);
  }
  if (split_name == "valid") {
    const Dataset* exclude[] = {&data.split.train};
    return evaluate(model, data.split.valid, exclude, ks);
  }
  throw ValidationError("split must be 'valid' or 'test'");
}

IngestSummary ingest(const fs::path& interactions, const fs::path& profiles,
                     std::optional<int> min_rating, int kcore, char delimiter, const fs::path& out) {
  LoadOptions options;
  options.delimiter = delimiter;
  options.min_rating = min_rating;
  LoadedInteractions loaded = load_interactions(interactions, options);
  Dataset kept = kcore > 0 ? kcore_filter(loaded.kept, kcore) : std::move(loaded.kept);
  fs::create_directories(out);
  write_interactions(out / "interactions.tsv", kept, loaded.users, loaded.items);
  write_interactions(out / "below_min.tsv", loaded.below_min, loaded.users, loaded.items);
  loaded.users.write(out / "user_map.tsv");
  loaded.items.write(out / "item_map.tsv");

  IngestSummary s;
  s.interactions = kept.size();
  s.below_min = loaded.below_min.size();
  s.users = loaded.users.size();
  s.items = loaded.items.size();
  if (!profiles.empty()) {
    const ProfileTable table = load_item_profiles(profiles, loaded.items, kept.item_count);
    write_item_profiles(out / "profiles.jsonl", table, loaded.items);
    s.profiles = table.profiles.size();
    s.missing_profiles = table.missing.size();
  }
  write_json(out / "summary.json", {{"interactions", s.interactions},
                                    {"below_min", s.below_min},
                                    {"users", s.users},
                                    {"items", s.items},
                                    {"profiles", s.profiles},
                                    {"missing_profiles", s.missing_profiles}});
  return s;
}

}  // namespace hdrec
