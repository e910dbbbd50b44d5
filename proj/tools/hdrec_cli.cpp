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

// hdrec: ingest, train, evaluate, noise-sweep, synth and trace subcommands.
//
// Exit codes: 0 success, 1 validation (bad flags, config or input files),
// 2 runtime failure, 3 the remote scoring endpoint never answered.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdrec/config.hpp"
#include "hdrec/experiment.hpp"
#include "hdrec/synth.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;
constexpr int kRemote = 3;

template <typename T>
std::vector<T> split_list(const std::string& text) {
  std::vector<T> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    std::istringstream v(tok);
    T value{};
    if (!(v >> value) || !v.eof()) throw hdrec::ValidationError("bad list entry '" + tok + "'");
    out.push_back(value);
  }
  if (out.empty()) throw hdrec::ValidationError("empty list '" + text + "'");
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

void print_error(const std::string& kind, const std::string& message) {
  nlohmann::json j{{"error", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

void print_metrics(const hdrec::MetricsResult& m) {
  std::cout << hdrec::to_json(m).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Denoising trainer for implicit-feedback recommenders"};
  app.require_subcommand(1);

  // ingest
  std::string in_interactions, in_profiles, in_out, in_delim = "\t";
  int in_min_rating = 0, in_kcore = 0;
  auto* ingest = app.add_subcommand("ingest", "Load, filter and re-index an interaction file");
  ingest->add_option("--interactions", in_interactions, "user,item,rating[,ts] file")->required();
  ingest->add_option("--profiles", in_profiles, "item profiles, one JSON object per line");
  ingest->add_option("--min-rating", in_min_rating, "drop ratings below this (0 keeps all)");
  ingest->add_option("--kcore", in_kcore, "k-core filter (0 disables)");
  ingest->add_option("--delimiter", in_delim, "field delimiter");
  ingest->add_option("--out", in_out, "output directory")->required();

  // train
  std::string tr_config, tr_ablation, tr_scorer, tr_out;
  std::uint64_t tr_seed = 0;
  auto* train = app.add_subcommand("train", "Train one run from a config file");
  train->add_option("--config", tr_config, "config JSON")->required();
  auto* tr_seed_opt = train->add_option("--seed", tr_seed, "override train.seed");
  train->add_option("--ablation", tr_ablation, "toggles, e.g. LD,VS,LMS,PU or none");
  train->add_option("--scorer", tr_scorer, "oracle, remote or cached-remote");
  train->add_option("--out", tr_out, "run directory (default output.dir)");

  // evaluate
  std::string ev_checkpoint, ev_config, ev_split = "test", ev_ks = "5,10";
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  evaluate->add_option("--checkpoint", ev_checkpoint, "checkpoint.bin")->required();
  evaluate->add_option("--config", ev_config, "config JSON (default: config.json next to the checkpoint)");
  evaluate->add_option("--split", ev_split, "valid or test");
  evaluate->add_option("--k", ev_ks, "comma-separated cutoffs");

  // noise-sweep
  std::string sw_config, sw_ratios = "0.05,0.10,0.15,0.20", sw_methods, sw_out;
  int sw_seeds = 5;
  std::uint64_t sw_first_seed = 1;
  std::size_t sw_workers = 1;
  auto* sweep = app.add_subcommand("noise-sweep", "Runs over noise ratios and seeds");
  sweep->add_option("--config", sw_config, "config JSON")->required();
  sweep->add_option("--ratios", sw_ratios, "comma-separated noise ratios");
  sweep->add_option("--seeds", sw_seeds, "number of seeds");
  sweep->add_option("--first-seed", sw_first_seed, "first seed");
  sweep->add_option("--methods", sw_methods, "vanilla,ld,ld_rs_lms,ld_vs_lms,llmhd (default: config)");
  sweep->add_option("--workers", sw_workers, "concurrent runs");
  sweep->add_option("--out", sw_out, "sweep directory (default output.dir)");

  // synth
  hdrec::WorldConfig world;
  std::string sy_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic world as data files");
  synth->add_option("--users", world.users, "users");
  synth->add_option("--items", world.items, "items");
  synth->add_option("--dim", world.dim, "latent dimension");
  synth->add_option("--positives", world.positives_per_user, "positives per user");
  synth->add_option("--noise", world.noise_ratio, "noise ratio recorded in world.json");
  synth->add_option("--seed", world.seed, "generation seed");
  synth->add_option("--out", sy_out, "output directory")->required();

  // trace
  std::string tc_config, tc_d = "1,3", tc_out;
  std::size_t tc_per_class = 200;
  auto* trace = app.add_subcommand("trace", "Per-class loss and score curves during training");
  trace->add_option("--config", tc_config, "config JSON")->required();
  trace->add_option("--d", tc_d, "candidate counts, e.g. 1,3");
  trace->add_option("--per-class", tc_per_class, "samples per class");
  trace->add_option("--out", tc_out, "output directory (default output.dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*ingest) {
      if (in_delim == "\\t") in_delim = "\t";
      if (in_delim.size() != 1) throw hdrec::ValidationError("--delimiter must be one character");
      std::optional<int> min_rating;
      if (in_min_rating > 0) min_rating = in_min_rating;
      const auto s = hdrec::ingest(in_interactions, in_profiles, min_rating, in_kcore, in_delim[0], in_out);
      std::cout << nlohmann::json{{"interactions", s.interactions},
                                  {"below_min", s.below_min},
                                  {"users", s.users},
                                  {"items", s.items},
                                  {"profiles", s.profiles},
                                  {"missing_profiles", s.missing_profiles}}
                       .dump()
                << '\n';
      return kOk;
    }
    if (*train) {
      auto config = hdrec::load_config(tr_config);
      if (*tr_seed_opt) config.run.seed = tr_seed;
      if (!tr_ablation.empty()) config.run.ablation = hdrec::Ablation::parse(tr_ablation);
      if (!tr_scorer.empty()) config.scorer.kind = hdrec::scorer_from_string(tr_scorer);
      if (!tr_out.empty()) config.output_dir = tr_out;
      config.validate();
      const auto outcome = hdrec::run_experiment(config, config.output_dir);
      const auto& report = outcome.result.report;
      std::cout << nlohmann::json{{"run_dir", config.output_dir},
                                  {"best_epoch", report.best_epoch},
                                  {"epochs", report.epochs.size()},
                                  {"test", hdrec::to_json(*report.test)}}
                       .dump()
                << '\n';
      if (outcome.remote_failed()) {
        print_error("remote", "the scoring endpoint never answered; samples were not rescued");
        return kRemote;
      }
      return kOk;
    }
    if (*evaluate) {
      std::filesystem::path config_path = ev_config;
      if (config_path.empty())
        config_path = std::filesystem::path(ev_checkpoint).parent_path() / "config.json";
      const auto config = hdrec::load_config(config_path);
      const auto ks = split_list<int>(ev_ks);
      print_metrics(hdrec::evaluate_checkpoint(config, ev_checkpoint, ev_split, ks));
      return kOk;
    }
    if (*sweep) {
      auto config = hdrec::load_config(sw_config);
      hdrec::SweepOptions options;
      options.ratios = split_list<double>(sw_ratios);
      options.seeds = sw_seeds;
      options.first_seed = sw_first_seed;
      options.methods = split_names(sw_methods);
      options.workers = sw_workers;
      const std::string dir = sw_out.empty() ? config.output_dir : sw_out;
      const auto rows = hdrec::noise_sweep(config, options, dir);
      std::cout << nlohmann::json{{"sweep_dir", dir}, {"runs", rows.size()}}.dump() << '\n';
      return kOk;
    }
    if (*synth) {
      const auto w = hdrec::generate_world(world);
      hdrec::write_world(w, sy_out);
      std::cout << nlohmann::json{{"out", sy_out},
                                  {"positives", w.clean.size()},
                                  {"low_rated", w.low_rated.size()}}
                       .dump()
                << '\n';
      return kOk;
    }
    if (*trace) {
      auto config = hdrec::load_config(tc_config);
      const std::string dir = tc_out.empty() ? config.output_dir : tc_out;
      config.output_dir = dir;
      const auto d = split_list<int>(tc_d);
      const auto rows = hdrec::run_trace(config, d, tc_per_class, dir);
      std::cout << nlohmann::json{{"trace", dir + "/trace.csv"}, {"rows", rows.size()}}.dump() << '\n';
      return kOk;
    }
  } catch (const hdrec::ValidationError& e) {
    print_error("validation", e.what());
    return kValidation;
  } catch (const hdrec::ParseError& e) {
    print_error("parse", e.what());
    return kValidation;
  } catch (const hdrec::EmptyDatasetError& e) {
    print_error("empty_dataset", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return kRuntime;
  }
  return kRuntime;
}
