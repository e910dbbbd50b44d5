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

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "hdrec/prompts.hpp"
#include "hdrec/scorer.hpp"
#include "stub_server.hpp"

using namespace hdrec;
namespace fs = std::filesystem;

namespace {

ItemProfile profile(ItemId id, std::string title, std::string description = "") {
  return ItemProfile{id, std::move(title), std::move(description)};
}

EndpointConfig endpoint_for(const stub::Server& s, int retries = 2) {
  EndpointConfig e;
  e.base_url = s.base_url();
  e.max_retries = retries;
  e.backoff_initial_seconds = 0.01;
  e.timeout_seconds = 5;
  e.auth_env = "HDREC_TEST_TOKEN";
  return e;
}

}  // namespace

TEST(Prompts, SummaryListsItemsAndFormat) {
  const std::vector<ItemProfile> items = {profile(0, "Alien", "space horror"), profile(1, "Heat")};
  const auto p = render_summary_prompt(items);
  EXPECT_NE(p.find("Title: Alien"), std::string::npos);
  EXPECT_NE(p.find("Description: space horror"), std::string::npos);
  EXPECT_NE(p.find("Title: Heat"), std::string::npos);
  EXPECT_NE(p.find("<preference>"), std::string::npos);
  EXPECT_THROW(render_summary_prompt({}), ValidationError);
}

TEST(Prompts, ScorePromptCarriesPreferenceAndClipsDescription) {
  const std::string longdesc(1000, 'x');
  PromptOptions o;
  o.max_description_chars = 50;
  const auto p = render_score_prompt("likes noir", profile(3, "Chinatown", longdesc), o);
  EXPECT_NE(p.find("likes noir"), std::string::npos);
  EXPECT_NE(p.find(std::string(50, 'x') + "..."), std::string::npos);
  EXPECT_EQ(p.find(std::string(51, 'x')), std::string::npos);
  EXPECT_NE(p.find("<score>"), std::string::npos);
  EXPECT_THROW(render_score_prompt("  ", profile(3, "T")), ValidationError);
  EXPECT_THROW(render_score_prompt("ok", profile(3, "")), ValidationError);
}

TEST(Prompts, UpdatePromptsDifferByKind) {
  const auto fp = render_update_prompt("likes noir", profile(1, "Heat"), UpdateKind::FalsePositive);
  const auto fn = render_update_prompt("likes noir", profile(1, "Heat"), UpdateKind::FalseNegative);
  EXPECT_NE(fp, fn);
  EXPECT_NE(fp.find("removing"), std::string::npos);
  EXPECT_NE(fn.find("adding"), std::string::npos);
}

TEST(Prompts, ParseScore) {
  EXPECT_EQ(parse_score_response("<score>7</score><reason>x</reason>").value, 7);
  EXPECT_EQ(parse_score_response("sure!\n<SCORE> 10 </SCORE>").value, 10);
  EXPECT_EQ(parse_score_response("<score>1</score>").value, 1);
  for (const char* bad : {"7", "<score>0</score>", "<score>11</score>", "<score>seven</score>",
                          "<score>7.5</score>", "<score></score>", "<score>7", "<score>-3</score>"}) {
    try {
      parse_score_response(bad);
      ADD_FAILURE() << bad;
    } catch (const ResponseParseError& e) {
      EXPECT_EQ(e.raw(), bad);
    }
  }
}

TEST(Prompts, ParsePreference) {
  EXPECT_EQ(parse_preference_response("<preference>\n likes noir \n</preference>"), "likes noir");
  EXPECT_THROW(parse_preference_response("<preference>  </preference>"), ResponseParseError);
  EXPECT_THROW(parse_preference_response("likes noir"), ResponseParseError);
}

TEST(Oracle, ScoreBins) {
  EXPECT_EQ(oracle_score(0.0).value, 1);
  EXPECT_EQ(oracle_score(0.05).value, 1);
  EXPECT_EQ(oracle_score(0.1).value, 2);
  EXPECT_EQ(oracle_score(0.55).value, 6);
  EXPECT_EQ(oracle_score(0.95).value, 10);
  EXPECT_EQ(oracle_score(1.0).value, 10);
  EXPECT_THROW(oracle_score(-0.01), ValidationError);
  EXPECT_THROW(oracle_score(1.01), ValidationError);
  EXPECT_THROW(oracle_score(std::nan("")), ValidationError);
  int prev = 1;
  for (int k = 0; k <= 1000; ++k) {
    const int v = oracle_score(k / 1000.0).value;
    EXPECT_GE(v, prev);
    EXPECT_EQ(v, std::min(10, 1 + static_cast<int>(std::floor(k / 100.0))));
    prev = v;
  }
}

TEST(Oracle, BackendIsDeterministicAndTextFree) {
  OracleBackend b([](UserId u, ItemId i) { return (u * 7 + i) % 10 / 10.0; });
  ScoreRequest r{2, 3, "anything", profile(3, "T"), 1};
  const Score s1 = score(b, r);
  r.preference_text = "something else entirely";
  r.preference_version = 4;
  EXPECT_EQ(score(b, r), s1);
  EXPECT_EQ(s1.value, 8);
  r.preference_version = 0;
  EXPECT_THROW(score(b, r), ValidationError);
}

TEST(Oracle, RefineAddsAndRemovesTitles) {
  OracleBackend b([](UserId, ItemId) { return 0.5; });
  const std::vector<ItemProfile> items = {profile(0, "Alien"), profile(1, "Heat")};
  const auto text = b.summarize(0, items);
  EXPECT_NE(text.find("- Alien"), std::string::npos);
  const auto fp = b.refine(0, text, items[0], UpdateKind::FalsePositive);
  EXPECT_EQ(fp.find("- Alien"), std::string::npos);
  EXPECT_NE(fp.find("- Heat"), std::string::npos);
  const auto fn = b.refine(0, fp, profile(2, "Ran"), UpdateKind::FalseNegative);
  EXPECT_NE(fn.find("- Ran"), std::string::npos);
  EXPECT_EQ(b.refine(0, fn, profile(2, "Ran"), UpdateKind::FalseNegative), fn);
}

TEST(ScoreAll, PreservesOrderAndMapsFailures) {
  class Flaky : public OracleBackend {
   public:
    Flaky() : OracleBackend([](UserId, ItemId i) { return i / 100.0; }) {}
    Score score(const ScoreRequest& r) override {
      if (r.item % 5 == 0) throw TransportError("down");
      return OracleBackend::score(r);
    }
  } backend;
  std::vector<ScoreRequest> reqs;
  for (ItemId i = 0; i < 60; ++i) reqs.push_back({0, i, "p", profile(i, "T"), 1});
  for (std::size_t par : {1u, 4u, 16u}) {
    const auto out = score_all(backend, reqs, par);
    ASSERT_EQ(out.size(), reqs.size());
    for (ItemId i = 0; i < 60; ++i) {
      if (i % 5 == 0)
        EXPECT_FALSE(out[i]);
      else
        EXPECT_EQ(out[i]->value, oracle_score(i / 100.0).value);
    }
  }
  EXPECT_TRUE(score_all(backend, std::span<const ScoreRequest>(), 4).empty());
}

TEST(Remote, CannedReplyParsesAndSendsAuth) {
  stub::Server server([](const nlohmann::json& body, int) {
    EXPECT_EQ(body.at("model"), "gpt-3.5-turbo");
    EXPECT_EQ(body.at("messages").size(), 2u);
    return stub::Reply{200, "<score>7</score><reason>fits</reason>"};
  });
  setenv("HDREC_TEST_TOKEN", "tok123", 1);
  RemoteBackend backend(endpoint_for(server));
  EXPECT_EQ(backend.score({1, 2, "likes noir", profile(2, "Heat"), 1}).value, 7);
  EXPECT_EQ(server.auth_headers().at(0), "Bearer tok123");
  EXPECT_NE(stub::user_message(server.bodies().at(0)).find("likes noir"), std::string::npos);
  unsetenv("HDREC_TEST_TOKEN");
  backend.score({1, 2, "likes noir", profile(2, "Heat"), 1});
  EXPECT_EQ(server.auth_headers().at(1), "");
  EXPECT_EQ(backend.stats().successes, 2u);
}

TEST(Remote, RetriesAfterServerError) {
  stub::Server server([](const nlohmann::json&, int call) {
    if (call == 0) return stub::Reply{500, "boom"};
    return stub::Reply{200, "<score>4</score>"};
  });
  RemoteBackend backend(endpoint_for(server, 2));
  EXPECT_EQ(backend.score({0, 0, "p", profile(0, "T"), 1}).value, 4);
  EXPECT_EQ(server.calls(), 2);
  EXPECT_EQ(backend.stats().attempts, 2u);
}

TEST(Remote, NoRetriesFailsOnFirstError) {
  stub::Server server([](const nlohmann::json&, int) { return stub::Reply{503, "busy"}; });
  RemoteBackend backend(endpoint_for(server, 0));
  EXPECT_THROW(backend.score({0, 0, "p", profile(0, "T"), 1}), TransportError);
  EXPECT_EQ(server.calls(), 1);
  EXPECT_EQ(backend.stats().failures, 1u);
}

TEST(Remote, BackoffDoublesBetweenAttempts) {
  stub::Server server([](const nlohmann::json&, int) { return stub::Reply{500, ""}; });
  auto e = endpoint_for(server, 3);
  e.backoff_initial_seconds = 0.05;
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(remote_call(e, "x"), TransportError);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(server.calls(), 4);
  EXPECT_GE(elapsed, 0.05 + 0.1 + 0.2);
}

TEST(Remote, ClientErrorsAndBadRepliesAreNotRetried) {
  stub::Server s4([](const nlohmann::json&, int) { return stub::Reply{401, "no"}; });
  EXPECT_THROW(remote_call(endpoint_for(s4), "x"), TransportError);
  EXPECT_EQ(s4.calls(), 1);

  stub::Server bad([](const nlohmann::json&, int) { return stub::Reply{200, "no tag here"}; });
  RemoteBackend backend(endpoint_for(bad));
  EXPECT_THROW(backend.score({0, 0, "p", profile(0, "T"), 1}), ResponseParseError);
  EXPECT_EQ(bad.calls(), 1);
}

TEST(Remote, UnreachableEndpointIsTransportError) {
  EndpointConfig e;
  e.base_url = "http://127.0.0.1:1";
  e.max_retries = 1;
  e.backoff_initial_seconds = 0.0;
  e.timeout_seconds = 1;
  RemoteStats stats;
  EXPECT_THROW(remote_call(e, "x", &stats), TransportError);
  EXPECT_EQ(stats.attempts, 2u);
  e.max_retries = -1;
  EXPECT_THROW(e.validate(), ValidationError);
}

TEST(Remote, SummaryAndRefineUseTaggedReplies) {
  stub::Server server([](const nlohmann::json& body, int) {
    const auto msg = stub::user_message(body);
    if (msg.find("removing") != std::string::npos) return stub::Reply{200, "<preference>less</preference>"};
    return stub::Reply{200, "<preference>likes heists</preference>"};
  });
  RemoteBackend backend(endpoint_for(server));
  const std::vector<ItemProfile> items = {profile(0, "Heat")};
  EXPECT_EQ(backend.summarize(0, items), "likes heists");
  EXPECT_EQ(backend.refine(0, "likes heists", items[0], UpdateKind::FalsePositive), "less");
}

TEST(Cache, HitsSkipInnerBackendAndPersist) {
  const auto dir = fs::temp_directory_path() / "hdrec_cache_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto path = dir / "scores.jsonl";
  int inner_calls = 0;
  OracleBackend oracle([&](UserId, ItemId i) {
    ++inner_calls;
    return i / 10.0;
  });
  {
    ScoreCache cache(path);
    CachedBackend cached(oracle, cache);
    EXPECT_EQ(cached.score({0, 3, "p", profile(3, "T"), 1}).value, 4);
    EXPECT_EQ(cached.score({0, 3, "p", profile(3, "T"), 1}).value, 4);
    EXPECT_EQ(cached.hits(), 1u);
    // A new preference version is a different key.
    cached.score({0, 3, "p2", profile(3, "T"), 2});
    EXPECT_EQ(cached.inner_calls(), 2u);
    EXPECT_EQ(cache.size(), 2u);
  }
  EXPECT_EQ(inner_calls, 2);
  std::ofstream(path, std::ios::app) << "{broken\n";
  ScoreCache reopened(path);
  EXPECT_EQ(reopened.size(), 2u);
  EXPECT_EQ(reopened.corrupted(), 1u);
  EXPECT_EQ(reopened.get(0, 3, 1)->value, 4);
  EXPECT_FALSE(reopened.get(0, 3, 3));
  CachedBackend again(oracle, reopened);
  again.score({0, 3, "p", profile(3, "T"), 1});
  EXPECT_EQ(inner_calls, 2);
  fs::remove_all(dir);
}

TEST(Cache, CachedRemoteAvoidsRepeatCalls) {
  stub::Server server([](const nlohmann::json&, int) { return stub::Reply{200, "<score>6</score>"}; });
  RemoteBackend remote(endpoint_for(server));
  ScoreCache cache;
  CachedBackend cached(remote, cache);
  std::vector<ScoreRequest> reqs;
  for (int k = 0; k < 20; ++k) reqs.push_back({0, static_cast<ItemId>(k % 5), "p", profile(0, "T"), 1});
  score_all(cached, std::span<const ScoreRequest>(reqs.data(), 5), 4);
  score_all(cached, reqs, 4);
  EXPECT_EQ(server.calls(), 5);
}
