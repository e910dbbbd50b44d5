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

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "hdrec/scorer.hpp"

namespace hdrec {

namespace {

std::chrono::microseconds to_micros(double seconds) {
  return std::chrono::microseconds(static_cast<long long>(seconds * 1e6));
}

}  // namespace

std::string remote_call(const EndpointConfig& endpoint, const std::string& prompt,
                        RemoteStats* stats) {
  endpoint.validate();
  if (stats) ++stats->calls;

  const nlohmann::json body{
      {"model", endpoint.model_name},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", system_prompt()}},
                              {{"role", "user"}, {"content", prompt}}})},
      {"temperature", endpoint.temperature}};
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!endpoint.auth_env.empty()) {
    if (const char* token = std::getenv(endpoint.auth_env.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  httplib::Client client(endpoint.base_url);
  const auto timeout = to_micros(endpoint.timeout_seconds);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  std::string last_error;
  double backoff = endpoint.backoff_initial_seconds;
  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(to_micros(backoff));
      backoff *= 2.0;
    }
    if (stats) ++stats->attempts;
    auto res = client.Post(endpoint.path, headers, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      if (stats) ++stats->failures;
      throw TransportError("endpoint returned HTTP " + std::to_string(res->status));
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
      const auto& content = reply.at("choices").at(0).at("message").at("content");
      if (!content.is_string()) throw ProtocolError("message content is not a string");
      if (stats) ++stats->successes;
      return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      if (stats) ++stats->failures;
      throw ProtocolError(std::string("malformed endpoint reply: ") + e.what());
    }
  }
  if (stats) ++stats->failures;
  throw TransportError("endpoint unavailable after " + std::to_string(endpoint.max_retries + 1) +
                       " attempts: " + last_error);
}

}  // namespace hdrec
