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

// Prompt templates for preference summarization, item scoring and preference
// refinement, and extraction of their XML-tagged replies.

#pragma once

#include <span>
#include <string>

#include "hdrec/data.hpp"

namespace hdrec {

struct Score {
  int value = 1;

  // Throws ValidationError unless 1 <= v <= 10.
  static Score of(int v);
  bool operator==(const Score&) const = default;
};

enum class UpdateKind { FalsePositive, FalseNegative };

std::string to_string(UpdateKind kind);

struct PromptOptions {
  // Item descriptions longer than this are cut before rendering. 0 disables the cut.
  std::size_t max_description_chars = 600;
};

// System message sent with every request.
const std::string& system_prompt();

std::string render_summary_prompt(std::span<const ItemProfile> interacted,
                                  const PromptOptions& options = {});
std::string render_score_prompt(const std::string& preference_text, const ItemProfile& item,
                                const PromptOptions& options = {});
// FalsePositive asks to remove the item's characteristics from the preference;
// FalseNegative asks to add them.
std::string render_update_prompt(const std::string& preference_text, const ItemProfile& item,
                                  UpdateKind kind, const PromptOptions& options = {});

// First integer inside <score>...</score>. Missing tag, non-integer content or a
// value outside [1, 10] throws ResponseParseError carrying the raw text.
Score parse_score_response(const std::string& text);

// Trimmed content of <preference>...</preference>; must be non-empty.
std::string parse_preference_response(const std::string& text);

}  // namespace hdrec
