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

#include "hdrec/prompts.hpp"

#include <cctype>
#include <sstream>

namespace hdrec {

Score Score::of(int v) {
  if (v < 1 || v > 10) throw ValidationError("score " + std::to_string(v) + " outside [1, 10]");
  return Score{v};
}

std::string to_string(UpdateKind kind) {
  return kind == UpdateKind::FalsePositive ? "FP" : "FN";
}

const std::string& system_prompt() {
  static const std::string text =
      "You are a recommendation assistant. You read item profiles and user preference "
      "descriptions, and you always answer in the XML format requested by the user.";
  return text;
}

namespace {

std::string clip(const std::string& s, std::size_t limit) {
  if (limit == 0 || s.size() <= limit) return s;
  return s.substr(0, limit) + "...";
}

void write_item(std::ostringstream& out, const ItemProfile& item, const PromptOptions& options) {
  out << "Title: " << item.title << "\n";
  if (!item.description.empty())
    out << "Description: " << clip(item.description, options.max_description_chars) << "\n";
}

void require_text(const std::string& s, const char* what) {
  if (s.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ValidationError(std::string(what) + " must be non-empty");
}

const char* kScoreRubric =
    "Score meaning:\n"
    "1-2: the user would strongly dislike this item.\n"
    "3-4: the user would probably dislike this item.\n"
    "5-6: the user is indifferent or the evidence is mixed.\n"
    "7-8: the user would probably like this item.\n"
    "9-10: the user would strongly like this item.\n";

}  // namespace

std::string render_summary_prompt(std::span<const ItemProfile> interacted,
                                  const PromptOptions& options) {
  if (interacted.empty()) throw ValidationError("summary prompt needs at least one item");
  std::ostringstream out;
  out << "[Instruction]\n"
      << "Below are the items a user has interacted with. Summarize the characteristics of "
         "items that would appeal to this user: genres, themes, style and anything else the "
         "items have in common. Write the summary as a short paragraph.\n\n"
      << "[Interacted items]\n";
  for (std::size_t k = 0; k < interacted.size(); ++k) {
    out << "Item " << (k + 1) << "\n";
    write_item(out, interacted[k], options);
  }
  out << "\n[Output format]\n"
      << "Enforce the output format to the XML below and output nothing else:\n"
      << "<preference>summary of the user's preference</preference>\n";
  return out.str();
}

std::string render_score_prompt(const std::string& preference_text, const ItemProfile& item,
                                const PromptOptions& options) {
  require_text(preference_text, "preference text");
  require_text(item.title, "item title");
  std::ostringstream out;
  out << "[Instruction]\n"
      << "Given the user's preference and an item profile, rate how much the user would "
         "like the item with an integer score from 1 to 10.\n"
      << kScoreRubric << "\n"
      << "[User preference]\n"
      << preference_text << "\n\n"
      << "[Item profile]\n";
  write_item(out, item, options);
  out << "\n[Output format]\n"
      << "Enforce the output format to the XML below and output nothing else:\n"
      << "<score>integer between 1 and 10</score>\n"
      << "<reason>one sentence</reason>\n";
  return out.str();
}

std::string render_update_prompt(const std::string& preference_text, const ItemProfile& item,
                                  UpdateKind kind, const PromptOptions& options) {
  require_text(preference_text, "preference text");
  require_text(item.title, "item title");
  std::ostringstream out;
  out << "[Instruction]\n";
  if (kind == UpdateKind::FalsePositive) {
    out << "The user interacted with the item below but does not actually like it. Update "
           "the user's preference by removing the characteristics of this item that the "
           "user dislikes. Keep every other part of the preference unchanged.\n";
  } else {
    out << "The user never interacted with the item below but would actually like it. "
           "Update the user's preference by adding the characteristics of this item that "
           "appeal to the user. Keep every other part of the preference unchanged.\n";
  }
  out << "\n[User preference]\n" << preference_text << "\n\n[Item profile]\n";
  write_item(out, item, options);
  out << "\n[Output format]\n"
      << "Enforce the output format to the XML below and output nothing else:\n"
      << "<preference>updated preference</preference>\n";
  return out.str();
}

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Content between the first <tag> and the following </tag>, case-insensitive tags.
std::optional<std::string> tag_content(const std::string& text, const std::string& tag) {
  const std::string l = lower(text);
  const std::string open = "<" + tag + ">", close = "</" + tag + ">";
  const auto b = l.find(open);
  if (b == std::string::npos) return std::nullopt;
  const auto start = b + open.size();
  const auto e = l.find(close, start);
  if (e == std::string::npos) return std::nullopt;
  return text.substr(start, e - start);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Score parse_score_response(const std::string& text) {
  const auto inner = tag_content(text, "score");
  if (!inner) throw ResponseParseError("reply has no <score> tag", text);
  const std::string t = trim(*inner);
  if (t.empty() || t.size() > 3) throw ResponseParseError("score is not an integer", text);
  for (char c : t)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ResponseParseError("score is not an integer", text);
  const int v = std::stoi(t);
  if (v < 1 || v > 10) throw ResponseParseError("score outside [1, 10]", text);
  return Score{v};
}

std::string parse_preference_response(const std::string& text) {
  const auto inner = tag_content(text, "preference");
  if (!inner) throw ResponseParseError("reply has no <preference> tag", text);
  std::string t = trim(*inner);
  if (t.empty()) throw ResponseParseError("preference is empty", text);
  return t;
}

}  // namespace hdrec
