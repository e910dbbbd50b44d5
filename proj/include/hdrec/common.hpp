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

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hdrec {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

// Packs a (user, item) pair into one key for hash maps.
inline std::uint64_t pair_key(UserId user, ItemId item) {
  return (static_cast<std::uint64_t>(user) << 32) | item;
}
inline UserId key_user(std::uint64_t key) { return static_cast<UserId>(key >> 32); }
inline ItemId key_item(std::uint64_t key) { return static_cast<ItemId>(key & 0xffffffffu); }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. line is 1-based; 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

// Bad configuration or precondition violated by the caller.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Scorer could not produce a score; the trainer treats the sample as not rescued.
class ScoringUnavailable : public Error {
 public:
  using Error::Error;
};

class TransportError : public ScoringUnavailable {
 public:
  using ScoringUnavailable::ScoringUnavailable;
};

class ProtocolError : public ScoringUnavailable {
 public:
  using ScoringUnavailable::ScoringUnavailable;
};

// LLM reply did not contain a usable tagged value. raw() keeps the reply text.
class ResponseParseError : public ScoringUnavailable {
 public:
  ResponseParseError(const std::string& what, std::string raw)
      : ScoringUnavailable(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

// splitmix64 finalizer; derives independent stream seeds from (seed, tag).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

}  // namespace hdrec
