/* Copyright 2026 The OmniPT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "frontends/vocabulary.hpp"

#include <cctype>
#include <fstream>
#include <span>

#include "common/error.hpp"

namespace omnipt {

namespace {
const char* const kReservedNames[Vocabulary::kReservedCount] = {
    "[PAD]", "[CLS]", "[MASK]", "[BOS]", "[EOS]", "[UNK]"};
}  // namespace

Vocabulary::Vocabulary() {
  for (const char* name : kReservedNames) append(name);
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) : Vocabulary() {
  for (const auto& w : words) append(w);
}

void Vocabulary::append(const std::string& token) {
  if (token.empty()) throw ValidationError("vocabulary: empty token");
  if (!index_.emplace(token, static_cast<int>(tokens_.size())).second) {
    throw ValidationError("vocabulary: duplicate token '" + token + "'");
  }
  tokens_.push_back(token);
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw ValidationError("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary to " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("failed writing vocabulary to " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary from " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < kReservedCount) {
    throw ParseError(path.string() + ": vocabulary shorter than the reserved block");
  }
  for (int i = 0; i < kReservedCount; ++i) {
    if (lines[static_cast<std::size_t>(i)] != kReservedNames[i]) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": expected " +
                       kReservedNames[i]);
    }
  }
  return Vocabulary(std::vector<std::string>(lines.begin() + kReservedCount, lines.end()));
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      words.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return words;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  for (const auto& w : split_words(text)) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

TextTokens tokenize(std::string_view text, const Vocabulary& vocab) {
  const auto words = split_words(text);
  if (words.empty()) throw ValidationError("tokenize: empty input");
  TextTokens tokens;
  tokens.ids.reserve(words.size());
  for (const auto& w : words) tokens.ids.push_back(vocab.id(w));
  return tokens;
}

std::string detokenize(std::span<const int> ids, const Vocabulary& vocab) {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out.push_back(' ');
    out += vocab.token(id);
  }
  return out;
}

}  // namespace omnipt
