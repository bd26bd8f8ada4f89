// Copyright 2026 The dmasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dmasr/text.hpp"

namespace dmasr::text {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::size_t sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool has_whitespace(std::string_view s) {
  for (char c : s) {
    if (is_space(c)) return true;
  }
  return false;
}

std::string strip_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (!is_space(c)) out.push_back(c);
  }
  return out;
}

std::vector<std::string_view> code_points(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = sequence_length(static_cast<unsigned char>(s[i]));
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

char32_t decode_code_point(std::string_view piece) {
  if (piece.empty()) return 0;
  const auto b0 = static_cast<unsigned char>(piece[0]);
  auto cont = [&](std::size_t k) { return static_cast<char32_t>(piece[k] & 0x3F); };
  switch (piece.size()) {
    case 2:
      return (static_cast<char32_t>(b0 & 0x1F) << 6) | cont(1);
    case 3:
      return (static_cast<char32_t>(b0 & 0x0F) << 12) | (cont(1) << 6) | cont(2);
    case 4:
      return (static_cast<char32_t>(b0 & 0x07) << 18) | (cont(1) << 12) | (cont(2) << 6) |
             cont(3);
    default:
      return b0;
  }
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x2E80 && cp <= 0x2FDF) ||    // radicals
         (cp >= 0x3000 && cp <= 0x30FF) ||    // CJK punctuation, kana
         (cp >= 0x3100 && cp <= 0x31FF) ||    // bopomofo, kana ext
         (cp >= 0x3400 && cp <= 0x4DBF) ||    // ext A
         (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
         (cp >= 0xAC00 && cp <= 0xD7AF) ||    // hangul
         (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
         (cp >= 0xFF00 && cp <= 0xFFEF) ||    // fullwidth forms
         (cp >= 0x20000 && cp <= 0x3134F);    // ext B..G
}

bool starts_with_cjk(std::string_view word) {
  const auto cps = code_points(word);
  return !cps.empty() && is_cjk(decode_code_point(cps.front()));
}

bool ends_with_cjk(std::string_view word) {
  const auto cps = code_points(word);
  return !cps.empty() && is_cjk(decode_code_point(cps.back()));
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0 && !(ends_with_cjk(words[i - 1]) && starts_with_cjk(words[i]))) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& piece : split_whitespace(s)) {
    std::string run;
    for (auto cp : code_points(piece)) {
      if (is_cjk(decode_code_point(cp))) {
        if (!run.empty()) out.push_back(std::move(run));
        run.clear();
        out.emplace_back(cp);
      } else {
        run.append(cp);
      }
    }
    if (!run.empty()) out.push_back(std::move(run));
  }
  return out;
}

}  // namespace dmasr::text
