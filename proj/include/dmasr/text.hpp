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

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dmasr::text {

std::vector<std::string> split_whitespace(std::string_view s);
bool has_whitespace(std::string_view s);
std::string strip_whitespace(std::string_view s);

/// One view per UTF-8 code point. Invalid bytes come back as single-byte
/// pieces rather than failing.
std::vector<std::string_view> code_points(std::string_view s);
char32_t decode_code_point(std::string_view piece);

/// CJK ideographs, kana, hangul and fullwidth forms: scripts written
/// without spaces between words.
bool is_cjk(char32_t cp);
bool starts_with_cjk(std::string_view word);
bool ends_with_cjk(std::string_view word);

/// Joins words with single spaces, except between two CJK characters.
std::string join_words(std::span<const std::string> words);

/// Inverse of join_words on words that are either free of CJK or a single
/// CJK character: splits on whitespace, then breaks CJK runs into characters.
std::vector<std::string> split_words(std::string_view s);

}  // namespace dmasr::text
