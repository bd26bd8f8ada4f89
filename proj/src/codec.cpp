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

#include "dmasr/codec.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "dmasr/error.hpp"
#include "dmasr/text.hpp"

namespace dmasr {

void CodecConfig::validate() const {
  if (!(delta_t > 0) || !std::isfinite(delta_t)) throw ValidationError("delta_t must be positive");
  if (max_time_index < 1) throw ValidationError("max_time_index must be >= 1");
  if (max_speakers < 1) throw ValidationError("max_speakers must be >= 1");
}

int discretize_time(double seconds, const CodecConfig& cfg) {
  if (!std::isfinite(seconds) || seconds < 0) {
    throw ValidationError("cannot discretize time " + std::to_string(seconds));
  }
  // Snap away binary noise first so that k * delta_t / 2 ties (0.15 / 0.1 =
  // 1.4999999999999998) round the way their decimal value says.
  const double q = std::round(seconds / cfg.delta_t * 1e6) / 1e6;
  const double r = std::round(q);  // half away from zero
  return static_cast<int>(std::min<double>(r, cfg.max_time_index));
}

int discretize_time(Time t, const CodecConfig& cfg) { return discretize_time(t.seconds(), cfg); }

double undiscretize_time(int index, const CodecConfig& cfg) {
  if (index < 0 || index > cfg.max_time_index) {
    throw ValidationError("time index " + std::to_string(index) + " outside [0, " +
                          std::to_string(cfg.max_time_index) + "]");
  }
  return index * cfg.delta_t;
}

Time undiscretize_to_time(int index, const CodecConfig& cfg) {
  return Time::from_seconds(undiscretize_time(index, cfg));
}

// ---------------------------------------------------------------- tokens

namespace {

constexpr std::array<std::pair<Control, std::string_view>, 7> kControlNames{{
    {Control::kStartOfAudio, "start_of_audio"},
    {Control::kEndOfAudio, "end_of_audio"},
    {Control::kStartOfSpeaker, "start_of_spk"},
    {Control::kEndOfSpeaker, "end_of_spk"},
    {Control::kStartOfTime, "start_of_time"},
    {Control::kEndOfTime, "end_of_time"},
    {Control::kWithTimestamps, "with_timestamps"},
}};

std::optional<int> parse_index(std::string_view digits) {
  if (digits.empty() || digits.size() > 9) return std::nullopt;
  if (digits.size() > 1 && digits[0] == '0') return std::nullopt;
  for (char ch : digits) {
    if (ch < '0' || ch > '9') return std::nullopt;
  }
  int value = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

}  // namespace

std::string_view control_name(Control c) {
  for (const auto& [ctl, name] : kControlNames) {
    if (ctl == c) return name;
  }
  return {};
}

std::string SpecialToken::str() const {
  switch (kind) {
    case Kind::kSpeaker:
      return "<|spk_idx_" + std::to_string(index) + "|>";
    case Kind::kTime:
      return "<|time_idx_" + std::to_string(index) + "|>";
    case Kind::kControl:
      break;
  }
  return "<|" + std::string(control_name(control)) + "|>";
}

std::optional<SpecialToken> SpecialToken::parse(std::string_view s) {
  if (s.size() < 5 || s.substr(0, 2) != "<|" || s.substr(s.size() - 2) != "|>") return std::nullopt;
  const std::string_view body = s.substr(2, s.size() - 4);
  constexpr std::string_view kSpk = "spk_idx_";
  constexpr std::string_view kTime = "time_idx_";
  if (body.substr(0, kSpk.size()) == kSpk) {
    if (auto i = parse_index(body.substr(kSpk.size()))) return speaker(*i);
    return std::nullopt;
  }
  if (body.substr(0, kTime.size()) == kTime) {
    if (auto i = parse_index(body.substr(kTime.size()))) return time(*i);
    return std::nullopt;
  }
  for (const auto& [ctl, name] : kControlNames) {
    if (body == name) return of(ctl);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- speakers

SpeakerMap::SpeakerMap(std::vector<std::string> labels) : reverse_(std::move(labels)) {
  for (std::size_t i = 0; i < reverse_.size(); ++i) {
    if (reverse_[i].empty()) throw ValidationError("speaker map holds an empty label");
    if (!forward_.emplace(reverse_[i], static_cast<int>(i)).second) {
      throw ValidationError("speaker map holds duplicate label " + reverse_[i]);
    }
  }
}

std::optional<int> SpeakerMap::local(const std::string& global) const {
  auto it = forward_.find(global);
  if (it == forward_.end()) return std::nullopt;
  return it->second;
}

const std::string& SpeakerMap::global(int local) const {
  if (!contains_local(local)) {
    throw ValidationError("local speaker index " + std::to_string(local) + " is not mapped");
  }
  return reverse_[static_cast<std::size_t>(local)];
}

SpeakerMap build_speaker_map(const Chunk& chunk, const CodecConfig& cfg) {
  std::map<std::string, Time> first_start;
  for (const auto& seg : chunk.segments) {
    auto [it, inserted] = first_start.emplace(seg.speaker, seg.interval.start);
    if (!inserted) it->second = min(it->second, seg.interval.start);
  }
  if (static_cast<int>(first_start.size()) > cfg.max_speakers) {
    throw ValidationError("chunk " + chunk.chunk_id + " has " + std::to_string(first_start.size()) +
                          " speakers, more than the " + std::to_string(cfg.max_speakers) +
                          " speaker tokens available");
  }
  std::vector<std::pair<Time, std::string>> order;
  order.reserve(first_start.size());
  for (const auto& [label, start] : first_start) order.emplace_back(start, label);
  std::sort(order.begin(), order.end());
  std::vector<std::string> labels;
  labels.reserve(order.size());
  for (auto& [start, label] : order) labels.push_back(std::move(label));
  return SpeakerMap(std::move(labels));
}

// ---------------------------------------------------------------- prompts

void SegmentCondition::validate(const CodecConfig& cfg) const {
  if (local_speaker < 0 || local_speaker >= cfg.max_speakers) {
    throw ValidationError("speaker index " + std::to_string(local_speaker) + " out of range");
  }
  if (start_idx < 0 || start_idx > end_idx || end_idx > cfg.max_time_index) {
    throw ValidationError("condition times [" + std::to_string(start_idx) + ", " +
                          std::to_string(end_idx) + "] are not ordered within the grid");
  }
}

SegmentCondition make_condition(int local_speaker, const TimeInterval& interval,
                                const CodecConfig& cfg) {
  return {local_speaker, discretize_time(interval.start, cfg), discretize_time(interval.end, cfg)};
}

std::string render_prompt(const SegmentCondition& cond, bool with_timestamps) {
  std::string p = "Please transcribe the speech content of speaker ";
  p += SpecialToken::of(Control::kStartOfSpeaker).str();
  p += SpecialToken::speaker(cond.local_speaker).str();
  p += SpecialToken::of(Control::kEndOfSpeaker).str();
  p += " within the time segment ";
  p += SpecialToken::of(Control::kStartOfTime).str();
  p += SpecialToken::time(cond.start_idx).str();
  p += SpecialToken::time(cond.end_idx).str();
  p += SpecialToken::of(Control::kEndOfTime).str();
  p += " into text.";
  if (with_timestamps) p += SpecialToken::of(Control::kWithTimestamps).str();
  return p;
}

std::string audio_placeholder() {
  return SpecialToken::of(Control::kStartOfAudio).str() + SpecialToken::of(Control::kEndOfAudio).str();
}

// ---------------------------------------------------------------- targets

std::string_view to_string(TargetMode mode) {
  return mode == TargetMode::kPlain ? "plain" : "with_timestamps";
}

TargetMode parse_target_mode(std::string_view s) {
  if (s == "plain") return TargetMode::kPlain;
  if (s == "with_timestamps") return TargetMode::kWithTimestamps;
  throw ValidationError("unknown target mode '" + std::string(s) + "'");
}

namespace {

void check_word(const std::string& w) {
  if (w.empty() || text::has_whitespace(w) || w.find("<|") != std::string::npos) {
    throw ValidationError("target word '" + w + "' is empty or holds whitespace or a token marker");
  }
}

std::string speaker_prefix(int speaker) {
  return SpecialToken::of(Control::kStartOfSpeaker).str() + SpecialToken::speaker(speaker).str() +
         SpecialToken::of(Control::kEndOfSpeaker).str();
}

}  // namespace

void TargetSequence::validate(const CodecConfig& cfg) const {
  if (leading_speaker < 0 || leading_speaker >= cfg.max_speakers) {
    throw ValidationError("target speaker " + std::to_string(leading_speaker) + " out of range");
  }
  for (const auto& w : words) check_word(w);
  if (mode == TargetMode::kPlain) {
    if (!time_indices.empty()) throw ValidationError("plain target carries time indices");
    return;
  }
  const std::size_t expected = words.empty() ? 0 : words.size() + 1;
  if (time_indices.size() != expected) {
    throw ValidationError("timestamp target needs " + std::to_string(expected) +
                          " time indices, has " + std::to_string(time_indices.size()));
  }
  for (std::size_t i = 0; i < time_indices.size(); ++i) {
    if (time_indices[i] < 0 || time_indices[i] > cfg.max_time_index) {
      throw ValidationError("time index out of range");
    }
    if (i > 0 && time_indices[i] < time_indices[i - 1]) {
      throw ValidationError("time indices decrease");
    }
  }
}

TargetSequence make_timed_target(int leading_speaker, std::span<const WordTiming> words,
                                 const CodecConfig& cfg) {
  TargetSequence t;
  t.mode = TargetMode::kWithTimestamps;
  t.leading_speaker = leading_speaker;
  for (std::size_t j = 0; j < words.size(); ++j) {
    const auto& w = words[j];
    check_word(w.word);
    if (w.interval.end < w.interval.start) {
      throw ValidationError("word '" + w.word + "' ends before it starts");
    }
    if (j > 0 && w.interval.start < words[j - 1].interval.start) {
      throw ValidationError("word '" + w.word + "' starts before the word preceding it");
    }
    t.words.push_back(w.word);
    t.time_indices.push_back(discretize_time(w.interval.start, cfg));
  }
  if (!words.empty()) t.time_indices.push_back(discretize_time(words.back().interval.end, cfg));
  return t;
}

TargetSequence make_plain_target(int leading_speaker, std::vector<std::string> words) {
  for (const auto& w : words) check_word(w);
  return {TargetMode::kPlain, leading_speaker, std::move(words), {}};
}

std::string encode_target(const TargetSequence& target) {
  std::string out = speaker_prefix(target.leading_speaker);
  if (target.mode == TargetMode::kPlain) {
    out += text::join_words(target.words);
    return out;
  }
  for (std::size_t j = 0; j < target.words.size(); ++j) {
    out += SpecialToken::time(target.time_indices[j]).str();
    out += target.words[j];
  }
  if (!target.words.empty()) out += SpecialToken::time(target.time_indices.back()).str();
  return out;
}

std::vector<WordTiming> word_timings(const TargetSequence& target, const CodecConfig& cfg) {
  std::vector<WordTiming> out;
  if (target.mode != TargetMode::kWithTimestamps || target.words.empty()) return out;
  out.reserve(target.words.size());
  for (std::size_t j = 0; j < target.words.size(); ++j) {
    out.push_back({target.words[j],
                   {undiscretize_to_time(target.time_indices[j], cfg),
                    undiscretize_to_time(target.time_indices[j + 1], cfg)}});
  }
  return out;
}

namespace {

struct Piece {
  std::optional<SpecialToken> token;  // set for special tokens
  bool unknown_token = false;         // "<|...|>" that is not in the vocabulary
  std::string_view text;
};

std::vector<Piece> split_pieces(std::string_view s) {
  std::vector<Piece> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t open = s.find("<|", i);
    if (open == std::string_view::npos) {
      out.push_back({std::nullopt, false, s.substr(i)});
      break;
    }
    if (open > i) out.push_back({std::nullopt, false, s.substr(i, open - i)});
    const std::size_t close = s.find("|>", open + 2);
    if (close == std::string_view::npos) {
      // Truncated token at the tail.
      out.push_back({std::nullopt, true, s.substr(open)});
      break;
    }
    const auto surface = s.substr(open, close + 2 - open);
    if (auto tok = SpecialToken::parse(surface)) {
      out.push_back({tok, false, surface});
    } else {
      out.push_back({std::nullopt, true, surface});
    }
    i = close + 2;
  }
  return out;
}

bool is_blank(std::string_view s) { return text::split_whitespace(s).empty(); }

bool is_control(const Piece& p, Control c) {
  return p.token && p.token->kind == SpecialToken::Kind::kControl && p.token->control == c;
}

}  // namespace

DecodedResponse decode_response(std::string_view response, const SegmentCondition& expected,
                                TargetMode mode, const CodecConfig& cfg) {
  DecodedResponse out;
  out.target.mode = mode;
  const auto pieces = split_pieces(response);

  // Leading speaker: [<|start_of_spk|>] <|spk_idx_N|> [<|end_of_spk|>]
  std::size_t i = 0;
  auto skip_blank = [&] {
    while (i < pieces.size() && !pieces[i].token && !pieces[i].unknown_token &&
           is_blank(pieces[i].text)) {
      ++i;
    }
  };
  skip_blank();
  std::optional<int> speaker;
  const bool has_open = i < pieces.size() && is_control(pieces[i], Control::kStartOfSpeaker);
  if (has_open) ++i;
  if (i < pieces.size() && pieces[i].token && pieces[i].token->kind == SpecialToken::Kind::kSpeaker) {
    if (pieces[i].token->index < cfg.max_speakers) {
      speaker = pieces[i].token->index;
    } else {
      ++out.dropped_tokens;
    }
    ++i;
    if (i < pieces.size() && is_control(pieces[i], Control::kEndOfSpeaker)) ++i;
  } else if (has_open) {
    ++out.dropped_tokens;
  }
  out.speaker_fallback = !speaker.has_value();
  out.target.leading_speaker = speaker.value_or(expected.local_speaker);

  auto& words = out.target.words;
  auto& times = out.target.time_indices;

  if (mode == TargetMode::kPlain) {
    std::string body;
    for (; i < pieces.size(); ++i) {
      if (pieces[i].token || pieces[i].unknown_token) {
        ++out.dropped_tokens;
        body.push_back(' ');
      } else {
        body.append(pieces[i].text);
      }
    }
    words = text::split_words(body);
    return out;
  }

  // Timestamp grid. While parsing, times.size() == words.size() means the
  // last word still waits for its closing time token; one more means a
  // time token is ready to open the next word.
  bool saw_time = false;
  auto push_time = [&](int u) {
    u = std::clamp(u, 0, cfg.max_time_index);
    if (times.size() == words.size() + 1) {
      // Two time tokens in a row: the later one wins.
      ++out.dropped_tokens;
      const int floor = times.size() >= 2 ? times[times.size() - 2] : 0;
      times.back() = std::max(u, floor);
      return;
    }
    if (!times.empty() && u < times.back()) {
      u = times.back();
      ++out.dropped_tokens;
    }
    times.push_back(u);
  };
  for (; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    if (p.token && p.token->kind == SpecialToken::Kind::kTime) {
      saw_time = true;
      push_time(p.token->index);
      continue;
    }
    if (p.token || p.unknown_token) {
      ++out.dropped_tokens;
      continue;
    }
    for (auto& w : text::split_whitespace(p.text)) {
      if (times.size() == words.size()) {
        // Word without an opening time token: borrow the previous one.
        ++out.dropped_tokens;
        times.push_back(times.empty() ? std::clamp(expected.start_idx, 0, cfg.max_time_index)
                                      : times.back());
      }
      words.push_back(std::move(w));
    }
  }
  if (words.empty()) {
    if (!times.empty()) out.dropped_tokens += static_cast<int>(times.size());
    times.clear();
  } else if (times.size() == words.size()) {
    ++out.dropped_tokens;
    times.push_back(times.back());
  }
  out.times_missing = !saw_time && !words.empty();
  if (out.times_missing) times.clear();
  return out;
}

}  // namespace dmasr
