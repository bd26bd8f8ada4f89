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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmasr/timeline.hpp"

namespace dmasr {

struct CodecConfig {
  double delta_t = 0.1;
  int max_time_index = 250;
  int max_speakers = 16;

  void validate() const;
};

/// round(t / delta_t), ties away from zero, clamped to [0, max_time_index].
/// Throws ValidationError for negative or non-finite t.
int discretize_time(double seconds, const CodecConfig& cfg);
int discretize_time(Time t, const CodecConfig& cfg);

/// index * delta_t. Throws ValidationError outside [0, max_time_index].
double undiscretize_time(int index, const CodecConfig& cfg);
/// Same, snapped to the tick grid.
Time undiscretize_to_time(int index, const CodecConfig& cfg);

// ---------------------------------------------------------------- tokens

enum class Control {
  kStartOfAudio,
  kEndOfAudio,
  kStartOfSpeaker,
  kEndOfSpeaker,
  kStartOfTime,
  kEndOfTime,
  kWithTimestamps,
};

struct SpecialToken {
  enum class Kind { kSpeaker, kTime, kControl };

  Kind kind = Kind::kControl;
  int index = 0;  // speaker or time index
  Control control = Control::kStartOfAudio;

  static SpecialToken speaker(int i) { return {Kind::kSpeaker, i, {}}; }
  static SpecialToken time(int i) { return {Kind::kTime, i, {}}; }
  static SpecialToken of(Control c) { return {Kind::kControl, 0, c}; }

  /// `<|spk_idx_N|>`, `<|time_idx_N|>` or `<|name|>`.
  std::string str() const;
  /// Parses one surface form exactly; nullopt for anything else.
  static std::optional<SpecialToken> parse(std::string_view surface);

  bool operator==(const SpecialToken&) const = default;
};

std::string_view control_name(Control c);

// ---------------------------------------------------------------- speakers

/// Chunk-local speaker numbering by order of first appearance.
class SpeakerMap {
 public:
  SpeakerMap() = default;

  /// Index order is the order of `labels`. Throws ValidationError on
  /// duplicates or empty labels.
  explicit SpeakerMap(std::vector<std::string> labels);

  std::optional<int> local(const std::string& global) const;
  const std::string& global(int local) const;
  bool contains_local(int local) const { return local >= 0 && local < size(); }
  int size() const { return static_cast<int>(reverse_.size()); }

  const std::map<std::string, int>& forward() const { return forward_; }
  const std::vector<std::string>& reverse() const { return reverse_; }

  bool operator==(const SpeakerMap&) const = default;

 private:
  std::map<std::string, int> forward_;
  std::vector<std::string> reverse_;
};

/// First segment start decides the index; ties go to the lexicographically
/// smaller label. Throws ValidationError naming the chunk when it holds
/// more than cfg.max_speakers speakers.
SpeakerMap build_speaker_map(const Chunk& chunk, const CodecConfig& cfg);

// ---------------------------------------------------------------- prompts

struct SegmentCondition {
  int local_speaker = 0;
  int start_idx = 0;
  int end_idx = 0;

  void validate(const CodecConfig& cfg) const;
  bool operator==(const SegmentCondition&) const = default;
};

/// Builds the condition for a chunk-relative segment.
SegmentCondition make_condition(int local_speaker, const TimeInterval& interval,
                                const CodecConfig& cfg);

std::string render_prompt(const SegmentCondition& cond, bool with_timestamps);

/// `<|start_of_audio|><|end_of_audio|>`: the slot a backend fills with the
/// chunk's audio features on the first turn.
std::string audio_placeholder();

// ---------------------------------------------------------------- targets

enum class TargetMode { kPlain, kWithTimestamps };

std::string_view to_string(TargetMode mode);
/// Accepts "plain" and "with_timestamps".
TargetMode parse_target_mode(std::string_view s);

/// Structured form of a response. In timestamp mode `time_indices` holds
/// n + 1 entries for n words (none when n = 0); word j spans
/// [time_indices[j], time_indices[j + 1]].
struct TargetSequence {
  TargetMode mode = TargetMode::kPlain;
  int leading_speaker = 0;
  std::vector<std::string> words;
  std::vector<int> time_indices;

  void validate(const CodecConfig& cfg) const;
  bool operator==(const TargetSequence&) const = default;
};

/// Discretizes word starts and the last word's end. Throws ValidationError
/// when timings are unsorted or a word ends before it starts.
TargetSequence make_timed_target(int leading_speaker, std::span<const WordTiming> words,
                                 const CodecConfig& cfg);
TargetSequence make_plain_target(int leading_speaker, std::vector<std::string> words);

std::string encode_target(const TargetSequence& target);

/// Words with spans rebuilt from the time grid (word j ends where word j+1
/// starts). Empty unless the sequence is in timestamp mode.
std::vector<WordTiming> word_timings(const TargetSequence& target, const CodecConfig& cfg);

struct DecodedResponse {
  TargetSequence target;
  /// No usable speaker token; `target.leading_speaker` is the expected one.
  bool speaker_fallback = false;
  /// Timestamp mode was requested but no time token was parsed.
  bool times_missing = false;
  /// Unknown, misplaced or out-of-range special tokens that were skipped,
  /// plus grid repairs (decreasing or missing time tokens).
  int dropped_tokens = 0;

  bool has_times() const { return !target.time_indices.empty(); }
};

/// Tolerant inverse of encode_target for arbitrary model output.
DecodedResponse decode_response(std::string_view response, const SegmentCondition& expected,
                                TargetMode mode, const CodecConfig& cfg);

}  // namespace dmasr
