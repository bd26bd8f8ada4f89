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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmasr/codec.hpp"
#include "dmasr/formats.hpp"
#include "dmasr/perturbation.hpp"
#include "dmasr/timeline.hpp"

namespace dmasr {

/// One (prompt, target) pair conditioned on a single diarized segment.
struct Turn {
  int turn_index = 0;
  /// The diarized segment this turn asks about: global label, chunk-relative
  /// times at full precision.
  DiarSegment segment;
  /// What the prompt carries, after any perturbation.
  SegmentCondition condition;
  PerturbationRecord perturbation;
  std::string prompt_text;
  std::string target_text;
  bool has_audio = false;

  bool operator==(const Turn&) const = default;
};

struct Dialogue {
  std::string chunk_id;
  std::string recording_id;
  std::size_t chunk_index = 0;
  TimeInterval window;
  SpeakerMap speaker_map;
  TargetMode mode = TargetMode::kPlain;
  std::vector<Turn> turns;

  /// Checks the turn-structure and codec invariants; throws ValidationError.
  void validate(const CodecConfig& cfg) const;
  bool operator==(const Dialogue&) const = default;
};

/// Words for one chunk segment, chunk-relative. `timed` is false when the
/// times were synthesized from a segment-level transcript.
struct SegmentTranscript {
  std::vector<WordTiming> words;
  bool timed = true;
};

/// Keyed by index into Chunk::segments.
using ChunkTranscripts = std::map<std::size_t, SegmentTranscript>;

struct BuildOptions {
  TargetMode mode = TargetMode::kPlain;
  PerturbationConfig perturbation{.p = 0.0};
  CodecConfig codec;
};

/// One turn per chunk segment, ordered by (start, local speaker). Targets
/// come from the clean labels; prompts from the possibly perturbed ones.
/// Throws ValidationError when a segment has no transcript, when the chunk
/// is empty, or when timestamp mode meets untimed words.
Dialogue build_dialogue(const Chunk& chunk, const ChunkTranscripts& transcripts,
                        const BuildOptions& opts);

/// Target-text regions of a concatenated training sequence.
struct LossMaskSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const LossMaskSpan&) const = default;
};

struct TrainingSequence {
  std::string text;
  /// Response regions; loss is computed on these only.
  std::vector<LossMaskSpan> target_spans;
  std::vector<LossMaskSpan> prompt_spans;
};

/// prompt_0 target_0 prompt_1 target_1 ... with byte offsets for each part.
TrainingSequence concat_training_sequence(const Dialogue& d);

// ---------------------------------------------------------------- corpus

/// A transcript word attributed to a speaker, on the recording timeline.
struct SourceWord {
  std::string speaker;
  WordTiming word;
  bool timed = true;
};

/// Flattens reference SegLST entries of one session into words. Entries
/// without word timings get equal subdivisions of their interval.
std::vector<SourceWord> source_words(std::span<const SegLstEntry> entries);

struct WordAssignment {
  /// Parallel to the chunks passed in.
  std::vector<ChunkTranscripts> transcripts;
  std::size_t dropped_words = 0;
};

/// Routes every word to the chunk holding its midpoint and, inside it, to
/// a segment: same speaker containing the midpoint, else largest overlap,
/// else any segment containing the midpoint. Words that land nowhere are
/// counted as dropped. Every chunk segment gets an entry, possibly empty.
WordAssignment assign_words(std::span<const Chunk> chunks, std::span<const SourceWord> words);

struct CorpusBuildOptions {
  ChunkingPolicy chunking;
  BuildOptions build;
  unsigned jobs = 1;
};

struct CorpusBuild {
  /// Ordered by (recording_id, chunk_index) whatever the job count.
  std::vector<Dialogue> dialogues;
  std::size_t dropped_words = 0;
  std::size_t empty_chunks = 0;
};

/// Chunks every recording, assigns reference words and builds dialogues.
/// `reference` holds the transcripts of all sessions. Throws
/// ValidationError listing recordings that have segments but no transcript.
CorpusBuild build_corpus(const RecordingMap& diarization, const SegLst& reference,
                         const CorpusBuildOptions& opts);

/// Reference SegLST with one entry per diarized segment, words taken from
/// the assignment above on an unchunked timeline.
SegLst reference_seglst(const RecordingMap& recordings, const WordMap& words);

// ---------------------------------------------------------------- JSONL

std::string write_dialogues(std::span<const Dialogue> dialogues,
                            const CodecConfig& cfg = {});
/// Throws ParseError("source:line") on malformed or invariant-breaking lines.
std::vector<Dialogue> read_dialogues(std::string_view jsonl, std::string_view source = "<jsonl>",
                                     const CodecConfig& cfg = {});

}  // namespace dmasr
