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

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dmasr/timeline.hpp"

namespace dmasr {

// RTTM
//
//   SPEAKER <file> <chan> <tbeg> <tdur> <ortho> <stype> <name> <conf> <slat>
//
// Only SPEAKER records are read; ";;" comments and other record types are
// skipped. The channel is ignored on read and written as 1.

using RecordingMap = std::map<std::string, Recording>;

/// Recording duration is the latest segment end unless `duration_overrides`
/// names the recording. Throws ParseError("source:line") on malformed rows.
RecordingMap read_rttm(std::istream& in, std::string_view source = "<rttm>",
                       const std::map<std::string, Time>& duration_overrides = {});
RecordingMap read_rttm_file(const std::string& path,
                            const std::map<std::string, Time>& duration_overrides = {});
std::string write_rttm(const RecordingMap& recordings);

// SegLST: JSON array of
//   {"session_id", "speaker", "start_time", "end_time", "words",
//    "word_timings": [[word, start, end], ...]}   (word_timings optional)

struct SegLstEntry {
  std::string session_id;
  std::string speaker;
  TimeInterval interval;
  /// Space separated for word scripts, unseparated for CJK.
  std::string words;
  std::optional<std::vector<WordTiming>> word_timings;

  void validate() const;
  bool operator==(const SegLstEntry&) const = default;
};

using SegLst = std::vector<SegLstEntry>;

/// Sort key for the writer: (session_id, start, speaker, end, words).
void sort_seglst(SegLst& entries);

SegLst read_seglst(std::string_view json_text, std::string_view source = "<seglst>");
SegLst read_seglst_file(const std::string& path);
std::string write_seglst(SegLst entries);

/// Groups entries by session id, keeping order.
std::map<std::string, SegLst> group_by_session(const SegLst& entries);

// CTM word transcripts
//
//   <file> <chan> <tbeg> <tdur> <word> [conf] [speaker]

using WordKey = std::pair<std::string, std::string>;  // (recording_id, speaker)
using WordMap = std::map<WordKey, std::vector<WordTiming>>;

struct WordTranscript {
  WordMap words;
  /// Non-fatal findings such as overlapping words of one speaker.
  std::vector<std::string> warnings;
};

WordTranscript read_word_transcript(std::istream& in, std::string_view source = "<ctm>");
WordTranscript read_word_transcript_file(const std::string& path);
std::string write_word_transcript(const WordMap& words);

/// Reads a whole file; throws ParseError when it cannot be opened.
std::string read_text_file(const std::string& path);

}  // namespace dmasr
