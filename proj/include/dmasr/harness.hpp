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

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmasr/backend.hpp"
#include "dmasr/codec.hpp"
#include "dmasr/dialogue.hpp"
#include "dmasr/formats.hpp"

namespace dmasr {

struct TurnResponse {
  std::string text;
  bool failed = false;
  std::string diagnostic;

  bool operator==(const TurnResponse&) const = default;
};

struct DialogueRun {
  std::string chunk_id;
  std::vector<TurnResponse> responses;
  /// The backend could not reuse context, so prompts carried the history.
  bool replayed_history = false;

  bool operator==(const DialogueRun&) const = default;
};

/// Drives one dialogue turn by turn: open_audio with the chunk window, one
/// turn call per dialogue turn, close. A non-fatal backend error empties and
/// flags that turn only; a fatal one flags the rest of the dialogue too.
DialogueRun run_dialogue(const Dialogue& d, Backend& backend);

// ---------------------------------------------------------------- setups

enum class CueSource { kDiarization, kModel };

struct EvalSetup {
  CueSource speaker = CueSource::kDiarization;
  CueSource time = CueSource::kDiarization;

  /// "dia-spk,dia-time", "llm-spk,llm-time", ...
  std::string str() const;
  static EvalSetup parse(std::string_view s);
  static std::array<EvalSetup, 4> all();

  bool operator==(const EvalSetup&) const = default;
};

struct ComposedTurn {
  SegLstEntry entry;
  /// Model speaker requested but missing or unmapped; diarization used.
  bool speaker_fallback = false;
  /// Model times requested but not parsable; diarization used.
  bool time_fallback = false;
  int dropped_tokens = 0;
};

/// Turns responses into absolute-time SegLST entries under one setup. Text
/// always comes from the response; speaker and times come from the
/// diarized segment or from the decoded response as the setup says.
std::vector<ComposedTurn> compose_hypothesis(const Dialogue& d,
                                             std::span<const TurnResponse> responses,
                                             const EvalSetup& setup, const CodecConfig& cfg);

/// Composes every dialogue whose chunk_id appears in `runs`. Throws
/// ValidationError when a dialogue has no run.
SegLst compose_corpus(std::span<const Dialogue> dialogues, std::span<const DialogueRun> runs,
                      const EvalSetup& setup, const CodecConfig& cfg);

// ---------------------------------------------------------------- mock

struct MockOracleConfig {
  double word_sub_rate = 0;
  double word_del_rate = 0;
  double word_ins_rate = 0;
  double speaker_flip_rate = 0;
  /// Standard deviation of Gaussian jitter on every time token, seconds.
  double time_jitter_sd = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Applies the oracle's corruption to one clean target.
/// `chunk_speakers` bounds speaker flips to indices present in the chunk.
std::string corrupt_target(std::string_view clean_target, TargetMode mode, int chunk_speakers,
                           const MockOracleConfig& cfg, const CodecConfig& codec, RngStream& rng);

/// Backend that answers each turn with the clean target of the matching
/// dialogue turn, corrupted per MockOracleConfig. Each (chunk, turn) pair
/// draws from its own seeded stream, so runs are reproducible.
class MockOracleBackend : public Backend {
 public:
  MockOracleBackend(std::span<const Dialogue> references, MockOracleConfig cfg,
                    CodecConfig codec = {}, BackendCapabilities caps = {});

  std::unique_ptr<BackendSession> open_session() override;
  bool concurrent_sessions() const override { return true; }

  struct Reference {
    TargetMode mode = TargetMode::kPlain;
    int speakers = 1;
    std::vector<std::string> targets;
  };

 private:
  std::map<std::string, Reference> refs_;
  MockOracleConfig cfg_;
  CodecConfig codec_;
  BackendCapabilities caps_;
};

// ---------------------------------------------------------------- run log

/// One JSON object per turn: chunk_id, turn_index, status (ok|failed),
/// diagnostic, response, replayed_history.
std::string write_run_log(std::span<const DialogueRun> runs);
std::vector<DialogueRun> read_run_log(std::string_view jsonl, std::string_view source = "<log>");

}  // namespace dmasr
