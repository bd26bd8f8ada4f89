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

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmasr/backend.hpp"
#include "dmasr/codec.hpp"
#include "dmasr/dialogue.hpp"
#include "dmasr/formats.hpp"
#include "dmasr/harness.hpp"
#include "dmasr/metrics.hpp"
#include "dmasr/perturbation.hpp"
#include "dmasr/timeline.hpp"

namespace dmasr {

/// Every tunable of a run. JSON config files use the key names listed at
/// apply_config_json.
struct RunConfig {
  CodecConfig codec;
  ChunkingPolicy chunking;
  PerturbationConfig perturbation;
  TargetMode mode = TargetMode::kPlain;
  EvalSetup setup;
  ScoreSettings score;
  MockOracleConfig mock;
  std::string backend = "mock";
  std::chrono::milliseconds backend_timeout{30000};
  unsigned jobs = 1;

  void validate() const;
};

/// Overlays a JSON object onto `cfg`. Keys: delta_t, max_time_index,
/// min_chunk, max_chunk, perturb_p, time_jitter_max, seed, mode, setup,
/// collar_der, collar_tcp, tokenize, lowercase, strip_punct, backend,
/// backend_timeout_ms, jobs, word_sub_rate, word_del_rate, word_ins_rate,
/// speaker_flip_rate, time_jitter_sd. Unknown keys and bad values throw
/// ValidationError (ParseError for malformed JSON).
void apply_config_json(RunConfig& cfg, std::string_view json_text,
                       std::string_view source = "<config>");

/// The effective configuration in the same key layout.
std::string run_config_json(const RunConfig& cfg);

// ---------------------------------------------------------------- corpus

struct Corpus {
  /// Reference diarization.
  RecordingMap recordings;
  /// Reference transcript, one entry per reference segment.
  SegLst reference;
  /// Present when the corpus was ingested from a word-level CTM.
  std::optional<WordMap> words;
  std::vector<std::string> warnings;
};

struct IngestInputs {
  std::vector<std::string> rttm;
  std::vector<std::string> ctm;
  std::vector<std::string> seglst;
};

/// Parses and cross-checks the inputs. RTTM is required, plus CTM or SegLST
/// transcripts (not both). A recording in two RTTM files, or transcript
/// sessions without diarization, are errors.
Corpus ingest(const IngestInputs& inputs);

/// Writes reference.rttm, reference.seglst.json, words.ctm (if any) and
/// manifest.json. Output is a pure function of the inputs.
void write_corpus(const Corpus& corpus, const IngestInputs& inputs,
                  const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

// ---------------------------------------------------------------- build

/// Builds dialogues over `diarization` (the reference diarization when
/// null) with transcripts from the corpus reference.
CorpusBuild build_dialogues(const Corpus& corpus, const RecordingMap* diarization,
                            const RunConfig& cfg);

// ---------------------------------------------------------------- simulate

/// "mock" or "external:<endpoint>". The mock answers from `dialogues`.
std::unique_ptr<Backend> make_backend(const RunConfig& cfg, std::span<const Dialogue> dialogues);

/// Runs every dialogue; `jobs` dialogues at a time when the backend allows.
std::vector<DialogueRun> run_corpus(std::span<const Dialogue> dialogues, Backend& backend,
                                    unsigned jobs);

struct CompositionSummary {
  SegLst hypothesis;
  /// Parallel to the runs: one entry per turn.
  std::vector<std::vector<ComposedTurn>> turns;
  std::size_t speaker_fallbacks = 0;
  std::size_t time_fallbacks = 0;
  std::size_t failed_turns = 0;
};

CompositionSummary compose_runs(std::span<const Dialogue> dialogues,
                                std::span<const DialogueRun> runs, const EvalSetup& setup,
                                const CodecConfig& codec);

/// Run log with per-turn composition flags appended.
std::string write_annotated_run_log(std::span<const DialogueRun> runs,
                                    const CompositionSummary& composed, const EvalSetup& setup);

// ---------------------------------------------------------------- files

void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace dmasr
