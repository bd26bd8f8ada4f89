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

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dmasr/error.hpp"
#include "dmasr/formats.hpp"
#include "dmasr/timeline.hpp"

namespace dmasr {

// Diarization error

struct DerBreakdown {
  Time missed;
  Time false_alarm;
  Time confusion;
  /// Total reference speech, counted once per active speaker.
  Time scored;
  /// +inf when scored is zero but errors are not.
  double der = 0.0;
  /// Hypothesis speaker -> reference speaker.
  std::map<std::string, std::string> mapping;

  Time errors() const { return missed + false_alarm + confusion; }
};

/// Throws ValidationError for a negative collar.
DerBreakdown compute_der(std::span<const DiarSegment> ref, std::span<const DiarSegment> hyp,
                         Time collar = Time());

// Word / character error

enum class TokenUnit { kWord, kChar };

struct TokenizationMode {
  TokenUnit unit = TokenUnit::kWord;
  bool lowercase = true;
  bool strip_punct = true;

  static TokenizationMode word() { return {TokenUnit::kWord, true, true}; }
  static TokenizationMode chars() { return {TokenUnit::kChar, false, false}; }
  bool operator==(const TokenizationMode&) const = default;
};

/// "word" or "char", with each unit's default normalization.
TokenizationMode parse_tokenization(std::string_view name);
std::string to_string(TokenUnit unit);

/// Lowercasing and punctuation stripping are ASCII only; the apostrophe is
/// kept so contractions survive.
std::vector<std::string> tokenize(std::string_view text, const TokenizationMode& mode = {});

struct WerBreakdown {
  std::int64_t substitutions = 0;
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
  std::int64_t reference_length = 0;
  std::int64_t hypothesis_length = 0;
  /// +inf when the reference is empty but errors are not.
  double rate = 0.0;
  /// Hypothesis speaker -> reference speaker.
  std::map<std::string, std::string> assignment;

  std::int64_t errors() const { return substitutions + insertions + deletions; }
};

/// Entries may carry any session ids; they are all treated as one session.
WerBreakdown compute_cpwer(const SegLst& ref, const SegLst& hyp, const TokenizationMode& tok = {});

/// Tokens without word timings get equal slices of their word or segment
/// interval. Throws ValidationError for a negative collar.
WerBreakdown compute_tcpwer(const SegLst& ref, const SegLst& hyp, Time collar,
                            const TokenizationMode& tok = {});

// Reports

struct SessionScores {
  DerBreakdown der;
  WerBreakdown cpwer;
  WerBreakdown tcpwer;
};

struct ScoreSettings {
  Time collar_der;
  Time collar_tcp = Time::from_ticks(5 * Time::kTicksPerSecond);
  TokenizationMode tokenization;
};

struct ScoreReport {
  ScoreSettings settings;
  std::map<std::string, SessionScores> per_session;
  SessionScores aggregate;
};

/// Pooled sums with ratios recomputed from them. Throws ValidationError on
/// empty input or a repeated session id.
ScoreReport aggregate(const std::vector<std::pair<std::string, SessionScores>>& sessions,
                      const ScoreSettings& settings = {});

/// Thrown when reference and hypothesis cover different sessions.
class SessionMismatchError : public ValidationError {
 public:
  SessionMismatchError(std::vector<std::string> only_ref, std::vector<std::string> only_hyp);
  const std::vector<std::string>& only_in_reference() const { return only_ref_; }
  const std::vector<std::string>& only_in_hypothesis() const { return only_hyp_; }

 private:
  std::vector<std::string> only_ref_;
  std::vector<std::string> only_hyp_;
};

/// Scores every session with all three metrics, `jobs` sessions at a time.
ScoreReport score_sessions(const SegLst& ref, const SegLst& hyp, const ScoreSettings& settings,
                           unsigned jobs = 1);

/// Keys in fixed order; non-finite rates are written as the string "inf".
std::string report_json(const ScoreReport& report);
/// Columns: session, metric, value, components.
std::string report_tsv(const ScoreReport& report);
ScoreReport read_report_json(std::string_view json_text);

}  // namespace dmasr
