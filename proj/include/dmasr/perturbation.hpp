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
#include <random>
#include <string_view>

#include "dmasr/codec.hpp"

namespace dmasr {

/// Deterministic random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the draws below avoid the
/// implementation-defined std:: distributions so results match across
/// standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  int uniform_int(int n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean, double sd);

 private:
  std::mt19937_64 engine_;
};

/// Independent stream per (seed, recording, chunk, turn); the same inputs
/// always produce the same stream whatever order they are requested in.
RngStream derive_rng_stream(std::uint64_t seed, std::string_view recording_id,
                            std::uint64_t chunk_index, std::uint64_t turn_index);

struct PerturbationConfig {
  double p = 0.1;
  double time_jitter_max = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PerturbationRecord {
  bool speaker_perturbed = false;
  bool start_perturbed = false;
  bool end_perturbed = false;
  SegmentCondition original;
  SegmentCondition perturbed;

  bool any() const { return speaker_perturbed || start_perturbed || end_perturbed; }
  bool operator==(const PerturbationRecord&) const = default;
};

/// Corrupts the prompt-side cue of one turn. Speaker, start and end are each
/// selected with probability cfg.p. A selected speaker is replaced by a
/// different in-chunk index (never selected when the chunk has one
/// speaker). Selected boundaries get uniform jitter in
/// [-time_jitter_max, time_jitter_max] on the continuous `source` times,
/// are re-discretized, clamped to the grid and put back in order. Boundary
/// draws repeat until the condition actually changes; if that proves
/// impossible (zero jitter range) the boundary flags are cleared.
PerturbationRecord perturb_condition(const SegmentCondition& cond, const TimeInterval& source,
                                     int chunk_speakers, const PerturbationConfig& cfg,
                                     const CodecConfig& codec, RngStream& rng);

}  // namespace dmasr
