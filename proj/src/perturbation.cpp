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

#include "dmasr/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dmasr/error.hpp"

namespace dmasr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

constexpr int kMaxBoundaryAttempts = 64;

}  // namespace

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

int RngStream::uniform_int(int n) {
  const auto bound = static_cast<std::uint64_t>(n);
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<int>(x % bound);
}

double RngStream::normal(double mean, double sd) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream derive_rng_stream(std::uint64_t seed, std::string_view recording_id,
                            std::uint64_t chunk_index, std::uint64_t turn_index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a(recording_id));
  h = splitmix64(h ^ chunk_index);
  h = splitmix64(h ^ (turn_index * 0x9E3779B97F4A7C15ull));
  return RngStream(h);
}

void PerturbationConfig::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("perturbation probability must lie in [0, 1]");
  if (!(time_jitter_max >= 0.0)) throw ValidationError("time_jitter_max must be >= 0");
}

PerturbationRecord perturb_condition(const SegmentCondition& cond, const TimeInterval& source,
                                     int chunk_speakers, const PerturbationConfig& cfg,
                                     const CodecConfig& codec, RngStream& rng) {
  PerturbationRecord rec;
  rec.original = cond;
  rec.perturbed = cond;

  const bool pick_speaker = rng.bernoulli(cfg.p);
  const bool pick_start = rng.bernoulli(cfg.p);
  const bool pick_end = rng.bernoulli(cfg.p);

  if (pick_speaker && chunk_speakers > 1) {
    // Uniform over the other chunk speakers.
    int other = rng.uniform_int(chunk_speakers - 1);
    if (other >= cond.local_speaker) ++other;
    rec.perturbed.local_speaker = other;
    rec.speaker_perturbed = true;
  }

  if (pick_start || pick_end) {
    auto jittered = [&](Time t) {
      const double s = t.seconds() + rng.uniform(-cfg.time_jitter_max, cfg.time_jitter_max);
      return std::clamp(discretize_time(std::max(0.0, s), codec), 0, codec.max_time_index);
    };
    for (int attempt = 0; attempt < kMaxBoundaryAttempts; ++attempt) {
      int start = pick_start ? jittered(source.start) : cond.start_idx;
      int end = pick_end ? jittered(source.end) : cond.end_idx;
      if (start > end) std::swap(start, end);
      if (start != cond.start_idx || end != cond.end_idx) {
        rec.perturbed.start_idx = start;
        rec.perturbed.end_idx = end;
        rec.start_perturbed = pick_start;
        rec.end_perturbed = pick_end;
        break;
      }
    }
  }
  return rec;
}

}  // namespace dmasr
