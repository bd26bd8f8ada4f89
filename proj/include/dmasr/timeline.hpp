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
#include <optional>
#include <string>
#include <vector>

#include "dmasr/time.hpp"

namespace dmasr {

struct TimeInterval {
  Time start;
  Time end;

  Time duration() const { return end - start; }
  bool contains(Time t) const { return start <= t && t <= end; }

  /// Throws ValidationError unless 0 <= start <= end.
  void validate() const;

  static TimeInterval from_seconds(double start, double end) {
    return {Time::from_seconds(start), Time::from_seconds(end)};
  }

  auto operator<=>(const TimeInterval&) const = default;
};

Time overlap_duration(const TimeInterval& a, const TimeInterval& b);

struct DiarSegment {
  std::string speaker;
  TimeInterval interval;

  void validate() const;

  bool operator==(const DiarSegment&) const = default;
};

/// A word with its time span; chunk-relative or absolute depending on use.
struct WordTiming {
  std::string word;
  TimeInterval interval;

  bool operator==(const WordTiming&) const = default;
};

/// Ordering used everywhere segments are sorted: (start, end, speaker).
bool segment_less(const DiarSegment& a, const DiarSegment& b);
void sort_segments(std::vector<DiarSegment>& segments);

struct Recording {
  std::string recording_id;
  Time duration;
  std::vector<DiarSegment> segments;

  /// Sorts segments and checks every one lies within [0, duration].
  void normalize();
  void validate() const;

  bool operator==(const Recording&) const = default;
};

struct Chunk {
  std::string chunk_id;
  std::string recording_id;
  std::size_t index = 0;
  /// Absolute window on the recording timeline.
  TimeInterval window;
  /// Chunk-relative, sorted by (start, end, speaker).
  std::vector<DiarSegment> segments;

  void validate(Time max_chunk_duration) const;
  bool operator==(const Chunk&) const = default;
};

struct ChunkingPolicy {
  Time min_duration = Time::from_ticks(15 * Time::kTicksPerSecond);
  Time max_duration = Time::from_ticks(25 * Time::kTicksPerSecond);
  /// Clipped pieces shorter than this are dropped.
  Time min_clip_duration = Time::from_ticks(5);
  /// Gap cuts land on multiples of this when the gap allows, so times on
  /// the token grid stay on it after re-basing to the chunk.
  Time cut_grid = Time::from_ticks(10);
};

/// Intersection of `seg` with `window`, re-based to window-relative time.
std::optional<DiarSegment> clip_segment(const DiarSegment& seg, const TimeInterval& window,
                                        Time min_clip_duration = ChunkingPolicy{}.min_clip_duration);

/// Splits a recording into consecutive windows. Each cut is placed at the
/// midpoint (snapped to cut_grid) of the latest silence gap that falls
/// between min and max duration from the chunk start; with no such gap the
/// cut is forced at max duration. Throws ValidationError when min_duration <= 0 or
/// min_duration > max_duration.
std::vector<Chunk> chunk_recording(const Recording& rec, const ChunkingPolicy& policy = {});

std::string make_chunk_id(const std::string& recording_id, std::size_t index);

}  // namespace dmasr
