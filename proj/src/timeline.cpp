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

#include "dmasr/timeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <tuple>

#include "dmasr/error.hpp"

namespace dmasr {

Time parse_seconds(std::string_view text) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return Time::from_seconds(value);
}

std::string format_seconds(Time t) {
  const auto ticks = t.ticks();
  const auto mag = ticks < 0 ? -ticks : ticks;
  char out[48];
  std::snprintf(out, sizeof(out), "%s%lld.%02lld", ticks < 0 ? "-" : "",
                static_cast<long long>(mag / Time::kTicksPerSecond),
                static_cast<long long>(mag % Time::kTicksPerSecond));
  return out;
}

void TimeInterval::validate() const {
  if (start < Time{}) throw ValidationError("interval starts before 0: " + format_seconds(start));
  if (end < start) {
    throw ValidationError("interval end " + format_seconds(end) + " precedes start " +
                          format_seconds(start));
  }
}

Time overlap_duration(const TimeInterval& a, const TimeInterval& b) {
  const Time lo = max(a.start, b.start);
  const Time hi = min(a.end, b.end);
  return hi > lo ? hi - lo : Time{};
}

void DiarSegment::validate() const {
  if (speaker.empty()) throw ValidationError("segment has an empty speaker label");
  interval.validate();
}

bool segment_less(const DiarSegment& a, const DiarSegment& b) {
  return std::tie(a.interval.start, a.interval.end, a.speaker) <
         std::tie(b.interval.start, b.interval.end, b.speaker);
}

void sort_segments(std::vector<DiarSegment>& segments) {
  std::stable_sort(segments.begin(), segments.end(), segment_less);
}

void Recording::normalize() {
  sort_segments(segments);
  validate();
}

void Recording::validate() const {
  if (recording_id.empty()) throw ValidationError("recording has an empty id");
  if (duration < Time{}) throw ValidationError(recording_id + ": negative duration");
  for (const auto& seg : segments) {
    seg.validate();
    if (seg.interval.end > duration) {
      throw ValidationError(recording_id + ": segment of " + seg.speaker + " ends at " +
                            format_seconds(seg.interval.end) + " past duration " +
                            format_seconds(duration));
    }
  }
  if (!std::is_sorted(segments.begin(), segments.end(), segment_less)) {
    throw ValidationError(recording_id + ": segments are not sorted by (start, end, speaker)");
  }
}

void Chunk::validate(Time max_chunk_duration) const {
  window.validate();
  const Time dur = window.duration();
  if (dur <= Time{} || dur > max_chunk_duration) {
    throw ValidationError(chunk_id + ": window duration " + format_seconds(dur) +
                          " outside (0, " + format_seconds(max_chunk_duration) + "]");
  }
  for (const auto& seg : segments) {
    seg.validate();
    if (seg.interval.end > dur) throw ValidationError(chunk_id + ": segment past window end");
  }
  if (!std::is_sorted(segments.begin(), segments.end(), segment_less)) {
    throw ValidationError(chunk_id + ": segments are not sorted");
  }
}

std::optional<DiarSegment> clip_segment(const DiarSegment& seg, const TimeInterval& window,
                                        Time min_clip_duration) {
  const Time lo = max(seg.interval.start, window.start);
  const Time hi = min(seg.interval.end, window.end);
  if (hi < lo || hi - lo < min_clip_duration) return std::nullopt;
  return DiarSegment{seg.speaker, {lo - window.start, hi - window.start}};
}

std::string make_chunk_id(const std::string& recording_id, std::size_t index) {
  char suffix[32];
  std::snprintf(suffix, sizeof(suffix), "_%04zu", index);
  return recording_id + suffix;
}

namespace {

// Maximal stretches of [0, duration] where no segment is active, i.e. the
// points not strictly inside any segment. Touching segments leave a
// zero-length gap at the shared boundary.
std::vector<TimeInterval> silence_gaps(const Recording& rec) {
  std::vector<TimeInterval> spans;
  spans.reserve(rec.segments.size());
  for (const auto& s : rec.segments) {
    if (s.interval.duration() > Time{}) spans.push_back(s.interval);
  }
  std::sort(spans.begin(), spans.end());

  std::vector<TimeInterval> gaps;
  Time cursor{};
  for (const auto& s : spans) {
    if (s.start >= cursor) gaps.push_back({cursor, s.start});
    cursor = max(cursor, s.end);
  }
  if (cursor <= rec.duration) gaps.push_back({cursor, rec.duration});
  return gaps;
}

// Midpoint of [lo, hi], moved onto the grid when a grid point lies inside.
Time snap_cut(Time lo, Time hi, Time grid) {
  const Time::rep mid = (lo.ticks() + hi.ticks()) / 2;
  const Time::rep g = grid.ticks();
  if (g <= 1) return Time::from_ticks(mid);
  const Time::rep down = mid / g * g;
  if (down >= lo.ticks()) return Time::from_ticks(down);
  if (down + g <= hi.ticks()) return Time::from_ticks(down + g);
  return Time::from_ticks(mid);
}

}  // namespace

std::vector<Chunk> chunk_recording(const Recording& rec, const ChunkingPolicy& policy) {
  if (policy.min_duration <= Time{}) throw ValidationError("min chunk duration must be positive");
  if (policy.min_duration > policy.max_duration) {
    throw ValidationError("min chunk duration exceeds max chunk duration");
  }

  const auto gaps = silence_gaps(rec);
  std::vector<TimeInterval> windows;
  Time start{};
  while (rec.duration - start > policy.max_duration) {
    const TimeInterval admissible{start + policy.min_duration, start + policy.max_duration};
    std::optional<Time> cut;
    for (auto it = gaps.rbegin(); it != gaps.rend(); ++it) {
      const Time lo = max(it->start, admissible.start);
      const Time hi = min(it->end, admissible.end);
      if (lo <= hi) {
        cut = snap_cut(lo, hi, policy.cut_grid);
        break;
      }
    }
    const Time end = cut.value_or(admissible.end);
    windows.push_back({start, end});
    start = end;
  }
  if (rec.duration > start) windows.push_back({start, rec.duration});

  std::vector<Chunk> chunks;
  chunks.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    Chunk c;
    c.chunk_id = make_chunk_id(rec.recording_id, i);
    c.recording_id = rec.recording_id;
    c.index = i;
    c.window = windows[i];
    for (const auto& seg : rec.segments) {
      if (seg.interval.end < c.window.start || seg.interval.start > c.window.end) continue;
      if (auto clipped = clip_segment(seg, c.window, policy.min_clip_duration)) {
        c.segments.push_back(std::move(*clipped));
      }
    }
    sort_segments(c.segments);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

}  // namespace dmasr
