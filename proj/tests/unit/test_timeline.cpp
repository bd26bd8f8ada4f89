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

#include <doctest.h>

#include <map>
#include <random>

#include "dmasr/error.hpp"
#include "dmasr/timeline.hpp"

using namespace dmasr;

namespace {

TimeInterval iv(double a, double b) { return TimeInterval::from_seconds(a, b); }
Time sec(double s) { return Time::from_seconds(s); }

Recording random_recording(std::mt19937_64& gen, double duration, int speakers, int segments) {
  std::uniform_real_distribution<double> start(0.0, duration);
  std::uniform_real_distribution<double> len(0.05, 6.0);
  std::uniform_int_distribution<int> spk(0, speakers - 1);
  Recording rec{"r", sec(duration), {}};
  for (int i = 0; i < segments; ++i) {
    const double s = start(gen);
    const double e = std::min(duration, s + len(gen));
    if (e - s < 0.07) continue;
    rec.segments.push_back({"s" + std::to_string(spk(gen)), iv(s, e)});
  }
  rec.normalize();
  return rec;
}

}  // namespace

TEST_CASE("time: tick arithmetic and parsing") {
  CHECK(sec(3.2).ticks() == 320);
  CHECK(sec(1.005).ticks() == 101);
  CHECK(sec(-0.004).ticks() == 0);
  CHECK(parse_seconds("3.20") == sec(3.2));
  CHECK(parse_seconds("12") == sec(12));
  CHECK(parse_seconds("1e-2") == Time::from_ticks(1));
  CHECK_THROWS_AS(parse_seconds("x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_seconds("1.0abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_seconds("inf"), std::invalid_argument);
  CHECK(format_seconds(sec(3.2)) == "3.20");
  CHECK(format_seconds(Time::from_ticks(5)) == "0.05");
  CHECK(format_seconds(Time::from_ticks(-150)) == "-1.50");
}

TEST_CASE("overlap_duration") {
  CHECK(overlap_duration(iv(0, 5), iv(3, 8)) == sec(2));
  CHECK(overlap_duration(iv(0, 5), iv(5, 9)) == Time());
  CHECK(overlap_duration(iv(0, 5), iv(1, 2)) == sec(1));
  CHECK(overlap_duration(iv(0, 1), iv(4, 9)) == Time());
}

TEST_CASE("interval and segment validation") {
  CHECK_NOTHROW(iv(0, 0).validate());
  CHECK_THROWS_AS(iv(2, 1).validate(), ValidationError);
  CHECK_THROWS_AS((TimeInterval{sec(-1), sec(1)}.validate()), ValidationError);
  CHECK_THROWS_AS((DiarSegment{"", iv(0, 1)}.validate()), ValidationError);
  Recording rec{"r", sec(5), {{"a", iv(4, 6)}}};
  CHECK_THROWS_AS(rec.validate(), ValidationError);
}

TEST_CASE("recording normalize sorts by (start, end, speaker)") {
  Recording rec{"r", sec(10), {{"b", iv(1, 2)}, {"a", iv(1, 2)}, {"a", iv(0, 3)}, {"c", iv(1, 1.5)}}};
  rec.normalize();
  REQUIRE(rec.segments.size() == 4);
  CHECK(rec.segments[0].interval == iv(0, 3));
  CHECK(rec.segments[1].speaker == "c");
  CHECK(rec.segments[2].speaker == "a");
  CHECK(rec.segments[3].speaker == "b");
}

TEST_CASE("clip_segment") {
  const auto w = iv(0, 10);
  auto a = clip_segment({"spkA", iv(3, 8)}, w);
  REQUIRE(a);
  CHECK(a->interval == iv(3, 8));
  auto b = clip_segment({"spkA", iv(8, 12)}, w);
  REQUIRE(b);
  CHECK(b->interval == iv(8, 10));
  CHECK_FALSE(clip_segment({"spkA", iv(9.98, 10.01)}, w));
  auto c = clip_segment({"spkA", iv(12, 14)}, iv(10, 20));
  REQUIRE(c);
  CHECK(c->interval == iv(2, 4));
  CHECK_FALSE(clip_segment({"spkA", iv(1, 2)}, iv(10, 20)));
}

TEST_CASE("chunk_recording: worked examples") {
  SUBCASE("fits one window") {
    Recording rec{"r", sec(20), {{"a", iv(1, 5)}, {"b", iv(6, 19)}}};
    auto chunks = chunk_recording(rec);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].window == iv(0, 20));
    CHECK(chunks[0].segments == rec.segments);
    CHECK(chunks[0].chunk_id == "r_0000");
  }
  SUBCASE("cut at gap midpoint") {
    Recording rec{"r", sec(40), {{"a", iv(0, 22)}, {"b", iv(23, 40)}}};
    auto chunks = chunk_recording(rec);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].window == iv(0, 22.5));
    CHECK(chunks[1].window == iv(22.5, 40));
    REQUIRE(chunks[1].segments.size() == 1);
    CHECK(chunks[1].segments[0].interval == iv(0.5, 17.5));
  }
  SUBCASE("hard cut without a gap") {
    Recording rec{"r", sec(30), {{"a", iv(0, 30)}}};
    auto chunks = chunk_recording(rec);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].window == iv(0, 25));
    CHECK(chunks[1].window == iv(25, 30));
    CHECK(chunks[1].segments[0].interval == iv(0, 5));
  }
  SUBCASE("latest gap wins") {
    Recording rec{"r", sec(50), {{"a", iv(0, 16)}, {"a", iv(17, 20)}, {"b", iv(21, 50)}}};
    auto chunks = chunk_recording(rec);
    CHECK(chunks[0].window == iv(0, 20.5));
  }
  SUBCASE("touching segments leave a zero-length gap") {
    Recording rec{"r", sec(40), {{"a", iv(0, 18)}, {"b", iv(18, 40)}}};
    auto chunks = chunk_recording(rec);
    CHECK(chunks[0].window == iv(0, 18));
  }
  SUBCASE("cuts snap onto the grid when the gap allows") {
    Recording rec{"r", sec(40), {{"a", iv(0, 20.0)}, {"b", iv(20.3, 40)}}};
    auto chunks = chunk_recording(rec);
    CHECK(chunks[0].window == iv(0, 20.1));
    ChunkingPolicy fine;
    fine.cut_grid = Time::from_ticks(1);
    CHECK(chunk_recording(rec, fine)[0].window == iv(0, 20.15));
  }
  SUBCASE("bad policy") {
    Recording rec{"r", sec(40), {}};
    ChunkingPolicy p;
    p.min_duration = Time();
    CHECK_THROWS_AS(chunk_recording(rec, p), ValidationError);
    p.min_duration = sec(30);
    CHECK_THROWS_AS(chunk_recording(rec, p), ValidationError);
  }
}

TEST_CASE("chunk_recording properties on random recordings") {
  std::mt19937_64 gen(20260101);
  const ChunkingPolicy policy;
  for (int trial = 0; trial < 300; ++trial) {
    const double duration = std::uniform_real_distribution<double>(1.0, 180.0)(gen);
    const int segs = std::uniform_int_distribution<int>(0, 60)(gen);
    const auto rec = random_recording(gen, duration, 4, segs);
    const auto chunks = chunk_recording(rec, policy);
    REQUIRE(!chunks.empty());

    // Tiling.
    CHECK(chunks.front().window.start == Time());
    CHECK(chunks.back().window.end == rec.duration);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const auto& c = chunks[i];
      CHECK(c.index == i);
      CHECK(c.window.duration() > Time());
      CHECK(c.window.duration() <= policy.max_duration);
      if (i + 1 < chunks.size()) {
        CHECK(c.window.duration() >= policy.min_duration);
        CHECK(chunks[i + 1].window.start == c.window.end);
      }
      CHECK_NOTHROW(c.validate(policy.max_duration));
    }

    // Conservation of per-speaker speech, up to dropped slivers.
    std::map<std::string, Time::rep> total, chunked;
    for (const auto& s : rec.segments) total[s.speaker] += s.interval.duration().ticks();
    for (const auto& c : chunks)
      for (const auto& s : c.segments) chunked[s.speaker] += s.interval.duration().ticks();
    for (const auto& [spk, t] : total) {
      // A segment crossing a cut can lose a sliver on each side of it.
      Time::rep crossings = 0;
      for (const auto& s : rec.segments) {
        if (s.speaker != spk) continue;
        for (std::size_t i = 0; i + 1 < chunks.size(); ++i) {
          const Time cut = chunks[i].window.end;
          if (s.interval.start < cut && cut < s.interval.end) ++crossings;
        }
      }
      const Time::rep slack = 2 * policy.min_clip_duration.ticks() * crossings;
      CHECK(t - chunked[spk] >= 0);
      CHECK(t - chunked[spk] <= slack);
    }

    // Idempotence for short recordings.
    if (rec.duration <= policy.max_duration) {
      REQUIRE(chunks.size() == 1);
      CHECK(chunks[0].segments == rec.segments);
    }
  }
}
