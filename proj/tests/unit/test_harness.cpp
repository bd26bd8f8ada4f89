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

#include <deque>
#include <functional>

#include "dmasr/error.hpp"
#include "dmasr/harness.hpp"
#include "dmasr/metrics.hpp"
#include "dmasr/text.hpp"

using namespace dmasr;

namespace {

TimeInterval iv(double a, double b) { return TimeInterval::from_seconds(a, b); }

Dialogue sample_dialogue(TargetMode mode = TargetMode::kWithTimestamps) {
  Chunk c{"m1_0001", "m1", 1, iv(20, 40), {}};
  c.segments = {{"bob", iv(0.5, 3.0)}, {"amy", iv(2.0, 5.0)}, {"bob", iv(6.0, 8.0)}};
  ChunkTranscripts t;
  t[0] = {{{"hello", iv(0.5, 1.0)}, {"there", iv(1.2, 3.0)}}, true};
  t[1] = {{{"good", iv(2.0, 2.5)}, {"day", iv(2.5, 3.0)}, {"to", iv(3.1, 3.5)}, {"you", iv(3.5, 5.0)}},
          true};
  t[2] = {{{"bye", iv(6.0, 8.0)}}, true};
  BuildOptions opts;
  opts.mode = mode;
  return build_dialogue(c, t, opts);
}

/// Scripted in-process backend.
class ScriptedBackend : public Backend {
 public:
  std::function<std::string(std::size_t, const std::string&)> reply;
  bool reuse = true;
  bool fail_open = false;
  std::vector<std::string> calls;

  std::unique_ptr<BackendSession> open_session() override {
    return std::make_unique<Session>(*this);
  }

 private:
  class Session : public BackendSession {
   public:
    explicit Session(ScriptedBackend& b) : b_(b) {}
    BackendCapabilities capabilities() const override { return {b_.reuse, true}; }
    void open_audio(const std::string& chunk, const AudioRef& a) override {
      b_.calls.push_back("open " + chunk + " " + format_seconds(a.start) + "-" + format_seconds(a.end));
      if (b_.fail_open) throw BackendError("no audio", true);
    }
    std::string turn(const std::string& prompt) override {
      b_.calls.push_back("turn");
      return b_.reply(k_++, prompt);
    }
    void close() override { b_.calls.push_back("close"); }

   private:
    ScriptedBackend& b_;
    std::size_t k_ = 0;
  };
};

}  // namespace

TEST_CASE("run_dialogue: call sequence") {
  const auto d = sample_dialogue();
  ScriptedBackend b;
  b.reply = [](std::size_t k, const std::string&) { return "r" + std::to_string(k); };
  const auto run = run_dialogue(d, b);
  CHECK(b.calls == std::vector<std::string>{"open m1_0001 20.00-40.00", "turn", "turn", "turn", "close"});
  REQUIRE(run.responses.size() == 3);
  CHECK(run.responses[2].text == "r2");
  CHECK_FALSE(run.replayed_history);
}

TEST_CASE("run_dialogue: single turn") {
  Chunk c{"x_0000", "x", 0, iv(0, 5), {{"a", iv(0, 1)}}};
  ChunkTranscripts t;
  t[0] = {{}, true};
  const auto d = build_dialogue(c, t, {});
  ScriptedBackend b;
  b.reply = [](std::size_t, const std::string&) { return ""; };
  run_dialogue(d, b);
  CHECK(b.calls.size() == 3);
}

TEST_CASE("run_dialogue: non-fatal error flags one turn") {
  const auto d = sample_dialogue();
  ScriptedBackend b;
  b.reply = [](std::size_t k, const std::string&) -> std::string {
    if (k == 1) throw BackendError("busy", false);
    return "ok";
  };
  const auto run = run_dialogue(d, b);
  CHECK_FALSE(run.responses[0].failed);
  CHECK(run.responses[1].failed);
  CHECK(run.responses[1].text.empty());
  CHECK(run.responses[1].diagnostic.find("busy") != std::string::npos);
  CHECK_FALSE(run.responses[2].failed);
  CHECK(run.responses[2].text == "ok");
}

TEST_CASE("run_dialogue: fatal error flags the rest") {
  const auto d = sample_dialogue();
  ScriptedBackend b;
  b.reply = [](std::size_t k, const std::string&) -> std::string {
    if (k == 1) throw BackendError("gone", true);
    return "ok";
  };
  const auto run = run_dialogue(d, b);
  CHECK_FALSE(run.responses[0].failed);
  CHECK(run.responses[1].failed);
  CHECK(run.responses[2].failed);
  CHECK(b.calls.back() == "close");

  ScriptedBackend closed;
  closed.fail_open = true;
  const auto none = run_dialogue(d, closed);
  for (const auto& r : none.responses) CHECK(r.failed);
}

TEST_CASE("run_dialogue: history replay without context reuse") {
  const auto d = sample_dialogue();
  ScriptedBackend b;
  b.reuse = false;
  std::vector<std::string> prompts;
  b.reply = [&](std::size_t k, const std::string& p) {
    prompts.push_back(p);
    return "R" + std::to_string(k);
  };
  const auto run = run_dialogue(d, b);
  CHECK(run.replayed_history);
  CHECK(prompts[0] == d.turns[0].prompt_text);
  CHECK(prompts[1] == d.turns[0].prompt_text + "R0" + d.turns[1].prompt_text);
  CHECK(prompts[2] == d.turns[0].prompt_text + "R0" + d.turns[1].prompt_text + "R1" +
                          d.turns[2].prompt_text);
}

TEST_CASE("eval setups") {
  CHECK(EvalSetup{}.str() == "dia-spk,dia-time");
  CHECK(EvalSetup::parse("llm-spk,dia-time") == EvalSetup{CueSource::kModel, CueSource::kDiarization});
  CHECK_THROWS_AS(EvalSetup::parse("llm"), ValidationError);
  CHECK(EvalSetup::all().size() == 4);
}

TEST_CASE("compose_hypothesis: oracle responses reproduce the reference") {
  const auto d = sample_dialogue();
  MockOracleBackend mock(std::span(&d, 1), {});
  const auto run = run_dialogue(d, mock);
  for (std::size_t k = 0; k < d.turns.size(); ++k) CHECK(run.responses[k].text == d.turns[k].target_text);
  for (const auto& setup : EvalSetup::all()) {
    const auto turns = compose_hypothesis(d, run.responses, setup, {});
    REQUIRE(turns.size() == 3);
    CHECK(turns[0].entry.session_id == "m1");
    CHECK(turns[0].entry.speaker == "bob");
    CHECK(turns[0].entry.interval == iv(20.5, 23.0));
    CHECK(turns[1].entry.words == "good day to you");
    CHECK_FALSE(turns[1].speaker_fallback);
    CHECK_FALSE(turns[1].time_fallback);
  }
}

TEST_CASE("compose_hypothesis: cue sources") {
  const auto d = sample_dialogue();
  // Model says speaker 1 (amy) and times 2.1..2.9 for turn 0.
  std::vector<TurnResponse> rs(3);
  rs[0].text = "<|start_of_spk|><|spk_idx_1|><|end_of_spk|><|time_idx_21|>hey<|time_idx_29|>";
  rs[1].text = "no tokens at all";
  rs[2].text = "<|spk_idx_7|><|time_idx_60|>bye<|time_idx_80|>";

  auto dia = compose_hypothesis(d, rs, {CueSource::kDiarization, CueSource::kDiarization}, {});
  CHECK(dia[0].entry.speaker == "bob");
  CHECK(dia[0].entry.interval == iv(20.5, 23.0));
  CHECK_FALSE(dia[0].entry.word_timings);

  auto llm = compose_hypothesis(d, rs, {CueSource::kModel, CueSource::kModel}, {});
  CHECK(llm[0].entry.speaker == "amy");
  CHECK(llm[0].entry.interval == iv(22.1, 22.9));
  REQUIRE(llm[0].entry.word_timings);
  CHECK(llm[0].entry.word_timings->at(0).interval == iv(22.1, 22.9));
  // Turn 1 has neither speaker nor times: both fall back.
  CHECK(llm[1].speaker_fallback);
  CHECK(llm[1].time_fallback);
  CHECK(llm[1].entry.speaker == "amy");
  CHECK(llm[1].entry.interval == iv(22, 25));
  CHECK(llm[1].entry.words == "no tokens at all");
  // Turn 2 names a speaker the chunk does not have.
  CHECK(llm[2].speaker_fallback);
  CHECK(llm[2].entry.speaker == "bob");
  CHECK_FALSE(llm[2].time_fallback);

  CHECK_THROWS_AS(compose_hypothesis(d, std::span(rs).first(2), {}, {}), ValidationError);
}

TEST_CASE("mock oracle corruption") {
  const CodecConfig codec;
  const std::string clean =
      "<|start_of_spk|><|spk_idx_0|><|end_of_spk|><|time_idx_1|>a<|time_idx_2|>b<|time_idx_3|>c"
      "<|time_idx_4|>d<|time_idx_5|>";
  RngStream rng(1);
  CHECK(corrupt_target(clean, TargetMode::kWithTimestamps, 2, {}, codec, rng) == clean);

  MockOracleConfig sub;
  sub.word_sub_rate = 1;
  const auto noisy = corrupt_target(clean, TargetMode::kWithTimestamps, 2, sub, codec, rng);
  const auto d = decode_response(noisy, {}, TargetMode::kWithTimestamps, codec);
  REQUIRE(d.target.words.size() == 4);
  SegLst ref{{"s", "x", iv(0, 1), "a b c d", {}}};
  SegLst hyp{{"s", "x", iv(0, 1), text::join_words(d.target.words), {}}};
  CHECK(compute_cpwer(ref, hyp).substitutions == 4);
  CHECK(d.target.time_indices == std::vector<int>{1, 2, 3, 4, 5});

  MockOracleConfig flip;
  flip.speaker_flip_rate = 1;
  for (int i = 0; i < 20; ++i) {
    const auto f = corrupt_target(clean, TargetMode::kWithTimestamps, 2, flip, codec, rng);
    CHECK(decode_response(f, {}, TargetMode::kWithTimestamps, codec).target.leading_speaker == 1);
  }

  MockOracleConfig del;
  del.word_del_rate = 1;
  CHECK(corrupt_target(clean, TargetMode::kWithTimestamps, 2, del, codec, rng) ==
        "<|start_of_spk|><|spk_idx_0|><|end_of_spk|>");

  MockOracleConfig ins;
  ins.word_ins_rate = 1;
  const auto more = corrupt_target(clean, TargetMode::kWithTimestamps, 2, ins, codec, rng);
  const auto dm = decode_response(more, {}, TargetMode::kWithTimestamps, codec);
  CHECK(dm.target.words.size() == 8);
  CHECK_NOTHROW(dm.target.validate(codec));

  MockOracleConfig jitter;
  jitter.time_jitter_sd = 0.3;
  for (int i = 0; i < 50; ++i) {
    const auto j = corrupt_target(clean, TargetMode::kWithTimestamps, 2, jitter, codec, rng);
    const auto dj = decode_response(j, {}, TargetMode::kWithTimestamps, codec);
    CHECK(dj.dropped_tokens == 0);
    CHECK_NOTHROW(dj.target.validate(codec));
  }

  MockOracleConfig bad;
  bad.word_sub_rate = 2;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("mock oracle: reproducible and keyed per turn") {
  const auto d = sample_dialogue();
  MockOracleConfig cfg;
  cfg.word_sub_rate = 0.5;
  cfg.seed = 4;
  MockOracleBackend a(std::span(&d, 1), cfg), b(std::span(&d, 1), cfg);
  CHECK(run_dialogue(d, a) == run_dialogue(d, b));

  Dialogue unknown = d;
  unknown.chunk_id = "nope";
  const auto r = run_dialogue(unknown, a);
  CHECK(r.responses[0].failed);
}

TEST_CASE("run log round trip") {
  std::vector<DialogueRun> runs{{"c1", {{"a", false, ""}, {"", true, "timeout"}}, false},
                                {"c2", {{"x\ny", false, ""}}, true}};
  const auto text = write_run_log(runs);
  CHECK(read_run_log(text) == runs);
  CHECK(write_run_log(read_run_log(text)) == text);
  CHECK_THROWS_AS(read_run_log("{\"chunk_id\":\"c\",\"turn_index\":1,\"status\":\"ok\",\"response\":\"\"}\n"),
                  ParseError);
}
