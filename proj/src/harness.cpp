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

#include "dmasr/harness.hpp"

#include <algorithm>

#include <json.hpp>

#include "dmasr/error.hpp"
#include "dmasr/text.hpp"

namespace dmasr {

// ---------------------------------------------------------------- driver

DialogueRun run_dialogue(const Dialogue& d, Backend& backend) {
  DialogueRun run;
  run.chunk_id = d.chunk_id;
  run.responses.resize(d.turns.size());

  auto abort_from = [&](std::size_t k, const std::string& why) {
    for (std::size_t j = k; j < run.responses.size(); ++j) {
      run.responses[j] = {"", true, j == k ? why : "session aborted: " + why};
    }
  };

  std::unique_ptr<BackendSession> session;
  try {
    session = backend.open_session();
    session->open_audio(d.chunk_id, {d.recording_id, d.window.start, d.window.end});
  } catch (const BackendError& e) {
    abort_from(0, std::string("open_audio failed: ") + e.what());
    if (session) {
      try {
        session->close();
      } catch (const BackendError&) {
      }
    }
    return run;
  }

  const bool replay = !session->capabilities().supports_context_reuse;
  run.replayed_history = replay;
  std::string history;
  for (std::size_t k = 0; k < d.turns.size(); ++k) {
    const auto& prompt = d.turns[k].prompt_text;
    try {
      run.responses[k].text = session->turn(replay ? history + prompt : prompt);
    } catch (const BackendError& e) {
      if (e.fatal()) {
        abort_from(k, e.what());
        break;
      }
      run.responses[k] = {"", true, e.what()};
    }
    if (replay) history += prompt + run.responses[k].text;
  }
  try {
    session->close();
  } catch (const BackendError&) {
    // Responses are already collected; a failed close loses nothing.
  }
  return run;
}

// ---------------------------------------------------------------- setups

std::string EvalSetup::str() const {
  return std::string(speaker == CueSource::kDiarization ? "dia-spk" : "llm-spk") + "," +
         (time == CueSource::kDiarization ? "dia-time" : "llm-time");
}

EvalSetup EvalSetup::parse(std::string_view s) {
  for (const auto& setup : all()) {
    if (setup.str() == s) return setup;
  }
  throw ValidationError("unknown evaluation setup '" + std::string(s) +
                        "'; expected {dia-spk,llm-spk},{dia-time,llm-time}");
}

std::array<EvalSetup, 4> EvalSetup::all() {
  using enum CueSource;
  return {{{kDiarization, kDiarization},
           {kDiarization, kModel},
           {kModel, kDiarization},
           {kModel, kModel}}};
}

std::vector<ComposedTurn> compose_hypothesis(const Dialogue& d,
                                             std::span<const TurnResponse> responses,
                                             const EvalSetup& setup, const CodecConfig& cfg) {
  if (responses.size() != d.turns.size()) {
    throw ValidationError(d.chunk_id + ": " + std::to_string(responses.size()) +
                          " responses for " + std::to_string(d.turns.size()) + " turns");
  }
  const Time offset = d.window.start;
  std::vector<ComposedTurn> out;
  out.reserve(d.turns.size());
  for (std::size_t k = 0; k < d.turns.size(); ++k) {
    const auto& turn = d.turns[k];
    const auto decoded = decode_response(responses[k].text, turn.condition, d.mode, cfg);

    ComposedTurn c;
    c.dropped_tokens = decoded.dropped_tokens;
    c.entry.session_id = d.recording_id;
    c.entry.words = text::join_words(decoded.target.words);

    c.entry.speaker = turn.segment.speaker;
    if (setup.speaker == CueSource::kModel) {
      const int spk = decoded.target.leading_speaker;
      if (!decoded.speaker_fallback && d.speaker_map.contains_local(spk)) {
        c.entry.speaker = d.speaker_map.global(spk);
      } else {
        c.speaker_fallback = true;
      }
    }

    c.entry.interval = {turn.segment.interval.start + offset, turn.segment.interval.end + offset};
    if (setup.time == CueSource::kModel) {
      if (decoded.has_times()) {
        const auto& idx = decoded.target.time_indices;
        c.entry.interval = {undiscretize_to_time(idx.front(), cfg) + offset,
                            undiscretize_to_time(idx.back(), cfg) + offset};
        auto timings = word_timings(decoded.target, cfg);
        for (auto& w : timings) {
          w.interval.start += offset;
          w.interval.end += offset;
        }
        c.entry.word_timings = std::move(timings);
      } else if (!decoded.target.words.empty()) {
        c.time_fallback = true;
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

SegLst compose_corpus(std::span<const Dialogue> dialogues, std::span<const DialogueRun> runs,
                      const EvalSetup& setup, const CodecConfig& cfg) {
  std::map<std::string, const DialogueRun*> by_chunk;
  for (const auto& r : runs) by_chunk[r.chunk_id] = &r;
  SegLst out;
  for (const auto& d : dialogues) {
    auto it = by_chunk.find(d.chunk_id);
    if (it == by_chunk.end()) throw ValidationError("no run recorded for chunk " + d.chunk_id);
    for (auto& c : compose_hypothesis(d, it->second->responses, setup, cfg)) {
      out.push_back(std::move(c.entry));
    }
  }
  sort_seglst(out);
  return out;
}

// ---------------------------------------------------------------- mock

void MockOracleConfig::validate() const {
  for (double r : {word_sub_rate, word_del_rate, word_ins_rate, speaker_flip_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("mock oracle rates must lie in [0, 1]");
  }
  if (!(time_jitter_sd >= 0.0)) throw ValidationError("time_jitter_sd must be >= 0");
}

namespace {

std::string substitute(const std::string& word, bool cjk) {
  static const std::array<const char*, 3> kCjk{"错", "误", "噪"};
  static const std::array<const char*, 3> kLatin{"zzxq", "qqxz", "xzqq"};
  for (const char* cand : cjk ? kCjk : kLatin) {
    if (word != cand) return cand;
  }
  return "zzxq";
}

}  // namespace

std::string corrupt_target(std::string_view clean_target, TargetMode mode, int chunk_speakers,
                           const MockOracleConfig& cfg, const CodecConfig& codec, RngStream& rng) {
  const auto decoded = decode_response(clean_target, {}, mode, codec);
  const auto& src = decoded.target;

  TargetSequence out;
  out.mode = mode;
  out.leading_speaker = src.leading_speaker;
  if (rng.bernoulli(cfg.speaker_flip_rate) && chunk_speakers > 1) {
    int other = rng.uniform_int(chunk_speakers - 1);
    if (other >= src.leading_speaker) ++other;
    out.leading_speaker = other;
  }

  const bool timed = mode == TargetMode::kWithTimestamps && !src.words.empty();
  const bool cjk = std::any_of(src.words.begin(), src.words.end(),
                               [](const std::string& w) { return text::starts_with_cjk(w); });
  for (std::size_t j = 0; j < src.words.size(); ++j) {
    const bool sub = rng.bernoulli(cfg.word_sub_rate);
    const bool del = rng.bernoulli(cfg.word_del_rate);
    const bool ins = rng.bernoulli(cfg.word_ins_rate);
    if (!del) {
      out.words.push_back(sub ? substitute(src.words[j], cjk) : src.words[j]);
      if (timed) out.time_indices.push_back(src.time_indices[j]);
    }
    if (ins) {
      out.words.push_back(cjk ? "嗯" : "uhm");
      if (timed) out.time_indices.push_back(src.time_indices[j + 1]);
    }
  }
  if (timed && !out.words.empty()) {
    out.time_indices.push_back(src.time_indices.back());
    if (cfg.time_jitter_sd > 0) {
      int floor = 0;
      for (auto& u : out.time_indices) {
        const double t = undiscretize_time(u, codec) + rng.normal(0.0, cfg.time_jitter_sd);
        u = std::max(floor, discretize_time(std::max(0.0, t), codec));
        floor = u;
      }
    }
  }
  return encode_target(out);
}

namespace {

class MockSession : public BackendSession {
 public:
  MockSession(const std::map<std::string, MockOracleBackend::Reference>& refs,
              const MockOracleConfig& cfg, const CodecConfig& codec, BackendCapabilities caps)
      : refs_(refs), cfg_(cfg), codec_(codec), caps_(caps) {}

  BackendCapabilities capabilities() const override { return caps_; }

  void open_audio(const std::string& chunk_id, const AudioRef&) override {
    if (ref_) throw BackendError("open_audio called twice in one session", true);
    auto it = refs_.find(chunk_id);
    if (it == refs_.end()) throw BackendError("mock oracle has no reference for " + chunk_id, true);
    chunk_id_ = chunk_id;
    ref_ = &it->second;
  }

  std::string turn(const std::string&) override {
    if (!ref_) throw BackendError("turn before open_audio", true);
    const std::size_t k = next_turn_++;
    if (k >= ref_->targets.size()) {
      throw BackendError("mock oracle has no reference for " + chunk_id_ + " turn " +
                             std::to_string(k),
                         true);
    }
    auto rng = derive_rng_stream(cfg_.seed, chunk_id_, 0, k);
    return corrupt_target(ref_->targets[k], ref_->mode, ref_->speakers, cfg_, codec_, rng);
  }

  void close() override { ref_ = nullptr; }

 private:
  const std::map<std::string, MockOracleBackend::Reference>& refs_;
  const MockOracleConfig& cfg_;
  const CodecConfig& codec_;
  BackendCapabilities caps_;
  const MockOracleBackend::Reference* ref_ = nullptr;
  std::string chunk_id_;
  std::size_t next_turn_ = 0;
};

}  // namespace

MockOracleBackend::MockOracleBackend(std::span<const Dialogue> references, MockOracleConfig cfg,
                                     CodecConfig codec, BackendCapabilities caps)
    : cfg_(cfg), codec_(codec), caps_(caps) {
  cfg_.validate();
  for (const auto& d : references) {
    Reference r;
    r.mode = d.mode;
    r.speakers = d.speaker_map.size();
    for (const auto& t : d.turns) r.targets.push_back(t.target_text);
    refs_[d.chunk_id] = std::move(r);
  }
}

std::unique_ptr<BackendSession> MockOracleBackend::open_session() {
  return std::make_unique<MockSession>(refs_, cfg_, codec_, caps_);
}

// ---------------------------------------------------------------- run log

std::string write_run_log(std::span<const DialogueRun> runs) {
  std::string out;
  for (const auto& run : runs) {
    for (std::size_t k = 0; k < run.responses.size(); ++k) {
      const auto& r = run.responses[k];
      nlohmann::ordered_json j;
      j["chunk_id"] = run.chunk_id;
      j["turn_index"] = k;
      j["status"] = r.failed ? "failed" : "ok";
      j["diagnostic"] = r.diagnostic;
      j["response"] = r.text;
      j["replayed_history"] = run.replayed_history;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

std::vector<DialogueRun> read_run_log(std::string_view jsonl, std::string_view source) {
  std::vector<DialogueRun> out;
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const auto line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (text::split_whitespace(line).empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      const auto chunk = j.at("chunk_id").get<std::string>();
      const auto k = j.at("turn_index").get<std::size_t>();
      if (out.empty() || out.back().chunk_id != chunk) {
        out.push_back({chunk, {}, j.value("replayed_history", false)});
      }
      auto& run = out.back();
      if (k != run.responses.size()) throw ParseError(where, "turn_index out of sequence");
      const auto status = j.at("status").get<std::string>();
      if (status != "ok" && status != "failed") throw ParseError(where, "unknown status " + status);
      run.responses.push_back(
          {j.at("response").get<std::string>(), status == "failed", j.value("diagnostic", "")});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where, e.what());
    }
  }
  return out;
}

}  // namespace dmasr
