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

#include "dmasr/dialogue.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include <json.hpp>

#include "dmasr/error.hpp"
#include "dmasr/parallel.hpp"
#include "dmasr/text.hpp"

namespace dmasr {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string describe(const DiarSegment& seg) {
  return seg.speaker + "@" + format_seconds(seg.interval.start) + "-" +
         format_seconds(seg.interval.end);
}

std::string expected_prompt(const Turn& t, TargetMode mode) {
  std::string p = t.turn_index == 0 ? audio_placeholder() : std::string();
  return p + render_prompt(t.condition, mode == TargetMode::kWithTimestamps);
}

}  // namespace

// ---------------------------------------------------------------- dialogue

Dialogue build_dialogue(const Chunk& chunk, const ChunkTranscripts& transcripts,
                        const BuildOptions& opts) {
  opts.codec.validate();
  opts.perturbation.validate();
  if (chunk.segments.empty()) {
    throw ValidationError("chunk " + chunk.chunk_id + " has no segments; a dialogue needs K >= 1");
  }
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < chunk.segments.size(); ++i) {
    if (!transcripts.contains(i)) missing.push_back(describe(chunk.segments[i]));
  }
  if (!missing.empty()) {
    std::string msg = "chunk " + chunk.chunk_id + " lacks transcripts for segments:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }

  Dialogue d;
  d.chunk_id = chunk.chunk_id;
  d.recording_id = chunk.recording_id;
  d.chunk_index = chunk.index;
  d.window = chunk.window;
  d.mode = opts.mode;
  d.speaker_map = build_speaker_map(chunk, opts.codec);

  std::vector<std::size_t> order(chunk.segments.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) {
    const auto& s = chunk.segments[i];
    return std::make_tuple(s.interval.start, *d.speaker_map.local(s.speaker), s.interval.end);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& seg = chunk.segments[order[k]];
    const auto& tr = transcripts.at(order[k]);
    const int local = *d.speaker_map.local(seg.speaker);

    Turn t;
    t.turn_index = static_cast<int>(k);
    t.segment = seg;
    const auto clean = make_condition(local, seg.interval, opts.codec);
    auto rng = derive_rng_stream(opts.perturbation.seed, chunk.recording_id, chunk.index, k);
    t.perturbation = perturb_condition(clean, seg.interval, d.speaker_map.size(), opts.perturbation,
                                       opts.codec, rng);
    t.condition = t.perturbation.perturbed;
    t.has_audio = k == 0;
    t.prompt_text = expected_prompt(t, opts.mode);

    auto words = tr.words;
    std::stable_sort(words.begin(), words.end(), [](const WordTiming& a, const WordTiming& b) {
      return a.interval.start < b.interval.start;
    });
    if (opts.mode == TargetMode::kWithTimestamps) {
      if (!tr.timed && !words.empty()) {
        throw ValidationError("segment " + describe(seg) + " of " + chunk.chunk_id +
                              " has no word timings; timestamp mode needs them");
      }
      t.target_text = encode_target(make_timed_target(local, words, opts.codec));
    } else {
      std::vector<std::string> plain;
      plain.reserve(words.size());
      for (auto& w : words) plain.push_back(std::move(w.word));
      t.target_text = encode_target(make_plain_target(local, std::move(plain)));
    }
    d.turns.push_back(std::move(t));
  }
  return d;
}

void Dialogue::validate(const CodecConfig& cfg) const {
  if (chunk_id.empty() || recording_id.empty()) throw ValidationError("dialogue ids are empty");
  window.validate();
  if (turns.empty()) throw ValidationError(chunk_id + ": dialogue has no turns");
  for (std::size_t k = 0; k < turns.size(); ++k) {
    const auto& t = turns[k];
    const std::string where = chunk_id + " turn " + std::to_string(k);
    if (t.turn_index != static_cast<int>(k)) throw ValidationError(where + ": turn_index mismatch");
    if (t.has_audio != (k == 0)) throw ValidationError(where + ": only turn 0 carries audio");
    t.segment.validate();
    if (t.segment.interval.end > window.duration()) {
      throw ValidationError(where + ": segment extends past the window");
    }
    const auto local = speaker_map.local(t.segment.speaker);
    if (!local) throw ValidationError(where + ": speaker " + t.segment.speaker + " is not mapped");
    if (t.perturbation.original != make_condition(*local, t.segment.interval, cfg)) {
      throw ValidationError(where + ": original condition does not match the segment");
    }
    if (t.condition != t.perturbation.perturbed) {
      throw ValidationError(where + ": condition differs from the perturbed condition");
    }
    t.condition.validate(cfg);
    if (t.condition.local_speaker >= speaker_map.size()) {
      throw ValidationError(where + ": condition names an unmapped speaker");
    }
    if ((t.perturbation.original != t.perturbation.perturbed) != t.perturbation.any()) {
      throw ValidationError(where + ": perturbation flags disagree with the conditions");
    }
    if (t.prompt_text != expected_prompt(t, mode)) {
      throw ValidationError(where + ": prompt does not render from its condition");
    }
    const auto decoded = decode_response(t.target_text, t.perturbation.original, mode, cfg);
    if (decoded.speaker_fallback || decoded.dropped_tokens != 0 || decoded.times_missing ||
        encode_target(decoded.target) != t.target_text) {
      throw ValidationError(where + ": target is not a well-formed encoded sequence");
    }
    if (decoded.target.leading_speaker != *local) {
      throw ValidationError(where + ": target speaker differs from the segment speaker");
    }
    if (k > 0) {
      const auto& prev = turns[k - 1];
      if (std::make_tuple(prev.segment.interval.start, prev.perturbation.original.local_speaker) >
          std::make_tuple(t.segment.interval.start, t.perturbation.original.local_speaker)) {
        throw ValidationError(where + ": turns are not ordered by (start, speaker)");
      }
    }
  }
}

TrainingSequence concat_training_sequence(const Dialogue& d) {
  TrainingSequence seq;
  for (const auto& t : d.turns) {
    seq.prompt_spans.push_back({seq.text.size(), seq.text.size() + t.prompt_text.size()});
    seq.text += t.prompt_text;
    seq.target_spans.push_back({seq.text.size(), seq.text.size() + t.target_text.size()});
    seq.text += t.target_text;
  }
  return seq;
}

// ---------------------------------------------------------------- corpus

std::vector<SourceWord> source_words(std::span<const SegLstEntry> entries) {
  std::vector<SourceWord> out;
  for (const auto& e : entries) {
    if (e.word_timings) {
      for (const auto& w : *e.word_timings) out.push_back({e.speaker, w, true});
      continue;
    }
    const auto words = text::split_words(e.words);
    const auto n = static_cast<Time::rep>(words.size());
    const auto span = e.interval.duration().ticks();
    for (Time::rep j = 0; j < n; ++j) {
      const Time lo = e.interval.start + Time::from_ticks(span * j / n);
      const Time hi = e.interval.start + Time::from_ticks(span * (j + 1) / n);
      out.push_back({e.speaker, {words[static_cast<std::size_t>(j)], {lo, hi}}, false});
    }
  }
  return out;
}

namespace {

Time midpoint(const TimeInterval& i) {
  return Time::from_ticks((i.start.ticks() + i.end.ticks()) / 2);
}

std::optional<std::size_t> pick_segment(const Chunk& chunk, const SourceWord& w, Time mid_rel,
                                        const TimeInterval& rel) {
  const auto& segs = chunk.segments;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].speaker == w.speaker && segs[i].interval.contains(mid_rel)) return i;
  }
  std::optional<std::size_t> best;
  Time best_overlap{};
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Time ov = overlap_duration(segs[i].interval, rel);
    if (ov > best_overlap) {
      best = i;
      best_overlap = ov;
    }
  }
  if (best) return best;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].interval.contains(mid_rel)) return i;
  }
  return std::nullopt;
}

}  // namespace

WordAssignment assign_words(std::span<const Chunk> chunks, std::span<const SourceWord> words) {
  WordAssignment out;
  out.transcripts.resize(chunks.size());
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    for (std::size_t i = 0; i < chunks[c].segments.size(); ++i) out.transcripts[c][i];
  }
  for (const auto& w : words) {
    const Time mid = midpoint(w.word.interval);
    std::optional<std::size_t> chunk;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      const auto& win = chunks[c].window;
      const bool last = c + 1 == chunks.size();
      if (mid >= win.start && (mid < win.end || (last && mid <= win.end))) {
        chunk = c;
        break;
      }
    }
    if (!chunk) {
      ++out.dropped_words;
      continue;
    }
    const auto& ch = chunks[*chunk];
    const Time dur = ch.window.duration();
    auto rebase = [&](Time t) { return std::clamp(t - ch.window.start, Time{}, dur); };
    const TimeInterval rel{rebase(w.word.interval.start), rebase(w.word.interval.end)};
    const auto seg = pick_segment(ch, w, mid - ch.window.start, rel);
    if (!seg) {
      ++out.dropped_words;
      continue;
    }
    auto& tr = out.transcripts[*chunk][*seg];
    tr.words.push_back({w.word.word, rel});
    tr.timed = tr.timed && w.timed;
  }
  return out;
}

CorpusBuild build_corpus(const RecordingMap& diarization, const SegLst& reference,
                         const CorpusBuildOptions& opts) {
  const auto sessions = group_by_session(reference);
  std::vector<const Recording*> recs;
  std::vector<std::string> gaps;
  for (const auto& [id, rec] : diarization) {
    if (!rec.segments.empty() && !sessions.contains(id)) gaps.push_back(id);
    recs.push_back(&rec);
  }
  if (!gaps.empty()) {
    std::string msg = "no reference transcript for recordings:";
    for (const auto& g : gaps) msg += " " + g;
    throw ValidationError(msg);
  }

  struct Partial {
    std::vector<Dialogue> dialogues;
    std::size_t dropped = 0;
    std::size_t empty = 0;
  };
  std::vector<Partial> parts(recs.size());
  parallel_for(recs.size(), opts.jobs, [&](std::size_t r) {
    const auto& rec = *recs[r];
    const auto chunks = chunk_recording(rec, opts.chunking);
    std::vector<SourceWord> words;
    if (auto it = sessions.find(rec.recording_id); it != sessions.end()) {
      words = source_words(it->second);
    }
    const auto assignment = assign_words(chunks, words);
    auto& part = parts[r];
    part.dropped = assignment.dropped_words;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      if (chunks[c].segments.empty()) {
        ++part.empty;
        continue;
      }
      part.dialogues.push_back(build_dialogue(chunks[c], assignment.transcripts[c], opts.build));
    }
  });

  CorpusBuild out;
  for (auto& p : parts) {
    out.dropped_words += p.dropped;
    out.empty_chunks += p.empty;
    for (auto& d : p.dialogues) out.dialogues.push_back(std::move(d));
  }
  return out;
}

SegLst reference_seglst(const RecordingMap& recordings, const WordMap& words) {
  SegLst out;
  for (const auto& [id, rec] : recordings) {
    Chunk whole;
    whole.chunk_id = id;
    whole.recording_id = id;
    whole.window = {Time{}, rec.duration};
    whole.segments = rec.segments;
    std::vector<SourceWord> src;
    for (auto it = words.lower_bound({id, ""}); it != words.end() && it->first.first == id; ++it) {
      for (const auto& w : it->second) src.push_back({it->first.second, w, true});
    }
    const auto assignment = assign_words(std::span(&whole, 1), src);
    for (std::size_t i = 0; i < whole.segments.size(); ++i) {
      auto timings = assignment.transcripts[0].at(i).words;
      std::stable_sort(timings.begin(), timings.end(), [](const WordTiming& a, const WordTiming& b) {
        return a.interval.start < b.interval.start;
      });
      std::vector<std::string> ws;
      for (const auto& w : timings) ws.push_back(w.word);
      out.push_back({id, whole.segments[i].speaker, whole.segments[i].interval,
                     text::join_words(ws), std::move(timings)});
    }
  }
  sort_seglst(out);
  return out;
}

// ---------------------------------------------------------------- JSONL

namespace {

double secs(Time t) { return static_cast<double>(t.ticks()) / Time::kTicksPerSecond; }

ordered_json condition_json(const SegmentCondition& c) {
  ordered_json j;
  j["spk"] = c.local_speaker;
  j["start_idx"] = c.start_idx;
  j["end_idx"] = c.end_idx;
  return j;
}

SegmentCondition condition_from(const ordered_json& j) {
  return {j.at("spk").get<int>(), j.at("start_idx").get<int>(), j.at("end_idx").get<int>()};
}

Time time_from(const ordered_json& j) {
  if (!j.is_number()) throw ValidationError("time value is not a number");
  return Time::from_seconds(j.get<double>());
}

ordered_json dialogue_json(const Dialogue& d) {
  ordered_json j;
  j["chunk_id"] = d.chunk_id;
  j["recording_id"] = d.recording_id;
  j["chunk_index"] = d.chunk_index;
  j["window"] = {{"start", secs(d.window.start)}, {"end", secs(d.window.end)}};
  j["mode"] = std::string(to_string(d.mode));
  ordered_json map = ordered_json::object();
  for (int i = 0; i < d.speaker_map.size(); ++i) map[d.speaker_map.global(i)] = i;
  j["speaker_map"] = std::move(map);
  ordered_json turns = ordered_json::array();
  for (const auto& t : d.turns) {
    ordered_json tj;
    tj["turn_index"] = t.turn_index;
    tj["prompt"] = t.prompt_text;
    tj["target"] = t.target_text;
    tj["condition"] = condition_json(t.condition);
    tj["segment"] = {{"speaker", t.segment.speaker},
                     {"start", secs(t.segment.interval.start)},
                     {"end", secs(t.segment.interval.end)}};
    ordered_json pj;
    pj["speaker"] = t.perturbation.speaker_perturbed;
    pj["start"] = t.perturbation.start_perturbed;
    pj["end"] = t.perturbation.end_perturbed;
    pj["original"] = condition_json(t.perturbation.original);
    tj["perturbation"] = std::move(pj);
    tj["has_audio"] = t.has_audio;
    turns.push_back(std::move(tj));
  }
  j["turns"] = std::move(turns);
  return j;
}

Dialogue dialogue_from(const ordered_json& j) {
  for (const char* key : {"chunk_id", "recording_id", "window", "mode", "speaker_map", "turns"}) {
    if (!j.contains(key)) throw ValidationError(std::string("missing key '") + key + "'");
  }
  Dialogue d;
  d.chunk_id = j.at("chunk_id").get<std::string>();
  d.recording_id = j.at("recording_id").get<std::string>();
  d.chunk_index = j.value("chunk_index", std::size_t{0});
  d.window = {time_from(j.at("window").at("start")), time_from(j.at("window").at("end"))};
  d.mode = parse_target_mode(j.at("mode").get<std::string>());

  const auto& map = j.at("speaker_map");
  if (!map.is_object()) throw ValidationError("speaker_map is not an object");
  std::vector<std::string> labels(map.size());
  std::vector<bool> seen(map.size(), false);
  for (const auto& [label, idx] : map.items()) {
    const int i = idx.get<int>();
    if (i < 0 || static_cast<std::size_t>(i) >= labels.size() || seen[static_cast<std::size_t>(i)]) {
      throw ValidationError("speaker_map indices are not 0..n-1");
    }
    seen[static_cast<std::size_t>(i)] = true;
    labels[static_cast<std::size_t>(i)] = label;
  }
  d.speaker_map = SpeakerMap(std::move(labels));

  for (const auto& tj : j.at("turns")) {
    Turn t;
    t.turn_index = tj.at("turn_index").get<int>();
    t.prompt_text = tj.at("prompt").get<std::string>();
    t.target_text = tj.at("target").get<std::string>();
    t.condition = condition_from(tj.at("condition"));
    const auto& sj = tj.at("segment");
    t.segment = {sj.at("speaker").get<std::string>(),
                 {time_from(sj.at("start")), time_from(sj.at("end"))}};
    const auto& pj = tj.at("perturbation");
    t.perturbation.speaker_perturbed = pj.at("speaker").get<bool>();
    t.perturbation.start_perturbed = pj.at("start").get<bool>();
    t.perturbation.end_perturbed = pj.at("end").get<bool>();
    t.perturbation.original = condition_from(pj.at("original"));
    t.perturbation.perturbed = t.condition;
    t.has_audio = tj.at("has_audio").get<bool>();
    d.turns.push_back(std::move(t));
  }
  return d;
}

}  // namespace

std::string write_dialogues(std::span<const Dialogue> dialogues, const CodecConfig& cfg) {
  std::string out;
  for (const auto& d : dialogues) {
    d.validate(cfg);
    out += dialogue_json(d).dump();
    out += '\n';
  }
  return out;
}

std::vector<Dialogue> read_dialogues(std::string_view jsonl, std::string_view source,
                                     const CodecConfig& cfg) {
  std::vector<Dialogue> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const auto line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (text::split_whitespace(line).empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(lineno);
    try {
      auto d = dialogue_from(ordered_json::parse(line));
      d.validate(cfg);
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(where, e.what());
    }
  }
  return out;
}

}  // namespace dmasr
