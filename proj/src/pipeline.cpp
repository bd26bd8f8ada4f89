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

#include "dmasr/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <set>

#include <json.hpp>
#include <openssl/evp.h>

#include "dmasr/error.hpp"
#include "dmasr/external_backend.hpp"
#include "dmasr/parallel.hpp"
#include "dmasr/text.hpp"

namespace dmasr {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

Time seconds_value(const ojson& v, const std::string& key) {
  if (!v.is_number()) throw ValidationError("config '" + key + "' must be a number");
  return Time::from_seconds(v.get<double>());
}

double number(const ojson& v, const std::string& key) {
  if (!v.is_number()) throw ValidationError("config '" + key + "' must be a number");
  return v.get<double>();
}

std::string string_value(const ojson& v, const std::string& key) {
  if (!v.is_string()) throw ValidationError("config '" + key + "' must be a string");
  return v.get<std::string>();
}

bool bool_value(const ojson& v, const std::string& key) {
  if (!v.is_boolean()) throw ValidationError("config '" + key + "' must be true or false");
  return v.get<bool>();
}

std::uint64_t unsigned_value(const ojson& v, const std::string& key) {
  if (!v.is_number_unsigned()) {
    throw ValidationError("config '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

}  // namespace

void RunConfig::validate() const {
  codec.validate();
  perturbation.validate();
  mock.validate();
  if (chunking.min_duration <= Time() || chunking.min_duration > chunking.max_duration) {
    throw ValidationError("chunk durations need 0 < min_chunk <= max_chunk");
  }
  if (score.collar_der < Time() || score.collar_tcp < Time()) {
    throw ValidationError("collars must be >= 0");
  }
  if (backend != "mock" && backend.rfind("external:", 0) != 0) {
    throw ValidationError("backend must be 'mock' or 'external:<endpoint>'");
  }
  if (jobs == 0) throw ValidationError("jobs must be >= 1");
}

void apply_config_json(RunConfig& cfg, std::string_view json_text, std::string_view source) {
  ojson doc;
  try {
    doc = ojson::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string(source), e.what());
  }
  if (!doc.is_object()) throw ParseError(std::string(source), "config must be a JSON object");

  using Setter = std::function<void(const ojson&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"delta_t", [&](auto& v, auto& k) { cfg.codec.delta_t = number(v, k); }},
      {"max_time_index",
       [&](auto& v, auto& k) { cfg.codec.max_time_index = static_cast<int>(unsigned_value(v, k)); }},
      {"min_chunk", [&](auto& v, auto& k) { cfg.chunking.min_duration = seconds_value(v, k); }},
      {"max_chunk", [&](auto& v, auto& k) { cfg.chunking.max_duration = seconds_value(v, k); }},
      {"perturb_p", [&](auto& v, auto& k) { cfg.perturbation.p = number(v, k); }},
      {"time_jitter_max",
       [&](auto& v, auto& k) { cfg.perturbation.time_jitter_max = number(v, k); }},
      {"seed",
       [&](auto& v, auto& k) {
         cfg.perturbation.seed = unsigned_value(v, k);
         cfg.mock.seed = cfg.perturbation.seed;
       }},
      {"mode", [&](auto& v, auto& k) { cfg.mode = parse_target_mode(string_value(v, k)); }},
      {"setup", [&](auto& v, auto& k) { cfg.setup = EvalSetup::parse(string_value(v, k)); }},
      {"collar_der", [&](auto& v, auto& k) { cfg.score.collar_der = seconds_value(v, k); }},
      {"collar_tcp", [&](auto& v, auto& k) { cfg.score.collar_tcp = seconds_value(v, k); }},
      {"tokenize",
       [&](auto& v, auto& k) { cfg.score.tokenization = parse_tokenization(string_value(v, k)); }},
      {"lowercase", [&](auto& v, auto& k) { cfg.score.tokenization.lowercase = bool_value(v, k); }},
      {"strip_punct",
       [&](auto& v, auto& k) { cfg.score.tokenization.strip_punct = bool_value(v, k); }},
      {"backend", [&](auto& v, auto& k) { cfg.backend = string_value(v, k); }},
      {"backend_timeout_ms",
       [&](auto& v, auto& k) {
         cfg.backend_timeout = std::chrono::milliseconds(unsigned_value(v, k));
       }},
      {"jobs", [&](auto& v, auto& k) { cfg.jobs = static_cast<unsigned>(unsigned_value(v, k)); }},
      {"word_sub_rate", [&](auto& v, auto& k) { cfg.mock.word_sub_rate = number(v, k); }},
      {"word_del_rate", [&](auto& v, auto& k) { cfg.mock.word_del_rate = number(v, k); }},
      {"word_ins_rate", [&](auto& v, auto& k) { cfg.mock.word_ins_rate = number(v, k); }},
      {"speaker_flip_rate", [&](auto& v, auto& k) { cfg.mock.speaker_flip_rate = number(v, k); }},
      {"time_jitter_sd", [&](auto& v, auto& k) { cfg.mock.time_jitter_sd = number(v, k); }},
  };
  // tokenize resets the normalization flags, so apply it before them.
  if (auto it = doc.find("tokenize"); it != doc.end()) setters.at("tokenize")(*it, "tokenize");
  for (const auto& [key, value] : doc.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw ValidationError(std::string(source) + ": unknown config key '" + key + "'");
    }
    if (key == "tokenize") continue;
    try {
      it->second(value, key);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(source) + ": " + e.what());
    }
  }
}

std::string run_config_json(const RunConfig& cfg) {
  ojson o;
  o["delta_t"] = cfg.codec.delta_t;
  o["max_time_index"] = cfg.codec.max_time_index;
  o["min_chunk"] = cfg.chunking.min_duration.seconds();
  o["max_chunk"] = cfg.chunking.max_duration.seconds();
  o["perturb_p"] = cfg.perturbation.p;
  o["time_jitter_max"] = cfg.perturbation.time_jitter_max;
  o["seed"] = cfg.perturbation.seed;
  o["mode"] = std::string(to_string(cfg.mode));
  o["setup"] = cfg.setup.str();
  o["collar_der"] = cfg.score.collar_der.seconds();
  o["collar_tcp"] = cfg.score.collar_tcp.seconds();
  o["tokenize"] = to_string(cfg.score.tokenization.unit);
  o["lowercase"] = cfg.score.tokenization.lowercase;
  o["strip_punct"] = cfg.score.tokenization.strip_punct;
  o["backend"] = cfg.backend;
  o["backend_timeout_ms"] = cfg.backend_timeout.count();
  o["jobs"] = cfg.jobs;
  o["word_sub_rate"] = cfg.mock.word_sub_rate;
  o["word_del_rate"] = cfg.mock.word_del_rate;
  o["word_ins_rate"] = cfg.mock.word_ins_rate;
  o["speaker_flip_rate"] = cfg.mock.speaker_flip_rate;
  o["time_jitter_sd"] = cfg.mock.time_jitter_sd;
  return o.dump(2) + "\n";
}

// ---------------------------------------------------------------- corpus

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

void write_text_file(const fs::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write failed: " + path.string());
}

Corpus ingest(const IngestInputs& inputs) {
  if (inputs.rttm.empty()) throw ValidationError("ingest needs at least one RTTM file");
  if (inputs.ctm.empty() == inputs.seglst.empty()) {
    throw ValidationError("ingest needs word transcripts as CTM or as SegLST (exactly one kind)");
  }
  Corpus c;
  std::map<std::string, std::string> origin;
  for (const auto& path : inputs.rttm) {
    for (auto& [id, rec] : read_rttm_file(path)) {
      if (auto [it, fresh] = origin.emplace(id, path); !fresh) {
        throw ValidationError("recording " + id + " appears in both " + it->second + " and " +
                              path);
      }
      c.recordings.emplace(id, std::move(rec));
    }
  }

  std::set<std::string> sessions;
  if (!inputs.ctm.empty()) {
    WordMap words;
    for (const auto& path : inputs.ctm) {
      auto t = read_word_transcript_file(path);
      for (auto& w : t.warnings) c.warnings.push_back(std::move(w));
      for (auto& [key, list] : t.words) {
        auto& dst = words[key];
        dst.insert(dst.end(), list.begin(), list.end());
      }
    }
    for (auto& [key, list] : words) {
      std::stable_sort(list.begin(), list.end(), [](const WordTiming& a, const WordTiming& b) {
        return a.interval < b.interval;
      });
      sessions.insert(key.first);
    }
    // Stretch recordings so words after the last segment stay on the timeline.
    for (const auto& [key, list] : words) {
      auto rec = c.recordings.find(key.first);
      if (rec == c.recordings.end()) continue;
      for (const auto& w : list) rec->second.duration = max(rec->second.duration, w.interval.end);
    }
    c.reference = reference_seglst(c.recordings, words);
    c.words = std::move(words);
  } else {
    for (const auto& path : inputs.seglst) {
      auto entries = read_seglst_file(path);
      for (auto& e : entries) {
        sessions.insert(e.session_id);
        c.reference.push_back(std::move(e));
      }
    }
    sort_seglst(c.reference);
  }

  std::vector<std::string> orphans;
  for (const auto& s : sessions)
    if (!c.recordings.contains(s)) orphans.push_back(s);
  if (!orphans.empty()) {
    std::string msg = "transcripts for recordings without diarization:";
    for (const auto& o : orphans) msg += " " + o;
    throw ValidationError(msg);
  }
  for (const auto& [id, rec] : c.recordings) {
    if (!rec.segments.empty() && !sessions.contains(id)) {
      c.warnings.push_back("recording " + id + " has no transcript");
    }
  }
  return c;
}

namespace {

std::map<std::string, std::size_t> word_counts(const SegLst& reference) {
  std::map<std::string, std::size_t> n;
  for (const auto& e : reference) {
    n[e.session_id] += e.word_timings ? e.word_timings->size() : text::split_words(e.words).size();
  }
  return n;
}

}  // namespace

void write_corpus(const Corpus& corpus, const IngestInputs& inputs, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("reference.rttm", write_rttm(corpus.recordings));
  files.emplace_back("reference.seglst.json", write_seglst(corpus.reference));
  if (corpus.words) files.emplace_back("words.ctm", write_word_transcript(*corpus.words));

  ojson m;
  m["format"] = "dmasr-corpus";
  m["version"] = 1;
  const auto counts = word_counts(corpus.reference);
  ojson recs = ojson::array();
  for (const auto& [id, rec] : corpus.recordings) {
    std::set<std::string> speakers;
    for (const auto& s : rec.segments) speakers.insert(s.speaker);
    ojson r;
    r["recording_id"] = id;
    r["duration"] = rec.duration.seconds();
    r["segments"] = rec.segments.size();
    r["speakers"] = speakers;
    r["words"] = counts.contains(id) ? counts.at(id) : 0;
    recs.push_back(std::move(r));
  }
  m["recordings"] = std::move(recs);
  ojson out_files = ojson::object();
  for (const auto& [name, body] : files) out_files[name] = "sha256:" + sha256_hex(body);
  m["files"] = std::move(out_files);
  ojson in = ojson::array();
  auto add_inputs = [&](const std::vector<std::string>& paths, const char* kind) {
    for (const auto& p : paths) {
      in.push_back({{"kind", kind}, {"path", p}, {"sha256", sha256_hex(read_text_file(p))}});
    }
  };
  add_inputs(inputs.rttm, "rttm");
  add_inputs(inputs.ctm, "ctm");
  add_inputs(inputs.seglst, "seglst");
  m["inputs"] = std::move(in);

  for (const auto& [name, body] : files) write_text_file(dir / name, body);
  write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

Corpus load_corpus(const fs::path& dir) {
  const auto manifest_path = (dir / "manifest.json").string();
  ojson m;
  try {
    m = ojson::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(manifest_path, e.what());
  }
  std::map<std::string, Time> durations;
  try {
    for (const auto& r : m.at("recordings")) {
      durations[r.at("recording_id").get<std::string>()] =
          Time::from_seconds(r.at("duration").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path, e.what());
  }
  Corpus c;
  c.recordings = read_rttm_file((dir / "reference.rttm").string(), durations);
  // Recordings with no segments only live in the manifest.
  for (const auto& [id, dur] : durations) {
    if (!c.recordings.contains(id)) c.recordings[id] = Recording{id, dur, {}};
  }
  c.reference = read_seglst_file((dir / "reference.seglst.json").string());
  if (fs::exists(dir / "words.ctm")) {
    c.words = read_word_transcript_file((dir / "words.ctm").string()).words;
  }
  return c;
}

// ---------------------------------------------------------------- build

CorpusBuild build_dialogues(const Corpus& corpus, const RecordingMap* diarization,
                            const RunConfig& cfg) {
  cfg.validate();
  CorpusBuildOptions opts;
  opts.chunking = cfg.chunking;
  opts.chunking.cut_grid = Time::from_seconds(cfg.codec.delta_t);
  opts.build.mode = cfg.mode;
  opts.build.perturbation = cfg.perturbation;
  opts.build.codec = cfg.codec;
  opts.jobs = cfg.jobs;
  return build_corpus(diarization ? *diarization : corpus.recordings, corpus.reference, opts);
}

// ---------------------------------------------------------------- simulate

std::unique_ptr<Backend> make_backend(const RunConfig& cfg, std::span<const Dialogue> dialogues) {
  if (cfg.backend == "mock") {
    return std::make_unique<MockOracleBackend>(dialogues, cfg.mock, cfg.codec);
  }
  if (cfg.backend.rfind("external:", 0) == 0) {
    ExternalBackendOptions opts;
    opts.timeout = cfg.backend_timeout;
    return make_external_backend(std::string_view(cfg.backend).substr(9), opts);
  }
  throw ValidationError("unknown backend '" + cfg.backend + "'");
}

std::vector<DialogueRun> run_corpus(std::span<const Dialogue> dialogues, Backend& backend,
                                    unsigned jobs) {
  std::vector<DialogueRun> runs(dialogues.size());
  parallel_for(dialogues.size(), backend.concurrent_sessions() ? jobs : 1u,
               [&](std::size_t i) { runs[i] = run_dialogue(dialogues[i], backend); });
  return runs;
}

CompositionSummary compose_runs(std::span<const Dialogue> dialogues,
                                std::span<const DialogueRun> runs, const EvalSetup& setup,
                                const CodecConfig& codec) {
  std::map<std::string, const Dialogue*> by_chunk;
  for (const auto& d : dialogues) by_chunk[d.chunk_id] = &d;
  CompositionSummary out;
  for (const auto& run : runs) {
    auto it = by_chunk.find(run.chunk_id);
    if (it == by_chunk.end()) throw ValidationError("run log names unknown chunk " + run.chunk_id);
    auto turns = compose_hypothesis(*it->second, run.responses, setup, codec);
    for (std::size_t k = 0; k < turns.size(); ++k) {
      out.speaker_fallbacks += turns[k].speaker_fallback;
      out.time_fallbacks += turns[k].time_fallback;
      out.failed_turns += run.responses[k].failed;
      out.hypothesis.push_back(turns[k].entry);
    }
    out.turns.push_back(std::move(turns));
  }
  if (runs.size() != dialogues.size()) {
    std::set<std::string> seen;
    for (const auto& r : runs) seen.insert(r.chunk_id);
    for (const auto& d : dialogues) {
      if (!seen.contains(d.chunk_id)) throw ValidationError("no run recorded for chunk " + d.chunk_id);
    }
  }
  sort_seglst(out.hypothesis);
  return out;
}

std::string write_annotated_run_log(std::span<const DialogueRun> runs,
                                    const CompositionSummary& composed, const EvalSetup& setup) {
  std::string out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& run = runs[i];
    for (std::size_t k = 0; k < run.responses.size(); ++k) {
      const auto& r = run.responses[k];
      const auto& c = composed.turns.at(i).at(k);
      ojson j;
      j["chunk_id"] = run.chunk_id;
      j["turn_index"] = k;
      j["status"] = r.failed ? "failed" : "ok";
      j["diagnostic"] = r.diagnostic;
      j["response"] = r.text;
      j["replayed_history"] = run.replayed_history;
      j["setup"] = setup.str();
      j["speaker_fallback"] = c.speaker_fallback;
      j["time_fallback"] = c.time_fallback;
      j["dropped_tokens"] = c.dropped_tokens;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace dmasr
