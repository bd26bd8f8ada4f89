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

// Python bindings. Structured data crosses the boundary as the library's
// own text formats (RTTM, SegLST JSON, dialogue JSONL, config JSON).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dmasr/assignment.hpp"
#include "dmasr/codec.hpp"
#include "dmasr/dialogue.hpp"
#include "dmasr/error.hpp"
#include "dmasr/formats.hpp"
#include "dmasr/harness.hpp"
#include "dmasr/metrics.hpp"
#include "dmasr/pipeline.hpp"

namespace py = pybind11;
using namespace dmasr;

namespace {

RunConfig config_from(const std::string& config_json) {
  RunConfig cfg;
  if (!config_json.empty()) apply_config_json(cfg, config_json);
  cfg.validate();
  return cfg;
}

RecordingMap rttm_from(const std::string& text) {
  std::istringstream in(text);
  return read_rttm(in);
}

py::dict decoded_dict(const DecodedResponse& d, const CodecConfig& cfg) {
  py::dict out;
  out["speaker"] = d.target.leading_speaker;
  out["words"] = d.target.words;
  out["time_indices"] = d.target.time_indices;
  std::vector<std::tuple<std::string, double, double>> spans;
  for (const auto& w : word_timings(d.target, cfg))
    spans.emplace_back(w.word, w.interval.start.seconds(), w.interval.end.seconds());
  out["word_timings"] = spans;
  out["speaker_fallback"] = d.speaker_fallback;
  out["times_missing"] = d.times_missing;
  out["dropped_tokens"] = d.dropped_tokens;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dialogue-style multi-talker ASR data preparation, simulation and scoring.";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);

  m.def(
      "discretize_time",
      [](double seconds, double delta_t, int max_index) {
        return discretize_time(seconds, CodecConfig{delta_t, max_index});
      },
      py::arg("seconds"), py::arg("delta_t") = 0.1, py::arg("max_index") = 250);
  m.def(
      "undiscretize_time",
      [](int index, double delta_t, int max_index) {
        return undiscretize_time(index, CodecConfig{delta_t, max_index});
      },
      py::arg("index"), py::arg("delta_t") = 0.1, py::arg("max_index") = 250);

  m.def(
      "encode_target",
      [](int speaker, const std::vector<std::tuple<std::string, double, double>>& words, bool timed) {
        const CodecConfig cfg;
        if (!timed) {
          std::vector<std::string> plain;
          for (const auto& w : words) plain.push_back(std::get<0>(w));
          return encode_target(make_plain_target(speaker, std::move(plain)));
        }
        std::vector<WordTiming> timings;
        for (const auto& [w, s, e] : words) timings.push_back({w, TimeInterval::from_seconds(s, e)});
        return encode_target(make_timed_target(speaker, timings, cfg));
      },
      py::arg("speaker"), py::arg("words"), py::arg("with_timestamps") = false,
      "words: list of (word, start, end); times are ignored in plain mode.");
  m.def(
      "decode_response",
      [](const std::string& text, int speaker, int start_idx, int end_idx, bool timed) {
        const CodecConfig cfg;
        const auto d = decode_response(text, SegmentCondition{speaker, start_idx, end_idx},
                                       timed ? TargetMode::kWithTimestamps : TargetMode::kPlain, cfg);
        return decoded_dict(d, cfg);
      },
      py::arg("text"), py::arg("speaker") = 0, py::arg("start_idx") = 0, py::arg("end_idx") = 250,
      py::arg("with_timestamps") = false);

  m.def(
      "optimal_assignment",
      [](const std::vector<std::vector<double>>& rows) {
        CostMatrix cm(rows.size(), rows.empty() ? 0 : rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != cm.cols()) throw ValidationError("cost matrix rows differ in length");
          for (std::size_t j = 0; j < cm.cols(); ++j) cm(i, j) = rows[i][j];
        }
        const auto a = optimal_assignment(cm);
        return py::make_tuple(a.row_to_col, a.cost);
      },
      py::arg("cost"), "Returns (column per row or -1, total cost).");

  m.def("normalize_rttm", [](const std::string& text) { return write_rttm(rttm_from(text)); });
  m.def("normalize_seglst", [](const std::string& text) { return write_seglst(read_seglst(text)); });
  m.def("normalize_ctm", [](const std::string& text) {
    std::istringstream in(text);
    return write_word_transcript(read_word_transcript(in).words);
  });

  m.def(
      "der",
      [](const std::string& ref_rttm, const std::string& hyp_rttm, double collar) {
        const auto ref = rttm_from(ref_rttm);
        const auto hyp = rttm_from(hyp_rttm);
        py::dict out;
        for (const auto& [id, rec] : ref) {
          std::vector<DiarSegment> h;
          if (auto it = hyp.find(id); it != hyp.end()) h = it->second.segments;
          const auto d = compute_der(rec.segments, h, Time::from_seconds(collar));
          py::dict row;
          row["der"] = d.der;
          row["missed"] = d.missed.seconds();
          row["false_alarm"] = d.false_alarm.seconds();
          row["confusion"] = d.confusion.seconds();
          row["scored"] = d.scored.seconds();
          row["mapping"] = d.mapping;
          out[py::str(id)] = row;
        }
        return out;
      },
      py::arg("ref_rttm"), py::arg("hyp_rttm"), py::arg("collar") = 0.0,
      "Per-recording DER for two RTTM texts.");

  m.def(
      "score",
      [](const std::string& ref_seglst, const std::string& hyp_seglst, const std::string& config_json) {
        const auto cfg = config_from(config_json);
        return report_json(score_sessions(read_seglst(ref_seglst), read_seglst(hyp_seglst), cfg.score, cfg.jobs));
      },
      py::arg("ref_seglst"), py::arg("hyp_seglst"), py::arg("config_json") = "",
      "Scores two SegLST texts; returns the report as JSON text.");

  m.def(
      "build_dialogues",
      [](const std::string& ref_rttm, const std::string& ref_seglst, const std::string& config_json,
         const std::string& diarization_rttm) {
        const auto cfg = config_from(config_json);
        Corpus corpus{rttm_from(ref_rttm), read_seglst(ref_seglst), std::nullopt, {}};
        std::optional<RecordingMap> dia;
        if (!diarization_rttm.empty()) dia = rttm_from(diarization_rttm);
        const auto built = build_dialogues(corpus, dia ? &*dia : nullptr, cfg);
        return write_dialogues(built.dialogues, cfg.codec);
      },
      py::arg("ref_rttm"), py::arg("ref_seglst"), py::arg("config_json") = "",
      py::arg("diarization_rttm") = "", "Returns dialogue JSONL text.");

  m.def(
      "simulate",
      [](const std::string& dialogues_jsonl, const std::string& config_json) {
        const auto cfg = config_from(config_json);
        const auto dialogues = read_dialogues(dialogues_jsonl, "<jsonl>", cfg.codec);
        std::vector<DialogueRun> runs;
        {
          py::gil_scoped_release release;
          auto backend = make_backend(cfg, dialogues);
          runs = run_corpus(dialogues, *backend, cfg.jobs);
        }
        const auto composed = compose_runs(dialogues, runs, cfg.setup, cfg.codec);
        py::dict out;
        out["hypothesis"] = write_seglst(composed.hypothesis);
        out["log"] = write_annotated_run_log(runs, composed, cfg.setup);
        out["failed_turns"] = composed.failed_turns;
        out["speaker_fallbacks"] = composed.speaker_fallbacks;
        out["time_fallbacks"] = composed.time_fallbacks;
        return out;
      },
      py::arg("dialogues_jsonl"), py::arg("config_json") = "",
      "Runs every dialogue through the configured backend and composes a SegLST hypothesis.");

  m.def("default_config", [] { return run_config_json(RunConfig{}); });
}
