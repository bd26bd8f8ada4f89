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

// dmasr: build, run and score diarization-conditioned ASR dialogues.
//
// Exit status: 0 success, 2 bad input or configuration, 3 backend or
// runtime failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmasr/error.hpp"
#include "dmasr/pipeline.hpp"

namespace {

using namespace dmasr;
namespace fs = std::filesystem;

constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

/// Flag values; each one only overrides the config when it was given.
struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  double delta_t = 0.1;
  double min_chunk = 15.0;
  double max_chunk = 25.0;
  double perturb_p = 0.1;
  double time_jitter_max = 0.5;
  std::string mode;
  std::string setup;
  double collar_der = 0.0;
  double collar_tcp = 5.0;
  std::string tokenize;
  std::string backend;
  int backend_timeout_ms = 30000;
  double noise = 0.0;
  double word_sub_rate = 0.0;
  double word_del_rate = 0.0;
  double word_ins_rate = 0.0;
  double speaker_flip_rate = 0.0;
  double time_jitter_sd = 0.0;
};

void emit(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
  } else {
    write_text_file(path, body);
  }
}

void note(const std::string& msg) { std::cerr << "dmasr: " << msg << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diarization-conditioned multi-speaker ASR toolkit", "dmasr"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  std::map<std::string, CLI::Option*> opt;
  opt["config"] = app.add_option("--config", f.config, "JSON run configuration file");
  opt["seed"] = app.add_option("--seed", f.seed, "Random seed");
  opt["jobs"] = app.add_option("--jobs", f.jobs, "Parallel recordings/sessions")
                    ->check(CLI::PositiveNumber);
  opt["delta_t"] = app.add_option("--delta-t", f.delta_t, "Time grid step, seconds");
  opt["min_chunk"] = app.add_option("--min-chunk", f.min_chunk, "Shortest chunk, seconds");
  opt["max_chunk"] = app.add_option("--max-chunk", f.max_chunk, "Longest chunk, seconds");
  opt["perturb_p"] = app.add_option("--perturb-p", f.perturb_p, "Cue perturbation probability");
  opt["time_jitter_max"] =
      app.add_option("--time-jitter-max", f.time_jitter_max, "Boundary jitter bound, seconds");
  opt["mode"] = app.add_option("--mode", f.mode, "Target mode")
                    ->check(CLI::IsMember({"plain", "with_timestamps"}));
  opt["setup"] = app.add_option("--setup", f.setup, "{dia-spk,llm-spk},{dia-time,llm-time}");
  opt["collar_der"] = app.add_option("--collar-der", f.collar_der, "DER collar, seconds");
  opt["collar_tcp"] = app.add_option("--collar-tcp", f.collar_tcp, "tcpWER collar, seconds");
  opt["tokenize"] = app.add_option("--tokenize", f.tokenize, "Scoring unit")
                        ->check(CLI::IsMember({"word", "char"}));
  opt["backend"] = app.add_option("--backend", f.backend, "mock or external:<endpoint>");
  opt["backend_timeout_ms"] =
      app.add_option("--backend-timeout-ms", f.backend_timeout_ms, "Per-reply timeout");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate and normalize a corpus");
  IngestInputs ingest_in;
  std::string ingest_out;
  ingest_cmd->add_option("--rttm", ingest_in.rttm, "Reference RTTM (repeatable)")->required();
  ingest_cmd->add_option("--ctm", ingest_in.ctm, "Word-level CTM transcript (repeatable)");
  ingest_cmd->add_option("--seglst", ingest_in.seglst, "SegLST transcript (repeatable)");
  ingest_cmd->add_option("--out", ingest_out, "Corpus directory")->required();

  // build
  auto* build_cmd = app.add_subcommand("build", "Chunk a corpus and write dialogues");
  std::string build_corpus_dir, build_diar, build_out;
  build_cmd->add_option("--corpus", build_corpus_dir, "Ingested corpus directory")->required();
  build_cmd->add_option("--diarization", build_diar,
                        "Front-end RTTM to condition on (default: the reference)");
  build_cmd->add_option("--out", build_out, "Dialogue JSONL")->required();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Run dialogues through a backend");
  std::string sim_dialogues, sim_out, sim_log;
  sim_cmd->add_option("--dialogues", sim_dialogues, "Dialogue JSONL")->required();
  sim_cmd->add_option("--out", sim_out, "Hypothesis SegLST")->required();
  sim_cmd->add_option("--log", sim_log, "Run log JSONL")->required();
  auto* noise_opt = sim_cmd->add_option("--noise", f.noise, "Mock: every error rate at once");
  opt["word_sub_rate"] = sim_cmd->add_option("--word-sub-rate", f.word_sub_rate, "Mock: word substitution rate");
  opt["word_del_rate"] = sim_cmd->add_option("--word-del-rate", f.word_del_rate, "Mock: word deletion rate");
  opt["word_ins_rate"] = sim_cmd->add_option("--word-ins-rate", f.word_ins_rate, "Mock: word insertion rate");
  opt["speaker_flip_rate"] = sim_cmd->add_option("--speaker-flip-rate", f.speaker_flip_rate, "Mock: wrong speaker token rate");
  opt["time_jitter_sd"] = sim_cmd->add_option("--time-jitter-sd", f.time_jitter_sd,
                                              "Mock: time token jitter, seconds");

  // compose
  auto* compose_cmd = app.add_subcommand("compose", "Re-compose hypotheses from a run log");
  std::string comp_dialogues, comp_log, comp_out;
  compose_cmd->add_option("--dialogues", comp_dialogues, "Dialogue JSONL")->required();
  compose_cmd->add_option("--log", comp_log, "Run log JSONL")->required();
  compose_cmd->add_option("--out", comp_out, "Hypothesis SegLST")->required();

  // score
  auto* score_cmd = app.add_subcommand("score", "DER, cpWER and tcpWER of a hypothesis");
  std::string score_ref, score_hyp, score_out, score_tsv;
  score_cmd->add_option("--ref", score_ref, "Reference SegLST")->required();
  score_cmd->add_option("--hyp", score_hyp, "Hypothesis SegLST")->required();
  score_cmd->add_option("--out", score_out, "Report JSON (default stdout)");
  score_cmd->add_option("--tsv", score_tsv, "Flat TSV summary");

  // report
  auto* report_cmd = app.add_subcommand("report", "Tabulate score reports side by side");
  std::vector<std::string> report_in;
  std::string report_out;
  report_cmd->add_option("reports", report_in, "Score JSON files, optionally label=path")
      ->required();
  report_cmd->add_option("--out", report_out, "Table TSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    RunConfig cfg;
    if (!f.config.empty()) apply_config_json(cfg, read_text_file(f.config), f.config);
    auto given = [&](const char* key) { return opt.at(key)->count() > 0; };
    if (given("seed")) cfg.perturbation.seed = cfg.mock.seed = f.seed;
    if (given("jobs")) cfg.jobs = f.jobs;
    if (given("delta_t")) cfg.codec.delta_t = f.delta_t;
    if (given("min_chunk")) cfg.chunking.min_duration = Time::from_seconds(f.min_chunk);
    if (given("max_chunk")) cfg.chunking.max_duration = Time::from_seconds(f.max_chunk);
    if (given("perturb_p")) cfg.perturbation.p = f.perturb_p;
    if (given("time_jitter_max")) cfg.perturbation.time_jitter_max = f.time_jitter_max;
    if (given("mode")) cfg.mode = parse_target_mode(f.mode);
    if (given("setup")) cfg.setup = EvalSetup::parse(f.setup);
    if (given("collar_der")) cfg.score.collar_der = Time::from_seconds(f.collar_der);
    if (given("collar_tcp")) cfg.score.collar_tcp = Time::from_seconds(f.collar_tcp);
    if (given("tokenize")) cfg.score.tokenization = parse_tokenization(f.tokenize);
    if (given("backend")) cfg.backend = f.backend;
    if (given("backend_timeout_ms")) {
      if (f.backend_timeout_ms <= 0) throw ValidationError("--backend-timeout-ms must be > 0");
      cfg.backend_timeout = std::chrono::milliseconds(f.backend_timeout_ms);
    }
    if (noise_opt->count() > 0) {
      cfg.mock.word_sub_rate = cfg.mock.word_del_rate = cfg.mock.word_ins_rate =
          cfg.mock.speaker_flip_rate = f.noise;
    }
    if (given("word_sub_rate")) cfg.mock.word_sub_rate = f.word_sub_rate;
    if (given("word_del_rate")) cfg.mock.word_del_rate = f.word_del_rate;
    if (given("word_ins_rate")) cfg.mock.word_ins_rate = f.word_ins_rate;
    if (given("speaker_flip_rate")) cfg.mock.speaker_flip_rate = f.speaker_flip_rate;
    if (given("time_jitter_sd")) cfg.mock.time_jitter_sd = f.time_jitter_sd;
    cfg.validate();

    if (*ingest_cmd) {
      const auto corpus = ingest(ingest_in);
      for (const auto& w : corpus.warnings) note("warning: " + w);
      write_corpus(corpus, ingest_in, ingest_out);
      note("ingested " + std::to_string(corpus.recordings.size()) + " recordings into " +
           ingest_out);
      return 0;
    }

    if (*build_cmd) {
      const auto corpus = load_corpus(build_corpus_dir);
      std::optional<RecordingMap> diar;
      if (!build_diar.empty()) diar = read_rttm_file(build_diar);
      const auto built = build_dialogues(corpus, diar ? &*diar : nullptr, cfg);
      write_text_file(build_out, write_dialogues(built.dialogues, cfg.codec));
      std::size_t turns = 0;
      for (const auto& d : built.dialogues) turns += d.turns.size();
      note("wrote " + std::to_string(built.dialogues.size()) + " dialogues, " +
           std::to_string(turns) + " turns (" + std::to_string(built.dropped_words) +
           " words outside any segment, " + std::to_string(built.empty_chunks) +
           " empty chunks)");
      return 0;
    }

    if (*sim_cmd) {
      const auto dialogues = read_dialogues(read_text_file(sim_dialogues), sim_dialogues, cfg.codec);
      auto backend = make_backend(cfg, dialogues);
      const auto runs = run_corpus(dialogues, *backend, cfg.jobs);
      const auto composed = compose_runs(dialogues, runs, cfg.setup, cfg.codec);
      write_text_file(sim_out, write_seglst(composed.hypothesis));
      write_text_file(sim_log, write_annotated_run_log(runs, composed, cfg.setup));
      note(cfg.setup.str() + ": " + std::to_string(composed.hypothesis.size()) + " segments, " +
           std::to_string(composed.failed_turns) + " failed turns, " +
           std::to_string(composed.speaker_fallbacks) + " speaker fallbacks, " +
           std::to_string(composed.time_fallbacks) + " time fallbacks");
      return composed.failed_turns > 0 ? kExitRuntime : 0;
    }

    if (*compose_cmd) {
      const auto dialogues =
          read_dialogues(read_text_file(comp_dialogues), comp_dialogues, cfg.codec);
      const auto runs = read_run_log(read_text_file(comp_log), comp_log);
      const auto composed = compose_runs(dialogues, runs, cfg.setup, cfg.codec);
      write_text_file(comp_out, write_seglst(composed.hypothesis));
      note(cfg.setup.str() + ": " + std::to_string(composed.hypothesis.size()) + " segments");
      return 0;
    }

    if (*score_cmd) {
      const auto ref = read_seglst_file(score_ref);
      const auto hyp = read_seglst_file(score_hyp);
      const auto report = score_sessions(ref, hyp, cfg.score, cfg.jobs);
      emit(score_out, report_json(report));
      if (!score_tsv.empty()) emit(score_tsv, report_tsv(report));
      return 0;
    }

    if (*report_cmd) {
      auto pct = [](double v) {
        if (!std::isfinite(v)) return std::string("inf");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
        return std::string(buf);
      };
      std::string header, rows;
      for (const auto& item : report_in) {
        std::string label = item, path = item;
        if (auto eq = item.find('='); eq != std::string::npos) {
          label = item.substr(0, eq);
          path = item.substr(eq + 1);
        }
        ScoreReport r;
        try {
          r = read_report_json(read_text_file(path));
        } catch (const ParseError& e) {
          throw ParseError(path, e.what());
        }
        const std::string unit =
            r.settings.tokenization.unit == TokenUnit::kChar ? "CER" : "WER";
        if (header.empty()) {
          header = "label\tDER\tcp" + unit + "\ttcp" + unit +
                   "\tmissed\tfalse_alarm\tconfusion\tscored\tref_tokens\n";
        }
        const auto& a = r.aggregate;
        rows += label + "\t" + pct(a.der.der) + "\t" + pct(a.cpwer.rate) + "\t" +
                pct(a.tcpwer.rate) + "\t" + format_seconds(a.der.missed) + "\t" +
                format_seconds(a.der.false_alarm) + "\t" + format_seconds(a.der.confusion) +
                "\t" + format_seconds(a.der.scored) + "\t" +
                std::to_string(a.cpwer.reference_length) + "\n";
      }
      emit(report_out, header + rows);
      return 0;
    }
  } catch (const BackendError& e) {
    note(std::string("backend error: ") + e.what());
    return kExitRuntime;
  } catch (const ParseError& e) {
    note(e.what());
    return kExitInput;
  } catch (const ValidationError& e) {
    note(e.what());
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    note(e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    note(std::string("error: ") + e.what());
    return kExitRuntime;
  }
  return 0;
}
