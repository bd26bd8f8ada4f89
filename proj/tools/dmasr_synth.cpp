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

// dmasr-synth: writes a labeled synthetic meeting corpus (reference RTTM,
// speaker-attributed CTM, an imperfect front-end RTTM) for trying the
// pipeline without licensed data.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "dmasr/pipeline.hpp"
#include "synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic corpus generator", "dmasr-synth"};
  dmasr::synth::SyntheticOptions opts;
  std::string out;
  double seconds = 300.0;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--seed", opts.seed, "Random seed");
  app.add_option("--recordings", opts.recordings, "Number of recordings")
      ->check(CLI::PositiveNumber);
  app.add_option("--speakers", opts.speakers, "Speakers per recording")->check(CLI::Range(1, 16));
  app.add_option("--seconds", seconds, "Approximate recording length")
      ->check(CLI::Range(30.0, 36000.0));
  app.add_option("--overlap", opts.overlap_prob, "Overlap probability")->check(CLI::Range(0.0, 1.0));
  app.add_flag("--cjk", opts.cjk, "Single-character CJK words");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  opts.duration = dmasr::Time::from_seconds(seconds);
  try {
    const auto c = dmasr::synth::make_corpus(opts);
    const std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);
    dmasr::write_text_file(dir / "reference.rttm", dmasr::write_rttm(c.reference));
    dmasr::write_text_file(dir / "words.ctm", dmasr::write_word_transcript(c.words));
    dmasr::write_text_file(dir / "frontend.rttm", dmasr::write_rttm(c.frontend));
    std::cerr << "dmasr-synth: wrote " << c.reference.size() << " recordings, "
              << c.reference_seglst.size() << " segments to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "dmasr-synth: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
