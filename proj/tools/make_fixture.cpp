/* Copyright 2026 The laughtrack Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Writes the deterministic synthetic corpus used by the examples and tests.

#include <iostream>

#include <CLI11.hpp>

#include "laughtrack/error.hpp"
#include "laughtrack/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic dual-transcript corpus with audio"};
  laughtrack::synthetic::Config cfg;
  std::string out_dir;
  bool no_audio = false;
  app.add_option("--out-dir", out_dir)->required();
  app.add_option("--videos", cfg.videos);
  app.add_option("--words", cfg.words_per_video, "Words per video");
  app.add_option("--missed", cfg.missed_laughs, "Laughs absent from the detector track");
  app.add_option("--detected", cfg.detected_laughs, "Laughs present in the detector track");
  app.add_option("--noise", cfg.noise_events, "Non-laughter pauses per video");
  app.add_option("--seed", cfg.seed);
  app.add_flag("--no-audio", no_audio);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  cfg.audio = !no_audio;
  try {
    const auto corpus = laughtrack::synthetic::Generate(cfg);
    laughtrack::synthetic::Write(corpus, out_dir);
    std::cerr << "{\"stage\":\"make-fixture\",\"videos\":" << corpus.manifest.size()
              << ",\"events\":" << corpus.events.size() << "}\n";
  } catch (const laughtrack::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
