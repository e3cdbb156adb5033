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

// `laughtrack` command-line front-end.
//
// Exit codes: 0 success, 1 data/validation error, 2 usage error.
// Every stage prints one JSON summary line on stderr; every artifact gets a
// `<artifact>.meta.json` sidecar with the config digest and input digests.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "laughtrack/align.hpp"
#include "laughtrack/classifier.hpp"
#include "laughtrack/corpus.hpp"
#include "laughtrack/digest.hpp"
#include "laughtrack/error.hpp"
#include "laughtrack/evaluation.hpp"
#include "laughtrack/features.hpp"
#include "laughtrack/forest.hpp"
#include "laughtrack/io.hpp"
#include "laughtrack/labels.hpp"
#include "laughtrack/parallel.hpp"
#include "laughtrack/wav.hpp"

namespace laughtrack {

inline constexpr const char* kVersion = "1.0.0";

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

struct PipelineConfig {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  MiningConfig mining;
  ForestConfig forest;
  FeatureConfig features;
  LabelingConfig labeling;
  EvalConfig eval;

  struct Paths {
    std::string manifest, words_a, words_b, laughter, audio_root, features, model;
  } paths;

  // Settings that influence outputs; paths and thread count are excluded.
  nlohmann::json Settings() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["mining"] = {{"abs_dur", mining.anomaly.abs_dur_s},
                   {"rel_factor", mining.anomaly.rel_factor},
                   {"min_dur", mining.min_candidate_dur},
                   {"max_overlap", mining.max_existing_overlap}};
    j["forest"] = {{"n_estimators", forest.n_estimators},
                   {"max_depth", forest.max_depth},
                   {"min_samples_split", forest.min_samples_split},
                   {"max_features", forest.max_features},
                   {"holdout_fraction", forest.holdout_fraction}};
    j["features"] = {{"n_fft", features.n_fft},
                     {"hop", features.hop},
                     {"n_mels", features.n_mels},
                     {"voicing_threshold", features.voicing_threshold}};
    j["labeling"] = {{"scheme", std::string(ToString(labeling.scheme))}};
    j["eval"] = {{"iou", eval.iou_threshold}};
    return j;
  }

  std::string Digest() const { return Sha256Hex(Settings().dump()); }

  // Fields absent from `j` keep their current values.
  void Merge(const nlohmann::json& j, const std::string& name) {
    try {
      auto num = [](const nlohmann::json& obj, const char* key, auto& dst) {
        if (obj.contains(key)) dst = obj.at(key).get<std::decay_t<decltype(dst)>>();
      };
      num(j, "seed", seed);
      num(j, "jobs", jobs);
      if (j.contains("mining")) {
        const auto& m = j.at("mining");
        num(m, "abs_dur", mining.anomaly.abs_dur_s);
        num(m, "rel_factor", mining.anomaly.rel_factor);
        num(m, "min_dur", mining.min_candidate_dur);
        num(m, "max_overlap", mining.max_existing_overlap);
      }
      if (j.contains("forest")) {
        const auto& f = j.at("forest");
        num(f, "n_estimators", forest.n_estimators);
        num(f, "max_depth", forest.max_depth);
        num(f, "min_samples_split", forest.min_samples_split);
        num(f, "max_features", forest.max_features);
        num(f, "holdout_fraction", forest.holdout_fraction);
      }
      if (j.contains("features")) {
        const auto& f = j.at("features");
        num(f, "voicing_threshold", features.voicing_threshold);
      }
      if (j.contains("labeling") && j.at("labeling").contains("scheme")) {
        const auto s = ParseLabelingScheme(j.at("labeling").at("scheme").get<std::string>());
        if (!s) throw ParseError(name, 0, "labeling.scheme must be span or next_word");
        labeling.scheme = *s;
      }
      if (j.contains("eval")) num(j.at("eval"), "iou", eval.iou_threshold);
      if (j.contains("paths")) {
        const auto& p = j.at("paths");
        num(p, "manifest", paths.manifest);
        num(p, "words_a", paths.words_a);
        num(p, "words_b", paths.words_b);
        num(p, "laughter", paths.laughter);
        num(p, "audio_root", paths.audio_root);
        num(p, "features", paths.features);
        num(p, "model", paths.model);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(name, 0, std::string("bad config: ") + e.what());
    }
  }
};

// ---------------------------------------------------------------------------
// Provenance

struct Provenance {
  std::string command;
  const PipelineConfig* config = nullptr;
  std::vector<std::pair<std::string, fs::path>> inputs;
  ojson extra = ojson::object();
};

inline fs::path MetaPath(const fs::path& artifact) {
  return fs::path(artifact.string() + ".meta.json");
}

inline void WriteMeta(const fs::path& artifact, const Provenance& prov) {
  ojson j;
  j["tool"] = "laughtrack";
  j["version"] = kVersion;
  j["command"] = prov.command;
  j["artifact"] = artifact.filename().string();
  j["artifact_sha256"] = FileSha256(artifact);
  j["config_digest"] = prov.config->Digest();
  j["config"] = ojson::parse(prov.config->Settings().dump());
  ojson inputs = ojson::object();
  for (const auto& [role, path] : prov.inputs)
    inputs[role] = {{"file", path.filename().string()}, {"sha256", FileSha256(path)}};
  j["inputs"] = std::move(inputs);
  for (const auto& [k, v] : prov.extra.items()) j[k] = v;
  SaveJson(MetaPath(artifact), j);
}

inline void LogStage(std::ostream& err, const std::string& stage, ojson fields) {
  ojson j;
  j["stage"] = stage;
  for (auto& [k, v] : fields.items()) j[k] = v;
  err << j.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Stage implementations shared by the individual subcommands and `pipeline`.

namespace stages {

struct MineOutputs {
  fs::path candidates, words, report;
};

inline MiningResult Mine(const PipelineConfig& cfg, const MineOutputs& out, std::ostream& err) {
  const auto manifest = LoadManifest(cfg.paths.manifest);
  const auto a = LoadWords(cfg.paths.words_a);
  const auto b = LoadWords(cfg.paths.words_b);
  std::vector<LaughterSegment> existing;
  if (!cfg.paths.laughter.empty()) existing = LoadLaughter(cfg.paths.laughter);
  auto result = MineCorpus(manifest, PairTranscripts(a, b), existing, cfg.mining, cfg.jobs);

  Provenance prov{"mine", &cfg, {{"manifest", cfg.paths.manifest},
                                 {"words_a", cfg.paths.words_a},
                                 {"words_b", cfg.paths.words_b}}};
  if (!cfg.paths.laughter.empty()) prov.inputs.emplace_back("laughter", cfg.paths.laughter);
  SaveCandidates(out.candidates, result.candidates);
  WriteMeta(out.candidates, prov);
  if (!out.words.empty()) {
    SaveWords(out.words, result.corrected_words);
    WriteMeta(out.words, prov);
  }
  if (!out.report.empty()) SaveJson(out.report, MiningReportJson(result));
  LogStage(err, "mine", {{"videos", result.report.size()},
                         {"skipped", result.skipped()},
                         {"candidates", result.candidates.size()}});
  return result;
}

struct SegmentRef {
  SegmentKey key;
};

// Extracts features for every segment that passes the duration gate. Audio is
// read from <audio_root>/<video_id>.wav.
inline std::vector<FeatureRow> ExtractForSegments(const std::vector<SegmentKey>& keys,
                                                  const fs::path& audio_root,
                                                  const FeatureConfig& fcfg, unsigned jobs,
                                                  std::size_t* gated = nullptr) {
  std::vector<SegmentKey> todo;
  std::size_t skipped = 0;
  std::set<SegmentKey> seen;
  for (const auto& k : keys) {
    if (!seen.insert(k).second) continue;
    if (Verify(k) == Verdict::kAutoOther) {
      ++skipped;
      continue;
    }
    todo.push_back(k);
  }
  if (gated != nullptr) *gated = skipped;

  std::vector<std::string> videos;
  for (const auto& k : todo)
    if (videos.empty() || videos.back() != k.video_id) videos.push_back(k.video_id);
  std::sort(videos.begin(), videos.end());
  videos.erase(std::unique(videos.begin(), videos.end()), videos.end());
  std::vector<WavAudio> audio(videos.size());
  ParallelFor(videos.size(), jobs, [&](std::size_t i) {
    audio[i] = ReadWav(audio_root / (videos[i] + ".wav"));
  });
  std::map<std::string, const WavAudio*> by_id;
  for (std::size_t i = 0; i < videos.size(); ++i) by_id[videos[i]] = &audio[i];

  std::vector<FeatureRow> rows(todo.size());
  ParallelFor(todo.size(), jobs, [&](std::size_t i) {
    const auto& k = todo[i];
    const auto clip = ClipAudio(*by_id.at(k.video_id), k.start_s(), k.end_s(), k.video_id);
    rows[i] = {k, ExtractFeatures(clip, fcfg)};
  });
  return rows;
}

inline std::vector<SegmentKey> KeysOf(const std::vector<CandidateLaughter>& cands) {
  std::vector<SegmentKey> keys;
  for (const auto& c : cands) keys.push_back(SegmentKey::Of(c.video_id, c.start_s, c.end_s));
  return keys;
}

// Reads video_id/start_s/end_s from any segment-shaped JSONL file.
inline std::vector<SegmentKey> LoadSegmentKeys(const fs::path& path) {
  auto in = detail::OpenIn(path);
  std::vector<SegmentKey> keys;
  const std::string name = path.string();
  detail::ForEachJsonLine(in, name, [&](const nlohmann::json& j, std::size_t line) {
    detail::Fields f(j, name, line);
    const double s = f.Number("start_s"), e = f.Number("end_s");
    if (!(s < e)) f.Fail("start_s must be < end_s");
    keys.push_back(SegmentKey::Of(f.String("video_id"), s, e));
  });
  return keys;
}

inline FilterResult Classify(const ForestModel& model, const std::vector<CandidateLaughter>& cands,
                             const std::vector<FeatureRow>& rows, const fs::path& out,
                             const Provenance& prov, std::ostream& err) {
  auto result = FilterCandidates(cands, IndexFeatures(rows), model);
  SaveLaughter(out, result.accepted);
  WriteMeta(out, prov);
  std::size_t gated = 0;
  for (const auto& d : result.decisions) gated += d.verdict == Verdict::kAutoOther;
  LogStage(err, "classify", {{"candidates", cands.size()},
                             {"auto_other", gated},
                             {"accepted", result.accepted.size()}});
  return result;
}

}  // namespace stages

// ---------------------------------------------------------------------------
// Report printing

inline void PrintStatsTable(std::ostream& out, const StatsReport& r, bool with_labels) {
  out << std::left << std::setw(8) << "lang" << std::right << std::setw(8) << "videos"
      << std::setw(9) << "hours" << std::setw(10) << "words" << std::setw(10) << "laughter";
  if (with_labels) out << std::setw(10) << "labels";
  out << '\n';
  auto row = [&](const std::string& name, const StatsRow& s) {
    out << std::left << std::setw(8) << name << std::right << std::setw(8) << s.videos
        << std::setw(9) << std::fixed << std::setprecision(1) << s.hours() << std::setw(10)
        << s.words << std::setw(10) << s.laughter;
    if (with_labels) out << std::setw(10) << s.laughter_labels;
    out << '\n';
  };
  for (const auto& [lang, s] : r.by_language) row(lang, s);
  row("total", r.total);
}

inline ojson StatsJson(const StatsReport& r) {
  auto row = [](const StatsRow& s) {
    return ojson{{"videos", s.videos},
                 {"hours", s.hours()},
                 {"seconds", s.seconds},
                 {"words", s.words},
                 {"laughter", s.laughter},
                 {"laughter_labels", s.laughter_labels}};
  };
  ojson j;
  ojson langs = ojson::object();
  for (const auto& [lang, s] : r.by_language) langs[lang] = row(s);
  j["by_language"] = std::move(langs);
  j["total"] = row(r.total);
  return j;
}

inline void PrintCounts(std::ostream& out, const std::string& name, const Counts& c, double scale,
                        int precision) {
  out << std::left << std::setw(8) << name << std::right << std::fixed
      << std::setprecision(precision) << std::setw(8) << c.precision() * scale << std::setw(8)
      << c.recall() * scale << std::setw(8) << c.f1() * scale << std::setw(8) << c.tp
      << std::setw(8) << c.fp << std::setw(8) << c.fn << '\n';
}

inline void PrintCountsHeader(std::ostream& out) {
  out << std::left << std::setw(8) << "" << std::right << std::setw(8) << "P" << std::setw(8)
      << "R" << std::setw(8) << "F1" << std::setw(8) << "TP" << std::setw(8) << "FP"
      << std::setw(8) << "FN" << '\n';
}

// ---------------------------------------------------------------------------
// Entry point

inline int RunCli(int argc, const char* const* argv, std::ostream& out = std::cout,
                  std::ostream& err = std::cerr) {
  CLI::App app{"laughtrack: audience-laughter corpus construction and evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  app.add_option("--config", config_path, "JSON config file; flags override it")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  // Path flags shared by several subcommands.
  std::optional<std::string> manifest, words_a, words_b, laughter, audio_root, features_csv, model;
  std::string words, dataset, labels_csv, labels_jsonl, candidates, out_path, out_words, report,
      pred, gold, out_dir, decisions, segments;
  std::vector<std::string> laughter_tracks;
  std::optional<double> abs_dur, rel_factor, min_dur, max_overlap, iou;
  std::optional<int> n_estimators, max_depth, min_samples_split, max_features;
  std::optional<std::string> scheme;
  int cv_iterations = 0;
  std::string cv_report;
  bool by_language = false;

  auto add_mining = [&](CLI::App* s) {
    s->add_option("--abs-dur", abs_dur, "Absolute anomaly floor in seconds (0.8)");
    s->add_option("--rel-factor", rel_factor, "Anomaly factor over median word duration (3.0)");
    s->add_option("--min-dur", min_dur, "Minimum candidate duration in seconds (0.5)");
    s->add_option("--max-overlap", max_overlap,
                  "Drop candidates covered by existing laughter at this fraction (0.5)");
  };
  auto add_scheme = [&](CLI::App* s) {
    s->add_option("--scheme", scheme, "Labeling scheme: span | next_word")
        ->check(CLI::IsMember({"span", "next_word"}));
  };

  auto* stats = app.add_subcommand("stats", "Per-language corpus statistics");
  stats->add_option("--manifest", manifest)->required();
  stats->add_option("--words", words)->required();
  stats->add_option("--laughter", laughter);
  stats->add_option("--dataset", dataset, "Also count positive word labels");
  stats->add_option("--out", out_path, "Write report JSON");

  auto* mine = app.add_subcommand("mine", "Mine laughter candidates from two transcripts");
  mine->add_option("--manifest", manifest);
  mine->add_option("--words-a", words_a, "Transcript attaching laughter to the previous word");
  mine->add_option("--words-b", words_b, "Transcript attaching laughter to the next word");
  mine->add_option("--laughter", laughter, "Existing detector laughter");
  mine->add_option("--out", out_path, "candidates.jsonl")->required();
  mine->add_option("--out-words", out_words, "Corrected words.jsonl");
  mine->add_option("--report", report, "Per-video report JSON");
  add_mining(mine);

  auto* extract = app.add_subcommand("extract-features", "Acoustic features for segments");
  extract->add_option("--segments", segments, "Segments JSONL (candidates or laughter)");
  extract->add_option("--labels", labels_csv, "labels.csv whose segments to extract");
  extract->add_option("--audio-root", audio_root, "Directory of <video_id>.wav");
  extract->add_option("--out", out_path, "features.csv")->required();

  auto* train = app.add_subcommand("train-rf", "Train the candidate random forest");
  train->add_option("--features", features_csv)->required();
  train->add_option("--labels", labels_csv)->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_path, "model.json")->required();
  train->add_option("--n-estimators", n_estimators);
  train->add_option("--max-depth", max_depth);
  train->add_option("--min-samples-split", min_samples_split);
  train->add_option("--max-features", max_features, "0 = floor(sqrt(n_features))");
  train->add_option("--cv", cv_iterations, "Also run N repeated holdout evaluations");
  train->add_option("--cv-report", cv_report, "Write the evaluation report JSON");

  auto* classify = app.add_subcommand("classify", "Validate candidates with a trained forest");
  classify->add_option("--model", model)->required();
  classify->add_option("--candidates", candidates)->required()->check(CLI::ExistingFile);
  classify->add_option("--features", features_csv, "Precomputed features.csv");
  classify->add_option("--audio-root", audio_root, "Extract features from audio instead");
  classify->add_option("--out", out_path, "Accepted laughter.jsonl")->required();
  classify->add_option("--decisions", decisions, "Per-candidate decisions JSONL");

  auto* merge = app.add_subcommand("merge-laughter", "Merge laughter tracks");
  merge->add_option("--laughter", laughter_tracks)->required();
  merge->add_option("--out", out_path)->required();

  auto* label = app.add_subcommand("label", "Word-level laughter labels");
  label->add_option("--words", words)->required()->check(CLI::ExistingFile);
  label->add_option("--laughter", laughter)->required();
  label->add_option("--manifest", manifest, "Video durations for clipping and next_word");
  label->add_option("--out", out_path, "labels.jsonl")->required();
  add_scheme(label);

  auto* emit = app.add_subcommand("emit-dataset", "Build dataset.jsonl");
  emit->add_option("--manifest", manifest)->required();
  emit->add_option("--labels", labels_jsonl, "labels.jsonl from `label`");
  emit->add_option("--words", words);
  emit->add_option("--laughter", laughter);
  emit->add_option("--out", out_path, "dataset.jsonl")->required();
  emit->add_option("--report", report, "Label-count report JSON");
  add_scheme(emit);

  auto* evseg = app.add_subcommand("eval-segments", "IoU-matched segment evaluation");
  evseg->add_option("--pred", pred)->required()->check(CLI::ExistingFile);
  evseg->add_option("--gold", gold)->required()->check(CLI::ExistingFile);
  evseg->add_option("--manifest", manifest, "Languages for the per-language rows");
  evseg->add_option("--iou", iou, "IoU threshold; a match needs IoU strictly above it (0.2)");
  evseg->add_option("--out", out_path, "Report JSON");

  auto* evtok = app.add_subcommand("eval-tokens", "Word-level label evaluation");
  evtok->add_option("--pred", pred)->required()->check(CLI::ExistingFile);
  evtok->add_option("--gold", gold)->required()->check(CLI::ExistingFile);
  evtok->add_flag("--by-language", by_language, "Print per-language rows");
  evtok->add_option("--out", out_path, "Report JSON");

  auto* pipe = app.add_subcommand("pipeline", "mine -> classify -> merge -> label -> emit");
  pipe->add_option("--manifest", manifest);
  pipe->add_option("--words-a", words_a);
  pipe->add_option("--words-b", words_b);
  pipe->add_option("--laughter", laughter);
  pipe->add_option("--model", model);
  pipe->add_option("--audio-root", audio_root);
  pipe->add_option("--features", features_csv);
  pipe->add_option("--out-dir", out_dir)->required();
  add_mining(pipe);
  add_scheme(pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(config_path, 0, std::string("invalid JSON: ") + e.what());
      }
      cfg.Merge(j, config_path);
    }
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    if (abs_dur) cfg.mining.anomaly.abs_dur_s = *abs_dur;
    if (rel_factor) cfg.mining.anomaly.rel_factor = *rel_factor;
    if (min_dur) cfg.mining.min_candidate_dur = *min_dur;
    if (max_overlap) cfg.mining.max_existing_overlap = *max_overlap;
    if (n_estimators) cfg.forest.n_estimators = *n_estimators;
    if (max_depth) cfg.forest.max_depth = *max_depth;
    if (min_samples_split) cfg.forest.min_samples_split = *min_samples_split;
    if (max_features) cfg.forest.max_features = *max_features;
    if (scheme) cfg.labeling.scheme = *ParseLabelingScheme(*scheme);
    if (iou) cfg.eval.iou_threshold = *iou;
    if (manifest) cfg.paths.manifest = *manifest;
    if (words_a) cfg.paths.words_a = *words_a;
    if (words_b) cfg.paths.words_b = *words_b;
    if (laughter) cfg.paths.laughter = *laughter;
    if (audio_root) cfg.paths.audio_root = *audio_root;
    if (features_csv) cfg.paths.features = *features_csv;
    if (model) cfg.paths.model = *model;
    cfg.forest.seed = cfg.seed;

    auto need = [](const std::string& value, const char* flag) {
      if (value.empty()) throw CLI::RequiredError(flag);
    };

    if (*stats) {
      const auto m = LoadManifest(cfg.paths.manifest);
      const auto w = LoadWords(words);
      std::vector<LaughterSegment> l;
      if (!cfg.paths.laughter.empty()) l = LoadLaughter(cfg.paths.laughter);
      std::vector<LabeledSequence> d;
      if (!dataset.empty()) d = LoadDataset(dataset);
      const auto r = CorpusStats(m, w, l, dataset.empty() ? nullptr : &d);
      PrintStatsTable(out, r, !dataset.empty());
      if (!out_path.empty()) SaveJson(out_path, StatsJson(r));
      LogStage(err, "stats", {{"videos", r.total.videos}, {"words", r.total.words}});
      return 0;
    }

    if (*mine) {
      need(cfg.paths.manifest, "--manifest");
      need(cfg.paths.words_a, "--words-a");
      need(cfg.paths.words_b, "--words-b");
      stages::Mine(cfg, {out_path, out_words, report}, err);
      return 0;
    }

    if (*extract) {
      need(cfg.paths.audio_root, "--audio-root");
      std::vector<SegmentKey> keys;
      std::vector<std::pair<std::string, fs::path>> inputs;
      if (!segments.empty()) {
        keys = stages::LoadSegmentKeys(segments);
        inputs.emplace_back("segments", segments);
      }
      if (!labels_csv.empty()) {
        for (const auto& [k, v] : LoadSegmentLabels(labels_csv)) keys.push_back(k);
        inputs.emplace_back("labels", labels_csv);
      }
      if (inputs.empty()) throw CLI::RequiredError("--segments or --labels");
      std::size_t gated = 0;
      const auto rows =
          stages::ExtractForSegments(keys, cfg.paths.audio_root, cfg.features, cfg.jobs, &gated);
      ExportFeatures(out_path, rows);
      WriteMeta(out_path, {"extract-features", &cfg, inputs});
      LogStage(err, "extract-features", {{"segments", keys.size()},
                                         {"extracted", rows.size()},
                                         {"auto_other_skipped", gated}});
      return 0;
    }

    if (*train) {
      const auto rows = ImportFeatures(cfg.paths.features);
      const auto labels = LoadSegmentLabels(labels_csv);
      const auto joined = JoinLabels(rows, labels);
      const auto set = PrepareTrainingSet(joined);
      const auto forest = TrainForest(set.examples, FeatureNames(), cfg.forest, cfg.jobs);
      SaveForest(out_path, forest);
      WriteMeta(out_path, {"train-rf", &cfg,
                           {{"features", cfg.paths.features}, {"labels", labels_csv}}});
      ojson summary{{"examples", set.examples.size()},
                    {"auto_other_excluded", set.auto_other},
                    {"trees", forest.trees.size()}};
      if (cv_iterations > 0) {
        const auto cv = EvaluateCv(set.examples, cfg.forest, cv_iterations, cfg.jobs);
        const auto j = CvReportJson(cv);
        if (!cv_report.empty()) SaveJson(cv_report, j);
        out << "class      precision        recall           f1\n";
        auto line = [&](const char* name, const CvClassReport& c) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "%-9s  %.2f-%.2f (%.2f)  %.2f-%.2f (%.2f)  %.2f-%.2f (%.2f)\n",
                        name, c.precision.low, c.precision.high, c.precision.mean, c.recall.low,
                        c.recall.high, c.recall.mean, c.f1.low, c.f1.high, c.f1.mean);
          out << buf;
        };
        line("other", cv.other);
        line("laughter", cv.laughter);
        line("macro", cv.macro);
        summary["cv_iterations"] = cv_iterations;
        summary["cv_laughter_f1"] = cv.laughter.f1.mean;
      }
      LogStage(err, "train-rf", std::move(summary));
      return 0;
    }

    if (*classify) {
      const auto forest = LoadForest(cfg.paths.model);
      const auto cands = LoadCandidates(candidates);
      Provenance prov{"classify", &cfg, {{"model", cfg.paths.model}, {"candidates", candidates}}};
      std::vector<FeatureRow> rows;
      if (!cfg.paths.features.empty()) {
        rows = ImportFeatures(cfg.paths.features);
        prov.inputs.emplace_back("features", cfg.paths.features);
      } else {
        need(cfg.paths.audio_root, "--features or --audio-root");
        rows = stages::ExtractForSegments(stages::KeysOf(cands), cfg.paths.audio_root,
                                          cfg.features, cfg.jobs);
      }
      const auto result = stages::Classify(forest, cands, rows, out_path, prov, err);
      if (!decisions.empty()) {
        auto f = detail::OpenOut(decisions);
        for (const auto& d : result.decisions) {
          ojson j{{"video_id", d.key.video_id},
                  {"start_s", d.key.start_s()},
                  {"end_s", d.key.end_s()},
                  {"verdict", d.verdict == Verdict::kPass ? "pass" : "auto_other"},
                  {"probability", d.prediction ? ojson(d.prediction->probability) : ojson()},
                  {"accepted", d.accepted}};
          detail::WriteLine(f, j);
        }
      }
      return 0;
    }

    if (*merge) {
      std::vector<std::vector<LaughterSegment>> tracks;
      Provenance prov{"merge-laughter", &cfg, {}};
      for (std::size_t i = 0; i < laughter_tracks.size(); ++i) {
        tracks.push_back(LoadLaughter(laughter_tracks[i]));
        prov.inputs.emplace_back("laughter_" + std::to_string(i), laughter_tracks[i]);
      }
      const auto merged = MergeLaughter(std::move(tracks));
      SaveLaughter(out_path, merged);
      WriteMeta(out_path, prov);
      LogStage(err, "merge-laughter", {{"tracks", laughter_tracks.size()},
                                       {"segments", merged.size()}});
      return 0;
    }

    if (*label) {
      const auto w = LoadWords(words);
      const auto l = LoadLaughter(cfg.paths.laughter);
      std::vector<VideoRecord> m;
      if (!cfg.paths.manifest.empty()) m = LoadManifest(cfg.paths.manifest);
      EmitReport rep;
      const auto labels =
          LabelCorpus(w, l, cfg.labeling, cfg.paths.manifest.empty() ? nullptr : &m, &rep);
      SaveWordLabels(out_path, labels);
      Provenance prov{"label", &cfg, {{"words", words}, {"laughter", cfg.paths.laughter}}};
      if (!cfg.paths.manifest.empty()) prov.inputs.emplace_back("manifest", cfg.paths.manifest);
      prov.extra["scheme"] = ToString(cfg.labeling.scheme);
      WriteMeta(out_path, prov);
      std::size_t pos = 0;
      for (const auto& x : labels) pos += static_cast<std::size_t>(x.label);
      LogStage(err, "label", {{"words", labels.size()},
                              {"positive_labels", pos},
                              {"laughs_before_first_word", rep.laughs_before_first_word}});
      return 0;
    }

    if (*emit) {
      const auto m = LoadManifest(cfg.paths.manifest);
      EmitReport rep;
      std::vector<LabeledSequence> ds;
      Provenance prov{"emit-dataset", &cfg, {{"manifest", cfg.paths.manifest}}};
      if (!labels_jsonl.empty()) {
        ds = EmitDataset(m, LoadWordLabels(labels_jsonl), &rep);
        prov.inputs.emplace_back("labels", labels_jsonl);
        // The scheme is whatever produced the labels file.
        const auto meta_path = MetaPath(labels_jsonl);
        if (fs::exists(meta_path)) {
          std::ifstream meta_in(meta_path);
          const auto meta = nlohmann::json::parse(meta_in, nullptr, false);
          if (!meta.is_discarded() && meta.contains("scheme"))
            prov.extra["scheme"] = meta["scheme"].get<std::string>();
        }
      } else {
        need(words, "--labels or --words");
        need(cfg.paths.laughter, "--laughter");
        ds = EmitDataset(m, LoadWords(words), LoadLaughter(cfg.paths.laughter), cfg.labeling, &rep);
        prov.inputs.emplace_back("words", words);
        prov.inputs.emplace_back("laughter", cfg.paths.laughter);
        prov.extra["scheme"] = ToString(cfg.labeling.scheme);
      }
      SaveDataset(out_path, ds);
      prov.extra["report"] = EmitReportJson(rep);
      WriteMeta(out_path, prov);
      if (!report.empty()) SaveJson(report, EmitReportJson(rep));
      LogStage(err, "emit-dataset", {{"videos", rep.videos},
                                     {"skipped_no_words", rep.skipped_no_words},
                                     {"words", rep.words},
                                     {"positive_labels", rep.positives}});
      return 0;
    }

    if (*evseg) {
      std::vector<VideoRecord> m;
      if (!cfg.paths.manifest.empty()) m = LoadManifest(cfg.paths.manifest);
      const auto r = EvalSegments(LoadLaughter(pred), LoadLaughter(gold), cfg.eval,
                                  cfg.paths.manifest.empty() ? nullptr : &m);
      out << "IoU > " << cfg.eval.iou_threshold << ", greedy one-to-one, micro-averaged\n";
      PrintCountsHeader(out);
      for (const auto& [lang, c] : r.by_language) PrintCounts(out, lang, c, 1.0, 2);
      PrintCounts(out, "total", r.total, 1.0, 2);
      if (!out_path.empty()) SaveJson(out_path, SegmentReportJson(r));
      LogStage(err, "eval-segments", {{"videos", r.videos}, {"f1", r.total.f1()}});
      return 0;
    }

    if (*evtok) {
      const auto r = EvalTokens(LoadDataset(pred), LoadDataset(gold));
      PrintCountsHeader(out);
      if (by_language)
        for (const auto& [lang, c] : r.by_language) PrintCounts(out, lang, c, 100.0, 1);
      PrintCounts(out, "micro", r.total, 100.0, 1);
      out << std::left << std::setw(8) << "avg" << std::right << std::fixed << std::setprecision(1)
          << std::setw(8) << r.avg_precision * 100 << std::setw(8) << r.avg_recall * 100
          << std::setw(8) << r.avg_f1 * 100 << '\n';
      if (!out_path.empty()) SaveJson(out_path, TokenReportJson(r));
      LogStage(err, "eval-tokens", {{"videos", r.videos}, {"avg_f1", r.avg_f1}});
      return 0;
    }

    if (*pipe) {
      need(cfg.paths.manifest, "--manifest");
      need(cfg.paths.words_a, "--words-a");
      need(cfg.paths.words_b, "--words-b");
      need(cfg.paths.model, "--model");
      if (cfg.paths.features.empty()) need(cfg.paths.audio_root, "--audio-root or --features");
      const fs::path dir = out_dir;
      fs::create_directories(dir);

      const auto mined = stages::Mine(
          cfg, {dir / "candidates.jsonl", dir / "words.corrected.jsonl", dir / "mine_report.json"},
          err);

      Provenance cprov{"classify", &cfg,
                       {{"model", cfg.paths.model}, {"candidates", dir / "candidates.jsonl"}}};
      std::vector<FeatureRow> rows;
      if (!cfg.paths.features.empty()) {
        rows = ImportFeatures(cfg.paths.features);
        cprov.inputs.emplace_back("features", cfg.paths.features);
      } else {
        rows = stages::ExtractForSegments(stages::KeysOf(mined.candidates), cfg.paths.audio_root,
                                          cfg.features, cfg.jobs);
        ExportFeatures(dir / "features.csv", rows);
        WriteMeta(dir / "features.csv",
                  {"extract-features", &cfg, {{"segments", dir / "candidates.jsonl"}}});
        cprov.inputs.emplace_back("features", dir / "features.csv");
      }
      const auto forest = LoadForest(cfg.paths.model);
      const auto filtered =
          stages::Classify(forest, mined.candidates, rows, dir / "accepted.jsonl", cprov, err);

      std::vector<std::vector<LaughterSegment>> tracks;
      Provenance mprov{"merge-laughter", &cfg, {}};
      if (!cfg.paths.laughter.empty()) {
        tracks.push_back(LoadLaughter(cfg.paths.laughter));
        mprov.inputs.emplace_back("laughter_0", cfg.paths.laughter);
      }
      tracks.push_back(filtered.accepted);
      mprov.inputs.emplace_back("laughter_" + std::to_string(tracks.size() - 1),
                                dir / "accepted.jsonl");
      const auto merged = MergeLaughter(std::move(tracks));
      SaveLaughter(dir / "laughter.merged.jsonl", merged);
      WriteMeta(dir / "laughter.merged.jsonl", mprov);
      LogStage(err, "merge-laughter", {{"segments", merged.size()}});

      const auto m = LoadManifest(cfg.paths.manifest);
      EmitReport rep;
      const auto labels = LabelCorpus(mined.corrected_words, merged, cfg.labeling, &m, &rep);
      SaveWordLabels(dir / "labels.jsonl", labels);
      Provenance lprov{"label", &cfg,
                       {{"words", dir / "words.corrected.jsonl"},
                        {"laughter", dir / "laughter.merged.jsonl"},
                        {"manifest", cfg.paths.manifest}}};
      lprov.extra["scheme"] = ToString(cfg.labeling.scheme);
      WriteMeta(dir / "labels.jsonl", lprov);
      LogStage(err, "label", {{"words", labels.size()}});

      const auto ds = EmitDataset(m, labels, &rep);
      SaveDataset(dir / "dataset.jsonl", ds);
      Provenance eprov{"emit-dataset", &cfg,
                       {{"manifest", cfg.paths.manifest}, {"labels", dir / "labels.jsonl"}}};
      eprov.extra["scheme"] = ToString(cfg.labeling.scheme);
      eprov.extra["report"] = EmitReportJson(rep);
      WriteMeta(dir / "dataset.jsonl", eprov);
      LogStage(err, "emit-dataset", {{"videos", rep.videos},
                                     {"words", rep.words},
                                     {"positive_labels", rep.positives},
                                     {"dataset_sha256", FileSha256(dir / "dataset.jsonl")}});
      return 0;
    }
  } catch (const CLI::RequiredError& e) {
    err << "usage error: " << e.what() << " is required\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace laughtrack
