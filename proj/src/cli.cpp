// Copyright 2026 The PsyAdv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "psyadv/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "psyadv/attack.h"
#include "psyadv/config.h"
#include "psyadv/log.h"
#include "psyadv/metrics.h"
#include "psyadv/model.h"
#include "psyadv/runner.h"
#include "psyadv/synth.h"
#include "psyadv/train.h"

namespace psyadv {
namespace {

namespace fs = std::filesystem;

struct FlagValues {
  std::string config_path;
  uint64_t seed = 1;
  int workers = 1;
  double eps0 = 0.0;
  double lr1 = 0.0;
  double lr2 = 0.0;
  double alpha0 = 0.0;
  int stage1_steps = 0;
  int stage2_steps = 0;
  int hidden = 0;
  int pooling = 0;
  int epochs = 0;
  int batch_size = 0;
  double train_lr = 0.0;
};

bool Given(const CLI::App* cmd, const std::string& name) {
  const CLI::Option* opt = cmd->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

// Effective configuration for one subcommand: defaults, then the JSON config
// file when given, then any flags present on this subcommand.
RunConfig MergedConfig(const CLI::App* cmd, const FlagValues& f) {
  RunConfig run;
  if (Given(cmd, "--config")) run = LoadRunConfig(f.config_path);
  if (Given(cmd, "--seed")) run.seed = f.seed;
  if (Given(cmd, "--workers")) run.workers = f.workers;
  if (Given(cmd, "--eps0")) run.stage1.eps0 = f.eps0;
  if (Given(cmd, "--lr1")) run.stage1.lr = f.lr1;
  if (Given(cmd, "--lr2")) run.stage2.lr = f.lr2;
  if (Given(cmd, "--alpha0")) run.stage2.alpha0 = f.alpha0;
  if (Given(cmd, "--stage1-steps")) run.stage1.steps = f.stage1_steps;
  if (Given(cmd, "--stage2-steps")) run.stage2.steps = f.stage2_steps;
  if (Given(cmd, "--hidden")) run.model_hidden = f.hidden;
  if (Given(cmd, "--pooling")) run.model_pooling = f.pooling;
  if (Given(cmd, "--epochs")) run.train.epochs = f.epochs;
  if (Given(cmd, "--batch-size")) run.train.batch_size = f.batch_size;
  if (Given(cmd, "--train-lr")) run.train.lr = f.train_lr;
  run.train.seed = run.seed;
  ValidateRunConfig(run);
  return run;
}

void AddConfigSeed(CLI::App* cmd, FlagValues& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--seed", f.seed, "Global RNG seed");
}

std::string FormatFixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void WriteMatrixCsv(const std::string& path, int rows, int cols,
                    const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(StrCat("cannot write ", path));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c > 0) out << ",";
      out << FormatFixed(values[static_cast<size_t>(r) * cols + c]);
    }
    out << "\n";
  }
}

int CmdSynth(const CLI::App* cmd, const FlagValues& f, const std::string& out,
             const SynthConfig& base, int attack_per_speaker) {
  RunConfig run = MergedConfig(cmd, f);
  SynthConfig scfg = base;
  scfg.seed = run.seed;
  CorpusPaths corpus = GenerateCorpus(out, scfg);

  // Round-robin wrong-target manifests so the corpus is attackable as is:
  // every speech entry targets the cyclically next speaker.
  std::vector<std::string> labels;
  for (int s = 0; s < scfg.num_speakers; ++s) {
    labels.push_back(SpeakerLabel(s, scfg.num_speakers));
  }
  std::map<std::string, int> label_index;
  for (int s = 0; s < scfg.num_speakers; ++s) label_index[labels[s]] = s;

  std::vector<ManifestEntry> speech;
  std::map<std::string, int> taken;
  for (size_t i = 0; i < corpus.speech_paths.size(); ++i) {
    const std::string& label = corpus.speech_labels[i];
    if (taken[label] >= attack_per_speaker) continue;
    ++taken[label];
    ManifestEntry e;
    e.path = fs::path(corpus.speech_paths[i]).lexically_relative(out).string();
    e.true_label = label;
    e.target_label = labels[(label_index[label] + 1) % scfg.num_speakers];
    speech.push_back(e);
  }
  WriteManifest((fs::path(out) / "attack.csv").string(), speech);

  std::vector<ManifestEntry> music;
  for (size_t i = 0; i < corpus.music_paths.size(); ++i) {
    ManifestEntry e;
    e.path = fs::path(corpus.music_paths[i]).lexically_relative(out).string();
    e.true_label = kNoLabel;
    e.target_label = labels[i % labels.size()];
    music.push_back(e);
  }
  WriteManifest((fs::path(out) / "music.csv").string(), music);

  LogInfo("synth: wrote ", corpus.speech_paths.size(), " speech and ",
          corpus.music_paths.size(), " music clips under ", out);
  LogInfo("synth: training list ", corpus.train_manifest, ", manifests ",
          (fs::path(out) / "attack.csv").string(), " and ",
          (fs::path(out) / "music.csv").string());
  return 0;
}

int CmdTrain(const CLI::App* cmd, const FlagValues& f, const std::string& data,
             const std::string& out) {
  RunConfig run = MergedConfig(cmd, f);

  std::vector<std::pair<std::string, std::string>> listing = ReadTrainList(data);
  std::set<std::string> label_set;
  for (const auto& [path, label] : listing) label_set.insert(label);
  std::vector<std::string> labels(label_set.begin(), label_set.end());
  std::map<std::string, int> index;
  for (size_t i = 0; i < labels.size(); ++i) index[labels[i]] = static_cast<int>(i);

  std::vector<TrainItem> items;
  items.reserve(listing.size());
  for (const auto& [path, label] : listing) {
    TrainItem item;
    item.samples = ReadWav(path).samples;
    item.label = index[label];
    items.push_back(std::move(item));
  }
  LogInfo("train: ", items.size(), " utterances, ", labels.size(), " speakers");

  ModelConfig mcfg =
      ModelConfig::Make(static_cast<int>(labels.size()), run.model_hidden,
                        run.model_pooling);
  Model model = Model::Init(mcfg, labels, run.seed);
  LogInfo("train: ", model.NumParameters(), " trainable parameters");

  TrainResult result = TrainModel(model, items, run.train);

  double accuracy = EvaluateAccuracy(model, items);
  LogInfo("train: final inference accuracy ", FormatFixed(100.0 * accuracy), "%");

  if (fs::path(out).has_parent_path()) {
    fs::create_directories(fs::path(out).parent_path());
  }
  model.Save(out);
  std::ofstream log(out + ".train_log.csv");
  log << "epoch,mean_ce,batch_accuracy\n";
  for (const EpochStats& e : result.epochs) {
    log << e.epoch << "," << FormatFixed(e.mean_ce) << ","
        << FormatFixed(e.batch_accuracy) << "\n";
  }
  LogInfo("train: checkpoint written to ", out);
  return 0;
}

int CmdAttack(const CLI::App* cmd, const FlagValues& f,
              const AttackRunOptions& options) {
  RunConfig run = MergedConfig(cmd, f);
  std::vector<UtteranceResult> results = RunAttackBatch(run, options);
  int s1 = 0, s2 = 0, errs = 0;
  for (const UtteranceResult& r : results) {
    s1 += r.stage1.success ? 1 : 0;
    s2 += r.stage2.success ? 1 : 0;
    errs += r.status == "ok" ? 0 : 1;
  }
  LogInfo("attack: ", results.size(), " utterances, stage-1 success ", s1,
          ", stage-2 success ", s2, ", errors ", errs);
  LogInfo("attack: results in ", options.out_dir);
  return 0;
}

int CmdThreshold(const CLI::App* cmd, const FlagValues& f,
                 const std::string& in, const std::string& out) {
  RunConfig run = MergedConfig(cmd, f);
  Waveform wave = ReadWav(in);
  ThresholdContext ctx = ThresholdContext::FromOriginal(wave, run.stft, run.psycho);

  Spectrogram spec = Stft(wave, run.stft);
  PsdMatrix psd = Psd(spec, run.stft);
  psd.normalized = true;  // offset 0 when silent, matching the context
  bool any_signal = false;
  for (double v : psd.db) {
    if (v != kSilenceDb) {
      any_signal = true;
      break;
    }
  }
  if (any_signal) psd = NormalizeSpl(Psd(spec, run.stft));

  fs::create_directories(out);
  WriteMatrixCsv((fs::path(out) / "psd.csv").string(), psd.frames, psd.bins,
                 psd.db);
  WriteMatrixCsv((fs::path(out) / "threshold.csv").string(),
                 ctx.threshold.frames, ctx.threshold.bins, ctx.threshold.db);

  std::ofstream maskers(fs::path(out) / "maskers.csv");
  maskers << "frame,bin,freq_hz,bark,spl_db\n";
  int total = 0;
  for (int t = 0; t < psd.frames; ++t) {
    for (const Masker& m : FindMaskers(psd, t, ctx.grid, run.psycho)) {
      maskers << t << "," << m.bin << "," << FormatFixed(ctx.grid.freq_hz[m.bin])
              << "," << FormatFixed(m.bark) << "," << FormatFixed(m.spl_db)
              << "\n";
      ++total;
    }
  }

  std::ofstream ath(fs::path(out) / "ath.csv");
  ath << "bin,freq_hz,ath_db\n";
  for (int k = 0; k < ctx.grid.bins; ++k) {
    ath << k << "," << FormatFixed(ctx.grid.freq_hz[k]) << ","
        << FormatFixed(ctx.grid.ath_db[k]) << "\n";
  }

  LogInfo("threshold: ", psd.frames, " frames x ", psd.bins, " bins, ", total,
          " maskers; CSVs in ", out);
  return 0;
}

int CmdEvaluate(const std::string& results_dir, const std::string& out) {
  std::vector<UtteranceResult> results = LoadResultsDir(results_dir);
  fs::create_directories(out);
  WriteEvaluation(out, results);
  int s2 = 0;
  for (const UtteranceResult& r : results) s2 += r.stage2.success ? 1 : 0;
  LogInfo("evaluate: ", results.size(), " results, stage-2 success rate ",
          FormatFixed(results.empty() ? 0.0
                                      : static_cast<double>(s2) / results.size()));
  LogInfo("evaluate: summary files in ", out);
  return 0;
}

}  // namespace

int CliMain(int argc, const char* const* argv) {
  CLI::App app{"Psychoacoustically masked adversarial audio toolkit"};
  app.require_subcommand(1);
  FlagValues f;

  SynthConfig scfg;
  std::string synth_out;
  int attack_per_speaker = 5;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  AddConfigSeed(synth, f);
  synth->add_option("--out", synth_out, "Corpus output directory")->required();
  synth->add_option("--speakers", scfg.num_speakers, "Number of speakers");
  synth->add_option("--utterances", scfg.utterances_per_speaker,
                    "Utterances per speaker");
  synth->add_option("--music", scfg.num_music_clips, "Number of music clips");
  synth->add_option("--duration", scfg.duration_seconds, "Clip length, seconds");
  synth->add_option("--attack-per-speaker", attack_per_speaker,
                    "Entries per speaker in the attack manifest");

  std::string train_data, train_out;
  CLI::App* train = app.add_subcommand("train", "Train the speaker classifier");
  AddConfigSeed(train, f);
  train->add_option("--data", train_data, "Training list CSV (path,label)")
      ->required();
  train->add_option("--out", train_out, "Checkpoint output path")->required();
  train->add_option("--epochs", f.epochs, "Training epochs");
  train->add_option("--batch-size", f.batch_size, "Minibatch size");
  train->add_option("--train-lr", f.train_lr, "Adam learning rate");
  train->add_option("--hidden", f.hidden, "TDNN hidden width");
  train->add_option("--pooling", f.pooling, "Pre-pooling layer width");

  AttackRunOptions aopts;
  bool no_resume = false;
  CLI::App* attack = app.add_subcommand("attack", "Attack a manifest of WAVs");
  AddConfigSeed(attack, f);
  attack
      ->add_option("--manifest", aopts.manifest_path,
                   "Manifest CSV (path,true_label,target_label)")
      ->required();
  attack->add_option("--checkpoint", aopts.checkpoint_path, "Model checkpoint")
      ->required();
  attack->add_option("--out", aopts.out_dir, "Results directory")->required();
  attack->add_option("--workers", f.workers, "Worker thread count");
  attack->add_option("--eps0", f.eps0, "Stage 1 initial l-inf budget");
  attack->add_option("--lr1", f.lr1, "Stage 1 learning rate");
  attack->add_option("--lr2", f.lr2, "Stage 2 learning rate");
  attack->add_option("--alpha0", f.alpha0, "Stage 2 initial threshold weight");
  attack->add_option("--stage1-steps", f.stage1_steps, "Stage 1 iterations");
  attack->add_option("--stage2-steps", f.stage2_steps, "Stage 2 iterations");
  attack->add_flag("--no-resume", no_resume, "Recompute existing results");

  std::string thr_in, thr_out;
  CLI::App* threshold =
      app.add_subcommand("threshold", "Dump masking threshold CSVs for a WAV");
  AddConfigSeed(threshold, f);
  threshold->add_option("--in", thr_in, "Input WAV")->required();
  threshold->add_option("--out", thr_out, "Output directory")->required();

  std::string eval_results, eval_out;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Aggregate a results directory");
  evaluate->add_option("--results", eval_results, "Directory of result JSONs")
      ->required();
  evaluate->add_option("--out", eval_out,
                       "Summary output directory (default: results dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return CmdSynth(synth, f, synth_out, scfg, attack_per_speaker);
    if (train->parsed()) return CmdTrain(train, f, train_data, train_out);
    if (attack->parsed()) {
      aopts.resume = !no_resume;
      return CmdAttack(attack, f, aopts);
    }
    if (threshold->parsed()) return CmdThreshold(threshold, f, thr_in, thr_out);
    if (evaluate->parsed()) {
      return CmdEvaluate(eval_results,
                         eval_out.empty() ? eval_results : eval_out);
    }
  } catch (const ValidationError& e) {
    LogLine(LogLevel::kError, e.what());
    return 2;
  } catch (const std::exception& e) {
    LogLine(LogLevel::kError, e.what());
    return 1;
  }
  return 0;
}

}  // namespace psyadv
