// tools/main.cc

// Copyright 2026 The Stressrep Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// stressrep command line: corpus synth | features extract | pretrain |
// embed | eval | report. Exit codes: 0 success, 1 usage, 2 data error,
// 3 numeric failure.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "stressrep/augment.hpp"
#include "stressrep/checkpoint.hpp"
#include "stressrep/dsp.hpp"
#include "stressrep/eval.hpp"
#include "stressrep/nn.hpp"
#include "stressrep/synth.hpp"
#include "stressrep/trainer.hpp"

namespace {

using namespace stressrep;

struct FrontendFlags {
  FrontendConfig cfg;
  CLI::Option *rate = nullptr, *frame = nullptr, *hop = nullptr,
              *mel = nullptr, *fmin = nullptr, *fmax = nullptr;

  void attach(CLI::App* cmd) {
    rate = cmd->add_option("--sample-rate", cfg.sample_rate, "Canonical rate, Hz");
    frame = cmd->add_option("--frame-len", cfg.frame_len, "Analysis frame, samples");
    hop = cmd->add_option("--hop", cfg.hop, "Frame hop, samples");
    mel = cmd->add_option("--mel-bins", cfg.mel_bins, "Mel bins");
    fmin = cmd->add_option("--fmin", cfg.fmin, "Mel filterbank low edge, Hz");
    fmax = cmd->add_option("--fmax", cfg.fmax, "Mel filterbank high edge, Hz");
  }
  bool any_set() const {
    return rate->count() || frame->count() || hop->count() || mel->count() ||
           fmin->count() || fmax->count();
  }
};

void emit_config(const CLI::App& app, const std::string& target) {
  atomic_write_file(target, app.config_to_str(true, false));
}

Eigen::MatrixXd to_double(const EmbeddingMatrix& em) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(em.ids.size()), em.cols);
  for (std::size_t i = 0; i < em.ids.size(); ++i)
    for (int j = 0; j < em.cols; ++j)
      x(static_cast<Eigen::Index>(i), j) = em.row(i)[j];
  return x;
}

bool is_embedding_file(const std::string& path) {
  return read_file(path).substr(0, 8) == "SREPEMB1";
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stressrep: hybrid handcrafted/self-supervised speech "
               "representations for voice task-load detection"};
  app.set_config("--config", "", "INI config file; sections per subcommand");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  // corpus synth
  auto* corpus = app.add_subcommand("corpus", "Synthetic corpus tools");
  corpus->fallthrough();
  corpus->require_subcommand(1);
  auto* synth_cmd = corpus->add_subcommand("synth", "Generate a two-condition corpus");
  synth_cmd->fallthrough();
  CorpusSpec corpus_spec;
  std::string synth_out;
  synth_cmd->add_option("--speakers", corpus_spec.n_speakers, "Speaker count");
  synth_cmd->add_option("--utts", corpus_spec.utts_per_condition,
                        "Utterances per speaker per condition");
  synth_cmd->add_option("--seed", corpus_spec.seed, "Corpus seed");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--duration-min", corpus_spec.synth.duration_min,
                        "Shortest utterance, s");
  synth_cmd->add_option("--duration-max", corpus_spec.synth.duration_max,
                        "Longest utterance, s");
  synth_cmd->add_option("--noise-db", corpus_spec.synth.noise_db,
                        "Noise floor, dBFS");

  // features extract
  auto* features = app.add_subcommand("features", "Handcrafted feature tools");
  features->fallthrough();
  features->require_subcommand(1);
  auto* extract_cmd =
      features->add_subcommand("extract", "Batch CPS-115 extraction");
  extract_cmd->fallthrough();
  std::string feat_manifest, feat_out;
  int feat_rate = 16000;
  extract_cmd->add_option("--manifest", feat_manifest, "Manifest CSV")->required();
  extract_cmd->add_option("--out", feat_out, "Output feature CSV")->required();
  extract_cmd->add_option("--rate", feat_rate, "Canonical rate, Hz");

  // pretrain
  auto* pretrain_cmd =
      app.add_subcommand("pretrain", "Hybrid dual-network pretraining");
  pretrain_cmd->fallthrough();
  TrainConfig tc;
  std::string train_manifest, train_out, resume_from;
  FrontendFlags train_frontend;
  pretrain_cmd->add_option("--manifest", train_manifest, "Manifest CSV")->required();
  pretrain_cmd->add_option("--out-dir", train_out, "Output directory")->required();
  pretrain_cmd->add_option("--steps", tc.steps, "Optimizer steps");
  pretrain_cmd->add_option("--batch", tc.batch_size, "Batch size");
  pretrain_cmd->add_option("--tau", tc.tau, "EMA decay");
  pretrain_cmd->add_option("--alpha-ss", tc.loss.alpha_ss,
                           "Self-supervised loss weight");
  pretrain_cmd->add_option("--alpha-sup", tc.loss.alpha_sup,
                           "Supervised loss weight");
  pretrain_cmd->add_option("--lr", tc.adam.lr, "Adam learning rate");
  pretrain_cmd->add_option("--seed", tc.seed, "Run seed");
  pretrain_cmd->add_option("--ckpt-interval", tc.checkpoint_interval,
                           "Also checkpoint every k steps (0: final only)");
  pretrain_cmd->add_option("--resume", resume_from, "Checkpoint to resume from");
  pretrain_cmd->add_option("--crop-seconds", tc.crop_seconds,
                           "Training crop length, s");
  pretrain_cmd->add_option("--embed-dim", tc.encoder.embed_dim, "Embedding size");
  pretrain_cmd->add_option("--channels", tc.encoder.conv_channels,
                           "Conv block channels");
  pretrain_cmd->add_option("--proj-hidden", tc.heads.proj_hidden,
                           "Projector hidden size");
  pretrain_cmd->add_option("--pred-hidden", tc.heads.pred_hidden,
                           "Predictor hidden size");
  pretrain_cmd->add_flag("--no-mixup", "Disable mixup");
  pretrain_cmd->add_option("--mixup-alpha", tc.aug.mixup_alpha, "Mixup ratio bound");
  pretrain_cmd->add_option("--memory-capacity", tc.aug.memory_capacity,
                           "Mixup memory entries");
  pretrain_cmd->add_flag("--no-rrc", "Disable random resize crop");
  pretrain_cmd->add_option("--rrc-scale-min", tc.aug.rrc_scale_min, "RRC scale min");
  pretrain_cmd->add_option("--rrc-scale-max", tc.aug.rrc_scale_max, "RRC scale max");
  train_frontend.attach(pretrain_cmd);

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "Frozen-encoder embeddings");
  embed_cmd->fallthrough();
  std::string embed_ckpt, embed_manifest, embed_out;
  FrontendFlags embed_frontend;
  embed_cmd->add_option("--checkpoint", embed_ckpt, "Checkpoint file")->required();
  embed_cmd->add_option("--manifest", embed_manifest, "Manifest CSV")->required();
  embed_cmd->add_option("--out", embed_out, "Output embedding file")->required();
  embed_frontend.attach(embed_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Downstream task-load evaluation");
  eval_cmd->fallthrough();
  std::string eval_features, eval_manifest, eval_out, eval_mode = "per-partition";
  std::string eval_name;
  EvalConfig ec;
  eval_cmd->add_option("--features", eval_features,
                       "Feature CSV or embedding file")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "Manifest CSV")->required();
  eval_cmd->add_option("--out-dir", eval_out, "Output directory")->required();
  eval_cmd->add_option("--seed", ec.seed, "Split/CV seed");
  eval_cmd->add_option("--ratio", ec.ratio, "Train fraction");
  eval_cmd->add_option("--folds", ec.folds, "Cross-validation folds");
  eval_cmd->add_option("--standardization", eval_mode,
                       "per-partition or train-fit");
  eval_cmd->add_option("--name", eval_name, "Report name (default: feature stem)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Compare evaluation reports");
  report_cmd->fallthrough();
  std::vector<std::string> report_files;
  std::string report_out;
  report_cmd->add_option("reports", report_files, "Report JSON files")
      ->required()
      ->expected(-1);
  report_cmd->add_option("--out", report_out, "Also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (*synth_cmd) {
      gen_corpus(corpus_spec, synth_out);
      emit_config(app, join_path(synth_out, "resolved_config.ini"));
      std::cout << "wrote "
                << corpus_spec.n_speakers * 2 * corpus_spec.utts_per_condition
                << " utterances under " << synth_out << "\n";
    } else if (*extract_cmd) {
      Manifest m = load_manifest(feat_manifest);
      std::vector<std::string> ids(m.records.size());
      std::vector<SupervisionVector> vecs(m.records.size());
      std::vector<std::string> failures(m.records.size());
      parallel_for(m.records.size(), [&](std::size_t i) {
        const auto& r = m.records[i];
        ids[i] = r.utterance_id;
        try {
          Waveform w = load_wav(m.resolve_path(r));
          if (w.sample_rate != feat_rate) w = resample(w, feat_rate);
          vecs[i] = extract_features(w);
        } catch (const Error& e) {
          failures[i] = e.what();
        }
      });
      for (std::size_t i = 0; i < failures.size(); ++i)
        if (!failures[i].empty())
          throw DataError("utterance " + ids[i] + ": " + failures[i]);
      write_feature_csv(feat_out, ids, vecs);
      emit_config(app, feat_out + ".config");
      std::cout << "wrote " << ids.size() << " feature rows to " << feat_out
                << "\n";
    } else if (*pretrain_cmd) {
      tc.aug.mixup = pretrain_cmd->count("--no-mixup") == 0;
      tc.aug.rrc = pretrain_cmd->count("--no-rrc") == 0;
      tc.frontend = train_frontend.cfg;
      Manifest m = load_manifest(train_manifest);
      TrainResult res = pretrain(m, tc, train_out, resume_from);
      emit_config(app, join_path(train_out, "resolved_config.ini"));
      std::cout << "checkpoint: " << res.checkpoint_path << "\n"
                << "train log:  " << res.log_path << "\n";
      if (!res.log.empty())
        std::cout << "final l_hybrid: " << format_g(res.log.back().l_hybrid, 6)
                  << "\n";
    } else if (*embed_cmd) {
      Manifest m = load_manifest(embed_manifest);
      const FrontendConfig* expect =
          embed_frontend.any_set() ? &embed_frontend.cfg : nullptr;
      EmbeddingMatrix em = embed(embed_ckpt, m, expect);
      write_embeddings(embed_out, em);
      emit_config(app, embed_out + ".config");
      std::cout << "wrote " << em.ids.size() << " x " << em.cols
                << " embeddings to " << embed_out << "\n";
    } else if (*eval_cmd) {
      ec.mode = standardize_mode_from_string(eval_mode);
      Manifest m = load_manifest(eval_manifest, /*check_files=*/false);
      std::vector<std::string> ids;
      Eigen::MatrixXd x;
      if (is_embedding_file(eval_features)) {
        EmbeddingMatrix em = read_embeddings(eval_features);
        ids = em.ids;
        x = to_double(em);
      } else {
        auto [fids, fvecs] = read_feature_csv(eval_features);
        ids = fids;
        x.resize(static_cast<Eigen::Index>(fvecs.size()), kSupDim);
        for (std::size_t i = 0; i < fvecs.size(); ++i)
          for (int j = 0; j < kSupDim; ++j)
            x(static_cast<Eigen::Index>(i), j) = fvecs[i].values[j];
      }
      EvalReport rep = evaluate(ids, x, m, ec);
      rep.source = eval_features;
      make_dirs(eval_out);
      write_report(join_path(eval_out, "report.json"), rep);
      emit_config(app, join_path(eval_out, "resolved_config.ini"));
      const std::string name = eval_name.empty() ? stem_of(eval_features) : eval_name;
      std::cout << name << "\n" << report_summary(rep);
    } else if (*report_cmd) {
      std::vector<std::pair<std::string, EvalReport>> reports;
      for (const auto& f : report_files)
        reports.emplace_back(stem_of(f), read_report(f));
      auto [text, csv] = report_table(reports);
      std::cout << text;
      if (!report_out.empty()) {
        atomic_write_file(report_out, csv);
        emit_config(app, report_out + ".config");
      }
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
