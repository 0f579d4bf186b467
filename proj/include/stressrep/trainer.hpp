// stressrep/trainer.hpp

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

// Hybrid pretraining loop: per step, random 1 s crops of the precomputed
// log-mel spectrograms become two augmented views; the online network is
// optimized on the weighted sum of the symmetrized self-supervised loss and
// the supervised MSE against standardized handcrafted features; the target
// tracks the online network by EMA.
//
// Reproducibility: batch order and crop positions come from per-position
// derived seeds, augmentation draws from a per-step derived seed, and mixup
// draws from a dedicated stream that advances a fixed two words per call.
// (seed, corpus, config) therefore fully determine the run, and a resumed
// run replays the stream positions and the mixup memory contents exactly.

#ifndef STRESSREP_TRAINER_HPP_
#define STRESSREP_TRAINER_HPP_

#include <string>
#include <vector>

#include "stressrep/augment.hpp"
#include "stressrep/checkpoint.hpp"
#include "stressrep/dsp.hpp"
#include "stressrep/eval.hpp"
#include "stressrep/nn.hpp"

namespace stressrep {

struct TrainConfig {
  long long steps = 500;
  int batch_size = 16;
  double tau = 0.99;  // constant EMA decay
  nn::HybridLossConfig loss{};
  nn::AdamConfig adam{};
  std::uint64_t seed = 0;
  long long checkpoint_interval = 0;  // extra saves every k steps; 0 = final only
  double crop_seconds = 1.0;
  AugmentConfig aug{};
  FrontendConfig frontend{};
  nn::EncoderConfig encoder{};
  nn::HeadConfig heads{};
};

struct TrainLogRow {
  long long step = 0;  // 1-based
  double l_ss = 0.0;
  double l_ss_weighted = 0.0;  // alpha_ss * l_ss (not a CSV column)
  double l_sup = 0.0;
  double l_hybrid = 0.0;
  double tau = 0.0;
};

// CSV columns: step,l_ss,l_sup,l_hybrid,tau.
void write_train_log(const std::string& path,
                     const std::vector<TrainLogRow>& rows);
std::vector<TrainLogRow> read_train_log(const std::string& path);

// Per-utterance inputs shared by pretraining and the random-encoder baseline.
struct CorpusData {
  std::vector<std::string> ids;
  std::vector<LogMelSpectrogram> lms;          // full-length
  std::vector<SupervisionVector> raw;          // CPS-115 before standardization
  std::vector<nn::Vec<float>> sup;             // standardized CPS-115 targets
  NormStats stats;                             // corpus LMS scalars
  FeatureStandardizer standardizer;
};

CorpusData precompute_corpus(const Manifest& m, const FrontendConfig& cfg);

// Time crop with reflect padding when the input is shorter than `len`.
LogMelSpectrogram crop_time(const LogMelSpectrogram& x, int start, int len);

// Crop length in frames for cfg.crop_seconds of audio.
int crop_frames(const TrainConfig& cfg);

struct TrainResult {
  std::string checkpoint_path;
  std::string log_path;
  std::vector<TrainLogRow> log;
};

// Writes <out_dir>/checkpoint.ckpt and <out_dir>/train_log.csv. When
// resume_from is set, continues that run up to cfg.steps; the tail of the
// log and the final checkpoint are identical to an uninterrupted run.
TrainResult pretrain(const Manifest& m, const TrainConfig& cfg,
                     const std::string& out_dir,
                     const std::string& resume_from = "");

struct EmbeddingMatrix {
  std::vector<std::string> ids;
  int cols = 0;
  std::vector<float> data;  // row-major, ids.size() x cols
  std::string checkpoint_id;

  const float* row(std::size_t i) const { return data.data() + i * cols; }
};

// Deterministic, augmentation-free path: pre-normalize with the checkpoint's
// corpus scalars, then the online encoder. Rows follow manifest order.
// When `expect_frontend` is given it must match the checkpoint's echo.
EmbeddingMatrix embed(const std::string& checkpoint_path, const Manifest& m,
                      const FrontendConfig* expect_frontend = nullptr);

// Little-endian container: magic "SREPEMB1", u32 version, u64 rows, u32
// cols, source checkpoint id, then per row (utterance_id, float32 values).
void write_embeddings(const std::string& path, const EmbeddingMatrix& em);
EmbeddingMatrix read_embeddings(const std::string& path);

}  // namespace stressrep

#endif  // STRESSREP_TRAINER_HPP_
