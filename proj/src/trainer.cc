// stressrep/trainer.cc

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

#include "stressrep/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>
#include <numeric>
#include <sstream>

namespace stressrep {

namespace {

// Epoch-shuffled utterance order; position g maps to epoch g / n.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {}

  std::size_t item(long long g) {
    const long long epoch = g / static_cast<long long>(n_);
    if (epoch != cur_epoch_) {
      perm_.resize(n_);
      std::iota(perm_.begin(), perm_.end(), std::size_t{0});
      Rng rng(derive_seed(seed_, "shuffle", static_cast<std::uint64_t>(epoch)));
      rng.shuffle(perm_);
      cur_epoch_ = epoch;
    }
    return perm_[static_cast<std::size_t>(g % static_cast<long long>(n_))];
  }

 private:
  std::size_t n_;
  std::uint64_t seed_;
  long long cur_epoch_ = -1;
  std::vector<std::size_t> perm_;
};

int crop_start_for(std::uint64_t seed, long long g, int utt_frames,
                   int crop_len) {
  if (utt_frames <= crop_len) return 0;
  Rng rng(derive_seed(seed, "crop", static_cast<std::uint64_t>(g)));
  return static_cast<int>(rng.index(static_cast<std::size_t>(utt_frames - crop_len + 1)));
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.steps < 1) throw ConfigError("train: steps must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (cfg.tau < 0.0 || cfg.tau > 1.0)
    throw ConfigError("train: tau must be in [0, 1]");
  if (cfg.crop_seconds <= 0.0)
    throw ConfigError("train: crop_seconds must be positive");
}

CheckpointMeta meta_from_config(const TrainConfig& cfg, const NormStats& stats,
                                long long steps_done) {
  CheckpointMeta m;
  m.schema_id = kSchemaId;
  m.encoder = cfg.encoder;
  m.heads = cfg.heads;
  m.frontend = cfg.frontend;
  m.norm = stats;
  m.aug = cfg.aug;
  m.alpha_ss = cfg.loss.alpha_ss;
  m.alpha_sup = cfg.loss.alpha_sup;
  m.tau = cfg.tau;
  m.lr = cfg.adam.lr;
  m.batch_size = cfg.batch_size;
  m.crop_seconds = cfg.crop_seconds;
  m.seed = cfg.seed;
  m.steps_done = steps_done;
  return m;
}

bool meta_matches_config(const CheckpointMeta& a, const CheckpointMeta& b) {
  return a.schema_id == b.schema_id && a.encoder == b.encoder &&
         a.heads == b.heads && a.frontend == b.frontend && a.aug == b.aug &&
         a.alpha_ss == b.alpha_ss && a.alpha_sup == b.alpha_sup &&
         a.tau == b.tau && a.lr == b.lr && a.batch_size == b.batch_size &&
         a.crop_seconds == b.crop_seconds && a.seed == b.seed &&
         a.norm.mean == b.norm.mean && a.norm.stddev == b.norm.stddev;
}

}  // namespace

void write_train_log(const std::string& path,
                     const std::vector<TrainLogRow>& rows) {
  std::ostringstream out;
  out << "step,l_ss,l_sup,l_hybrid,tau\n";
  for (const auto& r : rows)
    out << r.step << "," << format_g(r.l_ss) << "," << format_g(r.l_sup) << ","
        << format_g(r.l_hybrid) << "," << format_g(r.tau) << "\n";
  atomic_write_file(path, out.str());
}

std::vector<TrainLogRow> read_train_log(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "step,l_ss,l_sup,l_hybrid,tau")
    throw FormatError("train log has unexpected header: " + path);
  std::vector<TrainLogRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 5)
      throw FormatError("train log row with wrong cell count: " + path);
    TrainLogRow r;
    r.step = std::stoll(cells[0]);
    r.l_ss = std::stod(cells[1]);
    r.l_sup = std::stod(cells[2]);
    r.l_hybrid = std::stod(cells[3]);
    r.tau = std::stod(cells[4]);
    rows.push_back(r);
  }
  return rows;
}

CorpusData precompute_corpus(const Manifest& m, const FrontendConfig& cfg) {
  if (m.records.size() < 2)
    throw DataError("pretraining corpus needs at least 2 utterances");
  CorpusData data;
  data.ids.resize(m.records.size());
  data.lms.resize(m.records.size());
  data.raw.resize(m.records.size());
  auto& raw = data.raw;

  parallel_for(m.records.size(), [&](std::size_t i) {
    const auto& r = m.records[i];
    data.ids[i] = r.utterance_id;
    Waveform w = load_wav(m.resolve_path(r));
    if (w.sample_rate != cfg.sample_rate) w = resample(w, cfg.sample_rate);
    Spectrogram s = stft(w, cfg.frame_len, cfg.hop);
    data.lms[i] = logmel(s, cfg.mel_bins, cfg.fmin, cfg.fmax, cfg.floor_eps);
    raw[i] = extract_features(w);
  });

  data.standardizer = fit_standardizer(raw);
  data.sup.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    SupervisionVector z = standardize(raw[i], data.standardizer);
    data.sup[i].resize(static_cast<Eigen::Index>(z.values.size()));
    for (std::size_t k = 0; k < z.values.size(); ++k)
      data.sup[i](static_cast<Eigen::Index>(k)) = static_cast<float>(z.values[k]);
  }

  // Corpus-level scalar statistics, accumulated in utterance order.
  double sum = 0.0, sumsq = 0.0;
  long long count = 0;
  for (const auto& lms : data.lms) {
    for (double v : lms.values) {
      sum += v;
      sumsq += v * v;
    }
    count += static_cast<long long>(lms.values.size());
  }
  const double mean = sum / static_cast<double>(count);
  const double var = sumsq / static_cast<double>(count) - mean * mean;
  data.stats.mean = mean;
  data.stats.stddev = std::max(std::sqrt(std::max(var, 0.0)), 1e-8);
  return data;
}

LogMelSpectrogram crop_time(const LogMelSpectrogram& x, int start, int len) {
  if (len < 1) throw ConfigError("crop_time: len must be >= 1");
  if (x.frames < 1) throw DataError("crop_time: empty spectrogram");
  LogMelSpectrogram out = x;
  out.frames = len;
  out.values.resize(static_cast<std::size_t>(len) * x.mel_bins);
  const int period = std::max(2 * x.frames - 2, 1);
  for (int i = 0; i < len; ++i) {
    int src = start + i;
    if (src >= x.frames || src < 0) {  // reflect padding
      src = ((src % period) + period) % period;
      if (src >= x.frames) src = period - src;
    }
    std::memcpy(out.values.data() + static_cast<std::size_t>(i) * x.mel_bins,
                x.values.data() + static_cast<std::size_t>(src) * x.mel_bins,
                sizeof(double) * static_cast<std::size_t>(x.mel_bins));
  }
  return out;
}

int crop_frames(const TrainConfig& cfg) {
  const auto samples =
      static_cast<long long>(std::lround(cfg.crop_seconds * cfg.frontend.sample_rate));
  if (samples < cfg.frontend.frame_len)
    throw ConfigError("train: crop shorter than one analysis frame");
  return static_cast<int>(1 + (samples - cfg.frontend.frame_len) / cfg.frontend.hop);
}

TrainResult pretrain(const Manifest& m, const TrainConfig& cfg_in,
                     const std::string& out_dir,
                     const std::string& resume_from) {
  TrainConfig cfg = cfg_in;
  cfg.encoder.mel_bins = cfg.frontend.mel_bins;
  cfg.heads.d_sup = kSupDim;
  validate_train_config(cfg);
  nn::validate_encoder_config(cfg.encoder);
  const int crop_len = crop_frames(cfg);
  const int blocks = static_cast<int>(cfg.encoder.conv_channels.size());
  if (nn::pooled_dim(crop_len, blocks) < 1)
    throw ConfigError("train: crop pools below one frame in time");

  CorpusData corpus = precompute_corpus(m, cfg.frontend);
  const std::size_t n_utts = corpus.ids.size();
  make_dirs(out_dir);

  nn::ModelState<float> state;
  nn::AdamState<float> adam;
  long long steps_done = 0;
  if (!resume_from.empty()) {
    Checkpoint ck = load_checkpoint(resume_from);
    const CheckpointMeta expect = meta_from_config(cfg, corpus.stats, 0);
    if (!meta_matches_config(ck.meta, expect))
      throw DataError("resume: checkpoint config does not match this run");
    if (!ck.has_adam)
      throw DataError("resume: checkpoint has no optimizer state");
    state = std::move(ck.state);
    adam = std::move(ck.adam);
    steps_done = ck.meta.steps_done;
    if (steps_done >= cfg.steps)
      throw DataError("resume: checkpoint already at or past the step target");
  } else {
    state = nn::init_model<float>(cfg.encoder, cfg.heads, cfg.seed);
    adam = nn::make_adam(state.online);
  }

  BatchStream stream(n_utts, cfg.seed);
  MixupMemory mem(cfg.aug.memory_capacity, derive_seed(cfg.seed, "mixup"));
  const int batch = cfg.batch_size;
  if (steps_done > 0 && cfg.aug.mixup) {
    // Memory entries are the pre-mix normalized crops, a pure function of
    // the data stream, so the FIFO can be rebuilt without any model work.
    const long long pushes_per_step = 2LL * batch;
    const long long steps_back =
        std::min<long long>(steps_done, (static_cast<long long>(cfg.aug.memory_capacity) +
                                         pushes_per_step - 1) /
                                            pushes_per_step);
    for (long long s = steps_done - steps_back; s < steps_done; ++s) {
      for (int j = 0; j < batch; ++j) {
        const long long g = s * batch + j;
        const std::size_t u = stream.item(g);
        const int start =
            crop_start_for(cfg.seed, g, corpus.lms[u].frames, crop_len);
        LogMelSpectrogram v =
            pre_normalize(crop_time(corpus.lms[u], start, crop_len), corpus.stats);
        mem.push(v);
        mem.push(v);
      }
    }
    mem.advance_rng(4ull * static_cast<unsigned long long>(batch) *
                    static_cast<unsigned long long>(steps_done));
  }

  TrainResult result;
  bool clamp_warned = false;
  for (long long s = steps_done; s < cfg.steps; ++s) {
    Rng step_rng(derive_seed(cfg.seed, "aug", static_cast<std::uint64_t>(s)));
    std::vector<nn::SampleViews<float>> views(batch);
    std::vector<std::size_t> batch_utts(batch);
    for (int j = 0; j < batch; ++j) {
      const long long g = s * batch + j;
      const std::size_t u = stream.item(g);
      batch_utts[j] = u;
      const int start = crop_start_for(cfg.seed, g, corpus.lms[u].frames, crop_len);
      LogMelSpectrogram crop = crop_time(corpus.lms[u], start, crop_len);
      ViewPair pair = make_views(crop, mem, cfg.aug, corpus.stats, step_rng);
      views[j].a = nn::to_feature_map<float>(pair.a);
      views[j].b = nn::to_feature_map<float>(pair.b);
      views[j].sup = corpus.sup[u];
    }

    nn::Online<float> grads = nn::zeros_like(state.online);
    bool clamped = false;
    nn::LossParts parts = nn::hybrid_backward(state, views, cfg.loss, grads, &clamped);
    if (clamped && !clamp_warned) {
      std::cerr << "warning: zero-norm projection clamped in byol loss at step "
                << s + 1 << "\n";
      clamp_warned = true;
    }
    auto batch_ids = [&] {
      std::string ids;
      for (std::size_t u : batch_utts) ids += corpus.ids[u] + " ";
      return ids;
    };
    if (!std::isfinite(parts.l_hybrid) || !std::isfinite(parts.l_ss) ||
        !std::isfinite(parts.l_sup))
      throw NumericError("non-finite loss at step " + std::to_string(s + 1) +
                         "; batch: " + batch_ids());
    try {
      nn::adam_step(state.online, grads, adam, cfg.adam);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at step " +
                         std::to_string(s + 1) + "; batch: " + batch_ids());
    }
    nn::ema_update(state, cfg.tau);

    TrainLogRow row;
    row.step = s + 1;
    row.l_ss = parts.l_ss;
    row.l_ss_weighted = cfg.loss.alpha_ss * parts.l_ss;
    row.l_sup = parts.l_sup;
    row.l_hybrid = parts.l_hybrid;
    row.tau = cfg.tau;
    result.log.push_back(row);

    if (cfg.checkpoint_interval > 0 && (s + 1) % cfg.checkpoint_interval == 0 &&
        s + 1 < cfg.steps) {
      CheckpointMeta meta = meta_from_config(cfg, corpus.stats, s + 1);
      save_checkpoint(join_path(out_dir, "checkpoint_step" + std::to_string(s + 1) +
                                             ".ckpt"),
                      state, &adam, meta);
    }
  }

  CheckpointMeta meta = meta_from_config(cfg, corpus.stats, cfg.steps);
  result.checkpoint_path = join_path(out_dir, "checkpoint.ckpt");
  save_checkpoint(result.checkpoint_path, state, &adam, meta);
  result.log_path = join_path(out_dir, "train_log.csv");
  write_train_log(result.log_path, result.log);
  return result;
}

EmbeddingMatrix embed(const std::string& checkpoint_path, const Manifest& m,
                      const FrontendConfig* expect_frontend) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  if (expect_frontend && !(*expect_frontend == ck.meta.frontend))
    throw DataError("embed: frontend configuration does not match checkpoint");
  if (m.records.empty()) throw DataError("embed: empty manifest");

  EmbeddingMatrix em;
  em.checkpoint_id = checkpoint_id(checkpoint_path);
  em.cols = ck.meta.encoder.embed_dim;
  em.ids.resize(m.records.size());
  em.data.assign(m.records.size() * static_cast<std::size_t>(em.cols), 0.0f);

  parallel_for(m.records.size(), [&](std::size_t i) {
    const auto& r = m.records[i];
    em.ids[i] = r.utterance_id;
    Waveform w = load_wav(m.resolve_path(r));
    LogMelSpectrogram lms = compute_lms(w, ck.meta.frontend);
    LogMelSpectrogram normed = pre_normalize(lms, ck.meta.norm);
    nn::Vec<float> e = nn::encoder_forward(
        ck.state.online.enc, nn::to_feature_map<float>(normed),
        static_cast<nn::EncoderCache<float>*>(nullptr));
    std::memcpy(em.data.data() + i * static_cast<std::size_t>(em.cols), e.data(),
                sizeof(float) * static_cast<std::size_t>(em.cols));
  });
  return em;
}

namespace {

constexpr char kEmbMagic[8] = {'S', 'R', 'E', 'P', 'E', 'M', 'B', '1'};

}  // namespace

void write_embeddings(const std::string& path, const EmbeddingMatrix& em) {
  std::string out;
  out.append(kEmbMagic, 8);
  const std::uint32_t version = 1;
  out.append(reinterpret_cast<const char*>(&version), 4);
  const std::uint64_t rows = em.ids.size();
  out.append(reinterpret_cast<const char*>(&rows), 8);
  const std::uint32_t cols = static_cast<std::uint32_t>(em.cols);
  out.append(reinterpret_cast<const char*>(&cols), 4);
  const std::uint32_t id_len = static_cast<std::uint32_t>(em.checkpoint_id.size());
  out.append(reinterpret_cast<const char*>(&id_len), 4);
  out.append(em.checkpoint_id);
  for (std::size_t i = 0; i < em.ids.size(); ++i) {
    const std::uint32_t len = static_cast<std::uint32_t>(em.ids[i].size());
    out.append(reinterpret_cast<const char*>(&len), 4);
    out.append(em.ids[i]);
    out.append(reinterpret_cast<const char*>(em.row(i)),
               sizeof(float) * static_cast<std::size_t>(em.cols));
  }
  atomic_write_file(path, out);
}

EmbeddingMatrix read_embeddings(const std::string& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto need = [&](std::size_t k) {
    if (pos + k > bytes.size())
      throw FormatError("embeddings: truncated file: " + path);
  };
  need(8);
  if (std::memcmp(bytes.data(), kEmbMagic, 8) != 0)
    throw FormatError("embeddings: bad magic in " + path);
  pos = 8;
  auto u32 = [&] {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  };
  auto u64 = [&] {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, bytes.data() + pos, 8);
    pos += 8;
    return v;
  };
  if (u32() != 1) throw FormatError("embeddings: unsupported version in " + path);
  const auto rows = static_cast<std::size_t>(u64());
  EmbeddingMatrix em;
  em.cols = static_cast<int>(u32());
  const auto ck_len = static_cast<std::size_t>(u32());
  need(ck_len);
  em.checkpoint_id = bytes.substr(pos, ck_len);
  pos += ck_len;
  em.ids.resize(rows);
  em.data.resize(rows * static_cast<std::size_t>(em.cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto len = static_cast<std::size_t>(u32());
    need(len);
    em.ids[i] = bytes.substr(pos, len);
    pos += len;
    const std::size_t payload = sizeof(float) * static_cast<std::size_t>(em.cols);
    need(payload);
    std::memcpy(em.data.data() + i * static_cast<std::size_t>(em.cols),
                bytes.data() + pos, payload);
    pos += payload;
  }
  return em;
}

}  // namespace stressrep
