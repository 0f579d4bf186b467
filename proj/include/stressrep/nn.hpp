// stressrep/nn.hpp

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

// Differentiable building blocks for the dual-network model: a small CNN
// encoder, projector/predictor MLPs, the normalized-MSE and supervised MSE
// losses, their weighted combination, Adam and the EMA target update.
// Backward passes are written out by hand for exactly these ops and are
// validated against central finite differences in the test suite.
//
// Everything is templated on the scalar type: training runs in float (which
// makes checkpoints bit-exact), gradient checks instantiate double.

#ifndef STRESSREP_NN_HPP_
#define STRESSREP_NN_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "stressrep/audio.hpp"
#include "stressrep/common.hpp"

namespace stressrep::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

inline constexpr double kNormEps = 1e-5;   // channel-norm variance epsilon
inline constexpr double kUnitEps = 1e-12;  // L2-normalization norm clamp

struct EncoderConfig {
  std::vector<int> conv_channels{32, 64, 128};  // 3x3 kernels, 2x2 max-pool
  int embed_dim = 128;
  int mel_bins = 64;

  bool operator==(const EncoderConfig&) const = default;
};

struct HeadConfig {
  int proj_hidden = 256;
  int pred_hidden = 256;
  int d_sup = 115;

  bool operator==(const HeadConfig&) const = default;
};

struct HybridLossConfig {
  double alpha_ss = 1.0;
  double alpha_sup = 1.0;
};

struct LossParts {
  double l_ss = 0.0;
  double l_sup = 0.0;
  double l_hybrid = 0.0;
};

inline int pooled_dim(int n, int blocks) {
  for (int i = 0; i < blocks; ++i) n /= 2;
  return n;
}

inline void validate_encoder_config(const EncoderConfig& cfg) {
  if (cfg.conv_channels.empty())
    throw ConfigError("encoder: need at least one conv block");
  for (int c : cfg.conv_channels)
    if (c < 1) throw ConfigError("encoder: channel counts must be positive");
  if (cfg.embed_dim < 1) throw ConfigError("encoder: embed_dim must be positive");
  const int blocks = static_cast<int>(cfg.conv_channels.size());
  if (pooled_dim(cfg.mel_bins, blocks) < 1)
    throw ConfigError("encoder: mel axis pools below one bin for " +
                      std::to_string(blocks) + " blocks");
}

// --- parameter containers ---------------------------------------------------

template <typename S>
struct ConvBlock {
  Mat<S> w;  // out_ch x (in_ch * 9)
  Vec<S> b;
  Vec<S> gamma, beta;  // per-channel norm scale/shift
  int in_ch = 0, out_ch = 0;
};

template <typename S>
struct Encoder {
  std::vector<ConvBlock<S>> blocks;
  Mat<S> fc_w;  // embed_dim x (last_ch * pooled_mel)
  Vec<S> fc_b;
  EncoderConfig cfg;
};

template <typename S>
struct Mlp {
  Mat<S> w1;
  Vec<S> b1;
  Mat<S> w2;
  Vec<S> b2;
};

template <typename S>
struct Online {
  Encoder<S> enc;
  Mlp<S> proj;  // embed_dim -> hidden -> d_sup
  Mlp<S> pred;  // d_sup -> hidden -> d_sup
};

template <typename S>
struct Target {
  Encoder<S> enc;
  Mlp<S> proj;
};

template <typename S>
struct ModelState {
  Online<S> online;
  Target<S> target;
  HeadConfig heads;
};

// Named view into one parameter tensor; vectors report cols == 1.
template <typename S>
struct ParamRef {
  std::string name;
  S* data;
  Eigen::Index rows, cols;
  Eigen::Index size() const { return rows * cols; }
};

template <typename S>
void collect_refs(Mlp<S>& m, const std::string& prefix,
                  std::vector<ParamRef<S>>& out) {
  out.push_back({prefix + ".w1", m.w1.data(), m.w1.rows(), m.w1.cols()});
  out.push_back({prefix + ".b1", m.b1.data(), m.b1.rows(), 1});
  out.push_back({prefix + ".w2", m.w2.data(), m.w2.rows(), m.w2.cols()});
  out.push_back({prefix + ".b2", m.b2.data(), m.b2.rows(), 1});
}

template <typename S>
void collect_refs(Encoder<S>& e, const std::string& prefix,
                  std::vector<ParamRef<S>>& out) {
  for (std::size_t i = 0; i < e.blocks.size(); ++i) {
    auto& b = e.blocks[i];
    const std::string p = prefix + ".b" + std::to_string(i);
    out.push_back({p + ".w", b.w.data(), b.w.rows(), b.w.cols()});
    out.push_back({p + ".b", b.b.data(), b.b.rows(), 1});
    out.push_back({p + ".gamma", b.gamma.data(), b.gamma.rows(), 1});
    out.push_back({p + ".beta", b.beta.data(), b.beta.rows(), 1});
  }
  out.push_back({prefix + ".fc.w", e.fc_w.data(), e.fc_w.rows(), e.fc_w.cols()});
  out.push_back({prefix + ".fc.b", e.fc_b.data(), e.fc_b.rows(), 1});
}

template <typename S>
std::vector<ParamRef<S>> param_refs(Online<S>& o,
                                    const std::string& prefix = "online") {
  std::vector<ParamRef<S>> out;
  collect_refs(o.enc, prefix + ".enc", out);
  collect_refs(o.proj, prefix + ".proj", out);
  collect_refs(o.pred, prefix + ".pred", out);
  return out;
}

template <typename S>
std::vector<ParamRef<S>> param_refs(Target<S>& t,
                                    const std::string& prefix = "target") {
  std::vector<ParamRef<S>> out;
  collect_refs(t.enc, prefix + ".enc", out);
  collect_refs(t.proj, prefix + ".proj", out);
  return out;
}

template <typename S>
std::vector<ParamRef<S>> param_refs(ModelState<S>& st) {
  auto out = param_refs(st.online);
  auto t = param_refs(st.target);
  out.insert(out.end(), t.begin(), t.end());
  return out;
}

template <typename S>
std::uint64_t param_checksum(std::vector<ParamRef<S>> refs) {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& r : refs)
    h = fnv1a64(r.data, static_cast<std::size_t>(r.size()) * sizeof(S), h);
  return h;
}

// --- initialization ----------------------------------------------------------

template <typename S>
Mlp<S> init_mlp(int in, int hidden, int out, Rng& rng) {
  auto kaiming = [&](Mat<S>& m, int rows, int cols) {
    m.resize(rows, cols);
    const double bound = std::sqrt(6.0 / cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = static_cast<S>(rng.uniform(-bound, bound));
  };
  Mlp<S> mlp;
  kaiming(mlp.w1, hidden, in);
  mlp.b1 = Vec<S>::Zero(hidden);
  kaiming(mlp.w2, out, hidden);
  mlp.b2 = Vec<S>::Zero(out);
  return mlp;
}

// Exact identity through the relu hidden layer: h = [relu(x); relu(-x)],
// y = h_pos - h_neg. Needs hidden >= 2 * dim. A copy-initialized target then
// starts with zero self-supervised loss on identical views.
template <typename S>
Mlp<S> init_identity_mlp(int dim, int hidden) {
  if (hidden < 2 * dim)
    throw ConfigError("predictor hidden size must be at least 2 * d_sup (" +
                      std::to_string(2 * dim) + "), got " +
                      std::to_string(hidden));
  Mlp<S> mlp;
  mlp.w1 = Mat<S>::Zero(hidden, dim);
  mlp.b1 = Vec<S>::Zero(hidden);
  mlp.w2 = Mat<S>::Zero(dim, hidden);
  mlp.b2 = Vec<S>::Zero(dim);
  for (int i = 0; i < dim; ++i) {
    mlp.w1(i, i) = S(1);
    mlp.w1(dim + i, i) = S(-1);
    mlp.w2(i, i) = S(1);
    mlp.w2(i, dim + i) = S(-1);
  }
  return mlp;
}

template <typename S>
Encoder<S> init_encoder(const EncoderConfig& cfg, Rng& rng) {
  validate_encoder_config(cfg);
  Encoder<S> enc;
  enc.cfg = cfg;
  int in_ch = 1;
  for (int out_ch : cfg.conv_channels) {
    ConvBlock<S> b;
    b.in_ch = in_ch;
    b.out_ch = out_ch;
    const int fan_in = in_ch * 9;
    const double bound = std::sqrt(6.0 / fan_in);
    b.w.resize(out_ch, fan_in);
    for (Eigen::Index i = 0; i < b.w.size(); ++i)
      b.w.data()[i] = static_cast<S>(rng.uniform(-bound, bound));
    b.b = Vec<S>::Zero(out_ch);
    b.gamma = Vec<S>::Ones(out_ch);
    b.beta = Vec<S>::Zero(out_ch);
    enc.blocks.push_back(std::move(b));
    in_ch = out_ch;
  }
  const int blocks = static_cast<int>(cfg.conv_channels.size());
  const int flat = cfg.conv_channels.back() * pooled_dim(cfg.mel_bins, blocks);
  const double bound = std::sqrt(6.0 / flat);
  enc.fc_w.resize(cfg.embed_dim, flat);
  for (Eigen::Index i = 0; i < enc.fc_w.size(); ++i)
    enc.fc_w.data()[i] = static_cast<S>(rng.uniform(-bound, bound));
  enc.fc_b = Vec<S>::Zero(cfg.embed_dim);
  return enc;
}

// Kaiming-uniform encoder and projector, identity-initialized predictor,
// target as an exact copy of the online encoder and projector.
template <typename S>
ModelState<S> init_model(const EncoderConfig& enc_cfg, const HeadConfig& heads,
                         std::uint64_t seed) {
  Rng rng(derive_seed(seed, "init"));
  ModelState<S> st;
  st.heads = heads;
  st.online.enc = init_encoder<S>(enc_cfg, rng);
  st.online.proj = init_mlp<S>(enc_cfg.embed_dim, heads.proj_hidden, heads.d_sup, rng);
  st.online.pred = init_identity_mlp<S>(heads.d_sup, heads.pred_hidden);
  st.target.enc = st.online.enc;
  st.target.proj = st.online.proj;
  return st;
}

// --- forward / backward -------------------------------------------------------

// Feature map: channels x (h * w), column index = row * w + col.
template <typename S>
struct FeatureMap {
  Mat<S> x;
  int h = 0, w = 0;
};

template <typename S>
FeatureMap<S> to_feature_map(const LogMelSpectrogram& lms) {
  FeatureMap<S> fm;
  fm.h = lms.frames;
  fm.w = lms.mel_bins;
  fm.x.resize(1, static_cast<Eigen::Index>(lms.values.size()));
  for (std::size_t i = 0; i < lms.values.size(); ++i)
    fm.x(0, static_cast<Eigen::Index>(i)) = static_cast<S>(lms.values[i]);
  return fm;
}

template <typename S>
void im2col(const Mat<S>& x, int h, int w, Mat<S>& k) {
  const int ch = static_cast<int>(x.rows());
  k.resize(static_cast<Eigen::Index>(ch) * 9, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < ch; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = static_cast<Eigen::Index>(c) * 9 + ky * 3 + kx;
        for (int i = 0; i < h; ++i) {
          const int si = i + ky - 1;
          for (int j = 0; j < w; ++j) {
            const int sj = j + kx - 1;
            const bool in = si >= 0 && si < h && sj >= 0 && sj < w;
            k(row, static_cast<Eigen::Index>(i) * w + j) =
                in ? x(c, static_cast<Eigen::Index>(si) * w + sj) : S(0);
          }
        }
      }
    }
  }
}

template <typename S>
void col2im_add(const Mat<S>& dk, int h, int w, Mat<S>& dx) {
  const int ch = static_cast<int>(dx.rows());
  for (int c = 0; c < ch; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = static_cast<Eigen::Index>(c) * 9 + ky * 3 + kx;
        for (int i = 0; i < h; ++i) {
          const int si = i + ky - 1;
          if (si < 0 || si >= h) continue;
          for (int j = 0; j < w; ++j) {
            const int sj = j + kx - 1;
            if (sj < 0 || sj >= w) continue;
            dx(c, static_cast<Eigen::Index>(si) * w + sj) +=
                dk(row, static_cast<Eigen::Index>(i) * w + j);
          }
        }
      }
    }
  }
}

template <typename S>
struct ConvBlockCache {
  Mat<S> input;        // in_ch x (h*w)
  int h = 0, w = 0;    // pre-pool spatial dims
  Mat<S> cols;         // im2col of input
  Mat<S> xhat;         // normalized pre-activation
  Vec<S> inv_std;      // per-channel 1/sqrt(var+eps)
  Mat<S> relu;         // post-relu activation (pool input)
  std::vector<int> pool_arg;  // input col index per (c, pooled col)
  int ph = 0, pw = 0;  // post-pool spatial dims
};

// conv3x3(pad 1) -> per-channel norm (learned scale/shift) -> relu -> maxpool2x2
template <typename S>
FeatureMap<S> conv_block_forward(const ConvBlock<S>& p, const FeatureMap<S>& in,
                                 ConvBlockCache<S>* cache) {
  const int h = in.h, w = in.w;
  Mat<S> cols;
  im2col(in.x, h, w, cols);
  Mat<S> pre = p.w * cols;
  pre.colwise() += p.b;

  const auto hw = static_cast<Eigen::Index>(h) * w;
  Mat<S> xhat(p.out_ch, hw);
  Vec<S> inv_std(p.out_ch);
  for (int c = 0; c < p.out_ch; ++c) {
    const S mu = pre.row(c).mean();
    const S var = (pre.row(c).array() - mu).square().mean();
    const S is = S(1) / std::sqrt(var + S(kNormEps));
    inv_std(c) = is;
    xhat.row(c) = (pre.row(c).array() - mu) * is;
  }
  Mat<S> act(p.out_ch, hw);
  for (int c = 0; c < p.out_ch; ++c)
    act.row(c) = (xhat.row(c).array() * p.gamma(c) + p.beta(c)).max(S(0));

  const int ph = h / 2, pw = w / 2;
  if (ph < 1 || pw < 1) throw ConfigError("conv block: input pools below 1x1");
  FeatureMap<S> out;
  out.h = ph;
  out.w = pw;
  out.x.resize(p.out_ch, static_cast<Eigen::Index>(ph) * pw);
  std::vector<int> arg(static_cast<std::size_t>(p.out_ch) * ph * pw);
  for (int c = 0; c < p.out_ch; ++c) {
    for (int i = 0; i < ph; ++i) {
      for (int j = 0; j < pw; ++j) {
        int best = (2 * i) * w + 2 * j;
        S bv = act(c, best);
        const int cand[3] = {(2 * i) * w + 2 * j + 1, (2 * i + 1) * w + 2 * j,
                             (2 * i + 1) * w + 2 * j + 1};
        for (int idx : cand) {
          if (act(c, idx) > bv) {
            bv = act(c, idx);
            best = idx;
          }
        }
        out.x(c, static_cast<Eigen::Index>(i) * pw + j) = bv;
        arg[static_cast<std::size_t>(c) * ph * pw + i * pw + j] = best;
      }
    }
  }
  if (cache) {
    cache->input = in.x;
    cache->h = h;
    cache->w = w;
    cache->cols = std::move(cols);
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->relu = std::move(act);
    cache->pool_arg = std::move(arg);
    cache->ph = ph;
    cache->pw = pw;
  }
  return out;
}

// Returns d(input); accumulates parameter gradients into `g`.
template <typename S>
Mat<S> conv_block_backward(const ConvBlock<S>& p, const ConvBlockCache<S>& c,
                           const Mat<S>& d_out, ConvBlock<S>& g) {
  const auto hw = static_cast<Eigen::Index>(c.h) * c.w;
  Mat<S> d_act = Mat<S>::Zero(p.out_ch, hw);
  for (int ch = 0; ch < p.out_ch; ++ch)
    for (int i = 0; i < c.ph * c.pw; ++i)
      d_act(ch, c.pool_arg[static_cast<std::size_t>(ch) * c.ph * c.pw + i]) +=
          d_out(ch, i);

  // relu mask from the stored activation (strictly positive where it passed).
  for (Eigen::Index i = 0; i < d_act.size(); ++i)
    if (c.relu.data()[i] <= S(0)) d_act.data()[i] = S(0);

  Mat<S> d_pre(p.out_ch, hw);
  for (int ch = 0; ch < p.out_ch; ++ch) {
    const auto dy = d_act.row(ch).array();
    const auto xh = c.xhat.row(ch).array();
    g.gamma(ch) += (dy * xh).sum();
    g.beta(ch) += dy.sum();
    const auto dxh = dy * p.gamma(ch);
    const S m1 = dxh.mean();
    const S m2 = (dxh * xh).mean();
    d_pre.row(ch) = (dxh - m1 - xh * m2) * c.inv_std(ch);
  }

  g.w.noalias() += d_pre * c.cols.transpose();
  g.b += d_pre.rowwise().sum();
  Mat<S> d_cols = p.w.transpose() * d_pre;
  Mat<S> d_in = Mat<S>::Zero(p.in_ch, hw);
  col2im_add(d_cols, c.h, c.w, d_in);
  return d_in;
}

template <typename S>
struct EncoderCache {
  std::vector<ConvBlockCache<S>> blocks;
  int lh = 0, lw = 0;  // final spatial dims
  Vec<S> flat;         // mean-over-time flatten, fc input
};

template <typename S>
Vec<S> encoder_forward(const Encoder<S>& e, const FeatureMap<S>& lms,
                       EncoderCache<S>* cache = nullptr) {
  if (lms.w != e.cfg.mel_bins)
    throw DataError("encoder: input has " + std::to_string(lms.w) +
                    " mel bins, model expects " + std::to_string(e.cfg.mel_bins));
  const int blocks = static_cast<int>(e.blocks.size());
  if (pooled_dim(lms.h, blocks) < 1)
    throw DataError("encoder: input too short in time (" + std::to_string(lms.h) +
                    " frames)");
  if (cache) cache->blocks.resize(blocks);

  FeatureMap<S> cur = lms;
  for (int i = 0; i < blocks; ++i)
    cur = conv_block_forward(e.blocks[i], cur,
                             cache ? &cache->blocks[i] : nullptr);

  const int ch = e.blocks.back().out_ch;
  Vec<S> flat(static_cast<Eigen::Index>(ch) * cur.w);
  const S inv_h = S(1) / static_cast<S>(cur.h);
  for (int c = 0; c < ch; ++c) {
    for (int j = 0; j < cur.w; ++j) {
      S acc = S(0);
      for (int i = 0; i < cur.h; ++i)
        acc += cur.x(c, static_cast<Eigen::Index>(i) * cur.w + j);
      flat(static_cast<Eigen::Index>(c) * cur.w + j) = acc * inv_h;
    }
  }
  Vec<S> embed = e.fc_w * flat + e.fc_b;
  if (cache) {
    cache->lh = cur.h;
    cache->lw = cur.w;
    cache->flat = std::move(flat);
  }
  return embed;
}

template <typename S>
void encoder_backward(const Encoder<S>& e, const EncoderCache<S>& c,
                      const Vec<S>& d_embed, Encoder<S>& g) {
  g.fc_w.noalias() += d_embed * c.flat.transpose();
  g.fc_b += d_embed;
  Vec<S> d_flat = e.fc_w.transpose() * d_embed;

  const int ch = e.blocks.back().out_ch;
  const S inv_h = S(1) / static_cast<S>(c.lh);
  Mat<S> d_map(ch, static_cast<Eigen::Index>(c.lh) * c.lw);
  for (int cc = 0; cc < ch; ++cc)
    for (int i = 0; i < c.lh; ++i)
      for (int j = 0; j < c.lw; ++j)
        d_map(cc, static_cast<Eigen::Index>(i) * c.lw + j) =
            d_flat(static_cast<Eigen::Index>(cc) * c.lw + j) * inv_h;

  for (int i = static_cast<int>(e.blocks.size()) - 1; i >= 0; --i)
    d_map = conv_block_backward(e.blocks[i], c.blocks[i], d_map, g.blocks[i]);
}

template <typename S>
struct MlpCache {
  Vec<S> x;
  Vec<S> h;  // post-relu hidden
};

template <typename S>
Vec<S> mlp_forward(const Mlp<S>& m, const Vec<S>& x, MlpCache<S>* cache = nullptr) {
  Vec<S> h = (m.w1 * x + m.b1).cwiseMax(S(0));
  Vec<S> y = m.w2 * h + m.b2;
  if (cache) {
    cache->x = x;
    cache->h = std::move(h);
  }
  return y;
}

// Returns d(input); accumulates parameter gradients into `g`.
template <typename S>
Vec<S> mlp_backward(const Mlp<S>& m, const MlpCache<S>& c, const Vec<S>& dy,
                    Mlp<S>& g) {
  g.w2.noalias() += dy * c.h.transpose();
  g.b2 += dy;
  Vec<S> dh = m.w2.transpose() * dy;
  for (Eigen::Index i = 0; i < dh.size(); ++i)
    if (c.h(i) <= S(0)) dh(i) = S(0);
  g.w1.noalias() += dh * c.x.transpose();
  g.b1 += dh;
  return m.w1.transpose() * dh;
}

template <typename S>
struct OnlineCache {
  EncoderCache<S> enc;
  MlpCache<S> proj;
  MlpCache<S> pred;
};

template <typename S>
struct OnlineOut {
  Vec<S> embedding;
  Vec<S> projection;
  Vec<S> prediction;
};

template <typename S>
OnlineOut<S> forward_online(const Online<S>& o, const FeatureMap<S>& x,
                            OnlineCache<S>* cache = nullptr) {
  OnlineOut<S> out;
  out.embedding = encoder_forward(o.enc, x, cache ? &cache->enc : nullptr);
  out.projection = mlp_forward(o.proj, out.embedding, cache ? &cache->proj : nullptr);
  out.prediction = mlp_forward(o.pred, out.projection, cache ? &cache->pred : nullptr);
  return out;
}

// Stop-gradient contract: the target path never records a cache and never
// receives gradients; its only mutation path is ema_update.
template <typename S>
Vec<S> forward_target(const Target<S>& t, const FeatureMap<S>& x) {
  Vec<S> embed = encoder_forward(t.enc, x, static_cast<EncoderCache<S>*>(nullptr));
  return mlp_forward(t.proj, embed, static_cast<MlpCache<S>*>(nullptr));
}

template <typename S>
void backward_online(const Online<S>& o, const OnlineCache<S>& c,
                     const Vec<S>& d_pred, const Vec<S>& d_proj_extra,
                     Online<S>& g) {
  Vec<S> d_proj = mlp_backward(o.pred, c.pred, d_pred, g.pred);
  d_proj += d_proj_extra;
  Vec<S> d_embed = mlp_backward(o.proj, c.proj, d_proj, g.proj);
  encoder_backward(o.enc, c.enc, d_embed, g.enc);
}

// --- losses -------------------------------------------------------------------

// Squared distance of the L2-normalized vectors: 2 - 2 cos(pred, targ).
// Norms are clamped at kUnitEps; `clamped` reports when that happened.
template <typename S>
S byol_loss(const Vec<S>& pred, const Vec<S>& targ, Vec<S>* d_pred = nullptr,
            S scale = S(1), bool* clamped = nullptr) {
  const S np = std::max(pred.norm(), S(kUnitEps));
  const S nt = std::max(targ.norm(), S(kUnitEps));
  if (clamped && (pred.norm() < S(kUnitEps) || targ.norm() < S(kUnitEps)))
    *clamped = true;
  Vec<S> ph = pred / np;
  Vec<S> th = targ / nt;
  const S cos = ph.dot(th);
  if (d_pred) *d_pred = (S(-2) * scale / np) * (th - cos * ph);
  return S(2) - S(2) * cos;
}

// Plain MSE over the d_sup dimensions.
template <typename S>
S sup_loss(const Vec<S>& proj, const Vec<S>& target_features,
           Vec<S>* d_proj = nullptr, S scale = S(1)) {
  if (proj.size() != target_features.size())
    throw DataError("sup_loss: dimension mismatch");
  const Vec<S> diff = proj - target_features;
  const S inv_d = S(1) / static_cast<S>(proj.size());
  if (d_proj) *d_proj = (S(2) * scale * inv_d) * diff;
  return diff.squaredNorm() * inv_d;
}

// Loss values for logging are always computed at 64-bit precision, whatever
// the parameter scalar type.
template <typename S>
double byol_loss_value(const Vec<S>& pred, const Vec<S>& targ) {
  return byol_loss<double>(pred.template cast<double>(),
                           targ.template cast<double>());
}

template <typename S>
double sup_loss_value(const Vec<S>& proj, const Vec<S>& target_features) {
  return sup_loss<double>(proj.template cast<double>(),
                          target_features.template cast<double>());
}

inline LossParts hybrid_loss(double l_ss, double l_sup,
                             const HybridLossConfig& cfg) {
  if (cfg.alpha_ss < 0.0 || cfg.alpha_sup < 0.0 ||
      cfg.alpha_ss + cfg.alpha_sup <= 0.0)
    throw ConfigError("hybrid loss: weights must be non-negative, not both zero");
  LossParts p;
  p.l_ss = l_ss;
  p.l_sup = l_sup;
  p.l_hybrid = cfg.alpha_ss * l_ss + cfg.alpha_sup * l_sup;
  return p;
}

// --- batch hybrid loss ---------------------------------------------------------

template <typename S>
struct SampleViews {
  FeatureMap<S> a;
  FeatureMap<S> b;
  Vec<S> sup;  // standardized handcrafted features of the clean utterance
};

template <typename S>
Online<S> zeros_like(const Online<S>& o) {
  Online<S> g;
  g.enc.cfg = o.enc.cfg;
  for (const auto& b : o.enc.blocks) {
    ConvBlock<S> z;
    z.in_ch = b.in_ch;
    z.out_ch = b.out_ch;
    z.w = Mat<S>::Zero(b.w.rows(), b.w.cols());
    z.b = Vec<S>::Zero(b.b.size());
    z.gamma = Vec<S>::Zero(b.gamma.size());
    z.beta = Vec<S>::Zero(b.beta.size());
    g.enc.blocks.push_back(std::move(z));
  }
  g.enc.fc_w = Mat<S>::Zero(o.enc.fc_w.rows(), o.enc.fc_w.cols());
  g.enc.fc_b = Vec<S>::Zero(o.enc.fc_b.size());
  auto zero_mlp = [](const Mlp<S>& m) {
    Mlp<S> z;
    z.w1 = Mat<S>::Zero(m.w1.rows(), m.w1.cols());
    z.b1 = Vec<S>::Zero(m.b1.size());
    z.w2 = Mat<S>::Zero(m.w2.rows(), m.w2.cols());
    z.b2 = Vec<S>::Zero(m.b2.size());
    return z;
  };
  g.proj = zero_mlp(o.proj);
  g.pred = zero_mlp(o.pred);
  return g;
}

template <typename S>
void add_params(Online<S>& acc, const Online<S>& g) {
  auto a = param_refs(acc, "");
  auto b = param_refs(const_cast<Online<S>&>(g), "");
  for (std::size_t i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < a[i].size(); ++j) a[i].data[j] += b[i].data[j];
}

// Per-sample loss terms; every scalar reduction happens in double so the
// logged parts reconstruct the weighted sum at 1e-9 regardless of S.
template <typename S>
struct SampleLoss {
  double l_ss = 0.0;
  double l_sup = 0.0;
};

template <typename S>
SampleLoss<S> hybrid_sample(const ModelState<S>& st, const SampleViews<S>& sv,
                            const HybridLossConfig& cfg, double inv_batch,
                            Online<S>* grads, bool* clamped) {
  OnlineCache<S> ca, cb;
  const bool want = grads != nullptr;
  OnlineOut<S> oa = forward_online(st.online, sv.a, want ? &ca : nullptr);
  OnlineOut<S> ob = forward_online(st.online, sv.b, want ? &cb : nullptr);
  Vec<S> ta = forward_target(st.target, sv.a);
  Vec<S> tb = forward_target(st.target, sv.b);

  // Symmetrized self-supervised term plus the supervised term on the
  // projector output of each view, both averaged over the two views.
  Vec<S> d_pred_a, d_pred_b, d_proj_a, d_proj_b;
  const S ss_scale = static_cast<S>(cfg.alpha_ss * 0.5 * inv_batch);
  const S sup_scale = static_cast<S>(cfg.alpha_sup * 0.5 * inv_batch);
  const double l_ab = byol_loss_value(oa.prediction, tb);
  const double l_ba = byol_loss_value(ob.prediction, ta);
  const double s_a = sup_loss_value(oa.projection, sv.sup);
  const double s_b = sup_loss_value(ob.projection, sv.sup);
  if (want) {
    byol_loss(oa.prediction, tb, &d_pred_a, ss_scale, clamped);
    byol_loss(ob.prediction, ta, &d_pred_b, ss_scale, clamped);
    sup_loss(oa.projection, sv.sup, &d_proj_a, sup_scale);
    sup_loss(ob.projection, sv.sup, &d_proj_b, sup_scale);
  } else if (clamped) {
    byol_loss(oa.prediction, tb, static_cast<Vec<S>*>(nullptr), S(1), clamped);
    byol_loss(ob.prediction, ta, static_cast<Vec<S>*>(nullptr), S(1), clamped);
  }

  if (want) {
    // Degenerate weights zero out the corresponding branch exactly.
    if (cfg.alpha_ss == 0.0) {
      d_pred_a.setZero();
      d_pred_b.setZero();
    }
    if (cfg.alpha_sup == 0.0) {
      d_proj_a.setZero();
      d_proj_b.setZero();
    }
    backward_online(st.online, ca, d_pred_a, d_proj_a, *grads);
    backward_online(st.online, cb, d_pred_b, d_proj_b, *grads);
  }
  SampleLoss<S> out;
  out.l_ss = 0.5 * (l_ab + l_ba);
  out.l_sup = 0.5 * (s_a + s_b);
  return out;
}

template <typename S>
LossParts hybrid_forward(const ModelState<S>& st,
                         const std::vector<SampleViews<S>>& batch,
                         const HybridLossConfig& cfg) {
  if (batch.empty()) throw DataError("hybrid loss: empty batch");
  double l_ss = 0.0, l_sup = 0.0;
  for (const auto& sv : batch) {
    auto s = hybrid_sample<S>(st, sv, cfg, 1.0 / batch.size(), nullptr, nullptr);
    l_ss += s.l_ss;
    l_sup += s.l_sup;
  }
  return hybrid_loss(l_ss / batch.size(), l_sup / batch.size(), cfg);
}

// Forward + backward over a batch. Per-sample gradients are computed into
// separate buffers (optionally on worker threads) and reduced in sample
// order, so the result does not depend on the worker count.
template <typename S>
LossParts hybrid_backward(const ModelState<S>& st,
                          const std::vector<SampleViews<S>>& batch,
                          const HybridLossConfig& cfg, Online<S>& grads,
                          bool* clamped = nullptr) {
  if (batch.empty()) throw DataError("hybrid loss: empty batch");
  const std::size_t n = batch.size();
  std::vector<Online<S>> sample_grads;
  sample_grads.reserve(n);
  for (std::size_t i = 0; i < n; ++i) sample_grads.push_back(zeros_like(st.online));
  std::vector<SampleLoss<S>> losses(n);
  std::vector<std::uint8_t> clamp_flags(n, 0);

  parallel_for(n, [&](std::size_t i) {
    bool c = false;
    losses[i] = hybrid_sample<S>(st, batch[i], cfg, 1.0 / static_cast<double>(n),
                                 &sample_grads[i], &c);
    clamp_flags[i] = c ? 1 : 0;
  });

  double l_ss = 0.0, l_sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    l_ss += losses[i].l_ss;
    l_sup += losses[i].l_sup;
    add_params(grads, sample_grads[i]);
    if (clamped && clamp_flags[i]) *clamped = true;
  }
  return hybrid_loss(l_ss / static_cast<double>(n),
                     l_sup / static_cast<double>(n), cfg);
}

template <typename S>
bool all_finite(std::vector<ParamRef<S>> refs) {
  for (const auto& r : refs)
    for (Eigen::Index i = 0; i < r.size(); ++i)
      if (!std::isfinite(static_cast<double>(r.data[i]))) return false;
  return true;
}

// --- optimizer and EMA ----------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename S>
struct AdamState {
  std::vector<std::vector<S>> m, v;  // aligned with param_refs(online)
  long long t = 0;
};

template <typename S>
AdamState<S> make_adam(Online<S>& params) {
  AdamState<S> st;
  for (const auto& r : param_refs(params)) {
    st.m.emplace_back(static_cast<std::size_t>(r.size()), S(0));
    st.v.emplace_back(static_cast<std::size_t>(r.size()), S(0));
  }
  return st;
}

// Throws NumericError on non-finite gradients; parameters stay untouched.
template <typename S>
void adam_step(Online<S>& params, Online<S>& grads, AdamState<S>& st,
               const AdamConfig& cfg) {
  auto gr = param_refs(grads);
  if (!all_finite(gr))
    throw NumericError("optimizer: non-finite gradient, step aborted");
  auto pr = param_refs(params);
  st.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < pr.size(); ++i) {
    S* p = pr[i].data;
    const S* g = gr[i].data;
    S* m = st.m[i].data();
    S* v = st.v[i].data();
    const auto n = static_cast<std::size_t>(pr[i].size());
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = static_cast<S>(cfg.beta1) * m[j] + static_cast<S>(1.0 - cfg.beta1) * g[j];
      v[j] = static_cast<S>(cfg.beta2) * v[j] +
             static_cast<S>(1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = static_cast<double>(m[j]) / bc1;
      const double vhat = static_cast<double>(v[j]) / bc2;
      p[j] -= static_cast<S>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

// target <- tau * target + (1 - tau) * online, encoder and projector only.
template <typename S>
void ema_update(ModelState<S>& st, double tau) {
  if (tau < 0.0 || tau > 1.0) throw ConfigError("ema: tau must be in [0, 1]");
  auto on = param_refs(st.online, "");
  auto tg = param_refs(st.target, "");
  const S a = static_cast<S>(tau);
  const S b = static_cast<S>(1.0 - tau);
  for (std::size_t i = 0; i < tg.size(); ++i) {
    S* t = tg[i].data;
    const S* o = on[i].data;
    const auto n = static_cast<std::size_t>(tg[i].size());
    for (std::size_t j = 0; j < n; ++j) t[j] = a * t[j] + b * o[j];
  }
}

}  // namespace stressrep::nn

#endif  // STRESSREP_NN_HPP_
