// tests/test_nn.cc

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

#include <cmath>

#include "doctest.h"
#include "stressrep/checkpoint.hpp"
#include "stressrep/nn.hpp"
#include "testutil.hpp"

using namespace stressrep;
using nn::Mat;
using nn::Vec;

namespace {

// Tiny double-precision model for finite-difference work.
nn::ModelState<double> tiny_model(std::uint64_t seed = 11) {
  nn::EncoderConfig enc;
  enc.conv_channels = {4, 6};
  enc.embed_dim = 8;
  enc.mel_bins = 8;
  nn::HeadConfig heads;
  heads.proj_hidden = 16;
  heads.pred_hidden = 16;  // >= 2 * d_sup
  heads.d_sup = 6;
  return nn::init_model<double>(enc, heads, seed);
}

template <typename S>
nn::FeatureMap<S> random_map(int h, int w, Rng& rng, double lo = -2.0,
                             double hi = 2.0) {
  nn::FeatureMap<S> fm;
  fm.h = h;
  fm.w = w;
  fm.x.resize(1, static_cast<Eigen::Index>(h) * w);
  for (Eigen::Index i = 0; i < fm.x.size(); ++i)
    fm.x(0, i) = static_cast<S>(rng.uniform(lo, hi));
  return fm;
}

std::vector<nn::SampleViews<double>> random_batch(int n, int h, int w, int d_sup,
                                                  Rng& rng) {
  std::vector<nn::SampleViews<double>> batch(n);
  for (auto& sv : batch) {
    sv.a = random_map<double>(h, w, rng);
    sv.b = random_map<double>(h, w, rng);
    sv.sup.resize(d_sup);
    for (int i = 0; i < d_sup; ++i) sv.sup(i) = rng.uniform(-1.5, 1.5);
  }
  return batch;
}

}  // namespace

TEST_CASE("byol_loss hits 0 / 2 / 4 on identical / orthogonal / antipodal") {
  Vec<double> a(3), b(3);
  a << 1.0, 2.0, -1.0;
  CHECK(std::abs(nn::byol_loss<double>(a, a)) <= 1e-12);
  CHECK(std::abs(nn::byol_loss<double>(a, Vec<double>(-a)) - 4.0) <= 1e-12);
  b << 2.0, -1.0, 0.0;  // orthogonal to a
  CHECK(std::abs(a.dot(b)) == 0.0);
  CHECK(std::abs(nn::byol_loss<double>(a, b) - 2.0) <= 1e-12);
}

TEST_CASE("byol_loss stays in [0, 4] and ignores positive rescaling") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    Vec<double> p(7), t(7);
    for (int i = 0; i < 7; ++i) {
      p(i) = rng.uniform(-3.0, 3.0);
      t(i) = rng.uniform(-3.0, 3.0);
    }
    const double l = nn::byol_loss<double>(p, t);
    CHECK(l >= 0.0);
    CHECK(l <= 4.0);
    const double sp = rng.uniform(0.1, 10.0), st = rng.uniform(0.1, 10.0);
    const double l2 = nn::byol_loss<double>(Vec<double>(sp * p), Vec<double>(st * t));
    CHECK(std::abs(l - l2) <= 1e-9);
  }
}

TEST_CASE("byol_loss flags clamped zero-norm inputs") {
  Vec<double> z = Vec<double>::Zero(4), t = Vec<double>::Ones(4);
  bool clamped = false;
  nn::byol_loss<double>(z, t, nullptr, 1.0, &clamped);
  CHECK(clamped);
}

TEST_CASE("sup_loss arithmetic and oracle") {
  Vec<double> a = Vec<double>::Ones(6), b = Vec<double>::Zero(6);
  CHECK(nn::sup_loss<double>(a, a) == 0.0);
  CHECK(nn::sup_loss<double>(a, b) == doctest::Approx(1.0));

  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    Vec<double> p(9), q(9);
    double acc = 0.0;
    for (int i = 0; i < 9; ++i) {
      p(i) = rng.uniform(-2.0, 2.0);
      q(i) = rng.uniform(-2.0, 2.0);
      acc += (p(i) - q(i)) * (p(i) - q(i));
    }
    CHECK(std::abs(nn::sup_loss<double>(p, q) - acc / 9.0) <= 1e-12);
  }
  Vec<double> wrong(4);
  CHECK_THROWS_AS(nn::sup_loss<double>(a, wrong), DataError);
}

TEST_CASE("hybrid_loss is the exact weighted sum") {
  nn::LossParts p = nn::hybrid_loss(0.5, 0.2, {1.0, 1.0});
  CHECK(p.l_hybrid == doctest::Approx(0.7));
  nn::LossParts ss_only = nn::hybrid_loss(0.5, 0.2, {2.0, 0.0});
  CHECK(ss_only.l_hybrid == doctest::Approx(1.0));
  CHECK_THROWS_AS(nn::hybrid_loss(1.0, 1.0, {0.0, 0.0}), ConfigError);
}

TEST_CASE("forward_online with zeroed output layers returns the biases") {
  auto st = tiny_model();
  Rng rng(31);
  st.online.proj.w2.setZero();
  st.online.pred.w2.setZero();
  for (int i = 0; i < 6; ++i) {
    st.online.proj.b2(i) = rng.uniform(-1.0, 1.0);
    st.online.pred.b2(i) = rng.uniform(-1.0, 1.0);
  }
  auto x = random_map<double>(8, 8, rng);
  auto out = nn::forward_online(st.online, x);
  for (int i = 0; i < 6; ++i) {
    CHECK(out.projection(i) == st.online.proj.b2(i));
    CHECK(out.prediction(i) == st.online.pred.b2(i));
  }
}

TEST_CASE("forward passes are pure and finite on fuzzed inputs") {
  auto st = tiny_model();
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    auto x = random_map<double>(8, 8, rng, -5.0, 5.0);
    auto o1 = nn::forward_online(st.online, x);
    auto o2 = nn::forward_online(st.online, x);
    CHECK(o1.prediction == o2.prediction);
    CHECK(o1.embedding == o2.embedding);
    for (int i = 0; i < o1.prediction.size(); ++i)
      CHECK(std::isfinite(o1.prediction(i)));
    Vec<double> t = nn::forward_target(st.target, x);
    for (int i = 0; i < t.size(); ++i) CHECK(std::isfinite(t(i)));
  }
}

TEST_CASE("copy-initialized target projects exactly like online") {
  auto st = tiny_model();
  Rng rng(35);
  auto x = random_map<double>(8, 8, rng);
  auto online = nn::forward_online(st.online, x);
  Vec<double> target = nn::forward_target(st.target, x);
  CHECK(online.projection == target);
  // Identity predictor at init: prediction equals projection exactly.
  CHECK(online.prediction == online.projection);
}

TEST_CASE("target parameters never see gradients") {
  auto st = tiny_model();
  Rng rng(37);
  auto batch = random_batch(3, 8, 8, 6, rng);
  const std::uint64_t before = nn::param_checksum(nn::param_refs(st.target));
  nn::Online<double> grads = nn::zeros_like(st.online);
  nn::hybrid_backward(st, batch, {1.0, 1.0}, grads);
  nn::AdamState<double> adam = nn::make_adam(st.online);
  nn::adam_step(st.online, grads, adam, {});
  CHECK(nn::param_checksum(nn::param_refs(st.target)) == before);
  nn::ema_update(st, 0.5);
  CHECK(nn::param_checksum(nn::param_refs(st.target)) != before);
}

TEST_CASE("ema boundary and scalar arithmetic") {
  auto st = tiny_model();
  auto snapshot = nn::param_checksum(nn::param_refs(st.target));

  nn::ema_update(st, 1.0);  // unchanged
  CHECK(nn::param_checksum(nn::param_refs(st.target)) == snapshot);

  st.target.proj.b2(0) = 2.0;
  st.online.proj.b2(0) = 0.0;
  nn::ema_update(st, 0.75);
  CHECK(st.target.proj.b2(0) == doctest::Approx(1.5));

  nn::ema_update(st, 0.0);  // full copy
  auto on = nn::param_refs(st.online, "");
  auto tg = nn::param_refs(st.target, "");
  for (std::size_t i = 0; i < tg.size(); ++i)
    for (Eigen::Index j = 0; j < tg[i].size(); ++j)
      CHECK(tg[i].data[j] == on[i].data[j]);
}

TEST_CASE("ema trajectory follows tau^n exactly with frozen online") {
  auto st = tiny_model(5);
  // Make target differ from online.
  Rng rng(39);
  auto tg = nn::param_refs(st.target, "");
  std::vector<std::vector<double>> initial_delta;
  auto on = nn::param_refs(st.online, "");
  for (std::size_t i = 0; i < tg.size(); ++i) {
    initial_delta.emplace_back(tg[i].size());
    for (Eigen::Index j = 0; j < tg[i].size(); ++j) {
      tg[i].data[j] += rng.uniform(-1.0, 1.0);
      initial_delta[i][static_cast<std::size_t>(j)] = tg[i].data[j] - on[i].data[j];
    }
  }
  const double tau = 0.97;
  double tau_n = 1.0;
  for (int n = 1; n <= 100; ++n) {
    nn::ema_update(st, tau);
    tau_n *= tau;
    if (n % 25 != 0 && n != 1 && n != 100) continue;
    for (std::size_t i = 0; i < tg.size(); ++i)
      for (Eigen::Index j = 0; j < tg[i].size(); ++j) {
        const double expect =
            tau_n * initial_delta[i][static_cast<std::size_t>(j)];
        CHECK(std::abs((tg[i].data[j] - on[i].data[j]) - expect) <= 1e-12);
      }
  }
}

TEST_CASE("adam reproduces the closed-form single step") {
  auto st = tiny_model();
  nn::AdamState<double> adam = nn::make_adam(st.online);
  nn::Online<double> grads = nn::zeros_like(st.online);
  const double g = 0.37;
  grads.proj.b2(2) = g;
  const double theta0 = st.online.proj.b2(2);
  const double other0 = st.online.proj.b2(3);
  nn::AdamConfig cfg;  // lr 1e-3, eps 1e-8
  nn::adam_step(st.online, grads, adam, cfg);
  // Bias corrections cancel on the first step: update = lr * g / (|g| + eps).
  const double expect = theta0 - cfg.lr * g / (std::abs(g) + cfg.eps);
  CHECK(st.online.proj.b2(2) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(st.online.proj.b2(3) == other0);  // zero-grad parameters unchanged
}

TEST_CASE("adam rejects non-finite gradients and leaves parameters alone") {
  auto st = tiny_model();
  nn::AdamState<double> adam = nn::make_adam(st.online);
  nn::Online<double> grads = nn::zeros_like(st.online);
  grads.proj.b2(0) = std::numeric_limits<double>::quiet_NaN();
  const auto before = nn::param_checksum(nn::param_refs(st.online));
  CHECK_THROWS_AS(nn::adam_step(st.online, grads, adam, {}), NumericError);
  CHECK(nn::param_checksum(nn::param_refs(st.online)) == before);
}

TEST_CASE("alpha_ss = 0 sends exactly zero gradient through the byol path") {
  auto st = tiny_model();
  Rng rng(41);
  auto batch = random_batch(2, 8, 8, 6, rng);
  nn::Online<double> grads = nn::zeros_like(st.online);
  nn::hybrid_backward(st, batch, {0.0, 1.0}, grads);
  // The predictor only feeds the self-supervised term.
  CHECK(grads.pred.w1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.pred.w2.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.pred.b1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.pred.b2.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.proj.w1.cwiseAbs().maxCoeff() > 0.0);  // supervised path flows
}

TEST_CASE("matching projections give zero supervised gradients") {
  auto st = tiny_model();
  Rng rng(43);
  nn::SampleViews<double> sv;
  sv.a = random_map<double>(8, 8, rng);
  sv.b = sv.a;  // identical views
  sv.sup = nn::forward_online(st.online, sv.a).projection;
  nn::Online<double> grads = nn::zeros_like(st.online);
  nn::LossParts parts = nn::hybrid_backward(
      st, std::vector<nn::SampleViews<double>>{sv}, {0.0, 1.0}, grads);
  CHECK(parts.l_sup <= 1e-24);
  auto refs = nn::param_refs(grads);
  for (const auto& r : refs)
    for (Eigen::Index j = 0; j < r.size(); ++j)
      CHECK(std::abs(r.data[j]) <= 1e-15);
}

TEST_CASE("identical views with copy-initialized target give zero byol loss") {
  auto st = tiny_model();
  Rng rng(45);
  nn::SampleViews<double> sv;
  sv.a = random_map<double>(8, 8, rng);
  sv.b = sv.a;
  sv.sup = Vec<double>::Zero(6);
  nn::LossParts parts = nn::hybrid_forward(
      st, std::vector<nn::SampleViews<double>>{sv}, {1.0, 0.0});
  CHECK(std::abs(parts.l_ss) <= 1e-9);
  CHECK(std::abs(parts.l_hybrid) <= 1e-9);
}

TEST_CASE("analytic gradients match central finite differences") {
  auto st = tiny_model(17);
  Rng rng(47);
  auto batch = random_batch(2, 8, 8, 6, rng);
  const nn::HybridLossConfig loss{1.0, 1.0};

  nn::Online<double> grads = nn::zeros_like(st.online);
  nn::hybrid_backward(st, batch, loss, grads);

  auto params = nn::param_refs(st.online);
  auto grad_refs = nn::param_refs(grads);
  REQUIRE(params.size() == grad_refs.size());

  Rng pick(49);
  int checked = 0;
  double worst = 0.0;
  while (checked < 120) {
    const std::size_t pi = pick.index(params.size());
    const Eigen::Index j =
        static_cast<Eigen::Index>(pick.index(static_cast<std::size_t>(params[pi].size())));
    double* theta = params[pi].data + j;
    const double saved = *theta;
    const double h = 1e-5 * std::max(1.0, std::abs(saved));
    *theta = saved + h;
    const double up = nn::hybrid_forward(st, batch, loss).l_hybrid;
    *theta = saved - h;
    const double down = nn::hybrid_forward(st, batch, loss).l_hybrid;
    *theta = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad_refs[pi].data[j];
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    worst = std::max(worst, rel);
    CHECK(rel < 1e-4);
    ++checked;
  }
  INFO("worst relative error ", worst);
}

TEST_CASE("encoder validates shapes") {
  nn::EncoderConfig bad;
  bad.conv_channels = {8, 8, 8, 8};
  bad.mel_bins = 8;  // pools to 0 after 4 halvings
  CHECK_THROWS_AS(nn::validate_encoder_config(bad), ConfigError);

  auto st = tiny_model();
  Rng rng(51);
  auto narrow = random_map<double>(8, 6, rng);  // wrong mel axis
  CHECK_THROWS_AS(nn::forward_online(st.online, narrow), DataError);
  auto short_t = random_map<double>(2, 8, rng);  // pools to 0 frames
  CHECK_THROWS_AS(nn::forward_online(st.online, short_t), DataError);
}

TEST_CASE("predictor hidden size must fit the identity construction") {
  nn::EncoderConfig enc;
  enc.conv_channels = {4};
  enc.embed_dim = 8;
  enc.mel_bins = 8;
  nn::HeadConfig heads;
  heads.proj_hidden = 8;
  heads.pred_hidden = 8;  // < 2 * d_sup
  heads.d_sup = 6;
  CHECK_THROWS_AS(nn::init_model<double>(enc, heads, 0), ConfigError);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  testutil::TempDir dir("ckpt");
  nn::EncoderConfig enc;
  enc.conv_channels = {4, 6};
  enc.embed_dim = 8;
  enc.mel_bins = 8;
  nn::HeadConfig heads;
  heads.proj_hidden = 16;
  heads.pred_hidden = 16;
  heads.d_sup = 6;
  auto st = nn::init_model<float>(enc, heads, 123);
  nn::AdamState<float> adam = nn::make_adam(st.online);
  adam.t = 7;
  adam.m[0][0] = 0.25f;
  adam.v[0][0] = 0.5f;

  CheckpointMeta meta;
  meta.encoder = enc;
  meta.heads = heads;
  meta.seed = 123;
  meta.steps_done = 7;
  meta.norm = {1.25, 2.5};
  const std::string path = dir.file("model.ckpt");
  save_checkpoint(path, st, &adam, meta);

  Checkpoint ck = load_checkpoint(path);
  CHECK(ck.has_adam);
  CHECK(ck.adam.t == 7);
  CHECK(ck.adam.m[0][0] == 0.25f);
  CHECK(ck.meta.norm.mean == 1.25);
  CHECK(ck.meta.steps_done == 7);

  auto a = nn::param_refs(st);
  auto b = nn::param_refs(ck.state);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    for (Eigen::Index j = 0; j < a[i].size(); ++j)
      CHECK(a[i].data[j] == b[i].data[j]);
  }

  // Forward on a fixed input is bit-identical after the round trip.
  Rng rng(53);
  auto x = random_map<float>(8, 8, rng);
  auto o1 = nn::forward_online(st.online, x);
  auto o2 = nn::forward_online(ck.state.online, x);
  CHECK(o1.prediction == o2.prediction);

  // Saving the loaded state reproduces the file bytes.
  const std::string again = dir.file("model2.ckpt");
  save_checkpoint(again, ck.state, &ck.adam, ck.meta);
  CHECK(read_file(path) == read_file(again));
}

TEST_CASE("checkpoint loader rejects malformed containers") {
  testutil::TempDir dir("ckptbad");
  atomic_write_file(dir.file("bad.ckpt"), "NOTACKPT----");
  CHECK_THROWS_AS(load_checkpoint(dir.file("bad.ckpt")), FormatError);
}
