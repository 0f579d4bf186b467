// stressrep/eval.cc

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

#include "stressrep/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace stressrep {

namespace {

using Json = nlohmann::ordered_json;

// Gender balance score: total-variation distance between the train and test
// utterance-level gender distributions.
double gender_gap(const std::map<std::string, double>& train,
                  const std::map<std::string, double>& test) {
  std::set<std::string> keys;
  for (const auto& [k, v] : train) keys.insert(k);
  for (const auto& [k, v] : test) keys.insert(k);
  double gap = 0.0;
  for (const auto& k : keys) {
    const double a = train.count(k) ? train.at(k) : 0.0;
    const double b = test.count(k) ? test.at(k) : 0.0;
    gap += std::abs(a - b);
  }
  return 0.5 * gap;
}

int label_to_sign(const std::string& label) {
  if (label == kLabelLoad) return +1;
  if (label == kLabelNoLoad) return -1;
  throw DataError("unknown class label: " + label);
}

}  // namespace

Manifest load_manifest(const std::string& path, bool check_files) {
  std::istringstream in(read_file(path));
  Manifest m;
  m.base_dir = dir_name(path);
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("manifest is empty: " + path);
  auto header = split_csv_line(line);
  const std::vector<std::string> expect = {"utterance_id", "path", "speaker",
                                           "gender", "label"};
  if (header.size() < expect.size() ||
      !std::equal(expect.begin(), expect.end(), header.begin()))
    throw FormatError("manifest header must start with "
                      "utterance_id,path,speaker,gender,label: " +
                      path);
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() < 5)
      throw FormatError("manifest row with fewer than 5 cells: " + path);
    ManifestRecord r{cells[0], cells[1], cells[2], cells[3], cells[4]};
    if (!seen.insert(r.utterance_id).second)
      throw FormatError("duplicate utterance_id in manifest: " + r.utterance_id);
    if (check_files && !file_exists(m.resolve_path(r)))
      throw DataError("manifest references missing file: " + m.resolve_path(r));
    m.records.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const std::string& path, const Manifest& m) {
  std::ostringstream out;
  out << "utterance_id,path,speaker,gender,label\n";
  for (const auto& r : m.records)
    out << r.utterance_id << "," << r.path << "," << r.speaker << ","
        << r.gender << "," << r.label << "\n";
  atomic_write_file(path, out.str());
}

void validate_for_eval(const Manifest& m) {
  if (m.records.empty()) throw DataError("manifest has no records");
  std::set<std::string> ids, speakers, labels;
  for (const auto& r : m.records) {
    if (!ids.insert(r.utterance_id).second)
      throw DataError("duplicate utterance_id: " + r.utterance_id);
    speakers.insert(r.speaker);
    labels.insert(r.label);
  }
  if (speakers.size() < 2)
    throw DataError("evaluation needs at least 2 speakers");
  if (!labels.count(kLabelLoad) || !labels.count(kLabelNoLoad))
    throw DataError("evaluation needs both classes present");
}

SplitAssignment split_speaker_independent(const Manifest& m, double ratio,
                                          std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw ConfigError("split: ratio must be in (0, 1)");

  // Canonical speaker order, so record order never affects the result.
  std::map<std::string, long long> utt_count;
  std::map<std::string, std::map<std::string, long long>> gender_count;
  for (const auto& r : m.records) {
    utt_count[r.speaker] += 1;
    gender_count[r.speaker][r.gender] += 1;
  }
  if (utt_count.size() < 4)
    throw DataError("split: need at least 4 speakers, have " +
                    std::to_string(utt_count.size()));
  std::vector<std::string> speakers;
  long long total = 0;
  for (const auto& [s, c] : utt_count) {
    speakers.push_back(s);
    total += c;
  }
  const double target = ratio * static_cast<double>(total);

  constexpr int kCandidates = 256;
  double best_dev = 1e300, best_gap = 1e300;
  std::vector<std::string> best_train, best_test;

  struct Candidate {
    double dev, gap;
    std::vector<std::string> train, test;
  };
  std::vector<Candidate> cands;
  cands.reserve(kCandidates);

  for (int c = 0; c < kCandidates; ++c) {
    Rng rng(derive_seed(seed, "split", static_cast<std::uint64_t>(c)));
    std::vector<std::string> perm = speakers;
    rng.shuffle(perm);

    std::vector<std::string> train, test;
    long long count = 0;
    for (const auto& s : perm) {
      const long long with = count + utt_count[s];
      const bool take = std::abs(static_cast<double>(with) - target) <=
                        std::abs(static_cast<double>(count) - target);
      if (take && count < static_cast<long long>(target)) {
        train.push_back(s);
        count = with;
      } else {
        test.push_back(s);
      }
    }
    if (train.empty()) {
      train.push_back(test.back());
      test.pop_back();
    }
    if (test.empty()) {
      test.push_back(train.back());
      train.pop_back();
    }

    long long train_utts = 0;
    std::map<std::string, double> gtrain, gtest;
    double train_total = 0, test_total = 0;
    for (const auto& s : train) {
      train_utts += utt_count[s];
      for (const auto& [g, k] : gender_count[s]) {
        gtrain[g] += static_cast<double>(k);
        train_total += static_cast<double>(k);
      }
    }
    for (const auto& s : test)
      for (const auto& [g, k] : gender_count[s]) {
        gtest[g] += static_cast<double>(k);
        test_total += static_cast<double>(k);
      }
    for (auto& [g, v] : gtrain) v /= train_total;
    for (auto& [g, v] : gtest) v /= test_total;

    Candidate cand;
    cand.dev = std::abs(static_cast<double>(train_utts) / total - ratio);
    cand.gap = gender_gap(gtrain, gtest);
    cand.train = std::move(train);
    cand.test = std::move(test);
    best_dev = std::min(best_dev, cand.dev);
    cands.push_back(std::move(cand));
  }

  // Among candidates near the best utterance split, minimize the gender gap.
  for (auto& cand : cands) {
    if (cand.dev > best_dev + 0.02) continue;
    if (cand.gap < best_gap - 1e-12 ||
        (std::abs(cand.gap - best_gap) <= 1e-12 && cand.dev < best_dev)) {
      best_gap = cand.gap;
      best_train = cand.train;
      best_test = cand.test;
    }
  }
  SplitAssignment out;
  out.seed = seed;
  out.train_speakers = std::move(best_train);
  out.test_speakers = std::move(best_test);
  std::sort(out.train_speakers.begin(), out.train_speakers.end());
  std::sort(out.test_speakers.begin(), out.test_speakers.end());
  return out;
}

std::string to_string(StandardizeMode mode) {
  return mode == StandardizeMode::kPerPartition ? "per-partition" : "train-fit";
}

StandardizeMode standardize_mode_from_string(const std::string& s) {
  if (s == "per-partition") return StandardizeMode::kPerPartition;
  if (s == "train-fit") return StandardizeMode::kTrainFit;
  throw ConfigError("unknown standardization mode: " + s);
}

namespace {

void standardize_with(Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                      const Eigen::VectorXd& stddev) {
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    x.col(j) = (x.col(j).array() - mean(j)) / stddev(j);
}

void moments(const Eigen::MatrixXd& x, Eigen::VectorXd& mean,
             Eigen::VectorXd& stddev, int* clamped) {
  mean = x.colwise().mean();
  stddev.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean(j)).square().mean();
    double sd = std::sqrt(var);
    if (sd < 1e-8) {
      sd = 1e-8;
      if (clamped) ++*clamped;
    }
    stddev(j) = sd;
  }
}

}  // namespace

void standardize_partitions(Eigen::MatrixXd& train, Eigen::MatrixXd& test,
                            StandardizeMode mode, int* clamped) {
  if (train.rows() == 0 || test.rows() == 0)
    throw DataError("standardize_partitions: empty partition");
  if (train.cols() != test.cols())
    throw DataError("standardize_partitions: dimension mismatch");
  if (clamped) *clamped = 0;
  Eigen::VectorXd mean, stddev;
  moments(train, mean, stddev, clamped);
  standardize_with(train, mean, stddev);
  if (mode == StandardizeMode::kPerPartition) {
    moments(test, mean, stddev, clamped);
  }
  standardize_with(test, mean, stddev);
}

SvmModel train_svm(const Eigen::MatrixXd& x, const std::vector<int>& y,
                   double c) {
  if (c <= 0.0) throw ConfigError("train_svm: C must be positive");
  const auto n = static_cast<std::size_t>(x.rows());
  if (n != y.size()) throw DataError("train_svm: rows/labels mismatch");
  long long pos = 0, neg = 0;
  for (int v : y) (v > 0 ? pos : neg) += 1;
  if (pos == 0 || neg == 0)
    throw DataError("train_svm: both classes required in training data");

  // Inverse-frequency class weights pair the hinge with the UAR objective.
  const double w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(pos));
  const double w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(neg));

  const Eigen::Index d = x.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);  // last coord: bias
  std::vector<double> alpha(n, 0.0), qd(n), upper(n);
  for (std::size_t i = 0; i < n; ++i) {
    qd[i] = x.row(i).squaredNorm() + 1.0;
    upper[i] = c * (y[i] > 0 ? w_pos : w_neg);
  }

  constexpr int kMaxEpochs = 4000;
  constexpr double kGapTol = 1e-4;
  Rng rng(0x53564d5245503031ull);  // fixed solver stream
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < kMaxEpochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      const double yi = y[i];
      const double f = w.head(d).dot(x.row(i)) + w(d);
      const double grad = yi * f - 1.0;
      const double old = alpha[i];
      const double next = std::clamp(old - grad / qd[i], 0.0, upper[i]);
      if (next != old) {
        const double delta = (next - old) * yi;
        w.head(d) += delta * x.row(i).transpose();
        w(d) += delta;
      }
      alpha[i] = next;
    }
    // Duality gap check once per epoch.
    double primal = 0.5 * w.squaredNorm();
    double dual = -0.5 * w.squaredNorm();
    for (std::size_t i = 0; i < n; ++i) {
      const double f = w.head(d).dot(x.row(i)) + w(d);
      primal += upper[i] * std::max(0.0, 1.0 - y[i] * f);
      dual += alpha[i];
    }
    if (primal - dual <= kGapTol * std::max(1.0, primal)) break;
  }

  SvmModel model;
  model.weights = w.head(d);
  model.bias = w(d);
  model.c = c;
  return model;
}

double svm_primal_objective(const Eigen::MatrixXd& x, const std::vector<int>& y,
                            double c, const SvmModel& model) {
  const auto n = static_cast<std::size_t>(x.rows());
  long long pos = 0, neg = 0;
  for (int v : y) (v > 0 ? pos : neg) += 1;
  const double w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(pos));
  const double w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(neg));
  double obj =
      0.5 * (model.weights.squaredNorm() + model.bias * model.bias);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = model.weights.dot(x.row(i)) + model.bias;
    obj += c * (y[i] > 0 ? w_pos : w_neg) * std::max(0.0, 1.0 - y[i] * f);
  }
  return obj;
}

std::vector<int> svm_predict(const SvmModel& model, const Eigen::MatrixXd& x) {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out[static_cast<std::size_t>(i)] =
        model.weights.dot(x.row(i)) + model.bias >= 0.0 ? +1 : -1;
  return out;
}

const std::vector<double>& penalty_grid() {
  static const std::vector<double> grid = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0,
                                           1e1,  1e2,  1e3,  1e4,  1e5};
  return grid;
}

double uar(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size())
    throw DataError("uar: length mismatch");
  if (y_true.empty()) throw DataError("uar: empty labels");
  std::map<int, long long> total, correct;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    total[y_true[i]] += 1;
    if (y_true[i] == y_pred[i]) correct[y_true[i]] += 1;
  }
  double sum = 0.0;
  for (const auto& [cls, t] : total)
    sum += static_cast<double>(correct[cls]) / static_cast<double>(t);
  return sum / static_cast<double>(total.size());
}

std::map<std::string, int> assign_speaker_folds(
    const std::vector<std::string>& speakers_per_row, int folds,
    std::uint64_t seed) {
  if (folds < 2) throw ConfigError("folds: need at least 2");
  std::map<std::string, long long> utt_count;
  for (const auto& s : speakers_per_row) utt_count[s] += 1;
  std::vector<std::string> uniq;
  for (const auto& [s, cnt] : utt_count) uniq.push_back(s);
  if (static_cast<int>(uniq.size()) < folds)
    throw DataError("folds: fewer speakers than folds");
  Rng rng(derive_seed(seed, "folds"));
  rng.shuffle(uniq);
  std::map<std::string, int> fold_of;
  std::vector<long long> fold_size(folds, 0);
  for (const auto& s : uniq) {
    int best = 0;
    for (int f = 1; f < folds; ++f)
      if (fold_size[f] < fold_size[best]) best = f;
    fold_of[s] = best;
    fold_size[best] += utt_count[s];
  }
  return fold_of;
}

CvResult select_c(const Eigen::MatrixXd& x, const std::vector<int>& y,
                  const std::vector<std::string>& speakers,
                  const std::vector<double>& grid, int folds,
                  std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("select_c: empty grid");
  if (folds < 2) throw ConfigError("select_c: need at least 2 folds");
  const auto n = static_cast<std::size_t>(x.rows());
  if (n != y.size() || n != speakers.size())
    throw DataError("select_c: rows/labels/speakers mismatch");
  if (grid.size() == 1) return {grid[0], {}};

  long long pos = 0, neg = 0;
  for (int v : y) (v > 0 ? pos : neg) += 1;
  if (pos < folds || neg < folds)
    throw DataError("select_c: need at least `folds` samples per class");

  const std::map<std::string, int> fold_of =
      assign_speaker_folds(speakers, folds, seed);

  struct Cell {
    double c;
    int fold;
  };
  std::vector<Cell> cells;
  for (double c : grid)
    for (int f = 0; f < folds; ++f) cells.push_back({c, f});
  std::vector<double> cell_uar(cells.size(), 0.0);

  parallel_for(cells.size(), [&](std::size_t k) {
    const auto& cell = cells[k];
    std::vector<Eigen::Index> tr, va;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of.at(speakers[i]) == cell.fold)
        va.push_back(static_cast<Eigen::Index>(i));
      else
        tr.push_back(static_cast<Eigen::Index>(i));
    }
    if (tr.empty() || va.empty()) {
      cell_uar[k] = 0.0;
      return;
    }
    Eigen::MatrixXd xtr(tr.size(), x.cols()), xva(va.size(), x.cols());
    std::vector<int> ytr(tr.size()), yva(va.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
      xtr.row(static_cast<Eigen::Index>(i)) = x.row(tr[i]);
      ytr[i] = y[static_cast<std::size_t>(tr[i])];
    }
    for (std::size_t i = 0; i < va.size(); ++i) {
      xva.row(static_cast<Eigen::Index>(i)) = x.row(va[i]);
      yva[i] = y[static_cast<std::size_t>(va[i])];
    }
    bool both = false;
    {
      long long p = 0, q = 0;
      for (int v : ytr) (v > 0 ? p : q) += 1;
      both = p > 0 && q > 0;
    }
    if (!both) {
      cell_uar[k] = 0.0;
      return;
    }
    SvmModel model = train_svm(xtr, ytr, cell.c);
    cell_uar[k] = uar(yva, svm_predict(model, xva));
  });

  CvResult best;
  double best_mean = -1.0;
  for (std::size_t ci = 0; ci < grid.size(); ++ci) {
    std::vector<double> fold_uars(folds);
    double mean = 0.0;
    for (int f = 0; f < folds; ++f) {
      fold_uars[f] = cell_uar[ci * folds + f];
      mean += fold_uars[f];
    }
    mean /= folds;
    if (mean > best_mean + 1e-12) {  // ties keep the earlier (smaller) C
      best_mean = mean;
      best.best_c = grid[ci];
      best.fold_uars = std::move(fold_uars);
    }
  }
  return best;
}

EvalReport evaluate(const std::vector<std::string>& ids,
                    const Eigen::MatrixXd& features, const Manifest& m,
                    const EvalConfig& cfg) {
  validate_for_eval(m);
  if (ids.size() != static_cast<std::size_t>(features.rows()))
    throw DataError("evaluate: ids/features mismatch");
  std::map<std::string, Eigen::Index> row_of;
  for (std::size_t i = 0; i < ids.size(); ++i)
    row_of[ids[i]] = static_cast<Eigen::Index>(i);

  // Canonical utterance order.
  std::vector<const ManifestRecord*> recs;
  for (const auto& r : m.records) {
    if (!row_of.count(r.utterance_id))
      throw DataError("evaluate: no features for utterance " + r.utterance_id);
    recs.push_back(&r);
  }
  std::sort(recs.begin(), recs.end(),
            [](const ManifestRecord* a, const ManifestRecord* b) {
              return a->utterance_id < b->utterance_id;
            });

  SplitAssignment split = split_speaker_independent(m, cfg.ratio, cfg.seed);
  std::set<std::string> train_set(split.train_speakers.begin(),
                                  split.train_speakers.end());

  std::vector<const ManifestRecord*> train_recs, test_recs;
  for (const auto* r : recs)
    (train_set.count(r->speaker) ? train_recs : test_recs).push_back(r);
  if (train_recs.empty() || test_recs.empty())
    throw DataError("evaluate: a partition ended up empty");

  auto gather = [&](const std::vector<const ManifestRecord*>& rs,
                    Eigen::MatrixXd& xm, std::vector<int>& ym,
                    std::vector<std::string>& sp) {
    xm.resize(static_cast<Eigen::Index>(rs.size()), features.cols());
    ym.resize(rs.size());
    sp.resize(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
      xm.row(static_cast<Eigen::Index>(i)) = features.row(row_of[rs[i]->utterance_id]);
      ym[i] = label_to_sign(rs[i]->label);
      sp[i] = rs[i]->speaker;
    }
  };
  Eigen::MatrixXd xtr, xte;
  std::vector<int> ytr, yte;
  std::vector<std::string> str, ste;
  gather(train_recs, xtr, ytr, str);
  gather(test_recs, xte, yte, ste);

  standardize_partitions(xtr, xte, cfg.mode);

  CvResult cv = select_c(xtr, ytr, str, cfg.grid, cfg.folds, cfg.seed);
  SvmModel model = train_svm(xtr, ytr, cv.best_c);
  std::vector<int> pred = svm_predict(model, xte);

  EvalReport rep;
  rep.test_uar = uar(yte, pred);
  for (std::size_t i = 0; i < yte.size(); ++i) {
    const int row = yte[i] > 0 ? 0 : 1;
    const int col = pred[i] > 0 ? 0 : 1;
    rep.confusion[row][col] += 1;
  }
  const auto load_total = rep.confusion[0][0] + rep.confusion[0][1];
  const auto noload_total = rep.confusion[1][0] + rep.confusion[1][1];
  rep.recall_load =
      load_total > 0
          ? static_cast<double>(rep.confusion[0][0]) / static_cast<double>(load_total)
          : 0.0;
  rep.recall_no_load = noload_total > 0
                           ? static_cast<double>(rep.confusion[1][1]) /
                                 static_cast<double>(noload_total)
                           : 0.0;
  rep.selected_c = cv.best_c;
  rep.fold_uars = cv.fold_uars;
  rep.seed = cfg.seed;
  rep.standardization = to_string(cfg.mode);
  rep.n_train = static_cast<int>(train_recs.size());
  rep.n_test = static_cast<int>(test_recs.size());
  rep.feature_dim = static_cast<int>(features.cols());
  rep.train_speakers = split.train_speakers;
  rep.test_speakers = split.test_speakers;
  return rep;
}

std::string report_to_json(const EvalReport& r) {
  Json j;
  j["test_uar"] = r.test_uar;
  j["recalls"] = {{"load", r.recall_load}, {"no_load", r.recall_no_load}};
  j["confusion"] = {{r.confusion[0][0], r.confusion[0][1]},
                    {r.confusion[1][0], r.confusion[1][1]}};
  j["selected_c"] = r.selected_c;
  j["fold_uars"] = r.fold_uars;
  j["seed"] = r.seed;
  j["standardization"] = r.standardization;
  j["cv_metric"] = r.cv_metric;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["feature_dim"] = r.feature_dim;
  j["train_speakers"] = r.train_speakers;
  j["test_speakers"] = r.test_speakers;
  j["source"] = r.source;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw FormatError(std::string("report: bad json: ") + e.what());
  }
  EvalReport r;
  r.test_uar = j.at("test_uar").get<double>();
  r.recall_load = j.at("recalls").at("load").get<double>();
  r.recall_no_load = j.at("recalls").at("no_load").get<double>();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      r.confusion[a][b] = j.at("confusion").at(a).at(b).get<long long>();
  r.selected_c = j.at("selected_c").get<double>();
  r.fold_uars = j.at("fold_uars").get<std::vector<double>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.standardization = j.at("standardization").get<std::string>();
  r.cv_metric = j.at("cv_metric").get<std::string>();
  r.n_train = j.at("n_train").get<int>();
  r.n_test = j.at("n_test").get<int>();
  r.feature_dim = j.at("feature_dim").get<int>();
  r.train_speakers = j.at("train_speakers").get<std::vector<std::string>>();
  r.test_speakers = j.at("test_speakers").get<std::vector<std::string>>();
  r.source = j.at("source").get<std::string>();
  return r;
}

void write_report(const std::string& path, const EvalReport& r) {
  atomic_write_file(path, report_to_json(r));
}

EvalReport read_report(const std::string& path) {
  return report_from_json(read_file(path));
}

std::string report_summary(const EvalReport& r) {
  std::ostringstream out;
  out << "test UAR        " << format_g(r.test_uar, 6) << "\n"
      << "recall load     " << format_g(r.recall_load, 6) << "\n"
      << "recall no_load  " << format_g(r.recall_no_load, 6) << "\n"
      << "confusion       [[" << r.confusion[0][0] << "," << r.confusion[0][1]
      << "],[" << r.confusion[1][0] << "," << r.confusion[1][1] << "]]\n"
      << "selected C      " << format_g(r.selected_c, 6) << "\n"
      << "train/test      " << r.n_train << "/" << r.n_test << " utterances, "
      << r.train_speakers.size() << "/" << r.test_speakers.size()
      << " speakers\n"
      << "standardization " << r.standardization << "\n";
  return out.str();
}

std::pair<std::string, std::string> report_table(
    const std::vector<std::pair<std::string, EvalReport>>& reports) {
  auto sorted = reports;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second.test_uar != b.second.test_uar)
      return a.second.test_uar > b.second.test_uar;
    return a.first < b.first;
  });
  std::ostringstream text, csv;
  std::size_t name_w = 4;
  for (const auto& [name, r] : sorted) name_w = std::max(name_w, name.size());
  text << std::string(name_w, ' ') << "  UAR     C        dim\n";
  csv << "name,uar,recall_load,recall_no_load,selected_c,feature_dim\n";
  for (const auto& [name, r] : sorted) {
    text << name << std::string(name_w - name.size(), ' ') << "  "
         << format_g(r.test_uar, 4) << "  " << format_g(r.selected_c, 4)
         << "  " << r.feature_dim << "\n";
    csv << name << "," << format_g(r.test_uar, 12) << ","
        << format_g(r.recall_load, 12) << "," << format_g(r.recall_no_load, 12)
        << "," << format_g(r.selected_c, 12) << "," << r.feature_dim << "\n";
  }
  return {text.str(), csv.str()};
}

}  // namespace stressrep
