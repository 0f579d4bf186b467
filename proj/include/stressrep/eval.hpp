// stressrep/eval.hpp

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

// Downstream protocol: speaker-independent gender-balanced 70/30 split,
// per-partition standardization, linear SVM with the penalty chosen by
// speaker-stratified five-fold cross-validation over the decade grid
// 1e-5..1e5, unweighted average recall on the held-out speakers.

#ifndef STRESSREP_EVAL_HPP_
#define STRESSREP_EVAL_HPP_

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "stressrep/common.hpp"

namespace stressrep {

inline constexpr const char* kLabelLoad = "load";
inline constexpr const char* kLabelNoLoad = "no_load";

struct ManifestRecord {
  std::string utterance_id;
  std::string path;  // relative to the manifest's directory
  std::string speaker;
  std::string gender;
  std::string label;
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::string base_dir;

  std::string resolve_path(const ManifestRecord& r) const {
    return join_path(base_dir, r.path);
  }
};

// CSV with header utterance_id,path,speaker,gender,label.
Manifest load_manifest(const std::string& path, bool check_files = true);
void write_manifest(const std::string& path, const Manifest& m);

// Unique ids, >= 2 speakers, both classes present.
void validate_for_eval(const Manifest& m);

struct SplitAssignment {
  std::vector<std::string> train_speakers;
  std::vector<std::string> test_speakers;
  std::uint64_t seed = 0;
};

// Randomized greedy assignment over speakers: targets `ratio` of the
// utterances in train, then picks the candidate with the smallest gap
// between train and test gender proportions. Deterministic given seed.
SplitAssignment split_speaker_independent(const Manifest& m, double ratio,
                                          std::uint64_t seed);

enum class StandardizeMode {
  kPerPartition,  // each partition standardized with its own statistics
  kTrainFit,      // test reuses the train statistics
};

std::string to_string(StandardizeMode mode);
StandardizeMode standardize_mode_from_string(const std::string& s);

// Zero-variance dimensions are clamped at 1e-8 and counted in *clamped.
void standardize_partitions(Eigen::MatrixXd& train, Eigen::MatrixXd& test,
                            StandardizeMode mode, int* clamped = nullptr);

struct SvmModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double c = 0.0;
};

// L2-regularized L1-hinge linear SVM by dual coordinate descent, with
// inverse-frequency class weights; stops at relative duality gap 1e-4 or the
// iteration cap. y entries are +1/-1.
SvmModel train_svm(const Eigen::MatrixXd& x, const std::vector<int>& y, double c);

double svm_primal_objective(const Eigen::MatrixXd& x, const std::vector<int>& y,
                            double c, const SvmModel& model);
std::vector<int> svm_predict(const SvmModel& model, const Eigen::MatrixXd& x);

// The 11 decade values 1e-5 .. 1e5.
const std::vector<double>& penalty_grid();

struct CvResult {
  double best_c = 0.0;
  std::vector<double> fold_uars;  // per fold, at the selected C
};

// Speakers shuffled by seed, then greedily placed on the smallest fold.
// Every utterance of a speaker lands in that speaker's fold.
std::map<std::string, int> assign_speaker_folds(
    const std::vector<std::string>& speakers_per_row, int folds,
    std::uint64_t seed);

// Speaker-stratified folds inside the training partition; the best C
// maximizes mean fold UAR, ties go to the smallest C.
CvResult select_c(const Eigen::MatrixXd& x, const std::vector<int>& y,
                  const std::vector<std::string>& speakers,
                  const std::vector<double>& grid, int folds,
                  std::uint64_t seed);

// Unweighted average recall over the classes present in y_true.
double uar(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct EvalConfig {
  double ratio = 0.7;
  int folds = 5;
  StandardizeMode mode = StandardizeMode::kPerPartition;
  std::uint64_t seed = 0;
  std::vector<double> grid = penalty_grid();
};

struct EvalReport {
  double test_uar = 0.0;
  double recall_load = 0.0;
  double recall_no_load = 0.0;
  // rows: true class (load, no_load); cols: predicted class
  long long confusion[2][2] = {{0, 0}, {0, 0}};
  double selected_c = 0.0;
  std::vector<double> fold_uars;
  std::uint64_t seed = 0;
  std::string standardization;
  std::string cv_metric = "uar";  // model-selection metric (folds speaker-stratified)
  int n_train = 0, n_test = 0;
  int feature_dim = 0;
  std::vector<std::string> train_speakers, test_speakers;
  std::string source;  // feature/embedding file the run scored
};

// features: one row per id, aligned with `ids`. Utterances are processed in
// utterance_id order internally, so input order never changes the report.
EvalReport evaluate(const std::vector<std::string>& ids,
                    const Eigen::MatrixXd& features, const Manifest& m,
                    const EvalConfig& cfg);

std::string report_to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& text);
void write_report(const std::string& path, const EvalReport& r);
EvalReport read_report(const std::string& path);

// Human-readable summary of one report.
std::string report_summary(const EvalReport& r);

// Comparison table over named reports, sorted by UAR descending, ties by
// name. Returns {text table, csv}.
std::pair<std::string, std::string> report_table(
    const std::vector<std::pair<std::string, EvalReport>>& reports);

}  // namespace stressrep

#endif  // STRESSREP_EVAL_HPP_
