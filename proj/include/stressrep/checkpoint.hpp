// stressrep/checkpoint.hpp

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

#ifndef STRESSREP_CHECKPOINT_HPP_
#define STRESSREP_CHECKPOINT_HPP_

#include <string>

#include "stressrep/augment.hpp"
#include "stressrep/nn.hpp"

namespace stressrep {

// Everything needed to reuse or resume a checkpoint: model/head/frontend
// configuration, the corpus pre-normalization scalars, and the training
// position. Serialized as a JSON echo inside the checkpoint container.
struct CheckpointMeta {
  std::string schema_id = "CPS-115";
  nn::EncoderConfig encoder;
  nn::HeadConfig heads;
  FrontendConfig frontend;
  NormStats norm;
  AugmentConfig aug;
  double alpha_ss = 1.0, alpha_sup = 1.0;
  double tau = 0.99;
  double lr = 1e-3;
  int batch_size = 16;
  double crop_seconds = 1.0;
  std::uint64_t seed = 0;
  long long steps_done = 0;
};

struct Checkpoint {
  nn::ModelState<float> state;
  nn::AdamState<float> adam;
  bool has_adam = false;
  CheckpointMeta meta;
};

// Little-endian container: magic "SREPCKP1", u32 format version, the JSON
// meta echo, then (name, dims, float32 data) records for every parameter
// tensor (and the Adam moments when present). Round-trips bit-exactly.
void save_checkpoint(const std::string& path, nn::ModelState<float>& state,
                     nn::AdamState<float>* adam, const CheckpointMeta& meta);

Checkpoint load_checkpoint(const std::string& path);

// FNV-1a of the checkpoint bytes, as hex; used to stamp embedding files.
std::string checkpoint_id(const std::string& path);

}  // namespace stressrep

#endif  // STRESSREP_CHECKPOINT_HPP_
