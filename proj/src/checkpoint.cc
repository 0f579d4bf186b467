// stressrep/checkpoint.cc

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

#include "stressrep/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "json.hpp"

namespace stressrep {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'R', 'E', 'P', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

using Json = nlohmann::ordered_json;

void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}

void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), 8);
}

struct Reader {
  const unsigned char* p;
  std::size_t n, pos = 0;

  void need(std::size_t k) const {
    if (pos + k > n) throw FormatError("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, p + pos, 4);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, p + pos, 8);
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t k) {
    need(k);
    std::string s(reinterpret_cast<const char*>(p + pos), k);
    pos += k;
    return s;
  }
};

Json meta_to_json(const CheckpointMeta& m) {
  Json j;
  j["schema_id"] = m.schema_id;
  j["encoder"] = {{"conv_channels", m.encoder.conv_channels},
                  {"embed_dim", m.encoder.embed_dim},
                  {"mel_bins", m.encoder.mel_bins}};
  j["heads"] = {{"proj_hidden", m.heads.proj_hidden},
                {"pred_hidden", m.heads.pred_hidden},
                {"d_sup", m.heads.d_sup}};
  j["frontend"] = {{"sample_rate", m.frontend.sample_rate},
                   {"frame_len", m.frontend.frame_len},
                   {"hop", m.frontend.hop},
                   {"mel_bins", m.frontend.mel_bins},
                   {"fmin", m.frontend.fmin},
                   {"fmax", m.frontend.fmax},
                   {"floor_eps", m.frontend.floor_eps}};
  j["norm"] = {{"mean", m.norm.mean}, {"stddev", m.norm.stddev}};
  j["aug"] = {{"mixup", m.aug.mixup},
              {"mixup_alpha", m.aug.mixup_alpha},
              {"memory_capacity", m.aug.memory_capacity},
              {"rrc", m.aug.rrc},
              {"rrc_pad", m.aug.rrc_pad},
              {"rrc_scale_min", m.aug.rrc_scale_min},
              {"rrc_scale_max", m.aug.rrc_scale_max}};
  j["train"] = {{"alpha_ss", m.alpha_ss},   {"alpha_sup", m.alpha_sup},
                {"tau", m.tau},             {"lr", m.lr},
                {"batch_size", m.batch_size}, {"crop_seconds", m.crop_seconds},
                {"seed", m.seed},           {"steps_done", m.steps_done}};
  return j;
}

CheckpointMeta meta_from_json(const Json& j) {
  CheckpointMeta m;
  m.schema_id = j.at("schema_id").get<std::string>();
  const auto& e = j.at("encoder");
  m.encoder.conv_channels = e.at("conv_channels").get<std::vector<int>>();
  m.encoder.embed_dim = e.at("embed_dim").get<int>();
  m.encoder.mel_bins = e.at("mel_bins").get<int>();
  const auto& h = j.at("heads");
  m.heads.proj_hidden = h.at("proj_hidden").get<int>();
  m.heads.pred_hidden = h.at("pred_hidden").get<int>();
  m.heads.d_sup = h.at("d_sup").get<int>();
  const auto& f = j.at("frontend");
  m.frontend.sample_rate = f.at("sample_rate").get<int>();
  m.frontend.frame_len = f.at("frame_len").get<int>();
  m.frontend.hop = f.at("hop").get<int>();
  m.frontend.mel_bins = f.at("mel_bins").get<int>();
  m.frontend.fmin = f.at("fmin").get<double>();
  m.frontend.fmax = f.at("fmax").get<double>();
  m.frontend.floor_eps = f.at("floor_eps").get<double>();
  const auto& n = j.at("norm");
  m.norm.mean = n.at("mean").get<double>();
  m.norm.stddev = n.at("stddev").get<double>();
  const auto& a = j.at("aug");
  m.aug.mixup = a.at("mixup").get<bool>();
  m.aug.mixup_alpha = a.at("mixup_alpha").get<double>();
  m.aug.memory_capacity = a.at("memory_capacity").get<std::size_t>();
  m.aug.rrc = a.at("rrc").get<bool>();
  m.aug.rrc_pad = a.at("rrc_pad").get<double>();
  m.aug.rrc_scale_min = a.at("rrc_scale_min").get<double>();
  m.aug.rrc_scale_max = a.at("rrc_scale_max").get<double>();
  const auto& t = j.at("train");
  m.alpha_ss = t.at("alpha_ss").get<double>();
  m.alpha_sup = t.at("alpha_sup").get<double>();
  m.tau = t.at("tau").get<double>();
  m.lr = t.at("lr").get<double>();
  m.batch_size = t.at("batch_size").get<int>();
  m.crop_seconds = t.at("crop_seconds").get<double>();
  m.seed = t.at("seed").get<std::uint64_t>();
  m.steps_done = t.at("steps_done").get<long long>();
  return m;
}

void append_tensor(std::string& out, const std::string& name, const float* data,
                   std::uint32_t rows, std::uint32_t cols) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  if (cols == 1) {
    put_u32(out, 1);
    put_u32(out, rows);
  } else {
    put_u32(out, 2);
    put_u32(out, rows);
    put_u32(out, cols);
  }
  out.append(reinterpret_cast<const char*>(data),
             static_cast<std::size_t>(rows) * cols * sizeof(float));
}

}  // namespace

void save_checkpoint(const std::string& path, nn::ModelState<float>& state,
                     nn::AdamState<float>* adam, const CheckpointMeta& meta) {
  std::string out;
  out.append(kMagic, 8);
  put_u32(out, kVersion);
  CheckpointMeta m = meta;
  if (adam) m.steps_done = std::max(m.steps_done, adam->t);
  std::string json = meta_to_json(m).dump();
  put_u64(out, json.size());
  out.append(json);

  auto refs = nn::param_refs(state);
  std::uint64_t count = refs.size();
  std::vector<nn::ParamRef<float>> online_refs;
  if (adam) {
    online_refs = nn::param_refs(state.online);
    count += 2 * online_refs.size();
  }
  put_u64(out, count);
  for (const auto& r : refs)
    append_tensor(out, r.name, r.data, static_cast<std::uint32_t>(r.rows),
                  static_cast<std::uint32_t>(r.cols));
  if (adam) {
    for (std::size_t i = 0; i < online_refs.size(); ++i) {
      append_tensor(out, "adam.m." + online_refs[i].name, adam->m[i].data(),
                    static_cast<std::uint32_t>(adam->m[i].size()), 1);
      append_tensor(out, "adam.v." + online_refs[i].name, adam->v[i].data(),
                    static_cast<std::uint32_t>(adam->v[i].size()), 1);
    }
  }
  atomic_write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string bytes = read_file(path);
  Reader r{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};
  if (r.bytes(8) != std::string(kMagic, 8))
    throw FormatError("checkpoint: bad magic in " + path);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("checkpoint: unsupported format version " +
                      std::to_string(version));
  const auto json_len = static_cast<std::size_t>(r.u64());
  Json j;
  try {
    j = Json::parse(r.bytes(json_len));
  } catch (const std::exception& e) {
    throw FormatError(std::string("checkpoint: bad meta json: ") + e.what());
  }

  Checkpoint ck;
  ck.meta = meta_from_json(j);
  ck.state = nn::init_model<float>(ck.meta.encoder, ck.meta.heads, 0);
  ck.adam = nn::make_adam(ck.state.online);
  ck.adam.t = ck.meta.steps_done;

  auto refs = nn::param_refs(ck.state);
  auto online_refs = nn::param_refs(ck.state.online);

  const auto n_tensors = static_cast<std::size_t>(r.u64());
  std::size_t filled = 0;
  for (std::size_t k = 0; k < n_tensors; ++k) {
    const auto name_len = static_cast<std::size_t>(r.u32());
    const std::string name = r.bytes(name_len);
    const std::uint32_t ndims = r.u32();
    if (ndims < 1 || ndims > 2)
      throw FormatError("checkpoint: bad tensor rank for " + name);
    std::uint64_t total = 1;
    std::uint32_t dims[2] = {1, 1};
    for (std::uint32_t d = 0; d < ndims; ++d) {
      dims[d] = r.u32();
      total *= dims[d];
    }
    const std::string data = r.bytes(static_cast<std::size_t>(total) * 4);

    float* dst = nullptr;
    std::uint64_t expect = 0;
    if (name.rfind("adam.m.", 0) == 0 || name.rfind("adam.v.", 0) == 0) {
      const bool is_m = name[5] == 'm';
      const std::string base = name.substr(7);
      for (std::size_t i = 0; i < online_refs.size(); ++i) {
        if (online_refs[i].name == base) {
          auto& vecs = is_m ? ck.adam.m : ck.adam.v;
          dst = vecs[i].data();
          expect = vecs[i].size();
          ck.has_adam = true;
          break;
        }
      }
    } else {
      for (const auto& ref : refs) {
        if (ref.name == name) {
          dst = ref.data;
          expect = static_cast<std::uint64_t>(ref.size());
          ++filled;
          break;
        }
      }
    }
    if (dst == nullptr)
      throw FormatError("checkpoint: unexpected tensor " + name);
    if (total != expect)
      throw FormatError("checkpoint: shape mismatch for " + name);
    std::memcpy(dst, data.data(), data.size());
  }
  if (filled != refs.size())
    throw FormatError("checkpoint: missing parameter tensors in " + path);
  return ck;
}

std::string checkpoint_id(const std::string& path) {
  const std::string bytes = read_file(path);
  return to_hex(fnv1a64(bytes.data(), bytes.size()));
}

}  // namespace stressrep
