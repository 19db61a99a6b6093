// Copyright 2026 The sedgl Authors
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

// Checkpoint container: "SGCK", u32 version, u64 header length, a JSON
// header (model config, vocabulary, feature fingerprint, tensor table) and
// the float32 payload of every tensor listed in the table, in order.

#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedgl/corpus.hpp"
#include "sedgl/features.hpp"
#include "sedgl/model.hpp"

namespace sedgl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline nlohmann::json to_json(const EncoderConfig& e) {
  return {{"variant", std::string(to_string(e.variant))},
          {"input_frames", e.input_frames},
          {"n_mels", e.n_mels},
          {"channels", e.channels},
          {"kernels", e.kernels},
          {"time_pool", e.time_pool},
          {"freq_pool", e.freq_pool}};
}

inline EncoderConfig encoder_from_json(const nlohmann::json& j) {
  EncoderConfig e;
  e.variant = j.at("variant").get<std::string>() == "PT" ? Variant::kPT : Variant::kPS;
  e.input_frames = j.at("input_frames").get<int>();
  e.n_mels = j.at("n_mels").get<int>();
  e.channels = j.at("channels").get<std::vector<int>>();
  e.kernels = j.at("kernels").get<std::vector<int>>();
  e.time_pool = j.at("time_pool").get<std::vector<int>>();
  e.freq_pool = j.at("freq_pool").get<std::vector<int>>();
  return e;
}

inline nlohmann::json to_json(const ModelConfig& m) {
  return {{"encoder", to_json(m.encoder)},
          {"num_classes", m.num_classes},
          {"df", {{"d", m.df.d}, {"f", m.df.f}, {"k", m.df.k}}}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.encoder = encoder_from_json(j.at("encoder"));
  m.num_classes = j.at("num_classes").get<int>();
  m.df.d = j.at("df").at("d").get<int>();
  m.df.f = j.at("df").at("f").get<std::vector<double>>();
  m.df.k = j.at("df").at("k").get<std::vector<int>>();
  return m;
}

struct LoadedModel {
  Model model;
  EventVocabulary vocab;
  std::uint64_t feature_fingerprint = 0;
  nlohmann::json info;
};

namespace detail {

template <typename T>
void collect_tensors(SedModel<T>& m, std::vector<std::pair<std::string, std::span<T>>>& out) {
  for (auto& p : m.params()) out.emplace_back(p.name, p.value);
  for (auto& b : m.buffers()) out.emplace_back(b.name, b.value);
}

}  // namespace detail

inline std::string encode_checkpoint(Model& model, const EventVocabulary& vocab,
                                     std::uint64_t feature_fingerprint,
                                     const nlohmann::json& info = nlohmann::json::object()) {
  std::vector<std::pair<std::string, std::span<float>>> tensors;
  detail::collect_tensors(model, tensors);
  nlohmann::json header;
  header["model"] = to_json(model.config());
  header["classes"] = vocab.classes();
  header["vocab_fingerprint"] = vocab.fingerprint();
  header["feature_fingerprint"] = feature_fingerprint;
  header["info"] = info;
  auto& table = header["tensors"] = nlohmann::json::array();
  for (const auto& [name, span] : tensors) table.push_back({{"name", name}, {"size", span.size()}});
  const std::string h = header.dump();
  std::string out = "SGCK";
  detail::append_raw<std::uint32_t>(out, kCheckpointVersion);
  detail::append_raw<std::uint64_t>(out, h.size());
  out += h;
  for (const auto& [name, span] : tensors)
    out.append(reinterpret_cast<const char*>(span.data()), span.size() * sizeof(float));
  return out;
}

inline LoadedModel decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "SGCK") != 0) throw ParseError("not a checkpoint");
  if (detail::read_u32(bytes, 4) != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version");
  std::uint64_t hlen;
  std::memcpy(&hlen, bytes.data() + 8, 8);
  if (16 + hlen > bytes.size()) throw ParseError("truncated checkpoint header");
  const auto header = nlohmann::json::parse(bytes.substr(16, hlen));
  LoadedModel out;
  out.vocab = EventVocabulary(header.at("classes").get<std::vector<std::string>>());
  if (out.vocab.fingerprint() != header.at("vocab_fingerprint").get<std::uint64_t>())
    throw ValidationError("checkpoint vocabulary fingerprint mismatch");
  out.feature_fingerprint = header.at("feature_fingerprint").get<std::uint64_t>();
  out.info = header.value("info", nlohmann::json::object());
  out.model = Model(model_config_from_json(header.at("model")));
  std::vector<std::pair<std::string, std::span<float>>> tensors;
  detail::collect_tensors(out.model, tensors);
  const auto& table = header.at("tensors");
  if (table.size() != tensors.size()) throw ParseError("checkpoint tensor table mismatch");
  std::size_t pos = 16 + hlen;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& [name, span] = tensors[i];
    if (table[i].at("name").get<std::string>() != name ||
        table[i].at("size").get<std::size_t>() != span.size())
      throw ParseError("checkpoint tensor '" + name + "' does not match the model");
    const std::size_t nbytes = span.size() * sizeof(float);
    if (pos + nbytes > bytes.size()) throw ParseError("truncated checkpoint payload");
    std::memcpy(span.data(), bytes.data() + pos, nbytes);
    pos += nbytes;
  }
  if (pos != bytes.size()) throw ParseError("trailing bytes in checkpoint");
  return out;
}

inline void save_checkpoint(const std::string& path, Model& model, const EventVocabulary& vocab,
                            std::uint64_t feature_fingerprint,
                            const nlohmann::json& info = nlohmann::json::object()) {
  detail::write_file(path, encode_checkpoint(model, vocab, feature_fingerprint, info));
}

inline LoadedModel load_checkpoint(const std::string& path) {
  return decode_checkpoint(detail::read_file(path));
}

/// Throws unless the checkpoint was trained for this vocabulary and front end.
inline void check_compatible(const LoadedModel& m, const EventVocabulary& vocab,
                             const FeatureConfig& features) {
  if (m.vocab.fingerprint() != vocab.fingerprint())
    throw ValidationError("checkpoint vocabulary does not match the configured classes");
  if (m.feature_fingerprint != features.fingerprint())
    throw ValidationError("checkpoint feature configuration does not match");
}

}  // namespace sedgl
