// Copyright 2026 storymine authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "storymine/model.hpp"

namespace storymine {

// Binary model snapshot. Layout, all integers little-endian:
//   magic "SMCK", u32 format version
//   u64 length + UTF-8 bytes of the canonical config JSON
//   u64 FNV-1a fingerprint of that JSON
//   u64 vocabulary size, then per token: u64 length + bytes
//   u64 parameter count, then per parameter:
//     u64 name length + bytes, u32 rank, u32 per dimension,
//     u64 value count, IEEE-754 doubles as u64 bit patterns
// Round-trips are bit-exact; loading re-derives the fingerprint and refuses
// files whose config block does not hash to the stored value.

inline constexpr char kCheckpointMagic[4] = {'S', 'M', 'C', 'K'};
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<uint64_t>(v));
}

inline void put_bytes(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out.append(s);
}

class ByteReader {
 public:
  ByteReader(std::string data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(byte()) << (8 * i);
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(byte()) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string raw(uint64_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string bytes() { return raw(u64()); }

  bool exhausted() const { return pos_ == data_.size(); }
  const std::string& path() const { return path_; }

 private:
  uint8_t byte() { return static_cast<uint8_t>(data_[pos_++]); }

  void need(uint64_t n) {
    if (pos_ + n > data_.size())
      throw IoError(path_ + ": truncated checkpoint (wanted " +
                    std::to_string(n) + " bytes at offset " +
                    std::to_string(pos_) + " of " +
                    std::to_string(data_.size()) + ")");
  }

  std::string data_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace detail

inline void save_checkpoint(const std::string& path, JointModel& model) {
  std::string out;
  out.append(kCheckpointMagic, 4);
  detail::put_u32(out, kCheckpointVersion);
  const std::string config = model.config().to_json().dump();
  detail::put_bytes(out, config);
  detail::put_u64(out, model.config().fingerprint());
  const Vocabulary& vocab = model.vocab();
  detail::put_u64(out, static_cast<uint64_t>(vocab.size()));
  for (int i = 0; i < vocab.size(); ++i)
    detail::put_bytes(out, vocab.token(i));
  std::vector<Param*> params = model.params();
  detail::put_u64(out, params.size());
  for (const Param* p : params) {
    detail::put_bytes(out, p->name);
    detail::put_u32(out, static_cast<uint32_t>(p->shape.size()));
    for (int d : p->shape) detail::put_u32(out, static_cast<uint32_t>(d));
    detail::put_u64(out, p->value.size());
    for (double v : p->value) detail::put_f64(out, v);
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError(path + ": cannot open for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  file.flush();
  if (!file) throw IoError(path + ": write failed");
}

// Rebuilds the model a checkpoint describes. When `expected` is given, its
// fingerprint must match the stored config (same variant, same sizes).
inline JointModel load_checkpoint(const std::string& path,
                                  const ModelConfig* expected = nullptr) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError(path + ": cannot open");
  std::string data((std::istreambuf_iterator<char>(file)),
                   std::istreambuf_iterator<char>());
  detail::ByteReader in(std::move(data), path);

  if (in.raw(4) != std::string(kCheckpointMagic, 4))
    throw IoError(path + ": not a checkpoint file (bad magic)");
  const uint32_t version = in.u32();
  if (version != kCheckpointVersion)
    throw IoError(path + ": format version " + std::to_string(version) +
                  " is not supported (expected " +
                  std::to_string(kCheckpointVersion) + ")");

  const std::string config_text = in.bytes();
  const uint64_t stored_print = in.u64();
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(nlohmann::json::parse(config_text));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": config block is not valid JSON: " + e.what());
  }
  if (cfg.fingerprint() != stored_print)
    throw IoError(path + ": config fingerprint mismatch (corrupt file?)");
  if (expected && expected->fingerprint() != cfg.fingerprint())
    throw ConfigError(path + ": checkpoint was trained as variant '" +
                      cfg.variant + "'; the requested configuration ('" +
                      expected->variant + "') has a different fingerprint");

  const uint64_t vocab_size = in.u64();
  if (vocab_size < 2)
    throw IoError(path + ": vocabulary block holds " +
                  std::to_string(vocab_size) + " entries, need at least 2");
  Vocabulary vocab;
  for (uint64_t i = 0; i < vocab_size; ++i) {
    const std::string token = in.bytes();
    if (i < 2) {
      if (token != vocab.token(static_cast<int>(i)))
        throw IoError(path + ": vocabulary slot " + std::to_string(i) +
                      " holds '" + token + "', expected reserved token '" +
                      vocab.token(static_cast<int>(i)) + "'");
      continue;
    }
    if (vocab.contains(token))
      throw IoError(path + ": vocabulary token '" + token + "' repeats");
    vocab.add(token);
  }

  Rng scratch(0);  // parameter values are overwritten below
  JointModel model(cfg, vocab, scratch);
  std::vector<Param*> params = model.params();
  const uint64_t blocks = in.u64();
  if (blocks != params.size())
    throw IoError(path + ": " + std::to_string(blocks) +
                  " parameter blocks for a model with " +
                  std::to_string(params.size()) + " parameters");
  std::map<std::string, Param*> by_name;
  for (Param* p : params) by_name[p->name] = p;
  std::set<std::string> seen;
  for (uint64_t b = 0; b < blocks; ++b) {
    const std::string name = in.bytes();
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw IoError(path + ": unknown parameter block '" + name + "'");
    if (!seen.insert(name).second)
      throw IoError(path + ": parameter block '" + name + "' repeats");
    Param* p = it->second;
    const uint32_t rank = in.u32();
    Shape shape;
    for (uint32_t d = 0; d < rank; ++d)
      shape.push_back(static_cast<int>(in.u32()));
    if (shape != p->shape)
      throw IoError(path + ": parameter '" + name + "' has shape " +
                    shape_str(shape) + ", the model expects " +
                    shape_str(p->shape));
    const uint64_t count = in.u64();
    if (count != p->value.size())
      throw IoError(path + ": parameter '" + name + "' holds " +
                    std::to_string(count) + " values, expected " +
                    std::to_string(p->value.size()));
    for (uint64_t i = 0; i < count; ++i) p->value[i] = in.f64();
  }
  if (!in.exhausted())
    throw IoError(path + ": trailing bytes after the last parameter block");
  return model;
}

}  // namespace storymine
