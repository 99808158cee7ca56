// Copyright 2026 The ipdsim Authors
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

#include "ipd/nn/checkpoint.h"

#include <cstring>
#include <fstream>
#include <vector>

#include "ipd/error.h"

namespace ipd::nn {

namespace {

constexpr char kMagic[8] = {'I', 'P', 'D', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void Put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <typename T>
  T Get() {
    T v{};
    Bytes(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }

  void Bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw CorruptError("checkpoint '" + path_ + "' is truncated");
    }
  }

 private:
  std::istream& in_;
  std::string path_;
};

std::uint64_t Fnv(const ParamVector& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  for (std::size_t i = 0; i < data.size() * sizeof(double); ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void SaveCheckpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  Put<std::uint32_t>(out, kCheckpointVersion);
  Put<std::int32_t>(out, params.arch().hidden_dim);
  Put<std::int32_t>(out, params.arch().embed_dim);
  Put<std::int32_t>(out, params.arch().conditioning_dim);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(params.blocks().size()));
  for (const BlockInfo& b : params.blocks()) {
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    Put<std::int32_t>(out, b.rows);
    Put<std::int32_t>(out, b.cols);
    Put<std::uint64_t>(out, b.offset);
  }
  Put<std::uint64_t>(out, params.size());
  out.write(reinterpret_cast<const char*>(params.data().data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  Put<std::uint64_t>(out, Fnv(params.data()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

ModelParams LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  Reader r(in, path);
  char magic[8];
  r.Bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw VersionError("'" + path + "' is not a checkpoint (bad magic)");
  }
  auto version = r.Get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint '" + path + "' has version " + std::to_string(version) +
                       ", expected " + std::to_string(kCheckpointVersion));
  }
  ModelArch arch;
  arch.hidden_dim = r.Get<std::int32_t>();
  arch.embed_dim = r.Get<std::int32_t>();
  arch.conditioning_dim = r.Get<std::int32_t>();
  ModelParams params;
  try {
    params = ModelParams(arch);
  } catch (const ConfigError& e) {
    throw CorruptError("checkpoint '" + path + "' has invalid architecture: " + e.what());
  }
  auto nblocks = r.Get<std::uint32_t>();
  if (nblocks != params.blocks().size()) {
    throw CorruptError("checkpoint '" + path + "' block count mismatch");
  }
  for (const BlockInfo& b : params.blocks()) {
    auto len = r.Get<std::uint32_t>();
    if (len > 256) throw CorruptError("checkpoint '" + path + "' has a bad block name");
    std::string name(len, '\0');
    r.Bytes(name.data(), len);
    auto rows = r.Get<std::int32_t>();
    auto cols = r.Get<std::int32_t>();
    auto offset = r.Get<std::uint64_t>();
    if (name != b.name || rows != b.rows || cols != b.cols || offset != b.offset) {
      throw CorruptError("checkpoint '" + path + "' block '" + name + "' does not match layout");
    }
  }
  auto count = r.Get<std::uint64_t>();
  if (count != params.size()) throw CorruptError("checkpoint '" + path + "' size mismatch");
  r.Bytes(reinterpret_cast<char*>(params.data().data()), count * sizeof(double));
  auto checksum = r.Get<std::uint64_t>();
  if (checksum != Fnv(params.data())) {
    throw CorruptError("checkpoint '" + path + "' failed checksum");
  }
  return params;
}

}  // namespace ipd::nn
