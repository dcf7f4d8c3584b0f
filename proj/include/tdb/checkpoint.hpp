// checkpoint.hpp: binary checkpoint payload.
//
// Layout: magic "TDB1", format version (u32), blob count (u32), then per
// blob: name length (u32) + UTF-8 name, scalar width in bytes (u32), rank
// (u32), extents (i64 each), then the flat scalar data. All integers and
// scalars are little-endian.
//
// Copyright 2026 The tdb authors
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

#ifndef TDB_CHECKPOINT_HPP_
#define TDB_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include "tdb/params.hpp"

namespace tdb {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace ckpt_detail {

inline void WriteU32(std::ostream &os, uint32_t v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof v);
}
inline void WriteI64(std::ostream &os, int64_t v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof v);
}
inline uint32_t ReadU32(std::istream &is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char *>(&v), sizeof v);
  return v;
}
inline int64_t ReadI64(std::istream &is) {
  int64_t v = 0;
  is.read(reinterpret_cast<char *>(&v), sizeof v);
  return v;
}

}  // namespace ckpt_detail

inline constexpr uint32_t kCheckpointVersion = 1;

template <typename S>
void SaveCheckpoint(const std::string &path, const ParamStore<S> &params) {
  std::ofstream os(path, std::ios::binary);
  Check(os.good(), "SaveCheckpoint: cannot open " + path);
  os.write("TDB1", 4);
  ckpt_detail::WriteU32(os, kCheckpointVersion);
  ckpt_detail::WriteU32(os, static_cast<uint32_t>(params.size()));
  for (int p = 0; p < params.size(); ++p) {
    const std::string &name = params.names[static_cast<size_t>(p)];
    const Tensor<S> &v = params[p];
    ckpt_detail::WriteU32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    ckpt_detail::WriteU32(os, static_cast<uint32_t>(sizeof(S)));
    ckpt_detail::WriteU32(os, static_cast<uint32_t>(v.shape.size()));
    for (int64_t d : v.shape) ckpt_detail::WriteI64(os, d);
    os.write(reinterpret_cast<const char *>(v.ptr()),
             static_cast<std::streamsize>(sizeof(S) * static_cast<size_t>(v.size())));
  }
  Check(os.good(), "SaveCheckpoint: write failed for " + path);
}

template <typename S>
ParamStore<S> LoadCheckpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  Check(is.good(), "LoadCheckpoint: cannot open " + path);
  char magic[4] = {};
  is.read(magic, 4);
  Check(std::string(magic, 4) == "TDB1", "LoadCheckpoint: bad magic in " + path);
  uint32_t version = ckpt_detail::ReadU32(is);
  Check(version == kCheckpointVersion, "LoadCheckpoint: unsupported version");
  uint32_t count = ckpt_detail::ReadU32(is);
  ParamStore<S> params;
  for (uint32_t p = 0; p < count; ++p) {
    uint32_t name_len = ckpt_detail::ReadU32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    uint32_t width = ckpt_detail::ReadU32(is);
    Check(width == sizeof(S), "LoadCheckpoint: scalar width mismatch for " + name);
    uint32_t rank = ckpt_detail::ReadU32(is);
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = ckpt_detail::ReadI64(is);
    Tensor<S> v(shape);
    is.read(reinterpret_cast<char *>(v.ptr()),
            static_cast<std::streamsize>(sizeof(S) * static_cast<size_t>(v.size())));
    Check(is.good(), "LoadCheckpoint: truncated file at " + name);
    params.Add(name, std::move(v));
  }
  return params;
}

}  // namespace tdb

#endif  // TDB_CHECKPOINT_HPP_
