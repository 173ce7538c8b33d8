// blxam/checkpoint.hpp

// Copyright 2026  The blxam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef BLXAM_CHECKPOINT_HPP_
#define BLXAM_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "blxam/error.hpp"
#include "blxam/fileio.hpp"
#include "blxam/hash.hpp"
#include "blxam/param_store.hpp"
#include "blxam/tensor.hpp"
#include "blxam/wire.hpp"

// Versioned binary checkpoint:
//   magic "BLXAM1"
//   entries: u32 name length, name bytes, u32 rank, u64 dims,
//            little-endian f64 payload
//   optimizer state appended in the same entry layout under the names
//   "adam.m:<param>", "adam.v:<param>", "adam.t:<param>" (step count as a
//   one-element tensor)
//   trailing u64: FNV-1a checksum of every byte between the magic and the
//   checksum itself.
// Files are written to a temporary sibling and renamed into place.

namespace blxam {

namespace ckpt_detail {

inline constexpr char kMagic[6] = {'B', 'L', 'X', 'A', 'M', '1'};

using wire::put_f64;
using wire::put_u32;
using wire::put_u64;

inline void put_entry(std::vector<unsigned char> &b, const std::string &name,
                      const Tensor &t) {
  put_u32(b, static_cast<std::uint32_t>(name.size()));
  b.insert(b.end(), name.begin(), name.end());
  put_u32(b, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape) put_u64(b, static_cast<std::uint64_t>(d));
  for (double x : t.v) put_f64(b, x);
}

}  // namespace ckpt_detail

inline void save_checkpoint(const std::string &path,
                            const ParameterStore &store,
                            bool with_opt_state = true) {
  using namespace ckpt_detail;
  std::vector<unsigned char> payload;
  for (const auto &[name, p] : store.params()) put_entry(payload, name, p.value);
  if (with_opt_state) {
    for (const auto &[name, p] : store.params()) {
      put_entry(payload, "adam.m:" + name, p.m);
      put_entry(payload, "adam.v:" + name, p.v);
      Tensor t({1});
      t.v[0] = static_cast<double>(p.step);
      put_entry(payload, "adam.t:" + name, t);
    }
  }
  std::vector<unsigned char> out;
  out.reserve(sizeof(kMagic) + payload.size() + 8);
  out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
  out.insert(out.end(), payload.begin(), payload.end());
  put_u64(out, fnv1a64(payload.data(), payload.size()));
  atomic_write_file(path, out.data(), out.size());
}

/// Load a checkpoint into `store`. Parameters that already exist must
/// match shape and are overwritten; unknown names are created. Optimizer
/// entries require their base parameter to be present in the file.
inline void load_checkpoint(const std::string &path, ParameterStore &store) {
  using namespace ckpt_detail;
  std::ifstream f(path, std::ios::binary);
  BLXAM_DATA_CHECK(f.good(), "cannot open checkpoint '" << path << "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  BLXAM_DATA_CHECK(bytes.size() >= sizeof(kMagic) + 8,
                   "'" << path << "' too small to be a checkpoint");
  BLXAM_DATA_CHECK(std::equal(kMagic, kMagic + sizeof(kMagic), bytes.begin()),
                   "'" << path << "' is not a checkpoint (bad magic)");
  const std::size_t payload_len = bytes.size() - sizeof(kMagic) - 8;
  const unsigned char *payload = bytes.data() + sizeof(kMagic);
  std::uint64_t want = 0;
  {
    wire::Cursor c{bytes.data() + sizeof(kMagic) + payload_len, 8,
                   path, "checkpoint"};
    want = c.u64();
  }
  const std::uint64_t got = fnv1a64(payload, payload_len);
  BLXAM_DATA_CHECK(got == want, "checksum mismatch in '"
                                    << path << "': file is corrupt or was "
                                    << "truncated");
  wire::Cursor c{payload, payload_len, path, "checkpoint"};
  while (c.left > 0) {
    const std::uint32_t name_len = c.u32();
    const std::string name = c.str(name_len);
    const std::uint32_t rank = c.u32();
    BLXAM_DATA_CHECK(rank <= 8, "'" << path << "': entry '" << name
                                    << "' has implausible rank " << rank);
    std::vector<std::size_t> dims(rank);
    std::size_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      dims[i] = static_cast<std::size_t>(c.u64());
      numel *= dims[i];
    }
    Tensor t(dims);
    for (std::size_t i = 0; i < numel; ++i) t.v[i] = c.f64();

    auto apply = [&](Tensor &dst) {
      BLXAM_DATA_CHECK(dst.shape == t.shape,
                       "'" << path << "': entry '" << name << "' has shape "
                           << t.shape_str() << " but store expects "
                           << dst.shape_str());
      dst = t;
    };
    if (name.rfind("adam.m:", 0) == 0) {
      apply(store.get(name.substr(7)).m);
    } else if (name.rfind("adam.v:", 0) == 0) {
      apply(store.get(name.substr(7)).v);
    } else if (name.rfind("adam.t:", 0) == 0) {
      BLXAM_DATA_CHECK(t.numel() == 1, "'" << path << "': entry '" << name
                                           << "' must hold one value");
      store.get(name.substr(7)).step =
          static_cast<std::uint64_t>(t.v[0]);
    } else {
      if (store.has(name)) {
        apply(store.get(name).value);
      } else {
        store.create(name, t);
      }
    }
  }
}

}  // namespace blxam

#endif  // BLXAM_CHECKPOINT_HPP_
