// blxam/wire.hpp

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

#ifndef BLXAM_WIRE_HPP_
#define BLXAM_WIRE_HPP_

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "blxam/error.hpp"

// Little-endian byte packing/unpacking shared by the binary file formats.

namespace blxam::wire {

inline void put_u32(std::vector<unsigned char> &b, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) b.push_back((x >> (8 * i)) & 0xff);
}
inline void put_u64(std::vector<unsigned char> &b, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) b.push_back((x >> (8 * i)) & 0xff);
}
inline void put_i32(std::vector<unsigned char> &b, std::int32_t x) {
  put_u32(b, static_cast<std::uint32_t>(x));
}
inline void put_f64(std::vector<unsigned char> &b, double x) {
  put_u64(b, std::bit_cast<std::uint64_t>(x));
}
inline void put_str(std::vector<unsigned char> &b, const std::string &s) {
  put_u32(b, static_cast<std::uint32_t>(s.size()));
  b.insert(b.end(), s.begin(), s.end());
}

/// Bounds-checked reader over a byte buffer; `what` and `path` name the
/// file in truncation errors.
struct Cursor {
  const unsigned char *p;
  std::size_t left;
  const std::string &path;
  const char *what;

  void need(std::size_t n) const {
    BLXAM_DATA_CHECK(left >= n, "truncated " << what << " '" << path
                                             << "': wanted " << n
                                             << " more bytes, have " << left);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i)
      x |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i)
      x |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    p += 8;
    left -= 8;
    return x;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char *>(p), n);
    p += n;
    left -= n;
    return s;
  }
};

}  // namespace blxam::wire

#endif  // BLXAM_WIRE_HPP_
