// blxam/fileio.hpp

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

#ifndef BLXAM_FILEIO_HPP_
#define BLXAM_FILEIO_HPP_

#include <cstdio>
#include <fstream>
#include <string>

#include "blxam/error.hpp"

namespace blxam {

/// Write bytes to `path` via a temporary sibling and rename, so a crash
/// never leaves a half-written file behind.
inline void atomic_write_file(const std::string &path, const void *data,
                              std::size_t len) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    BLXAM_DATA_CHECK(f.good(), "cannot open '" << tmp << "' for writing");
    f.write(static_cast<const char *>(data),
            static_cast<std::streamsize>(len));
    BLXAM_DATA_CHECK(f.good(), "write failed for '" << tmp << "'");
  }
  BLXAM_DATA_CHECK(std::rename(tmp.c_str(), path.c_str()) == 0,
                   "cannot rename '" << tmp << "' to '" << path << "'");
}

inline void atomic_write_text(const std::string &path,
                              const std::string &text) {
  atomic_write_file(path, text.data(), text.size());
}

inline std::string read_text_file(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  BLXAM_DATA_CHECK(f.good(), "cannot open '" << path << "'");
  std::string s((std::istreambuf_iterator<char>(f)),
                std::istreambuf_iterator<char>());
  return s;
}

/// Directory part of a path, without the trailing separator ("." when the
/// path has no directory part).
inline std::string dir_name(const std::string &path) {
  const std::size_t slash = path.find_last_of('/');
  if (slash == std::string::npos) return ".";
  if (slash == 0) return "/";
  return path.substr(0, slash);
}

inline std::string base_name(const std::string &path) {
  const std::size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace blxam

#endif  // BLXAM_FILEIO_HPP_
