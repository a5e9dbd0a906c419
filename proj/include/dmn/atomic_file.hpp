#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <system_error>

#include "dmn/error.hpp"

namespace dmn {

/// Writes through a sibling temporary file and renames it into place, so a
/// failure never leaves a partial file at `path`.
inline void write_atomically(const std::filesystem::path& path,
                             const std::function<void(std::ostream&)>& body,
                             bool binary = false) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  try {
    {
      std::ofstream os(tmp, binary ? std::ios::out | std::ios::binary | std::ios::trunc
                                   : std::ios::out | std::ios::trunc);
      if (!os) throw InputError("cannot open '" + tmp.string() + "' for writing");
      body(os);
      os.flush();
      if (!os) throw InputError("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

}  // namespace dmn
