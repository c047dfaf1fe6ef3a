#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <system_error>

#include "mitodet/errors.hpp"

namespace mitodet::pipeline {

/// Runs `write(tmp)` against a sibling temporary and renames it over `path`.
template <typename Writer>
void write_atomically(const std::filesystem::path& path, Writer&& write) {
  namespace fs = std::filesystem;
  const fs::path tmp = fs::path(path).concat(".tmp");
  try {
    write(tmp);
  } catch (...) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw;
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  write_atomically(path, [&](const std::filesystem::path& tmp) {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.close();
    if (!out) throw IoError("failed writing " + tmp.string());
  });
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace mitodet::pipeline
