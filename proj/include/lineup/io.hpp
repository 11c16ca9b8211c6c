#pragma once

// File helpers: whole-file reads and crash-safe writes (temp file in the
// same directory, fsync, rename).

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lineup/error.hpp"

namespace lineup::io {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline Error sys_error(const std::string& what, const fs::path& path) {
  return Error(Errc::io_error, what + " " + path.string() + ": " + std::strerror(errno));
}

inline void write_all(int fd, std::string_view bytes, const fs::path& path) {
  while (!bytes.empty()) {
    const auto n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw sys_error("write failed for", path);
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

inline fs::path temp_name(const fs::path& target) {
  static std::atomic<unsigned long> counter{0};
  auto name = target.filename().string();
  name = "." + name + ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(counter.fetch_add(1));
  return target.parent_path() / name;
}

// Writes `bytes` to a fresh temp file next to `target` and syncs it.
inline fs::path write_temp(const fs::path& target, std::string_view bytes) {
  const auto tmp = temp_name(target);
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) throw sys_error("cannot create", tmp);
  try {
    write_all(fd, bytes, tmp);
    if (::fsync(fd) != 0) throw sys_error("fsync failed for", tmp);
  } catch (...) {
    ::close(fd);
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
  if (::close(fd) != 0) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw sys_error("close failed for", tmp);
  }
  return tmp;
}

inline void sync_dir(const fs::path& dir) {
  const int fd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace detail

// Test hook called after all temp files are written and before any rename.
// Throwing from it aborts the write and leaves no partial output.
using BeforeCommit = std::function<void()>;

// Writes every (path, bytes) pair so that either all targets are replaced
// or none are touched. The renames themselves are individually atomic.
inline void write_files_atomically(
    const std::vector<std::pair<fs::path, std::string>>& files,
    const BeforeCommit& before_commit = {}) {
  std::vector<fs::path> temps;
  try {
    for (const auto& [path, bytes] : files) temps.push_back(detail::write_temp(path, bytes));
    if (before_commit) before_commit();
  } catch (...) {
    for (const auto& t : temps) {
      std::error_code ec;
      fs::remove(t, ec);
    }
    throw;
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::error_code ec;
    fs::rename(temps[i], files[i].first, ec);
    if (ec) {
      for (std::size_t j = i; j < temps.size(); ++j) fs::remove(temps[j], ec);
      throw Error(Errc::io_error, "cannot rename into " + files[i].first.string());
    }
    detail::sync_dir(files[i].first.parent_path());
  }
}

inline void write_file_atomically(const fs::path& path, std::string_view bytes) {
  write_files_atomically({{path, std::string(bytes)}});
}

// Appends one line and syncs it to disk.
inline void append_line_synced(const fs::path& path, std::string_view line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw detail::sys_error("cannot open", path);
  try {
    std::string buf(line);
    buf.push_back('\n');
    detail::write_all(fd, buf, path);
    if (::fsync(fd) != 0) throw detail::sys_error("fsync failed for", path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

}  // namespace lineup::io
