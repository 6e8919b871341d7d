// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Append-only line logs. A record is durable once its trailing newline has
/// been written and fsync'd; a final line without a newline is a torn write
/// and is dropped on read.

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vtedit/error.hpp"

namespace vtedit {

class AppendSink {
 public:
  virtual ~AppendSink() = default;
  /// Appends bytes and makes them durable before returning.
  virtual void append(std::string_view bytes) = 0;
};

class FileAppendSink final : public AppendSink {
 public:
  explicit FileAppendSink(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(Errc::storage_failure, "open " + path.string() + ": " + std::strerror(errno));
  }
  FileAppendSink(const FileAppendSink&) = delete;
  FileAppendSink& operator=(const FileAppendSink&) = delete;
  ~FileAppendSink() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void append(std::string_view bytes) override {
    const char* p = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
      ssize_t n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::storage_failure, "write " + path_.string() + ": " + std::strerror(errno));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw Error(Errc::storage_failure, "fsync " + path_.string());
  }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

struct LogContents {
  std::vector<std::string> lines;
  /// Bytes after the last newline (a torn final write), if any.
  std::string torn_tail;
};

inline LogContents read_log(const std::filesystem::path& path) {
  LogContents out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  std::size_t start = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i] == '\n') {
      if (i > start) out.lines.emplace_back(data.substr(start, i - start));
      start = i + 1;
    }
  }
  if (start < data.size()) out.torn_tail = data.substr(start);
  return out;
}

/// Drops a torn tail so later appends start on a clean line boundary.
inline void truncate_torn_tail(const std::filesystem::path& path, const LogContents& contents) {
  if (contents.torn_tail.empty()) return;
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - contents.torn_tail.size());
}

/// Writes a whole file atomically (temp file + fsync + rename).
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    FileAppendSink sink(tmp);
    std::filesystem::resize_file(tmp, 0);
    sink.append(bytes);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace vtedit
