#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

// Shared helpers for the test suites.
namespace testutil {

// Self-deleting scratch directory.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("hsigan_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(static_cast<std::uint64_t>(
                 std::hash<std::string>{}(tag) & 0xffff)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string dir() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testutil
