#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rng.hpp"
#include "space.hpp"
#include "tensor.hpp"

namespace must::test {

// Unique scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("must_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Tensor random_tensor(size_t rows, size_t cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(rows, cols);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Small space used across suites: 3 states x 3 objects, 5 seen + 3 unseen.
inline CompositionSpace tiny_space() {
  return CompositionSpace::build(
      {"red", "ripe", "old"}, {"apple", "banana", "car"},
      {{0, 0}, {0, 1}, {1, 1}, {2, 2}, {1, 0}},
      {{1, 2}, {2, 0}, {0, 2}});
}

}  // namespace must::test
