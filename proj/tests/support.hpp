#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "srcsel/dataset.hpp"

namespace test {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("srcsel-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline srcsel::Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  srcsel::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

/// Dataset with numeric meta column "z".
inline srcsel::Dataset with_z(const std::vector<double>& z, Eigen::Index p = 1) {
  srcsel::Dataset d;
  const auto n = static_cast<Eigen::Index>(z.size());
  d.features = srcsel::Matrix::Zero(n, p);
  d.response = srcsel::Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.features(i, 0) = static_cast<double>(i);
    d.response(i) = 2.0 * static_cast<double>(i);
  }
  for (Eigen::Index j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  d.meta.push_back(srcsel::MetaColumn::from_numbers("z", z));
  d.origin.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) d.origin[i] = i;
  return d;
}

}  // namespace test
