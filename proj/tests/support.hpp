#pragma once

#include <filesystem>
#include <optional>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "csiact/dataset.hpp"
#include "csiact/error.hpp"

namespace csiact::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "csiact") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) { return detail::read_file(path); }

/// Runs `fn` and returns the Errc it threw; fails the caller if it threw
/// nothing or something else.
template <typename Fn>
std::optional<Errc> error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// Labeled matrix from explicit rows, over the activity dictionary unless
/// other label names are given.
inline DesignMatrix make_matrix(const std::vector<std::vector<double>>& rows, const std::vector<ClassId>& labels,
                                LabelDictionary dict = LabelDictionary::activities()) {
  DesignMatrix dm;
  dm.dictionary = std::move(dict);
  dm.rows = Matrix::from_rows(rows);
  dm.labels = labels;
  return dm;
}

/// Two Gaussian blobs centred at -sep and +sep along every axis.
inline DesignMatrix gaussian_blobs(std::size_t per_class, std::size_t dims, double sep, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  std::vector<ClassId> labels;
  for (ClassId c : {0, 1}) {
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> row(dims);
      for (auto& v : row) v = (c == 0 ? -sep : sep) + noise(rng);
      rows.push_back(std::move(row));
      labels.push_back(c);
    }
  }
  return make_matrix(rows, labels);
}

/// Random labeled matrix with values in [0, 1).
inline DesignMatrix random_matrix(std::size_t n, std::size_t d, std::size_t n_classes, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, static_cast<int>(n_classes) - 1);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  std::vector<ClassId> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : rows[i]) v = unit(rng);
    labels[i] = label(rng);
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < n_classes; ++c) names.push_back("class" + std::to_string(c));
  return make_matrix(rows, labels, n_classes == 2 ? LabelDictionary::activities() : LabelDictionary(names));
}

}  // namespace csiact::testing
