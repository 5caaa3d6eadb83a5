#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "csiact/error.hpp"
#include "csiact/labels.hpp"
#include "csiact/matrix.hpp"

namespace csiact {

/// Dot product and squared distance with a fixed summation order (eight
/// interleaved partial sums), so results never depend on buffer alignment.
inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
  double acc[8] = {};
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t l = 0; l < 8; ++l) acc[l] += x[i + l] * y[i + l];
  for (std::size_t l = 0; i < n; ++i, ++l) acc[l] += x[i] * y[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) noexcept {
  double acc[8] = {};
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t l = 0; l < 8; ++l) {
      const double d = x[i + l] - y[i + l];
      acc[l] += d * d;
    }
  for (std::size_t l = 0; i < n; ++i, ++l) {
    const double d = x[i] - y[i];
    acc[l] += d * d;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

inline void check_width(const Matrix& rows, std::size_t width) {
  if (rows.cols() != width)
    throw Error(Errc::WidthMismatch, "row width " + std::to_string(rows.cols()) +
                                         " != model width " + std::to_string(width));
}

/// Per-feature standardization (population variance). Constant features
/// keep scale 1 so they map to 0.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static Scaler fit(const Matrix& x) {
    Scaler s;
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      auto row = x.row(r);
      for (std::size_t c = 0; c < d; ++c) s.mean[c] += row[c];
    }
    for (auto& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      auto row = x.row(r);
      for (std::size_t c = 0; c < d; ++c) {
        const double dev = row[c] - s.mean[c];
        s.scale[c] += dev * dev;
      }
    }
    for (auto& v : s.scale) {
      v = std::sqrt(v / static_cast<double>(n));
      if (!(v > 0.0)) v = 1.0;
    }
    return s;
  }

  Matrix transform(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto src = x.row(r);
      auto dst = out.row(r);
      for (std::size_t c = 0; c < x.cols(); ++c) dst[c] = (src[c] - mean[c]) / scale[c];
    }
    return out;
  }

  bool operator==(const Scaler&) const = default;
};

}  // namespace csiact
