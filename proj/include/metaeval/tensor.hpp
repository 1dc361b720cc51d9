#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "metaeval/error.hpp"

namespace metaeval {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

inline void require_size(std::span<const double> v, std::size_t expected, const char* what) {
  if (v.size() != expected) {
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(expected) + ", got " +
                     std::to_string(v.size()));
  }
}

}  // namespace metaeval
