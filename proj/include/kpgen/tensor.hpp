// Copyright 2026 The kpgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "kpgen/error.hpp"

namespace kpgen {

// When enabled, tensor construction scans for NaN/Inf and throws.
// Off by default; tests and debugging turn it on.
bool debug_checks_enabled();
void set_debug_checks(bool on);

// Dense row-major tensor. Rank 1 or 2 in practice; vectors of length n are
// stored as shape {1, n} so matrix ops stay uniform.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), T(0));
  }

  Tensor(std::vector<std::size_t> s, std::vector<T> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel_of(shape)) {
      throw DimError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape product " +
                     std::to_string(numel_of(shape)));
    }
    check_finite();
  }

  static Tensor zeros(std::size_t rows, std::size_t cols) {
    return Tensor({rows, cols});
  }

  static Tensor row(std::vector<T> d) {
    std::size_t n = d.size();
    return Tensor({1, n}, std::move(d));
  }

  static Tensor scalar(T v) { return Tensor({1, 1}, {v}); }

  std::size_t numel() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  T& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const {
    return data[r * cols() + c];
  }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  std::string shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) os << "x";
      os << shape[i];
    }
    os << "]";
    return os.str();
  }

  void check_finite() const {
    if (!debug_checks_enabled()) return;
    for (const T& v : data) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw NumericError("non-finite value in tensor " + shape_str());
      }
    }
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) {
      if (d == 0) throw DimError("zero-sized tensor dimension");
      n *= d;
    }
    return s.empty() ? 0 : n;
  }
};

}  // namespace kpgen
