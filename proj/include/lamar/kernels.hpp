// Copyright 2026 The lamar Authors.
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

#include <cstddef>
#include <span>
#include <vector>

namespace lamar::kernels {

/// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Scales in place to unit L2 norm; leaves a zero vector unchanged.
void normalize(std::span<double> a);

/// Sums in a fixed pairwise tree so the result does not depend on how the
/// values were produced (serial or by any number of threads).
double pairwise_sum(std::span<const double> values);

/// Number of worker threads OpenMP would use (1 without OpenMP).
int max_threads();

/// Dense cosine similarity with cosine(0, x) defined as 0.
double cosine(std::span<const double> u, std::span<const double> v);

/// Sparse row: strictly increasing indices.
struct SparseRow {
  std::vector<std::size_t> index;
  std::vector<double> value;

  bool operator==(const SparseRow&) const = default;
};

double sparse_dot(const SparseRow& a, const SparseRow& b);
double sparse_norm(const SparseRow& a);

// Each kernel comes in two flavours with identical results: `serial` is the
// reference used by tests, `parallel` splits rows across OpenMP threads.

namespace serial {
/// out[i] = dot(m.row(i), v)
std::vector<double> matvec(const Matrix& m, std::span<const double> v);
}  // namespace serial

namespace parallel {
std::vector<double> matvec(const Matrix& m, std::span<const double> v);
}  // namespace parallel

}  // namespace lamar::kernels
