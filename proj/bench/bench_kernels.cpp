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

// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include "lamar/diversity.hpp"
#include "lamar/kernels.hpp"
#include "lamar/random.hpp"
#include "lamar/recmodel.hpp"

using namespace lamar;

namespace {

kernels::Matrix random_matrix(std::size_t rows, std::size_t cols) {
  Rng rng(1);
  kernels::Matrix m(rows, cols);
  for (auto& x : m.data) x = rng.normal();
  return m;
}

std::vector<recmodel::ItemFeatures> random_items(std::size_t n, std::uint32_t buckets) {
  Rng rng(2);
  std::vector<recmodel::ItemFeatures> items(n);
  for (auto& f : items)
    for (int t = 0; t < 24; ++t) f.buckets.push_back(static_cast<std::uint32_t>(rng.uniform_index(buckets)));
  for (auto& f : items) std::sort(f.buckets.begin(), f.buckets.end());
  return items;
}

std::vector<std::string> random_texts(std::size_t n) {
  Rng rng(3);
  std::vector<std::string> texts(n);
  for (auto& t : texts)
    for (int w = 0; w < 12; ++w) t += "w" + std::to_string(rng.uniform_index(400)) + " ";
  return texts;
}

template <bool Parallel>
void BM_Matvec(benchmark::State& state) {
  const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 64);
  const std::vector<double> v(64, 0.5);
  for (auto _ : state) {
    auto out = Parallel ? kernels::parallel::matvec(m, v) : kernels::serial::matvec(m, v);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_EncodeAll(benchmark::State& state) {
  recmodel::ModelConfig cfg;
  cfg.hash_buckets = 1u << 16;
  const auto model = recmodel::Model::initialize(cfg);
  const auto items = random_items(static_cast<std::size_t>(state.range(0)), cfg.hash_buckets);
  for (auto _ : state) {
    auto out = Parallel ? recmodel::parallel::encode_all(model, items) : recmodel::serial::encode_all(model, items);
    benchmark::DoNotOptimize(out.data.data());
  }
}

template <bool Parallel>
void BM_NeighborCounts(benchmark::State& state) {
  const auto e = diversity::embed_builtin(random_texts(static_cast<std::size_t>(state.range(0))), 1u << 14);
  for (auto _ : state) {
    auto out = Parallel ? diversity::parallel::neighbor_counts(e, diversity::kDefaultThresholds)
                        : diversity::serial::neighbor_counts(e, diversity::kDefaultThresholds);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_Matvec<false>)->Arg(20000);
BENCHMARK(BM_Matvec<true>)->Arg(20000);
BENCHMARK(BM_EncodeAll<false>)->Arg(5000);
BENCHMARK(BM_EncodeAll<true>)->Arg(5000);
BENCHMARK(BM_NeighborCounts<false>)->Arg(1000);
BENCHMARK(BM_NeighborCounts<true>)->Arg(1000);

BENCHMARK_MAIN();
