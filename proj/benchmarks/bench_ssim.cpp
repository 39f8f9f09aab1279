// Copyright 2026 The Recon Authors
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

#include <benchmark/benchmark.h>

#include <random>

#include "architectures.hpp"
#include "recon/robustness.hpp"

namespace {

using namespace recon;

void BM_Ssim(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(3);
  const auto a = testing::random_tensor(rng, {n, n, 3}, 0, 1);
  const auto b = testing::random_tensor(rng, {n, n, 3}, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(robust::ssim(a, b));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Ssim)->Arg(32)->Arg(64)->Arg(128);

void BM_PgdLinear(benchmark::State& state) {
  const auto g = testing::linear_model(256, 10);
  rt::Session s(g);
  std::mt19937_64 rng(4);
  const auto x = testing::random_tensor(rng, {1, 256}, 0, 1);
  const auto y = s.forward(x);
  robust::AttackConfig cfg;
  cfg.iterations = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(robust::pgd_attack(s, x, y, cfg));
}
BENCHMARK(BM_PgdLinear)->Arg(10)->Arg(40);

}  // namespace
