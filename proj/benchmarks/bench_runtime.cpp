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
#include "fixtures.hpp"
#include "recon/ops.hpp"
#include "recon/rebuild.hpp"
#include "recon/runtime.hpp"
#include "recon/sim.hpp"

namespace {

using namespace recon;

// One conv layer of side n, 16 -> 16 channels, 3x3 same.
struct ConvCase {
  rt::Attributes attrs;
  rt::Tensor x, w, b;
  rt::Shape out;

  explicit ConvCase(std::int64_t n) {
    std::mt19937_64 rng(1);
    attrs.filters = 16;
    attrs.kernel = {3, 3};
    attrs.strides = {1, 1};
    attrs.padding = rt::Padding::Same;
    x = testing::random_tensor(rng, {1, n, n, 16});
    w = testing::random_tensor(rng, {3, 3, 16, 16});
    b = testing::random_tensor(rng, {16});
    out = {1, n, n, 16};
  }
};

void BM_ConvForward(benchmark::State& state) {
  const ConvCase c(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(rt::forward(rt::OpType::Conv2D, c.attrs, {&c.x, &c.w, &c.b}, c.out));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.x.size()));
}
BENCHMARK(BM_ConvForward)->Arg(8)->Arg(16)->Arg(32);

void BM_ConvBackward(benchmark::State& state) {
  const ConvCase c(state.range(0));
  const auto y = rt::forward(rt::OpType::Conv2D, c.attrs, {&c.x, &c.w, &c.b}, c.out);
  const rt::Tensor gy(c.out, 1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(rt::backward(rt::OpType::Conv2D, c.attrs, {&c.x, &c.w, &c.b}, y, gy));
}
BENCHMARK(BM_ConvBackward)->Arg(8)->Arg(16)->Arg(32);

void BM_ToyForwardBackward(benchmark::State& state) {
  const auto g = graph::rebuild(graph::load_sim(testing::fixture("toy/toy_cnn.sim")));
  rt::Session s(g);
  std::mt19937_64 rng(2);
  const auto x = testing::random_tensor(rng, {1, 8, 8, 1}, 0, 1);
  const rt::Tensor gy({1, 4}, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.forward(x));
    benchmark::DoNotOptimize(s.backward(gy));
  }
}
BENCHMARK(BM_ToyForwardBackward);

void BM_RebuildArchitectures(benchmark::State& state) {
  std::vector<graph::StrippedGraph> stripped;
  for (const auto& a : testing::architectures()) stripped.push_back(graph::strip(a.graph));
  for (auto _ : state)
    for (const auto& sg : stripped) benchmark::DoNotOptimize(graph::rebuild(sg));
}
BENCHMARK(BM_RebuildArchitectures);

}  // namespace
