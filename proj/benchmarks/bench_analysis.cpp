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

#include <memory>

#include "generators.hpp"
#include "recon/basis.hpp"
#include "recon/codegen.hpp"
#include "recon/error.hpp"
#include "recon/mir.hpp"
#include "recon/slicer.hpp"

namespace {

using namespace recon;

std::vector<mir::Program> corpus(int max_statements) {
  testing::Rng rng(5);
  testing::MirGenOptions opt;
  opt.max_statements = max_statements;
  std::vector<mir::Program> out;
  for (int i = 0; i < 20; ++i) out.push_back(mir::parse_mir(testing::random_mir(rng, opt)));
  return out;
}

void BM_BuildBasis(benchmark::State& state) {
  const auto programs = corpus(static_cast<int>(state.range(0)));
  for (auto _ : state)
    for (const auto& p : programs) benchmark::DoNotOptimize(slicing::SlicingBasis(p));
}
BENCHMARK(BM_BuildBasis)->Arg(25)->Arg(50)->Arg(100);

void BM_SliceProcessing(benchmark::State& state) {
  const auto programs = corpus(static_cast<int>(state.range(0)));
  const auto sigs = slicing::parse_signatures("name=infer\n");
  std::vector<std::unique_ptr<slicing::SlicingBasis>> bases;
  for (const auto& p : programs) bases.push_back(std::make_unique<slicing::SlicingBasis>(p));
  for (auto _ : state)
    for (const auto& b : bases) {
      try {
        benchmark::DoNotOptimize(slicing::extract_processing(*b, slicing::find_criteria(*b, sigs)));
      } catch (const Error&) {
      }
    }
}
BENCHMARK(BM_SliceProcessing)->Arg(25)->Arg(50)->Arg(100);

void BM_Structurize(benchmark::State& state) {
  testing::Rng rng(6);
  testing::MirGenOptions opt;
  opt.calls = false;
  opt.max_statements = static_cast<int>(state.range(0));
  std::vector<mir::Program> programs;
  for (int i = 0; i < 20; ++i) programs.push_back(mir::parse_mir(testing::random_mir(rng, opt)));
  for (auto _ : state)
    for (const auto& p : programs) benchmark::DoNotOptimize(codegen::reconstruct_loops(p.functions[0]));
}
BENCHMARK(BM_Structurize)->Arg(20)->Arg(40);

}  // namespace
