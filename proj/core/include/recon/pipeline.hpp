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

#ifndef RECON_PIPELINE_HPP_
#define RECON_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recon/codegen.hpp"
#include "recon/robustness.hpp"

namespace recon::cli {

namespace fs = std::filesystem;

// Writes slices.txt (readable report) and slices.lst (input to gen) into out_dir.
void cmd_slice(const fs::path& mir, const fs::path& signatures, const fs::path& out_dir);

void cmd_gen(const fs::path& slice_list, const fs::path& mir, const fs::path& out_file,
             codegen::SliceSelection which = codegen::SliceSelection::Both);

// Writes model.mbuild and model.rwts into out_dir.
void cmd_rebuild(const fs::path& sim, const fs::path& out_dir);

struct AttackOptions {
  std::vector<double> epsilons{8.0};
  std::optional<double> alpha;
  int iterations = 10;
  double input_scale = 255.0;
  double threshold = 0.6;
  std::uint64_t seed = 0;
  bool random_start = false;
  int jobs = 1;
  robust::TaskSpec task;
};

robust::RobustnessReport cmd_attack(const fs::path& model_script, const fs::path& weights,
                                    const fs::path& pprog, const fs::path& dataset,
                                    const AttackOptions& opts, const fs::path& out_file);

struct PipelineConfig {
  fs::path mir;
  fs::path signatures;
  fs::path sim;
  fs::path dataset;
  fs::path out;
  AttackOptions attack;
};

// "key = value" lines; relative paths resolve against base_dir.
PipelineConfig parse_config(std::string_view text, const fs::path& base_dir);
PipelineConfig load_config(const fs::path& path);

// Runs every stage and writes manifest.txt listing artifact hashes.
void cmd_pipeline(const PipelineConfig& cfg);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace recon::cli

#endif  // RECON_PIPELINE_HPP_
