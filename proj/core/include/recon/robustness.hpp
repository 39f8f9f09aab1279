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

#ifndef RECON_ROBUSTNESS_HPP_
#define RECON_ROBUSTNESS_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "recon/codegen.hpp"
#include "recon/image.hpp"
#include "recon/rebuild.hpp"
#include "recon/runtime.hpp"

namespace recon::robust {

struct AttackConfig {
  double epsilon_raw = 8.0;  // budget in raw input units (0..255 pixels)
  double input_scale = 255.0;  // raw units per model-input unit
  std::optional<double> alpha;  // model units; defaults to epsilon / 4
  int iterations = 10;
  double clamp_lo = 0.0;
  double clamp_hi = 1.0;
  bool random_start = false;
  std::uint64_t seed = 0;

  double epsilon() const { return epsilon_raw / input_scale; }
  double step() const { return alpha ? *alpha : epsilon() / 4.0; }
  void validate() const;
};

using IterationHook = std::function<void(int iteration, const rt::Tensor& x)>;

// Untargeted L-inf PGD ascending the MSE between the model output and `target`.
rt::Tensor pgd_attack(rt::Session& session, const rt::Tensor& x, const rt::Tensor& target,
                      const AttackConfig& cfg, const IterationHook& hook = nullptr);

struct Box {
  std::int64_t cls = 0;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

double iou(const Box& a, const Box& b);

// Greedy highest-IoU-first matching; returns attacked index per original box.
std::vector<std::optional<std::size_t>> pair_boxes(const std::vector<Box>& orig,
                                                   const std::vector<Box>& attacked,
                                                   double min_iou = 0.5);

double metric_type1(const std::vector<std::int64_t>& labels,
                    const std::vector<std::int64_t>& attacked);
// Per-sample detection lists; averages over every original box in the dataset.
double metric_type2(const std::vector<std::vector<Box>>& orig,
                    const std::vector<std::vector<Box>>& attacked);
double metric_type3(const std::vector<std::int64_t>& map, const std::vector<std::int64_t>& attacked);

struct SsimParams {
  std::int64_t window = 8;
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 1.0;
};

// Images are [H,W], [H,W,C] or [1,H,W,C].
double ssim(const rt::Tensor& a, const rt::Tensor& b, const SsimParams& p = {});
double metric_type4(const rt::Tensor& out, const rt::Tensor& attacked, const SsimParams& p = {});

bool flagged(double metric, double threshold = 0.6);

enum class TaskType { T1, T2, T3, T4 };

std::string to_string(TaskType t);
TaskType task_from_string(const std::string& s);

struct TaskSpec {
  TaskType type = TaskType::T1;
  std::string model_call = "infer";  // extern standing for the model
  std::string sink = "emit";  // output the post-processing reports through
  std::optional<std::array<std::int64_t, 3>> image_shape;  // H,W,C for type 4
  SsimParams ssim;
};

struct SampleRow {
  std::string path;
  std::string clean;
  std::string attacked;
  double contribution = 0.0;
  double linf = 0.0;  // achieved perturbation in model units
};

struct RunReport {
  AttackConfig config;
  std::vector<SampleRow> rows;
  double aggregate = 0.0;
  bool flagged = false;
};

struct RobustnessReport {
  TaskSpec task;
  double threshold = 0.6;
  std::vector<RunReport> runs;
};

RunReport assess(const codegen::ProcessingProgram& pprog, const graph::ComputationalGraph& model,
                 const data::Dataset& dataset, const TaskSpec& task, const AttackConfig& cfg,
                 double threshold = 0.6, int jobs = 1);

std::string format_report(const RobustnessReport& r);

// Shortest round-trip decimal form, used for every number we persist.
std::string format_double(double v);

}  // namespace recon::robust

#endif  // RECON_ROBUSTNESS_HPP_
