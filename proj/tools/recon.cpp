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

// recon: slice processing code out of a MIR program, rebuild a stripped
// model, and assess its robustness with PGD.

#include <CLI11.hpp>

#include <iostream>

#include "recon/error.hpp"
#include "recon/pipeline.hpp"

namespace {

using recon::cli::AttackOptions;

void add_attack_flags(CLI::App* cmd, AttackOptions& o, std::string& task) {
  cmd->add_option("--epsilon", o.epsilons, "Attack budget(s) in raw input units")->delimiter(',');
  cmd->add_option("--alpha", o.alpha, "PGD step in model-input units (default epsilon/4)");
  cmd->add_option("--iters", o.iterations, "PGD iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--input-scale", o.input_scale, "Raw units per model-input unit");
  cmd->add_option("--task", task, "Task type")->check(CLI::IsMember({"t1", "t2", "t3", "t4"}));
  cmd->add_option("--threshold", o.threshold, "Flag when the metric exceeds this");
  cmd->add_option("--seed", o.seed, "Seed for all randomness");
  cmd->add_flag("--random-start", o.random_start, "Start PGD from a random point in the ball");
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--model-call", o.task.model_call, "Extern that stands for the model");
  cmd->add_option("--sink", o.task.sink, "Extern the post-processing reports through");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recon: processing-code slicing, model rebuild and robustness assessment"};
  app.set_version_flag("--version", std::string(RECON_VERSION));
  app.require_subcommand(1);

  std::string mir, sigs, out, slices, sim, model, weights, pprog, dataset, config, which = "both";
  std::string task = "t1";
  AttackOptions opts;

  auto* slice = app.add_subcommand("slice", "Find framework calls and slice pre/post processing");
  slice->add_option("mir", mir, "MIR program")->required();
  slice->add_option("signatures", sigs, "Framework signature config")->required();
  slice->add_option("--out", out, "Output directory")->required();

  auto* gen = app.add_subcommand("gen", "Generate a processing program from slices");
  gen->add_option("slices", slices, "slices.lst from 'slice'")->required();
  gen->add_option("mir", mir, "MIR program")->required();
  gen->add_option("--out", out, "Output PPROG file")->required();
  gen->add_option("--which", which, "Slices to emit")->check(CLI::IsMember({"pre", "post", "both"}));

  auto* rebuild = app.add_subcommand("rebuild", "Rebuild a trainable model from a SIM file");
  rebuild->add_option("sim", sim, "SIM manifest")->required();
  rebuild->add_option("--out", out, "Output directory")->required();

  auto* attack = app.add_subcommand("attack", "PGD robustness assessment");
  attack->add_option("model", model, "MBUILD script")->required();
  attack->add_option("pprog", pprog, "Processing program")->required();
  attack->add_option("dataset", dataset, "Dataset labels manifest")->required();
  attack->add_option("--weights", weights, "Weights container (default: script with .rwts)");
  attack->add_option("--out", out, "Report file")->required();
  add_attack_flags(attack, opts, task);

  auto* pipeline = app.add_subcommand("pipeline", "Run slice, gen, rebuild and attack from a config");
  pipeline->add_option("config", config, "Pipeline config file")->required();
  pipeline->add_option("--out", out, "Override the output directory");
  AttackOptions overrides;
  std::string override_task;
  add_attack_flags(pipeline, overrides, override_task);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*slice) {
      recon::cli::cmd_slice(mir, sigs, out);
    } else if (*gen) {
      using recon::codegen::SliceSelection;
      const auto sel = which == "pre" ? SliceSelection::Pre
                       : which == "post" ? SliceSelection::Post
                                         : SliceSelection::Both;
      recon::cli::cmd_gen(slices, mir, out, sel);
    } else if (*rebuild) {
      recon::cli::cmd_rebuild(sim, out);
    } else if (*attack) {
      opts.task.type = recon::robust::task_from_string(task);
      if (weights.empty()) weights = std::filesystem::path(model).replace_extension(".rwts").string();
      const auto report = recon::cli::cmd_attack(model, weights, pprog, dataset, opts, out);
      for (const auto& run : report.runs)
        std::cout << "epsilon " << recon::robust::format_double(run.config.epsilon_raw) << ": metric "
                  << recon::robust::format_double(run.aggregate)
                  << (run.flagged ? " flagged\n" : " not flagged\n");
    } else if (*pipeline) {
      auto cfg = recon::cli::load_config(config);
      // Flags given on the command line win over the config file.
      auto given = [&](const char* name) { return pipeline->count(name) > 0; };
      if (!out.empty()) cfg.out = out;
      if (given("--epsilon")) cfg.attack.epsilons = overrides.epsilons;
      if (given("--alpha")) cfg.attack.alpha = overrides.alpha;
      if (given("--iters")) cfg.attack.iterations = overrides.iterations;
      if (given("--input-scale")) cfg.attack.input_scale = overrides.input_scale;
      if (given("--task")) cfg.attack.task.type = recon::robust::task_from_string(override_task);
      if (given("--threshold")) cfg.attack.threshold = overrides.threshold;
      if (given("--seed")) cfg.attack.seed = overrides.seed;
      if (given("--random-start")) cfg.attack.random_start = overrides.random_start;
      if (given("--jobs")) cfg.attack.jobs = overrides.jobs;
      if (given("--model-call")) cfg.attack.task.model_call = overrides.task.model_call;
      if (given("--sink")) cfg.attack.task.sink = overrides.task.sink;
      recon::cli::cmd_pipeline(cfg);
      std::cout << "artifacts written to " << cfg.out.string() << '\n';
    }
  } catch (const recon::Error& e) {
    std::cerr << "recon: " << e.what() << '\n';
    return recon::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "recon: internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
