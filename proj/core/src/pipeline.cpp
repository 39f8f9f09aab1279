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

#include "recon/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "recon/error.hpp"
#include "recon/image.hpp"
#include "recon/mbuild.hpp"
#include "recon/mir.hpp"
#include "recon/sim.hpp"
#include "recon/slicer.hpp"

namespace recon::cli {

namespace {

// Parse errors get the offending file prepended.
template <typename F>
auto with_file(const fs::path& file, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw Error(e.kind(), file.string() + ":" + e.detail());
  }
}

std::string read_text(const fs::path& p) {
  if (!fs::exists(p)) fail(ErrorKind::Io, "cannot open " + p.string());
  return graph::read_file_text(p);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

mir::Program load_mir(const fs::path& p) {
  const auto text = read_text(p);
  return with_file(p, [&] { return mir::parse_mir(text); });
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void cmd_slice(const fs::path& mir, const fs::path& signatures, const fs::path& out_dir) {
  const auto program = load_mir(mir);
  const auto sig_text = read_text(signatures);
  const auto sigs = with_file(signatures, [&] { return slicing::parse_signatures(sig_text); });
  const slicing::SlicingBasis basis(program);
  const auto criteria = slicing::find_criteria(basis, sigs);
  const auto slices = slicing::extract_processing(basis, criteria);
  ensure_dir(out_dir);
  graph::write_file(out_dir / "slices.txt", slicing::format_slice_report(basis, slices));
  graph::write_file(out_dir / "slices.lst", slicing::format_slice_list(basis, slices));
}

void cmd_gen(const fs::path& slice_list, const fs::path& mir, const fs::path& out_file,
             codegen::SliceSelection which) {
  const auto program = load_mir(mir);
  const auto list_text = read_text(slice_list);
  const auto entries = with_file(slice_list, [&] { return slicing::parse_slice_list(list_text); });
  const slicing::SlicingBasis basis(program);
  const auto slices = slicing::resolve_slice_list(basis, entries);
  const auto pprog = codegen::generate(program, slices, which);
  if (out_file.has_parent_path()) ensure_dir(out_file.parent_path());
  graph::write_file(out_file, codegen::print_pprog(pprog));
}

void cmd_rebuild(const fs::path& sim, const fs::path& out_dir) {
  if (!fs::exists(sim)) fail(ErrorKind::Io, "cannot open " + sim.string());
  const auto sg = with_file(sim, [&] { return graph::load_sim(sim); });
  const auto g = graph::rebuild(sg);
  const auto artifacts = graph::generate_model(g);
  ensure_dir(out_dir);
  graph::write_file(out_dir / "model.mbuild", artifacts.script);
  graph::write_file(out_dir / "model.rwts", std::span<const std::uint8_t>(artifacts.weights));
}

robust::RobustnessReport cmd_attack(const fs::path& model_script, const fs::path& weights,
                                    const fs::path& pprog, const fs::path& dataset,
                                    const AttackOptions& opts, const fs::path& out_file) {
  const auto script = read_text(model_script);
  if (!fs::exists(weights)) fail(ErrorKind::Io, "cannot open " + weights.string());
  const auto wbytes = graph::read_file_bytes(weights);
  const auto model = with_file(model_script, [&] { return graph::load_model(script, wbytes); });
  const auto ptext = read_text(pprog);
  const auto program = with_file(pprog, [&] { return codegen::parse_pprog(ptext); });
  if (!fs::exists(dataset)) fail(ErrorKind::Io, "cannot open " + dataset.string());
  const auto ds = with_file(dataset, [&] { return data::load_dataset(dataset); });
  if (opts.epsilons.empty()) fail(ErrorKind::InvalidConfig, "no epsilon given");

  robust::RobustnessReport report;
  report.task = opts.task;
  report.threshold = opts.threshold;
  for (double eps : opts.epsilons) {
    robust::AttackConfig cfg;
    cfg.epsilon_raw = eps;
    cfg.input_scale = opts.input_scale;
    cfg.alpha = opts.alpha;
    cfg.iterations = opts.iterations;
    cfg.seed = opts.seed;
    cfg.random_start = opts.random_start;
    report.runs.push_back(robust::assess(program, model, ds, opts.task, cfg, opts.threshold, opts.jobs));
  }
  if (!out_file.empty()) {
    if (out_file.has_parent_path()) ensure_dir(out_file.parent_path());
    graph::write_file(out_file, robust::format_report(report));
  }
  return report;
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::InvalidConfig, key + ": '" + v + "' is not a number");
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    fail(ErrorKind::InvalidConfig, key + ": '" + v + "' is not an integer");
  return out;
}

std::string trim(std::string s) {
  const auto ws = " \t\r";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir) {
  PipelineConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  auto path = [&](const std::string& v) { return fs::path(v).is_absolute() ? fs::path(v) : base_dir / v; };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(ErrorKind::InvalidConfig, lineno, 1, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto& a = cfg.attack;
    if (key == "mir") cfg.mir = path(val);
    else if (key == "signatures") cfg.signatures = path(val);
    else if (key == "sim") cfg.sim = path(val);
    else if (key == "dataset") cfg.dataset = path(val);
    else if (key == "out") cfg.out = path(val);
    else if (key == "task") a.task.type = robust::task_from_string(val);
    else if (key == "model_call") a.task.model_call = val;
    else if (key == "sink") a.task.sink = val;
    else if (key == "epsilon") {
      a.epsilons.clear();
      std::string item;
      std::istringstream items(val);
      while (std::getline(items, item, ',')) a.epsilons.push_back(parse_double(key, trim(item)));
    } else if (key == "alpha") a.alpha = parse_double(key, val);
    else if (key == "iters") a.iterations = static_cast<int>(parse_int(key, val));
    else if (key == "input_scale") a.input_scale = parse_double(key, val);
    else if (key == "threshold") a.threshold = parse_double(key, val);
    else if (key == "seed") a.seed = static_cast<std::uint64_t>(parse_int(key, val));
    else if (key == "jobs") a.jobs = static_cast<int>(parse_int(key, val));
    else if (key == "random_start") a.random_start = val == "on" || val == "true" || val == "1";
    else if (key == "ssim_window") a.task.ssim.window = parse_int(key, val);
    else if (key == "ssim_range") a.task.ssim.range = parse_double(key, val);
    else throw ParseError(ErrorKind::InvalidConfig, lineno, 1, "unknown key '" + key + "'");
  }
  for (const auto& [name, p] : {std::pair{"mir", &cfg.mir}, {"signatures", &cfg.signatures},
                                {"sim", &cfg.sim}, {"dataset", &cfg.dataset}})
    if (p->empty()) fail(ErrorKind::InvalidConfig, std::string("missing '") + name + "'");
  if (cfg.out.empty()) cfg.out = base_dir / "out";
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  const auto text = read_text(path);
  return with_file(path, [&] { return parse_config(text, path.parent_path()); });
}

void cmd_pipeline(const PipelineConfig& cfg) {
  const auto& out = cfg.out;
  cmd_slice(cfg.mir, cfg.signatures, out);
  cmd_gen(out / "slices.lst", cfg.mir, out / "program.pprog");
  cmd_rebuild(cfg.sim, out);
  cmd_attack(out / "model.mbuild", out / "model.rwts", out / "program.pprog", cfg.dataset, cfg.attack,
             out / "report.rrep");

  std::ostringstream manifest;
  manifest << "RMANIFEST v1\n";
  for (const char* name : {"model.mbuild", "model.rwts", "program.pprog", "report.rrep", "slices.lst", "slices.txt"}) {
    const auto bytes = graph::read_file_bytes(out / name);
    const std::string_view view(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(view)));
    manifest << name << " fnv1a=" << hex << " bytes=" << bytes.size() << '\n';
  }
  graph::write_file(out / "manifest.txt", manifest.str());
}

}  // namespace recon::cli
