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

#include "recon/robustness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <thread>

#include "recon/error.hpp"

namespace recon::robust {

using rt::Tensor;

void AttackConfig::validate() const {
  if (!(epsilon_raw >= 0)) fail(ErrorKind::InvalidConfig, "epsilon must be >= 0");
  if (!(input_scale > 0)) fail(ErrorKind::InvalidConfig, "input scale must be > 0");
  if (alpha && !(*alpha > 0)) fail(ErrorKind::InvalidConfig, "alpha must be > 0");
  if (iterations < 1) fail(ErrorKind::InvalidConfig, "iterations must be >= 1");
  if (!(clamp_lo <= clamp_hi)) fail(ErrorKind::InvalidConfig, "empty clamp range");
}

Tensor pgd_attack(rt::Session& session, const Tensor& x, const Tensor& target,
                  const AttackConfig& cfg, const IterationHook& hook) {
  cfg.validate();
  const double eps = cfg.epsilon();
  const double step = cfg.step();
  auto project = [&](Tensor& xa) {
    for (std::size_t i = 0; i < xa.size(); ++i) {
      xa[i] = std::clamp(xa[i], x[i] - eps, x[i] + eps);
      xa[i] = std::clamp(xa[i], cfg.clamp_lo, cfg.clamp_hi);
    }
  };
  Tensor xa = x;
  if (cfg.random_start && eps > 0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-eps, eps);
    for (auto& v : xa.data) v += u(rng);
    project(xa);
  }
  for (int it = 0; it < cfg.iterations; ++it) {
    const Tensor out = session.forward(xa);
    const auto [loss, dout] = rt::mse_loss(out, target);
    (void)loss;
    const Tensor g = session.backward(dout);
    for (std::size_t i = 0; i < xa.size(); ++i) {
      const double s = g[i] > 0 ? 1.0 : (g[i] < 0 ? -1.0 : 0.0);
      xa[i] += step * s;
    }
    project(xa);
    if (hook) hook(it, xa);
  }
  return xa;
}

double iou(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = iw * ih;
  const double area_a = std::max(0.0, a.x1 - a.x0) * std::max(0.0, a.y1 - a.y0);
  const double area_b = std::max(0.0, b.x1 - b.x0) * std::max(0.0, b.y1 - b.y0);
  const double uni = area_a + area_b - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<std::optional<std::size_t>> pair_boxes(const std::vector<Box>& orig,
                                                   const std::vector<Box>& attacked,
                                                   double min_iou) {
  struct Cand {
    double iou;
    std::size_t i, j;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < orig.size(); ++i)
    for (std::size_t j = 0; j < attacked.size(); ++j)
      if (const double v = iou(orig[i], attacked[j]); v >= min_iou) cands.push_back({v, i, j});
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.iou > b.iou; });
  std::vector<std::optional<std::size_t>> match(orig.size());
  std::vector<bool> used(attacked.size(), false);
  for (const auto& c : cands) {
    if (match[c.i] || used[c.j]) continue;
    match[c.i] = c.j;
    used[c.j] = true;
  }
  return match;
}

double metric_type1(const std::vector<std::int64_t>& labels, const std::vector<std::int64_t>& attacked) {
  if (labels.empty()) fail(ErrorKind::EmptyDataset, "no labels to compare");
  if (labels.size() != attacked.size()) fail(ErrorKind::ShapeMismatch, "label lists differ in length");
  std::size_t changed = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) changed += labels[i] != attacked[i];
  return static_cast<double>(changed) / static_cast<double>(labels.size());
}

double metric_type2(const std::vector<std::vector<Box>>& orig,
                    const std::vector<std::vector<Box>>& attacked) {
  if (orig.size() != attacked.size()) fail(ErrorKind::ShapeMismatch, "detection lists differ in length");
  std::size_t total = 0, changed = 0;
  for (std::size_t s = 0; s < orig.size(); ++s) {
    const auto match = pair_boxes(orig[s], attacked[s]);
    for (std::size_t i = 0; i < orig[s].size(); ++i) {
      ++total;
      if (!match[i] || attacked[s][*match[i]].cls != orig[s][i].cls) ++changed;
    }
  }
  if (total == 0) fail(ErrorKind::EmptyDetections, "no original detections");
  return static_cast<double>(changed) / static_cast<double>(total);
}

double metric_type3(const std::vector<std::int64_t>& map, const std::vector<std::int64_t>& attacked) {
  if (map.size() != attacked.size())
    fail(ErrorKind::ShapeMismatch, "label maps have " + std::to_string(map.size()) + " and " +
                                       std::to_string(attacked.size()) + " pixels");
  if (map.empty()) fail(ErrorKind::ShapeMismatch, "empty label map");
  std::size_t changed = 0;
  for (std::size_t i = 0; i < map.size(); ++i) changed += map[i] != attacked[i];
  return static_cast<double>(changed) / static_cast<double>(map.size());
}

namespace {

struct ImageDims {
  std::int64_t h, w, c;
};

ImageDims image_dims(const rt::Shape& s) {
  if (s.size() == 2) return {s[0], s[1], 1};
  if (s.size() == 3) return {s[0], s[1], s[2]};
  if (s.size() == 4 && s[0] == 1) return {s[1], s[2], s[3]};
  fail(ErrorKind::ShapeMismatch, "not an image shape: " + rt::format_shape(s));
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b, const SsimParams& p) {
  if (a.shape != b.shape)
    fail(ErrorKind::ShapeMismatch, "ssim of " + rt::format_shape(a.shape) + " and " + rt::format_shape(b.shape));
  const auto [h, w, c] = image_dims(a.shape);
  if (p.window < 1 || h < p.window || w < p.window)
    fail(ErrorKind::ImageTooSmall, std::to_string(h) + "x" + std::to_string(w) +
                                       " image is smaller than the " + std::to_string(p.window) +
                                       "x" + std::to_string(p.window) + " window");
  const double c1 = (p.k1 * p.range) * (p.k1 * p.range);
  const double c2 = (p.k2 * p.range) * (p.k2 * p.range);
  const double n = static_cast<double>(p.window * p.window);
  double total = 0.0;
  for (std::int64_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    std::int64_t count = 0;
    for (std::int64_t i = 0; i + p.window <= h; ++i)
      for (std::int64_t j = 0; j + p.window <= w; ++j) {
        double ma = 0, mb = 0;
        for (std::int64_t di = 0; di < p.window; ++di)
          for (std::int64_t dj = 0; dj < p.window; ++dj) {
            const auto k = static_cast<std::size_t>(((i + di) * w + (j + dj)) * c + ch);
            ma += a[k];
            mb += b[k];
          }
        ma /= n;
        mb /= n;
        double va = 0, vb = 0, cov = 0;
        for (std::int64_t di = 0; di < p.window; ++di)
          for (std::int64_t dj = 0; dj < p.window; ++dj) {
            const auto k = static_cast<std::size_t>(((i + di) * w + (j + dj)) * c + ch);
            const double da = a[k] - ma, db = b[k] - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
          }
        va /= n;
        vb /= n;
        cov /= n;
        sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    total += sum / static_cast<double>(count);
  }
  return total / static_cast<double>(c);
}

double metric_type4(const Tensor& out, const Tensor& attacked, const SsimParams& p) {
  return 1.0 - ssim(out, attacked, p);
}

bool flagged(double metric, double threshold) { return metric > threshold; }

std::string to_string(TaskType t) {
  switch (t) {
    case TaskType::T1: return "t1";
    case TaskType::T2: return "t2";
    case TaskType::T3: return "t3";
    case TaskType::T4: return "t4";
  }
  return "t1";
}

TaskType task_from_string(const std::string& s) {
  if (s == "t1") return TaskType::T1;
  if (s == "t2") return TaskType::T2;
  if (s == "t3") return TaskType::T3;
  if (s == "t4") return TaskType::T4;
  fail(ErrorKind::InvalidConfig, "unknown task '" + s + "' (expected t1, t2, t3 or t4)");
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

namespace {

using interp::Value;

double number(const mir::Scalar& s) {
  return std::visit([](auto v) { return static_cast<double>(v); }, s);
}

double number(const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto d = std::get_if<double>(&v)) return *d;
  fail(ErrorKind::TypeMismatch, "expected a number, got an array");
}

std::int64_t integer(const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return *i;
  if (auto d = std::get_if<double>(&v)) return static_cast<std::int64_t>(std::llround(*d));
  fail(ErrorKind::TypeMismatch, "expected an integer, got an array");
}

const interp::Array& array(const Value& v) {
  if (auto a = std::get_if<interp::Array>(&v)) return *a;
  fail(ErrorKind::TypeMismatch, "expected an array");
}

// Decoded task output for one program run.
struct Decoded {
  std::int64_t label = 0;
  std::vector<Box> boxes;
  std::vector<std::int64_t> labels;
  Tensor image;
  std::string summary;
};

Decoded decode(const interp::RunResult& r, const TaskSpec& task) {
  Decoded d;
  std::vector<const std::vector<Value>*> events;
  for (const auto& e : r.sinks)
    if (e.name == task.sink) events.push_back(&e.args);
  if (events.empty()) fail(ErrorKind::TypeMismatch, "processing program never reported through '" + task.sink + "'");
  const auto& last = *events.back();
  if (last.empty()) fail(ErrorKind::TypeMismatch, "sink '" + task.sink + "' called without arguments");
  switch (task.type) {
    case TaskType::T1:
      d.label = integer(last[0]);
      d.summary = std::to_string(d.label);
      break;
    case TaskType::T2:
      for (const auto* ev : events) {
        if (ev->size() == 5) {
          d.boxes.push_back({integer((*ev)[0]), number((*ev)[1]), number((*ev)[2]), number((*ev)[3]),
                             number((*ev)[4])});
        } else if (ev->size() == 1 && std::holds_alternative<interp::Array>((*ev)[0])) {
          const auto& a = array((*ev)[0]);
          if (a.size() % 5) fail(ErrorKind::ShapeMismatch, "box array length is not a multiple of 5");
          for (std::size_t k = 0; k < a.size(); k += 5)
            d.boxes.push_back({static_cast<std::int64_t>(std::llround(number(a[k]))), number(a[k + 1]),
                               number(a[k + 2]), number(a[k + 3]), number(a[k + 4])});
        } else {
          fail(ErrorKind::TypeMismatch, "detections are reported as (cls, x0, y0, x1, y1)");
        }
      }
      d.summary = "boxes:" + std::to_string(d.boxes.size());
      break;
    case TaskType::T3:
      for (const auto& s : array(last[0])) d.labels.push_back(static_cast<std::int64_t>(std::llround(number(s))));
      d.summary = "px:" + std::to_string(d.labels.size());
      break;
    case TaskType::T4: {
      const auto& a = array(last[0]);
      rt::Shape shape;
      if (last.size() >= 4) shape = {integer(last[1]), integer(last[2]), integer(last[3])};
      else if (task.image_shape) shape = {(*task.image_shape)[0], (*task.image_shape)[1], (*task.image_shape)[2]};
      else fail(ErrorKind::ShapeMismatch, "type-4 output needs an image shape");
      std::vector<double> v;
      for (const auto& s : a) v.push_back(number(s));
      if (static_cast<std::int64_t>(v.size()) != rt::numel(shape))
        fail(ErrorKind::ShapeMismatch, "image output has " + std::to_string(v.size()) + " values for shape " +
                                           rt::format_shape(shape));
      d.image = Tensor(shape, std::move(v));
      d.summary = "values:" + std::to_string(d.image.size());
      break;
    }
  }
  return d;
}

interp::Environment sample_env(const data::Image& img) {
  interp::Environment env;
  interp::Array px;
  px.reserve(img.pixels.size());
  for (auto p : img.pixels) px.emplace_back(std::int64_t{p});
  env.inputs["pixels"] = std::move(px);
  env.inputs["width"] = img.width;
  env.inputs["height"] = img.height;
  env.inputs["channels"] = img.channels;
  return env;
}

Tensor to_model_input(const std::vector<Value>& args, const rt::Shape& shape) {
  if (args.size() != 1) fail(ErrorKind::ShapeMismatch, "the model takes exactly one array argument");
  const auto& a = array(args[0]);
  if (static_cast<std::int64_t>(a.size()) != rt::numel(shape))
    fail(ErrorKind::ShapeMismatch, "model input has " + std::to_string(a.size()) + " values, model expects " +
                                       rt::format_shape(shape));
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& s : a) v.push_back(number(s));
  return Tensor(shape, std::move(v));
}

Value to_value(const Tensor& t) {
  interp::Array a;
  a.reserve(t.size());
  for (double v : t.data) a.emplace_back(v);
  return a;
}

struct SampleOutcome {
  Decoded clean, attacked;
  double linf = 0.0;
};

SampleOutcome run_sample(const codegen::ProcessingProgram& pprog, const graph::ComputationalGraph& model,
                         const data::Sample& sample, const TaskSpec& task, const AttackConfig& cfg) {
  if (model.inputs.size() != 1 || model.outputs.size() != 1)
    fail(ErrorKind::UnsupportedOp, "assessment needs a single-input, single-output model");
  const rt::Shape in_shape = model.nodes[model.inputs[0]].shape;
  rt::Session session(model);

  std::optional<Tensor> x;
  Tensor clean_out;
  auto env = sample_env(sample.image);
  env.host[task.model_call] = [&](const std::vector<Value>& args) -> std::optional<Value> {
    if (x) fail(ErrorKind::UnsupportedOp, "the processing program invokes the model more than once");
    x = to_model_input(args, in_shape);
    clean_out = session.forward(*x);
    return to_value(clean_out);
  };
  SampleOutcome out;
  out.clean = decode(codegen::interpret(pprog, env), task);
  if (!x) fail(ErrorKind::UnboundExtern, "processing program never called '" + task.model_call + "'");

  Tensor target = clean_out;
  if (task.type == TaskType::T1 && !sample.truth.empty()) {
    std::int64_t label = -1;
    const auto& tok = sample.truth[0];
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), label);
    if (ec == std::errc{} && p == tok.data() + tok.size() && label >= 0 &&
        label < static_cast<std::int64_t>(clean_out.size())) {
      target = Tensor(clean_out.shape, 0.0);
      target[static_cast<std::size_t>(label)] = 1.0;
    }
  }
  const Tensor x_adv = pgd_attack(session, *x, target, cfg);
  for (std::size_t i = 0; i < x_adv.size(); ++i) out.linf = std::max(out.linf, std::abs(x_adv[i] - (*x)[i]));

  bool called = false;
  env.host[task.model_call] = [&](const std::vector<Value>& args) -> std::optional<Value> {
    if (called) fail(ErrorKind::UnsupportedOp, "the processing program invokes the model more than once");
    called = true;
    to_model_input(args, in_shape);  // same shape contract as the clean run
    return to_value(session.forward(x_adv));
  };
  out.attacked = decode(codegen::interpret(pprog, env), task);
  return out;
}

}  // namespace

RunReport assess(const codegen::ProcessingProgram& pprog, const graph::ComputationalGraph& model,
                 const data::Dataset& dataset, const TaskSpec& task, const AttackConfig& cfg,
                 double threshold, int jobs) {
  cfg.validate();
  const auto& samples = dataset.samples;
  if (samples.empty()) fail(ErrorKind::EmptyDataset, "dataset has no samples");
  std::vector<std::optional<SampleOutcome>> outcomes(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
  auto work = [&](std::size_t i) {
    try {
      outcomes[i] = run_sample(pprog, model, samples[i], task, cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const auto nthreads = static_cast<std::size_t>(std::clamp(jobs, 1, 256));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < samples.size(); i += nthreads) work(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunReport rep;
  rep.config = cfg;
  std::vector<std::int64_t> l1, l2;
  std::vector<std::vector<Box>> b1, b2;
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& o = *outcomes[i];
    SampleRow row{samples[i].path, o.clean.summary, o.attacked.summary, 0.0, o.linf};
    switch (task.type) {
      case TaskType::T1:
        row.contribution = o.clean.label != o.attacked.label ? 1.0 : 0.0;
        l1.push_back(o.clean.label);
        l2.push_back(o.attacked.label);
        break;
      case TaskType::T2: {
        const auto match = pair_boxes(o.clean.boxes, o.attacked.boxes);
        for (std::size_t k = 0; k < match.size(); ++k)
          if (!match[k] || o.attacked.boxes[*match[k]].cls != o.clean.boxes[k].cls) row.contribution += 1.0;
        b1.push_back(o.clean.boxes);
        b2.push_back(o.attacked.boxes);
        break;
      }
      case TaskType::T3: row.contribution = metric_type3(o.clean.labels, o.attacked.labels); break;
      case TaskType::T4: row.contribution = metric_type4(o.clean.image, o.attacked.image, task.ssim); break;
    }
    sum += row.contribution;
    rep.rows.push_back(std::move(row));
  }
  switch (task.type) {
    case TaskType::T1: rep.aggregate = metric_type1(l1, l2); break;
    case TaskType::T2: rep.aggregate = metric_type2(b1, b2); break;
    default: rep.aggregate = sum / static_cast<double>(samples.size()); break;
  }
  rep.flagged = flagged(rep.aggregate, threshold);
  return rep;
}

std::string format_report(const RobustnessReport& r) {
  std::ostringstream os;
  const auto& t = r.task;
  os << "RREPORT v1\n";
  os << "tool recon " << RECON_VERSION << '\n';
  os << "task " << to_string(t.type) << " model_call=" << t.model_call << " sink=" << t.sink << '\n';
  if (t.type == TaskType::T4)
    os << "ssim window=" << t.ssim.window << " k1=" << format_double(t.ssim.k1)
       << " k2=" << format_double(t.ssim.k2) << " range=" << format_double(t.ssim.range) << '\n';
  os << "threshold " << format_double(r.threshold) << '\n';
  for (std::size_t k = 0; k < r.runs.size(); ++k) {
    const auto& run = r.runs[k];
    const auto& c = run.config;
    os << "run " << k + 1 << '\n';
    os << "  epsilon_raw " << format_double(c.epsilon_raw) << '\n';
    os << "  epsilon " << format_double(c.epsilon()) << '\n';
    os << "  input_scale " << format_double(c.input_scale) << '\n';
    os << "  alpha " << format_double(c.step()) << '\n';
    os << "  iterations " << c.iterations << '\n';
    os << "  clamp " << format_double(c.clamp_lo) << ' ' << format_double(c.clamp_hi) << '\n';
    os << "  random_start " << (c.random_start ? "on" : "off") << '\n';
    os << "  seed " << c.seed << '\n';
    for (const auto& row : run.rows)
      os << "  sample " << row.path << " clean=" << row.clean << " attacked=" << row.attacked
         << " contribution=" << format_double(row.contribution) << " linf=" << format_double(row.linf)
         << '\n';
    os << "  aggregate " << format_double(run.aggregate) << '\n';
    os << "  verdict " << (run.flagged ? "flagged" : "not-flagged") << '\n';
  }
  return os.str();
}

}  // namespace recon::robust
