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

// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is the number of failed criteria.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "architectures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "recon/image.hpp"
#include "recon/pipeline.hpp"
#include "recon/rebuild.hpp"
#include "recon/robustness.hpp"
#include "recon/runtime.hpp"
#include "recon/sim.hpp"
#include "reference.hpp"

namespace fs = std::filesystem;
using namespace recon;

namespace {

// Pinned tolerances and limits.
constexpr double kForwardTol = 1e-6;      // rebuilt f32 model vs reference
constexpr double kGradTol = 1e-4;         // norm-wise relative, central differences
constexpr double kGradStep = 1e-5;
constexpr double kClosedFormTol = 1e-12;  // one PGD step on the linear fixture
constexpr double kBallSlack = 1e-15;      // (x + eps) - x rounding
constexpr double kSsimTol = 1e-10;        // moment form vs centred form
constexpr double kSlicingSeconds = 60, kGradSeconds = 120, kE2eSeconds = 300;

const fs::path kFixtures = RECON_FIXTURE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

Outcome criterion_slicing() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = testing::check_slicing(2026, 100, 20);
  const double t = seconds_since(t0);
  Outcome o{r.ok() && t < kSlicingSeconds,
            fmt("%d/%d programs x 20 inputs, %d comparisons, %.1f s (limit %.0f s)", r.passed,
                r.cases, r.checks, t, kSlicingSeconds)};
  if (!r.first_failure.empty()) o.detail += "; first failure: " + first_line(r.first_failure);
  return o;
}

Outcome criterion_structurization() {
  const auto r = testing::check_structurization(2027, 100, 20, 20);
  Outcome o{r.ok(), fmt("%d/%d CFGs (<= 20 nodes) x 20 inputs", r.passed, r.cases)};
  if (!r.first_failure.empty()) o.detail += "; first failure: " + first_line(r.first_failure);
  return o;
}

Outcome criterion_ordering() {
  const auto r = testing::check_ordering(2028, 60);
  const int ordered = r.passed - r.rejections;
  Outcome o{r.ok() && r.rejections > 0 && ordered > 0,
            fmt("%d/%d instances: %d ordered and run with write-before-read checks, %d cyclic "
                "rejected",
                r.passed, r.cases, ordered, r.rejections)};
  if (!r.first_failure.empty()) o.detail += "; first failure: " + first_line(r.first_failure);
  return o;
}

std::vector<const graph::GraphNode*> operators(const graph::ComputationalGraph& g) {
  std::vector<const graph::GraphNode*> out;
  for (const auto& n : g.nodes)
    if (n.kind == graph::GraphNode::Kind::Operator) out.push_back(&n);
  return out;
}

Outcome criterion_round_trip() {
  const auto archs = testing::architectures();
  std::set<std::string> covered;
  int ok = 0;
  double worst_fwd = 0, worst_q8_ratio = 0;
  std::string failure;
  std::mt19937_64 rng(404);
  for (const auto& a : archs) {
    const auto& g = a.graph;
    for (const auto* n : operators(g)) {
      const std::string op(rt::to_string(n->op));
      switch (n->op) {
        case rt::OpType::Conv2D:
        case rt::OpType::DepthwiseConv2D:
        case rt::OpType::Conv2DTranspose:
        case rt::OpType::MaxPooling:
        case rt::OpType::AveragePooling:
          covered.insert(op + "/" + std::string(rt::to_string(n->attrs.padding)));
          break;
        case rt::OpType::UpSampling:
        case rt::OpType::Pad:
        case rt::OpType::MirrorPad:
        case rt::OpType::Space2Batch: covered.insert(op); break;
        default: break;
      }
    }
    auto fail_with = [&](const std::string& why) {
      if (failure.empty()) failure = a.name + ": " + why;
    };
    try {
      const rt::Tensor x = testing::random_tensor(rng, g.nodes[g.inputs[0]].shape);
      const rt::Tensor want = testing::ref_forward(g, x);

      // f32: exact structure and attributes, forward within kForwardTol.
      const auto r = graph::rebuild(graph::strip(g));
      const auto ro = operators(r), go = operators(g);
      bool attrs_equal = ro.size() == go.size();
      for (std::size_t i = 0; attrs_equal && i < ro.size(); ++i)
        attrs_equal = ro[i]->op == go[i]->op && ro[i]->attrs == go[i]->attrs && ro[i]->complete;
      if (!attrs_equal || !(r == g)) {
        fail_with("f32 rebuild differs from the original graph");
        continue;
      }
      rt::Session s(r);
      const double fwd = rt::max_abs_diff(s.forward(x), want);
      worst_fwd = std::max(worst_fwd, fwd);
      if (fwd > kForwardTol) {
        fail_with(fmt("f32 forward off by %.3g", fwd));
        continue;
      }

      // q8: same attributes, weights within s/2, output within the propagated bound.
      const auto sq = graph::strip(g, graph::Quantization::Q8);
      const auto rq = graph::rebuild(sq);
      const auto qo = operators(rq);
      bool q_attrs = qo.size() == go.size();
      for (std::size_t i = 0; q_attrs && i < qo.size(); ++i)
        q_attrs = qo[i]->op == go[i]->op && qo[i]->attrs == go[i]->attrs;
      if (!q_attrs) {
        fail_with("q8 rebuild lost attributes");
        continue;
      }
      std::vector<double> werr(g.nodes.size(), 0.0);
      bool weights_ok = true;
      for (const auto& op : sq.ops) {
        if (op.opcode != graph::opcode::kDequantize) continue;
        const auto* qt = sq.tensor(op.inputs[0]);
        const auto orig = static_cast<std::size_t>(op.outputs[0]);
        const auto& rebuilt = rq.nodes[rq.find("t" + std::to_string(qt->id))].value;
        const auto& original = g.nodes[orig].value;
        double max_abs = 0;
        for (double v : original.data) max_abs = std::max(max_abs, std::abs(v));
        const double limit = *qt->scale / 2 * (1 + 1e-9) + max_abs * 0x1p-24;
        if (rt::max_abs_diff(rebuilt, original) > limit) weights_ok = false;
        werr[orig] = limit;
      }
      if (!weights_ok) {
        fail_with("a dequantized weight is further than s/2 from the original");
        continue;
      }
      rt::Session sqs(rq);
      const double q_err = rt::max_abs_diff(sqs.forward(x), want);
      const double bound = testing::quant_error_bound(g, x, werr);
      worst_q8_ratio = std::max(worst_q8_ratio, q_err / bound);
      if (q_err > bound) {
        fail_with(fmt("q8 output error %.3g exceeds bound %.3g", q_err, bound));
        continue;
      }
      ++ok;
    } catch (const std::exception& e) {
      fail_with(e.what());
    }
  }
  const std::vector<std::string> rows = {
      "Conv2D/valid",          "Conv2D/same",          "DepthwiseConv2D/valid",
      "DepthwiseConv2D/same",  "Conv2DTranspose/valid", "Conv2DTranspose/same",
      "MaxPooling/valid",      "MaxPooling/same",      "AveragePooling/valid",
      "AveragePooling/same",   "UpSampling",           "Pad",
      "MirrorPad",             "Space2Batch"};
  std::string missing;
  std::size_t hit = 0;
  for (const auto& row : rows) {
    if (covered.count(row)) ++hit;
    else missing += " " + row;
  }
  Outcome o{ok == static_cast<int>(archs.size()) && archs.size() >= 10 && missing.empty(),
            fmt("%d/%zu architectures, %zu/%zu rule/padding rows covered, worst f32 error %.2g "
                "(tol %.0e), worst q8 error/bound %.2f",
                ok, archs.size(), hit, rows.size(), worst_fwd, kForwardTol, worst_q8_ratio)};
  if (!missing.empty()) o.detail += "; missing:" + missing;
  if (!failure.empty()) o.detail += "; " + failure;
  return o;
}

Outcome criterion_dequantization() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> log_scale(-12, 2);
  std::uniform_int_distribution<std::int64_t> zero(0, 255);
  std::vector<std::uint8_t> q(256);
  for (int i = 0; i < 256; ++i) q[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  int exact = 0;
  for (int k = 0; k < 20; ++k) {
    const double s = std::exp2(log_scale(rng));
    const std::int64_t z = zero(rng);
    const auto v = graph::dequantize(q, {256}, s, z);
    for (int i = 0; i < 256; ++i) {
      const double d = static_cast<double>(i - z);  // exact integer
      const double got = v[static_cast<std::size_t>(i)];
      // Correctly rounded product: equal to the IEEE product, and the exact
      // residual recovered by fma is at most half an ulp.
      const double resid = std::fma(s, d, -got);
      const double half_ulp = (std::nextafter(std::abs(got), INFINITY) - std::abs(got)) / 2;
      if (got == s * d && std::abs(resid) <= half_ulp) ++exact;
    }
  }
  return {exact == 20 * 256, fmt("%d/%d values exact over 20 (s, z) pairs", exact, 20 * 256)};
}

Outcome criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::string worst_case;
  int ops = 0, cases = 0;
  for (auto op : testing::all_ops()) {
    const auto r = testing::check_gradients(op, 600 + static_cast<std::uint64_t>(op), 5, kGradStep);
    ++ops;
    cases += r.cases;
    if (r.worst >= worst) {
      worst = r.worst;
      worst_case = r.worst_case;
    }
  }
  const double t = seconds_since(t0);
  return {worst <= kGradTol && t < kGradSeconds && cases >= 5 * ops,
          fmt("%d ops x 5 shapes, worst relative error %.2g (tol %.0e, %s), %.2f s (limit %.0f s)",
              ops, worst, kGradTol, worst_case.c_str(), t, kGradSeconds)};
}

std::vector<rt::Tensor> toy_inputs(const graph::ComputationalGraph& g, std::size_t count) {
  const auto ds = data::load_dataset(kFixtures / "toy" / "data" / "labels.txt");
  std::vector<rt::Tensor> out;
  for (std::size_t i = 0; i < std::min(count, ds.samples.size()); ++i) {
    rt::Tensor x(g.nodes[g.inputs[0]].shape);
    const auto& px = ds.samples[i].image.pixels;
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = px.at(k) / 255.0;
    out.push_back(std::move(x));
  }
  return out;
}

Outcome criterion_pgd() {
  int checked_iters = 0, violations = 0, zero_ok = 0, zero_runs = 0;
  auto run = [&](rt::Session& s, const rt::Tensor& x, const rt::Tensor& target,
                 robust::AttackConfig cfg) {
    const double eps = cfg.epsilon();
    const auto adv = robust::pgd_attack(s, x, target, cfg, [&](int, const rt::Tensor& xt) {
      ++checked_iters;
      for (std::size_t i = 0; i < xt.size(); ++i)
        if (std::abs(xt[i] - x[i]) > eps + kBallSlack || xt[i] < cfg.clamp_lo ||
            xt[i] > cfg.clamp_hi)
          ++violations;
    });
    if (eps == 0) {
      ++zero_runs;
      zero_ok += adv == x;
    }
    return adv;
  };

  // Toy CNN fixture.
  const auto toy = graph::rebuild(graph::load_sim(kFixtures / "toy" / "toy_cnn.sim"));
  rt::Session toy_s(toy);
  for (const auto& x : toy_inputs(toy, 6)) {
    const auto target = toy_s.forward(x);
    for (double eps : {0.0, 2.0, 8.0}) {
      robust::AttackConfig cfg;
      cfg.epsilon_raw = eps;
      run(toy_s, x, target, cfg);
      cfg.random_start = true;
      cfg.seed = 9;
      if (eps > 0) cfg.alpha = 3 * cfg.epsilon();
      run(toy_s, x, target, cfg);
    }
  }

  // Linear fixture: one step against the closed form.
  std::mt19937_64 rng(77);
  double worst_closed = 0;
  for (int k = 0; k < 20; ++k) {
    const auto lin = testing::linear_model(6, 3, 100 + static_cast<std::uint64_t>(k));
    rt::Session s(lin);
    const auto& w = lin.nodes[lin.nodes.back().inputs[1]].value;  // [in, out]
    const auto& b = lin.nodes[lin.nodes.back().inputs[2]].value;
    const rt::Tensor x = testing::random_tensor(rng, {1, 6}, 0.0, 1.0);
    const rt::Tensor t = testing::random_tensor(rng, {1, 3});
    for (double eps : {0.0, 8.0, 40.0}) {
      robust::AttackConfig cfg;
      cfg.epsilon_raw = eps;
      cfg.iterations = 1;
      if (k % 2 && eps > 0) cfg.alpha = 2.5 * cfg.epsilon();  // projection binds
      const auto adv = run(s, x, t, cfg);
      const double e = cfg.epsilon(), a = cfg.step();
      for (std::int64_t i = 0; i < 6; ++i) {
        double grad = 0;  // d/dx_i of mean((xW + b - t)^2)
        for (std::int64_t j = 0; j < 3; ++j) {
          double y = b[static_cast<std::size_t>(j)];
          for (std::int64_t m = 0; m < 6; ++m)
            y += x[static_cast<std::size_t>(m)] * w[static_cast<std::size_t>(m * 3 + j)];
          grad += 2.0 / 3.0 * (y - t[static_cast<std::size_t>(j)]) * w[static_cast<std::size_t>(i * 3 + j)];
        }
        const double xi = x[static_cast<std::size_t>(i)];
        const double stepped = xi + a * ((grad > 0) - (grad < 0));
        const double want = std::clamp(std::clamp(stepped, xi - e, xi + e), 0.0, 1.0);
        worst_closed = std::max(worst_closed, std::abs(adv[static_cast<std::size_t>(i)] - want));
      }
    }
  }
  return {violations == 0 && zero_ok == zero_runs && worst_closed <= kClosedFormTol,
          fmt("%d iterates inside the eps-ball and clamp range (%d violations), eps=0 identity "
              "%d/%d, linear closed form max diff %.2g (tol %.0e)",
              checked_iters, violations, zero_ok, zero_runs, worst_closed, kClosedFormTol)};
}

Outcome criterion_metrics() {
  std::mt19937_64 rng(88);
  int datasets = 0, agree = 0;
  double worst_ssim = 0;
  for (int k = 0; k < 200; ++k) {
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    std::uniform_int_distribution<std::int64_t> label(0, 3);
    std::vector<std::int64_t> y(static_cast<std::size_t>(n)), ya(y.size());
    for (auto& v : y) v = label(rng);
    for (auto& v : ya) v = label(rng);
    std::vector<std::vector<robust::Box>> boxes, attacked;
    for (int i = 0; i < n; ++i) {
      boxes.push_back(testing::random_boxes(rng));
      attacked.push_back(testing::perturb_boxes(rng, boxes.back()));
    }
    const std::size_t mh = 3, mw = 4;
    std::vector<std::int64_t> map(mh * mw * static_cast<std::size_t>(n)), mapa(map.size());
    for (auto& v : map) v = label(rng);
    for (std::size_t i = 0; i < map.size(); ++i) mapa[i] = label(rng) == 0 ? label(rng) : map[i];
    const rt::Tensor img = testing::random_tensor(rng, {1, 10, 9, 2}, 0.0, 1.0);
    rt::Tensor img_a = img;
    for (auto& v : img_a.data) v = std::clamp(v + std::normal_distribution<double>(0, 0.1)(rng), 0.0, 1.0);

    ++datasets;
    const double d4 = std::abs(robust::metric_type4(img, img_a) - (1 - testing::oracle_ssim(img, img_a)));
    worst_ssim = std::max(worst_ssim, d4);
    bool same = robust::metric_type1(y, ya) == testing::oracle_type1(y, ya) &&
                robust::metric_type2(boxes, attacked) == testing::oracle_type2(boxes, attacked) &&
                robust::metric_type3(map, mapa) == testing::oracle_type3(map, mapa) &&
                d4 <= kSsimTol;
    for (std::size_t i = 0; i < boxes.size() && same; ++i)
      same = robust::pair_boxes(boxes[i], attacked[i]) == testing::scan_pairing(boxes[i], attacked[i]);
    agree += same;
  }
  const double three_of_five = robust::metric_type1({0, 0, 0, 0, 0}, {1, 1, 1, 0, 0});
  const bool strict = three_of_five == 0.6 && !robust::flagged(three_of_five, 0.6) &&
                      robust::flagged(std::nextafter(0.6, 1.0), 0.6) && robust::flagged(0.61, 0.6);
  return {agree == datasets && strict,
          fmt("%d/%d datasets (1..8 samples) match brute force, worst type-4 diff %.2g (tol %.0e); "
              "threshold strict: 0.6 %s, 0.6+ulp %s",
              agree, datasets, worst_ssim, kSsimTol, robust::flagged(0.6, 0.6) ? "flags" : "does not flag",
              robust::flagged(std::nextafter(0.6, 1.0), 0.6) ? "flags" : "does not flag")};
}

struct RunSummary {
  double epsilon_raw = -1, aggregate = -1;
  std::string verdict;
};

std::vector<RunSummary> read_report(const fs::path& p) {
  std::ifstream in(p);
  std::vector<RunSummary> runs;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "run") runs.emplace_back();
    else if (runs.empty()) continue;
    else if (key == "epsilon_raw") ls >> runs.back().epsilon_raw;
    else if (key == "aggregate") ls >> runs.back().aggregate;
    else if (key == "verdict") ls >> runs.back().verdict;
  }
  return runs;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("recon-acceptance-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path run_pipeline(const std::string& name) {
  auto cfg = cli::load_config(kFixtures / "toy" / "pipeline.conf");
  cfg.out = scratch(name);
  cli::cmd_pipeline(cfg);
  return cfg.out;
}

Outcome criterion_e2e() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = run_pipeline("e2e");
  const double t = seconds_since(t0);
  const auto runs = read_report(out / "report.rrep");
  const RunSummary* clean = nullptr;
  const RunSummary* attacked = nullptr;
  for (const auto& r : runs) {
    if (r.epsilon_raw == 0) clean = &r;
    if (r.epsilon_raw == 8) attacked = &r;
  }
  if (!clean || !attacked) return {false, "report lacks the eps=0 or eps=8 run"};
  const bool pass = attacked->aggregate > 0.6 && attacked->verdict == "flagged" &&
                    clean->aggregate <= 0.6 && clean->verdict == "not-flagged" && t < kE2eSeconds;
  return {pass, fmt("toy CNN, 20 samples, 10 iterations: eps=8 type-1 %.2f %s, eps=0 type-1 %.2f "
                    "%s, %.1f s (limit %.0f s)",
                    attacked->aggregate, attacked->verdict.c_str(), clean->aggregate,
                    clean->verdict.c_str(), t, kE2eSeconds)};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    files[fs::relative(e.path(), root).generic_string()] = os.str();
  }
  return files;
}

Outcome criterion_idempotence() {
  const auto a = tree(run_pipeline("first")), b = tree(run_pipeline("second"));
  std::size_t bytes = 0;
  for (const auto& [name, data] : a) bytes += data.size();
  return {!a.empty() && a == b,
          fmt("%zu files, %zu bytes, trees %s", a.size(), bytes, a == b ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"slicing semantic oracle", criterion_slicing},
      {"structurization oracle", criterion_structurization},
      {"ordering correctness", criterion_ordering},
      {"attribute-completion round trip", criterion_round_trip},
      {"dequantization exactness", criterion_dequantization},
      {"gradient checks", criterion_gradients},
      {"PGD contract", criterion_pgd},
      {"metric oracles", criterion_metrics},
      {"end-to-end flag demonstration", criterion_e2e},
      {"idempotence", criterion_idempotence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(fs::temp_directory_path() / ("recon-acceptance-" + std::to_string(::getpid())));
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
