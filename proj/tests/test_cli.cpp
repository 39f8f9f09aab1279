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

// Drives the installed command-line tool as a subprocess and checks exit
// codes and artifacts.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "architectures.hpp"
#include "fixtures.hpp"
#include "recon/codegen.hpp"
#include "recon/error.hpp"
#include "recon/mbuild.hpp"
#include "recon/pipeline.hpp"
#include "recon/runtime.hpp"
#include "recon/sim.hpp"
#include "reference.hpp"

namespace recon::cli {
namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("recon_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!HasFailure()) fs::remove_all(dir_);
  }

  // Returns the exit status; stdout and stderr land in out_ and err_.
  int run(const std::string& args) {
    const auto o = dir_ / "stdout.txt", e = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + RECON_CLI + "\" " + args + " > \"" + o.string() +
                            "\" 2> \"" + e.string() + "\"";
    const int status = std::system(cmd.c_str());
    out_ = graph::read_file_text(o);
    err_ = graph::read_file_text(e);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string at(const fs::path& rel) const { return "\"" + (dir_ / rel).string() + "\""; }
  static std::string fx(const char* rel) { return "\"" + testing::fixture(rel).string() + "\""; }
  void write(const fs::path& rel, std::string_view text) { graph::write_file(dir_ / rel, text); }

  fs::path dir_;
  std::string out_, err_;
};

TEST_F(Cli, SliceDemo) {
  write("sigs.txt", "name=infer\n");
  ASSERT_EQ(run("slice " + fx("demo.mir") + " " + at("sigs.txt") + " --out " + at("s")), 0) << err_;
  const auto list = slicing::parse_slice_list(graph::read_file_text(dir_ / "s/slices.lst"));
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0].site, "main:4");
  EXPECT_EQ(list[0].pre, (std::vector<std::string>{"main:1", "main:2", "main:3", "main:4"}));
  EXPECT_EQ(list[0].post, (std::vector<std::string>{"main:4", "main:5", "main:6"}));
  EXPECT_TRUE(fs::exists(dir_ / "s/slices.txt"));
}

TEST_F(Cli, SliceErrors) {
  write("sigs.txt", "name=predict\n");
  EXPECT_EQ(run("slice " + fx("demo.mir") + " " + at("sigs.txt") + " --out " + at("s")), 2);
  EXPECT_NE(err_.find("NoCriterionFound"), std::string::npos) << err_;
  write("bad.mir", "func main():\n  1: x = \n");
  EXPECT_EQ(run("slice " + at("bad.mir") + " " + at("sigs.txt") + " --out " + at("s")), 1);
  EXPECT_NE(err_.find("bad.mir:2:"), std::string::npos) << err_;
}

TEST_F(Cli, GenMatchesTheSource) {
  write("sigs.txt", "name=infer\n");
  ASSERT_EQ(run("slice " + fx("demo.mir") + " " + at("sigs.txt") + " --out " + at("s")), 0);
  ASSERT_EQ(run("gen " + at("s/slices.lst") + " " + fx("demo.mir") + " --out " + at("demo.pprog")), 0)
      << err_;
  ASSERT_EQ(run("gen " + at("s/slices.lst") + " " + fx("demo.mir") + " --which pre --out " +
                at("pre.pprog")),
            0);
  const auto prog = codegen::parse_pprog(graph::read_file_text(dir_ / "demo.pprog"));
  const auto pre = codegen::parse_pprog(graph::read_file_text(dir_ / "pre.pprog"));
  EXPECT_TRUE(pre.outputs.empty());
  const auto src = mir::parse_mir(testing::read_fixture("demo.mir"));
  interp::Environment env;
  env.host["infer"] = [](const std::vector<interp::Value>& a) -> std::optional<interp::Value> {
    return std::get<std::int64_t>(a[0]) + 100;
  };
  for (std::int64_t v : {-3, 0, 11}) {
    env.inputs["input"] = v;
    const auto want = interp::run(src, env), got = codegen::interpret(prog, env);
    ASSERT_EQ(got.sinks.size(), 1u);
    EXPECT_TRUE(interp::bit_equal(got.sinks[0].args[0], want.sinks[0].args[0]));
  }
}

// Two unrelated entry points linked only through a field: the writer must
// run first even though the reader comes first in the file.
TEST_F(Cli, GenOrdersFieldGroups) {
  write("app.mir",
        "extern infer/1\nextern out/1\nfield S.F\nfunc post():\n  1: r = S.F\n  2: y = call infer(r)\n  3: call out(y)\n"
        "  4: return\nfunc pre():\n  1: a = const 4\n  2: S.F = a\n  3: return\n");
  write("sigs.txt", "name=infer\n");
  ASSERT_EQ(run("slice " + at("app.mir") + " " + at("sigs.txt") + " --out " + at("s")), 0) << err_;
  ASSERT_EQ(run("gen " + at("s/slices.lst") + " " + at("app.mir") + " --out " + at("p.pprog")), 0)
      << err_;
  const auto p = codegen::parse_pprog(graph::read_file_text(dir_ / "p.pprog"));
  EXPECT_EQ(p.order, (std::vector<std::string>{"pre", "post"}));
}

TEST_F(Cli, RebuildToy) {
  ASSERT_EQ(run("rebuild " + fx("toy/toy_cnn.sim") + " --out " + at("m")), 0) << err_;
  const auto g = graph::load_model_files(dir_ / "m/model.mbuild", dir_ / "m/model.rwts");
  const auto ref = graph::rebuild(graph::load_sim(testing::fixture("toy/toy_cnn.sim")));
  std::mt19937_64 rng(1);
  const auto x = testing::random_tensor(rng, {1, 8, 8, 1}, 0, 1);
  rt::Session s(g);
  EXPECT_LE(rt::max_abs_diff(s.forward(x), testing::ref_forward(ref, x)), 1e-6);
}

TEST_F(Cli, RebuildErrors) {
  auto sg = graph::strip(testing::architectures()[0].graph);
  for (auto& t : sg.tensors)
    if (t.id == sg.outputs[0]) t.shape.back() += 1;
  const auto files = graph::write_sim(sg, "bad.bin");
  write("bad.sim", files.manifest);
  graph::write_file(dir_ / "bad.bin", std::span<const std::uint8_t>(files.blob));
  EXPECT_EQ(run("rebuild " + at("bad.sim") + " --out " + at("m")), 3);
  EXPECT_NE(err_.find("InconsistentShapes"), std::string::npos) << err_;
  EXPECT_NE(err_.find("op t"), std::string::npos) << err_;
}

TEST_F(Cli, RebuildQuantized) {
  const auto g = testing::architectures()[0].graph;
  const auto sq = graph::strip(g, graph::Quantization::Q8);
  const auto files = graph::write_sim(sq, "q.bin");
  write("q.sim", files.manifest);
  graph::write_file(dir_ / "q.bin", std::span<const std::uint8_t>(files.blob));
  ASSERT_EQ(run("rebuild " + at("q.sim") + " --out " + at("m")), 0) << err_;
  const auto weights = graph::read_weights(graph::read_file_bytes(dir_ / "m/model.rwts"));
  const auto want = graph::rebuild(sq);
  ASSERT_FALSE(weights.empty());
  for (const auto& [name, t] : weights) {
    const auto& v = want.nodes[want.find(name)].value;
    ASSERT_EQ(t.shape, v.shape);
    for (std::size_t i = 0; i < t.size(); ++i)
      EXPECT_EQ(t[i], static_cast<double>(static_cast<float>(v[i])));
  }
}

TEST_F(Cli, AttackTwoBudgets) {
  ASSERT_EQ(run("slice " + fx("toy/classifier.mir") + " " + fx("toy/signatures.txt") + " --out " + at("s")), 0)
      << err_;
  ASSERT_EQ(run("gen " + at("s/slices.lst") + " " + fx("toy/classifier.mir") + " --out " + at("p.pprog")), 0);
  ASSERT_EQ(run("rebuild " + fx("toy/toy_cnn.sim") + " --out " + at("m")), 0);
  ASSERT_EQ(run("attack " + at("m/model.mbuild") + " " + at("p.pprog") + " " + fx("toy/data/labels.txt") +
                " --epsilon 0 8 --out " + at("r.rrep")),
            0)
      << err_;
  const auto report = graph::read_file_text(dir_ / "r.rrep");
  EXPECT_NE(report.find("run 1\n  epsilon_raw 0\n"), std::string::npos);
  EXPECT_NE(report.find("run 2\n  epsilon_raw 8\n"), std::string::npos);
  EXPECT_NE(out_.find("epsilon 0: metric 0 not flagged"), std::string::npos) << out_;

  // A sample the model cannot take is a runtime failure.
  std::string pgm = "P2\n9 9\n255\n";
  for (int i = 0; i < 81; ++i) pgm += "7 ";
  write("big.pgm", pgm);
  write("bad.txt", "big.pgm 1\n");
  EXPECT_EQ(run("attack " + at("m/model.mbuild") + " " + at("p.pprog") + " " + at("bad.txt") +
                " --epsilon 8 --out " + at("r2.rrep")),
            4);
  EXPECT_NE(err_.find("ShapeMismatch"), std::string::npos) << err_;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = graph::read_file_text(e.path());
  return files;
}

TEST_F(Cli, PipelineIsIdempotent) {
  const std::string conf = fx("toy/pipeline.conf");
  ASSERT_EQ(run("pipeline " + conf + " --out " + at("a")), 0) << err_;
  ASSERT_EQ(run("pipeline " + conf + " --out " + at("b")), 0) << err_;
  ASSERT_EQ(run("pipeline " + conf + " --out " + at("c") + " --jobs 4"), 0) << err_;
  const auto a = tree(dir_ / "a");
  EXPECT_TRUE(a.count("manifest.txt"));
  EXPECT_TRUE(a.count("report.rrep"));
  EXPECT_EQ(a, tree(dir_ / "b"));
  EXPECT_EQ(a.at("report.rrep"), tree(dir_ / "c").at("report.rrep"));
}

TEST_F(Cli, PipelineStageFailures) {
  const auto toy = testing::fixture("toy");
  write("nosig.txt", "name=predict\n");
  write("a.conf", "mir = " + (toy / "classifier.mir").string() + "\nsignatures = " +
                      (dir_ / "nosig.txt").string() + "\nsim = " + (toy / "toy_cnn.sim").string() +
                      "\ndataset = " + (toy / "data/labels.txt").string() + "\n");
  EXPECT_EQ(run("pipeline " + at("a.conf") + " --out " + at("o")), 2);
  write("b.conf", "mir = x.mir\nbogus = 1\n");
  EXPECT_EQ(run("pipeline " + at("b.conf")), 1);
  EXPECT_NE(err_.find("b.conf:2:"), std::string::npos) << err_;
}

TEST(Config, Parsing) {
  const auto cfg = parse_config(
      "# comment\nmir = app.mir\nsignatures=/abs/s.txt\nsim = m.sim\ndataset = d/l.txt\n"
      "epsilon = 0, 2.5, 8\nalpha = 0.01\niters = 3\ntask = t4\nthreshold = 0.5\nseed = 9\n"
      "jobs = 2\nrandom_start = on\n",
      "/base");
  EXPECT_EQ(cfg.mir, fs::path("/base/app.mir"));
  EXPECT_EQ(cfg.signatures, fs::path("/abs/s.txt"));
  EXPECT_EQ(cfg.out, fs::path("/base/out"));
  EXPECT_EQ(cfg.attack.epsilons, (std::vector<double>{0, 2.5, 8}));
  EXPECT_EQ(cfg.attack.alpha, 0.01);
  EXPECT_EQ(cfg.attack.iterations, 3);
  EXPECT_EQ(cfg.attack.task.type, robust::TaskType::T4);
  EXPECT_EQ(cfg.attack.threshold, 0.5);
  EXPECT_EQ(cfg.attack.seed, 9u);
  EXPECT_EQ(cfg.attack.jobs, 2);
  EXPECT_TRUE(cfg.attack.random_start);
}

TEST(Config, Invalid) {
  auto kind = [](std::string_view text) {
    try {
      parse_config(text, "/b");
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  const std::string base = "mir=a\nsignatures=b\nsim=c\ndataset=d\n";
  EXPECT_EQ(kind("mir=a\n"), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind(base + "iters = many\n"), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind(base + "colour = red\n"), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind(base + "no equals sign\n"), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind(base + "task = t9\n"), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind(base), ErrorKind::Io);  // complete config parses
}

TEST(ExitCodes, ByFamily) {
  EXPECT_EQ(exit_code(ErrorKind::Syntax), 1);
  EXPECT_EQ(exit_code(ErrorKind::InvalidConfig), 1);
  EXPECT_EQ(exit_code(ErrorKind::NoCriterionFound), 2);
  EXPECT_EQ(exit_code(ErrorKind::UnsatisfiableOrder), 2);
  EXPECT_EQ(exit_code(ErrorKind::InconsistentShapes), 3);
  EXPECT_EQ(exit_code(ErrorKind::CycleDetected), 3);
  EXPECT_EQ(exit_code(ErrorKind::ShapeMismatch), 4);
  EXPECT_EQ(exit_code(ErrorKind::DivisionByZero), 4);
}

TEST(Hash, Fnv1a) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

}  // namespace
}  // namespace recon::cli
