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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "generators.hpp"
#include "properties.hpp"
#include "recon/codegen.hpp"
#include "recon/error.hpp"
#include "recon/interp.hpp"
#include "recon/mir.hpp"
#include "recon/slicer.hpp"

namespace recon::codegen {
namespace {

using interp::Array;
using interp::Value;
using Kind = Node::Kind;

ErrorKind error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Io;
}

// Whole program, every function structured, `main` as the single head.
ProcessingProgram structured(const mir::Program& p) {
  std::vector<StructuredFunction> fns;
  for (const auto& f : p.functions) fns.push_back(reconstruct_loops(f));
  return emit_program(p, fns, {"main"});
}

Value ints(std::initializer_list<std::int64_t> xs) {
  Array a;
  for (auto x : xs) a.push_back(x);
  return a;
}

std::string sink_text(const interp::RunResult& r) {
  std::string s;
  for (const auto& e : r.sinks) {
    s += e.name + "(";
    for (const auto& a : e.args) s += interp::format_value(a) + ";";
    s += ")\n";
  }
  return s;
}

TEST(Structurize, CountingLoopBecomesWhile) {
  const auto p = mir::parse_mir(
      "func main(n):\n  1: i = const 0\n  2: if i >= n goto 5\n  3: i = i + 1\n  4: goto 2\n"
      "  5: return i\n");
  const auto s = reconstruct_loops(p.functions[0]);
  ASSERT_EQ(s.body.size(), 3u);
  EXPECT_EQ(s.body[0].kind, Kind::Stmt);
  ASSERT_EQ(s.body[1].kind, Kind::While);
  EXPECT_EQ(s.body[2].stmt.kind, mir::StmtKind::Return);
  ASSERT_EQ(s.body[1].body.size(), 1u);
  EXPECT_EQ(s.body[1].body[0].stmt.label, "3");

  // The loop runs while i < n.
  interp::Machine m(p, {});
  const auto& cond = s.body[1].stmt;
  EXPECT_TRUE(m.condition(cond, {{"i", std::int64_t{0}}, {"n", std::int64_t{1}}}));
  EXPECT_FALSE(m.condition(cond, {{"i", std::int64_t{1}}, {"n", std::int64_t{1}}}));

  for (std::int64_t n : {0, 1, 5}) {
    interp::Environment env;
    env.inputs["n"] = n;
    const auto direct = interp::run(p, env);
    const auto r = interpret(emit_program(p, {s}, {"main"}), env);
    ASSERT_TRUE(r.returned);
    EXPECT_TRUE(interp::bit_equal(*r.returned, *direct.returned));
    EXPECT_EQ(std::get<std::int64_t>(*r.returned), n);
  }
}

TEST(Structurize, StraightLineHasNoLoops) {
  const auto p = mir::parse_mir("func main(a):\n  1: b = a + 1\n  2: c = b * b\n  3: return c\n");
  const auto s = reconstruct_loops(p.functions[0]);
  EXPECT_EQ(count_loops(s.body), 0u);
  EXPECT_EQ(s.body.size(), 3u);
}

TEST(Structurize, NestedCountingLoops) {
  const auto p = mir::parse_mir(
      "func main(n, m):\n  1: k = const 0\n  2: i = const 0\n  3: if i >= n goto 11\n"
      "  4: j = const 0\n  5: if j >= m goto 9\n  6: k = k + 1\n  7: j = j + 1\n  8: goto 5\n"
      "  9: i = i + 1\n  10: goto 3\n  11: return k\n");
  const auto s = reconstruct_loops(p.functions[0]);
  EXPECT_EQ(count_loops(s.body), 2u);
  const Node* outer = nullptr;
  for (const auto& n : s.body)
    if (n.kind == Kind::While) outer = &n;
  ASSERT_NE(outer, nullptr);
  EXPECT_EQ(count_loops(outer->body), 1u);
  for (auto [n, m] : {std::pair{0, 4}, {3, 0}, {3, 4}, {7, 5}}) {
    interp::Environment env;
    env.inputs = {{"n", std::int64_t{n}}, {"m", std::int64_t{m}}};
    const auto r = interpret(emit_program(p, {s}, {"main"}), env);
    EXPECT_EQ(std::get<std::int64_t>(*r.returned), n * m);
  }
}

TEST(Structurize, IrreducibleIsRejected) {
  // Two ways into the 2..5 cycle: fall-through into 2 and the jump to 4.
  const auto p = mir::parse_mir(
      "func main(c, x):\n  1: if c == 0 goto 4\n  2: x = x + 1\n  3: if x > 5 goto 6\n"
      "  4: x = x + 2\n  5: goto 2\n  6: return x\n");
  EXPECT_EQ(error_of([&] { reconstruct_loops(p.functions[0]); }),
            ErrorKind::IrreducibleControlFlow);
}

TEST(Structurize, MatchesCfgOnRandomPrograms) {
  const auto r = testing::check_structurization(404, 150, 10, 30);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

std::set<slicing::StmtRef> everything(const mir::Program& p) {
  std::set<slicing::StmtRef> all;
  for (std::uint32_t f = 0; f < p.functions.size(); ++f)
    for (std::uint32_t i = 0; i < p.functions[f].body.size(); ++i) all.insert({f, i});
  return all;
}

TEST(Groups, CallChainIsOneGroup) {
  const auto p = mir::parse_mir(
      "func fA():\n  1: x = call fB()\n  2: return x\nfunc fB():\n  1: y = call fC()\n"
      "  2: return y\nfunc fC():\n  1: z = const 1\n  2: return z\n");
  const auto g = group_functions(p, everything(p));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].head, "fA");
  EXPECT_EQ(g[0].members, (std::set<std::string>{"fA", "fB", "fC"}));
}

TEST(Groups, UnrelatedFunctionsAndFieldSets) {
  const auto p = mir::parse_mir(
      "field S.F\nfunc f():\n  1: a = const 1\n  2: S.F = a\n  3: return\n"
      "func g():\n  1: b = const 2\n  2: return b\n");
  const auto g = group_functions(p, everything(p));
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].head, "f");
  EXPECT_EQ(g[1].head, "g");
  EXPECT_EQ(g[0].writes, std::set<std::string>{"S.F"});
  EXPECT_TRUE(g[0].reads.empty());
}

TEST(Groups, MutualRecursionPicksAHead) {
  const auto p = mir::parse_mir(
      "func a(n):\n  1: if n <= 0 goto 3\n  2: r = call b(n)\n  3: return n\n"
      "func b(n):\n  1: m = n - 1\n  2: r = call a(m)\n  3: return r\n");
  const auto g = group_functions(p, everything(p));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].head, "a");
}

FunctionGroup group(const char* head, std::set<std::string> reads, std::set<std::string> writes) {
  return {{head}, head, std::move(reads), std::move(writes)};
}

TEST(Order, WriterBeforeReader) {
  EXPECT_EQ(order_heads({group("g2", {"F"}, {}), group("g1", {}, {"F"})}),
            (std::vector<std::string>{"g1", "g2"}));
  EXPECT_EQ(order_heads({group("a", {}, {}), group("b", {}, {}), group("c", {}, {})}),
            (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(order_heads({group("g1", {"F"}, {}), group("g2", {"F"}, {}), group("g3", {}, {"F"})}),
            (std::vector<std::string>{"g3", "g1", "g2"}));
}

TEST(Order, CycleIsUnsatisfiable) {
  try {
    order_heads({group("a", {"F"}, {"G"}), group("b", {"G"}, {"F"})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsatisfiableOrder);
    EXPECT_NE(std::string(e.what()).find("F"), std::string::npos);
  }
}

TEST(Order, RandomInstances) {
  const auto r = testing::check_ordering(808, 80);
  EXPECT_TRUE(r.ok()) << r.first_failure;
  EXPECT_GT(r.rejections, 0);
}

TEST(Emit, TwoHeadsFollowTheFieldDependency) {
  const auto p = mir::parse_mir(
      "extern out/1\nfield S.F\nfunc reader():\n  1: v = S.F\n  2: call out(v)\n  3: return\n"
      "func writer():\n  1: a = const 3\n  2: S.F = a\n  3: return\n");
  const auto order = order_heads(group_functions(p, everything(p)));
  EXPECT_EQ(order, (std::vector<std::string>{"writer", "reader"}));
  std::vector<StructuredFunction> fns;
  for (const auto& f : p.functions) fns.push_back(reconstruct_loops(f));
  const auto prog = emit_program(p, fns, order);
  EXPECT_EQ(prog.order, order);
  const auto r = interpret(prog, {});
  ASSERT_EQ(r.sinks.size(), 1u);
  EXPECT_EQ(std::get<std::int64_t>(r.sinks[0].args[0]), 3);
}

interp::Environment demo_env(std::int64_t a) {
  interp::Environment env;
  env.inputs["input"] = a;
  env.host["infer"] = [](const std::vector<Value>& args) -> std::optional<Value> {
    return std::get<std::int64_t>(args[0]) * 3 - 1;
  };
  return env;
}

TEST(Emit, DemoSliceReproducesTheSink) {
  const auto p = mir::parse_mir(testing::read_fixture("demo.mir"));
  const slicing::SlicingBasis b(p);
  const auto slices =
      slicing::extract_processing(b, slicing::find_criteria(b, slicing::parse_signatures("name=infer\n")));
  const auto prog = generate(p, slices);
  EXPECT_EQ(prog.inputs, std::vector<std::string>{"input"});
  EXPECT_EQ(prog.outputs, std::vector<std::string>{"out"});
  for (std::int64_t a : {-4, 0, 7, 1000}) {
    const auto env = demo_env(a);
    EXPECT_EQ(sink_text(interpret(prog, env)), sink_text(interp::run(p, env)));
  }
  const auto pre_only = generate(p, slices, SliceSelection::Pre);
  EXPECT_TRUE(pre_only.outputs.empty());
  EXPECT_TRUE(interpret(pre_only, demo_env(2)).sinks.empty());
}

TEST(Pprog, PrintParseRoundTrip) {
  testing::Rng rng(12);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    const auto p = mir::parse_mir(testing::random_mir(rng, {}));
    const slicing::SlicingBasis b(p);
    std::vector<slicing::SlicingCriterion> c;
    try {
      c = slicing::find_criteria(b, slicing::parse_signatures("name=infer\n"));
    } catch (const Error&) {
      continue;
    }
    const auto prog = generate(p, slicing::extract_processing(b, c));
    const auto text = print_pprog(prog);
    ASSERT_EQ(text.rfind("PPROG v1", 0), 0u);
    const auto back = parse_pprog(text);
    EXPECT_EQ(print_pprog(back), text);
    EXPECT_EQ(back.order, prog.order);
    EXPECT_EQ(back.inputs, prog.inputs);
    EXPECT_EQ(back.outputs, prog.outputs);
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(Pprog, MalformedText) {
  EXPECT_EQ(error_of([] { parse_pprog("PPROG v9\n"); }), ErrorKind::MalformedFile);
  EXPECT_EQ(error_of([] { parse_pprog("hello"); }), ErrorKind::MalformedFile);
}

TEST(Interpret, Identity) {
  const auto p = mir::parse_mir("extern out/1\nfunc main(x):\n  1: call out(x)\n  2: return\n");
  interp::Environment env;
  env.inputs["x"] = ints({1, 2, 3});
  const auto r = interpret(structured(p), env);
  ASSERT_EQ(r.sinks.size(), 1u);
  EXPECT_TRUE(interp::bit_equal(r.sinks[0].args[0], ints({1, 2, 3})));
}

TEST(Interpret, MinMaxNormalization) {
  const auto p = mir::parse_mir(
      "extern out/1\nextern len/1\nfunc main(px):\n  1: n = call len(px)\n  2: z = const 0\n  3: lo = px[z]\n"
      "  4: hi = px[z]\n  5: i = const 1\n  6: if i >= n goto 14\n  7: v = px[i]\n"
      "  8: if v >= lo goto 10\n  9: lo = v + 0\n  10: if v <= hi goto 12\n  11: hi = v + 0\n"
      "  12: i = i + 1\n  13: goto 6\n  14: res = newarray n\n  15: span = hi - lo\n"
      "  16: i = const 0\n  17: if i >= n goto 25\n  18: v = px[i]\n  19: d = v - lo\n"
      "  20: d = d * 255\n  21: d = d / span\n  22: res[i] = d\n  23: i = i + 1\n"
      "  24: goto 17\n  25: call out(res)\n  26: return\n");
  interp::Environment env;
  env.inputs["px"] = ints({0, 5, 10});
  const auto r = interpret(structured(p), env);
  ASSERT_EQ(r.sinks.size(), 1u);
  EXPECT_TRUE(interp::bit_equal(r.sinks[0].args[0], ints({0, 127, 255})));
}

TEST(Interpret, ChannelReorder) {
  // HWC -> CHW on a 2x2x3 array.
  const auto p = mir::parse_mir(
      "extern out/1\nextern len/1\nfunc main(x, h, w, c):\n  1: n = call len(x)\n  2: y = newarray n\n"
      "  3: a = const 0\n  4: if a >= h goto 25\n  5: b = const 0\n  6: if b >= w goto 23\n"
      "  7: k = const 0\n  8: if k >= c goto 21\n  9: s = a * w\n  10: s = s + b\n"
      "  11: s = s * c\n  12: s = s + k\n  13: t = k * h\n  14: t = t + a\n  15: t = t * w\n"
      "  16: t = t + b\n  17: v = x[s]\n  18: y[t] = v\n  19: k = k + 1\n  20: goto 8\n"
      "  21: b = b + 1\n  22: goto 6\n  23: a = a + 1\n  24: goto 4\n  25: call out(y)\n"
      "  26: return\n");
  const std::int64_t H = 2, W = 2, C = 3;
  Array in, want(H * W * C);
  for (std::int64_t i = 0; i < H * W * C; ++i) in.push_back(i * 10 + 1);
  for (std::int64_t h = 0; h < H; ++h)
    for (std::int64_t w = 0; w < W; ++w)
      for (std::int64_t c = 0; c < C; ++c) want[(c * H + h) * W + w] = in[(h * W + w) * C + c];
  interp::Environment env;
  env.inputs = {{"x", in}, {"h", H}, {"w", W}, {"c", C}};
  const auto r = interpret(structured(p), env);
  ASSERT_EQ(r.sinks.size(), 1u);
  EXPECT_TRUE(interp::bit_equal(r.sinks[0].args[0], Value{want}));
  EXPECT_EQ(sink_text(r), sink_text(interp::run(p, env)));
}

TEST(Interpret, Errors) {
  const auto div = mir::parse_mir("func main(a):\n  1: z = const 0\n  2: b = a / z\n  3: return b\n");
  interp::Environment env;
  env.inputs["a"] = std::int64_t{4};
  EXPECT_EQ(error_of([&] { interpret(structured(div), env); }), ErrorKind::DivisionByZero);
  EXPECT_EQ(error_of([&] { interpret(structured(div), {}); }), ErrorKind::UnboundInput);
  const auto oob = mir::parse_mir(
      "func main():\n  1: n = const 2\n  2: x = newarray n\n  3: i = const 5\n  4: v = x[i]\n"
      "  5: return v\n");
  EXPECT_EQ(error_of([&] { interpret(structured(oob), {}); }), ErrorKind::OutOfBoundsArrayAccess);
}

TEST(Interpret, IntegerOpsWrap) {
  const auto p = mir::parse_mir(
      "func main():\n  1: a = const 9223372036854775807\n  2: b = a + 1\n  3: return b\n");
  const auto r = interpret(structured(p), {});
  EXPECT_EQ(std::get<std::int64_t>(*r.returned), std::numeric_limits<std::int64_t>::min());
}

}  // namespace
}  // namespace recon::codegen
