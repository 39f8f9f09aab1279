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

#include <fstream>
#include <sstream>

#include "architectures.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "recon/error.hpp"
#include "recon/image.hpp"
#include "recon/rebuild.hpp"
#include "recon/runtime.hpp"
#include "recon/sim.hpp"
#include "reference.hpp"

namespace recon::rt {
namespace {

ErrorKind error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Io;
}

graph::ComputationalGraph toy() { return graph::rebuild(graph::load_sim(testing::fixture("toy/toy_cnn.sim"))); }

Tensor toy_input() {
  const auto img = data::read_pnm(testing::fixture("toy/data/s00.pgm"));
  Tensor x({1, img.height, img.width, 1});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = img.pixels[i] / 255.0;
  return x;
}

TEST(Forward, IdentityConv) {
  testing::GraphBuilder b(1);
  const auto x = b.input({1, 3, 3, 2});
  auto g = b.finish({b.conv(x, 2, 1, 1, Padding::Valid)});
  for (auto& n : g.nodes) {
    if (n.kind != graph::GraphNode::Kind::Parameter) continue;
    n.value = Tensor(n.shape);
    if (n.shape.size() == 4) n.value[0] = n.value[3] = 1;  // [1,1,2,2] identity
  }
  std::mt19937_64 rng(3);
  const auto in = testing::random_tensor(rng, {1, 3, 3, 2});
  Session s(g);
  EXPECT_EQ(s.forward(in), in);
}

TEST(Forward, AveragePool) {
  Attributes a;
  a.pool_size = 2;
  a.strides = {2, 2};
  const Tensor x({1, 2, 2, 1}, {1, 2, 3, 4});
  EXPECT_EQ(forward(OpType::AveragePooling, a, {&x}, {1, 1, 1, 1}).data, std::vector<double>{2.5});
}

TEST(Forward, ToyMatchesReferenceKernels) {
  const auto g = toy();
  Session s(g);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 5; ++i) {
    const auto x = testing::random_tensor(rng, {1, 8, 8, 1}, 0, 1);
    EXPECT_LE(max_abs_diff(s.forward(x), testing::ref_forward(g, x)), 1e-10);
  }
}

TEST(Forward, ToyMatchesStoredReference) {
  std::ifstream f(testing::fixture("toy/reference.txt"));
  std::string name;
  f >> name;
  std::vector<double> want;
  for (double v; f >> v;) want.push_back(v);
  ASSERT_EQ(name, "s00.pgm");
  const auto g = toy();
  Session s(g);
  const auto y = s.forward(toy_input());
  ASSERT_EQ(y.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(y[i], want[i], 1e-10);
}

TEST(Forward, ArchitecturesMatchReferenceKernels) {
  std::mt19937_64 rng(21);
  for (const auto& a : testing::architectures()) {
    SCOPED_TRACE(a.name);
    Session s(a.graph);
    const auto x = testing::random_tensor(rng, a.graph.nodes[a.graph.inputs[0]].shape);
    EXPECT_LE(max_abs_diff(s.forward(x), testing::ref_forward(a.graph, x)), 1e-10);
  }
}

TEST(Forward, ShapeMismatch) {
  const auto g = toy();
  Session s(g);
  EXPECT_EQ(error_of([&] { s.forward(Tensor({1, 4, 4, 1})); }), ErrorKind::ShapeMismatch);
}

TEST(Backward, DenseGradientIsAWeightColumn) {
  const auto g = testing::linear_model(5, 3);
  Session s(g);
  std::mt19937_64 rng(4);
  s.forward(testing::random_tensor(rng, {1, 5}));
  const auto dx = s.backward(Tensor({1, 3}, {1, 0, 0}));
  const Tensor* w = nullptr;
  for (const auto& n : g.nodes)
    if (n.kind == graph::GraphNode::Kind::Parameter && n.shape.size() == 2) w = &n.value;
  ASSERT_NE(w, nullptr);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(dx[i], (*w)[i * 3]);
}

TEST(Backward, ReluBlocksNegativeInputs) {
  const Tensor x({4}, {-1.5, 2, -0.25, 3});
  const Tensor gy({4}, {1, 1, 1, 1});
  const auto gx = backward(OpType::ReLU, {}, {&x}, forward(OpType::ReLU, {}, {&x}, {4}), gy);
  EXPECT_EQ(gx[0].data, (std::vector<double>{0, 1, 0, 1}));
}

TEST(Backward, RequiresForward) {
  const auto g = toy();
  Session s(g);
  EXPECT_EQ(error_of([&] { s.backward(Tensor({1, 4}, 1.0)); }), ErrorKind::NoForwardPass);
}

TEST(Backward, ToyMatchesFiniteDifferences) {
  const auto g = toy();
  Session s(g);
  std::mt19937_64 rng(13);
  const auto x = toy_input();
  const auto r = testing::random_tensor(rng, {1, 4});
  s.forward(x);
  const auto dx = s.backward(r);
  auto loss = [&](const Tensor& in) {
    const auto y = s.forward(in);
    double l = 0;
    for (std::size_t i = 0; i < y.size(); ++i) l += r[i] * y[i];
    return l;
  };
  double num = 0, den = 0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor p = x, m = x;
    p[i] += h;
    m[i] -= h;
    const double fd = (loss(p) - loss(m)) / (2 * h);
    num += (fd - dx[i]) * (fd - dx[i]);
    den += fd * fd;
  }
  ASSERT_GT(den, 0);
  EXPECT_LT(std::sqrt(num / den), 1e-4);
}

class OpGradient : public ::testing::TestWithParam<OpType> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  const auto r = testing::check_gradients(GetParam(), 77, 5, 1e-5);
  EXPECT_EQ(r.cases, 5);
  EXPECT_LT(r.worst, 1e-4) << r.worst_case;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(testing::all_ops()),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Mse, Examples) {
  const Tensor a({3}, {1, -2, 0.5});
  const auto [zero, g0] = mse_loss(a, a);
  EXPECT_EQ(zero, 0);
  EXPECT_EQ(g0.data, (std::vector<double>{0, 0, 0}));
  const auto [four, g4] = mse_loss(Tensor({1}, {2}), Tensor({1}, {0}));
  EXPECT_EQ(four, 4);
  EXPECT_EQ(g4.data, std::vector<double>{4});
  EXPECT_EQ(error_of([&] { mse_loss(a, Tensor({2})); }), ErrorKind::ShapeMismatch);
}

TEST(Mse, FiniteDifferences) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10; ++k) {
    const auto p = testing::random_tensor(rng, {2, 3}), t = testing::random_tensor(rng, {2, 3});
    const auto [l, g] = mse_loss(p, t);
    for (std::size_t i = 0; i < p.size(); ++i) {
      Tensor up = p, dn = p;
      const double h = 1e-6;
      up[i] += h;
      dn[i] -= h;
      const double fd = (mse_loss(up, t).first - mse_loss(dn, t).first) / (2 * h);
      EXPECT_NEAR(fd, g[i], 1e-8 * std::max(1.0, std::abs(g[i])));
    }
  }
}

}  // namespace
}  // namespace recon::rt
